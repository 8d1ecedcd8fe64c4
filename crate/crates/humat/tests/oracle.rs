//! Engine-vs-reference equivalence: the engine's trajectories must match
//! the straight-line reference implementation exactly (f64 bit equality)
//! across randomized scenarios covering every generator, activation order,
//! belief mode, and initialization mode.

#[path = "common/reference.rs"]
mod reference;
#[path = "common/scenarios.rs"]
mod scenarios;

use humat::config::Scenario;
use scenarios::{random_config, Gen};

fn assert_trajectories_match(scn: &Scenario, case: usize) {
    let engine_trace = humat::engine::run(scn).expect("engine run");
    let (ref_records, ref_state) = reference::ref_run(scn);

    assert_eq!(
        engine_trace.records.len(),
        ref_records.len(),
        "case {case}: record counts differ"
    );
    for (tick, (e, r)) in engine_trace.records.iter().zip(&ref_records).enumerate() {
        assert_eq!(e, r, "case {case}: trajectory diverges at tick {tick}");
    }

    // Final state: raw satisfaction tensors and believed satisfactions.
    let final_state = {
        let mut state = humat::engine::initialize(scn).expect("engine init");
        for _ in 0..scn.ticks {
            humat::engine::step(&mut state, scn).expect("engine step");
        }
        state
    };
    let engine_sats: Vec<Vec<Vec<f64>>> = final_state
        .agents
        .iter()
        .map(|a| {
            a.motive_states
                .iter()
                .map(|m| m.satisfaction.clone())
                .collect()
        })
        .collect();
    assert_eq!(
        engine_sats,
        ref_state.satisfactions(),
        "case {case}: final satisfaction tensors differ"
    );
    let engine_beliefs: Vec<Vec<(u32, Vec<Vec<f64>>)>> = final_state
        .agents
        .iter()
        .map(|a| {
            a.alter_representations
                .iter()
                .map(|r| (r.alter_id, r.believed_satisfactions.clone()))
                .collect()
        })
        .collect();
    assert_eq!(
        engine_beliefs,
        ref_state.believed_satisfactions(),
        "case {case}: believed satisfactions differ"
    );
}

#[test]
fn engine_matches_reference_on_randomized_scenarios() {
    let mut g = Gen::new(0x0a11_ce5e_ed00_0001);
    for case in 0..100 {
        let scn = random_config(&mut g, 5, 10);
        assert_trajectories_match(&scn, case);
    }
}

#[test]
fn engine_matches_reference_on_three_agent_ring() {
    let text = r#"
seed = 1234
ticks = 2
epsilon = 0.0
activation_order = "shuffled_each_tick"

[[motives]]
id = 0
name = "comfort"
group = "experiential"

[[motives]]
id = 1
name = "belonging"
group = "social"

[[alternatives]]
id = 0
label = "A"

[[alternatives]]
id = 1
label = "B"

[influence]
similarity_weight = 0.6
aspiration_weight = 0.4
learning_rate = 0.5

[network]
kind = "ring"
k = 2

[[agents]]
id = 0
importances = [0.9, 0.4]
satisfactions = [[0.8, -0.6], [-0.2, 0.1]]
aspiration = 0.7

[[agents]]
id = 1
importances = [0.3, 0.8]
satisfactions = [[-0.5, 0.9], [0.4, -0.3]]
aspiration = 0.2

[[agents]]
id = 2
importances = [0.6, 0.6]
satisfactions = [[0.2, 0.3], [-0.7, 0.5]]
aspiration = 0.9
"#;
    let scn = Scenario::from_toml_str(text, &[]).unwrap();
    assert_trajectories_match(&scn, usize::MAX);
}
