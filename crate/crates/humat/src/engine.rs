//! Deterministic discrete-time simulation loop.
//!
//! A run is a pure function of the scenario: initialization, every tick, and
//! every record it emits are reproducible bit-for-bit. One run is strictly
//! single-threaded; parallelism belongs to whoever launches multiple runs.
//!
//! Each tick executes a fixed sub-phase order:
//!
//! 1. sync believed choices from actual choices;
//! 2. recompute social satisfactions, dissonance, and dilemmas;
//! 3. agents act in activation order (signal/inquire effects apply
//!    immediately, sequentially);
//! 4. sync again;
//! 5. recompute social satisfactions, evaluations, dissonance;
//! 6. all agents choose simultaneously from the phase-5 evaluations.
//!
//! The tick record captures the end-of-tick state: new choices, phase-5
//! evaluations and dissonance, the phase-2 dilemma that drove the tick's
//! acts, and the tick's communication events.

use std::path::Path;

use thiserror::Error;

use crate::config::{ActivationOrder, BeliefInit, InitSpec, Scenario};
use crate::influence::{self, InfluenceError};
use crate::model::{
    self, choose_from_evaluations, DilemmaStatus, Humat, ModelError, MotiveGroup, MotiveState,
};
use crate::network::{
    generate_network, sync_alter_choices, AlterRepresentation, CommunicationEvent, EventKind,
    NetworkError, SocialNetwork,
};
use crate::rng::{SeedStream, STREAM_INIT, STREAM_SHUFFLE};
use crate::snapshot::{self, SnapshotError};
use crate::trace::{
    AgentRecord, RunTrace, TickMetrics, TraceError, TraceRecord, TraceWriter, EDGES_FILE,
    FINAL_SNAPSHOT_FILE,
};

/// Complete, self-contained simulation state at one tick.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub tick: u64,
    /// Indexed by agent id: `agents[i].id == i`.
    pub agents: Vec<Humat>,
    pub network: SocialNetwork,
    /// Activation-shuffle substream, positioned mid-run.
    pub shuffle: SeedStream,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Influence(#[from] InfluenceError),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

/// Update one agent's social satisfaction entries (current-choice column),
/// dissonance vector, and optionally its dilemma.
fn refresh_agent(agent: &mut Humat, scn: &Scenario, classify: bool) -> Result<(), EngineError> {
    let s = model::social_satisfaction(crate::network::like_minded_fraction(agent));
    let choice = agent.current_choice;
    for motive in &scn.motives {
        if motive.group == MotiveGroup::Social {
            agent.motive_states[motive.id].satisfaction[choice] = s;
        }
    }
    for alt in 0..scn.alt_count() {
        agent.dissonance[alt] = model::dissonance_strength(agent, alt);
    }
    if classify {
        agent.dilemma = model::classify_dilemma(agent, &scn.motives, scn.epsilon)?;
    }
    Ok(())
}

/// Build agents, network, representations, and initial choices; tick 0.
pub fn initialize(scn: &Scenario) -> Result<ModelState, EngineError> {
    let n = scn.agent_count as usize;
    let motive_count = scn.motive_count();
    let alt_count = scn.alt_count();

    let mut agents: Vec<Humat> = match &scn.init {
        InitSpec::Explicit(rows) => rows
            .iter()
            .enumerate()
            .map(|(id, row)| Humat {
                id: id as u32,
                motive_states: row
                    .importances
                    .iter()
                    .zip(&row.satisfactions)
                    .map(|(&importance, sats)| MotiveState {
                        importance,
                        satisfaction: sats.clone(),
                    })
                    .collect(),
                current_choice: 0,
                dissonance: vec![0.0; alt_count],
                dilemma: DilemmaStatus::NoDilemma,
                aspiration: row.aspiration,
                alter_representations: Vec::new(),
            })
            .collect(),
        InitSpec::Uniform {
            importance,
            satisfaction,
            aspiration,
        } => {
            let mut rng = SeedStream::new(scn.seed, STREAM_INIT);
            (0..n)
                .map(|id| {
                    let motive_states: Vec<MotiveState> = {
                        let importances: Vec<f64> = (0..motive_count)
                            .map(|_| rng.uniform_f64(importance.low, importance.high))
                            .collect();
                        importances
                            .into_iter()
                            .map(|imp| MotiveState {
                                importance: imp,
                                satisfaction: (0..alt_count)
                                    .map(|_| rng.uniform_f64(satisfaction.low, satisfaction.high))
                                    .collect(),
                            })
                            .collect()
                    };
                    Humat {
                        id: id as u32,
                        motive_states,
                        current_choice: 0,
                        dissonance: vec![0.0; alt_count],
                        dilemma: DilemmaStatus::NoDilemma,
                        aspiration: rng.uniform_f64(aspiration.low, aspiration.high),
                        alter_representations: Vec::new(),
                    }
                })
                .collect()
        }
    };

    let network = generate_network(&scn.network, scn.seed)?;

    // Initial choices from the sampled satisfactions (no prior choice).
    for agent in agents.iter_mut() {
        let evals = (0..alt_count)
            .map(|alt| model::evaluation(agent, alt))
            .collect::<Result<Vec<f64>, ModelError>>()?;
        agent.current_choice = choose_from_evaluations(&evals, None);
    }

    // Representations of every neighbor; believed choices start out true.
    for id in 0..n {
        let reps: Vec<AlterRepresentation> = network
            .neighbors(id as u32)?
            .iter()
            .map(|&alter| {
                let other = &agents[alter as usize];
                match scn.belief_init {
                    BeliefInit::Perfect => AlterRepresentation {
                        alter_id: alter,
                        believed_choice: other.current_choice,
                        believed_satisfactions: other
                            .motive_states
                            .iter()
                            .map(|m| m.satisfaction.clone())
                            .collect(),
                        believed_importances: other.importances().collect(),
                    },
                    BeliefInit::Uninformative => AlterRepresentation {
                        alter_id: alter,
                        believed_choice: other.current_choice,
                        believed_satisfactions: vec![vec![0.0; alt_count]; motive_count],
                        believed_importances: vec![0.0; motive_count],
                    },
                }
            })
            .collect();
        agents[id].alter_representations = reps;
    }

    for agent in agents.iter_mut() {
        refresh_agent(agent, scn, true)?;
    }

    Ok(ModelState {
        tick: 0,
        agents,
        network,
        shuffle: SeedStream::new(scn.seed, STREAM_SHUFFLE),
    })
}

/// Derive the trace record describing the current state, attaching the
/// events of the tick that produced it.
pub fn derive_record(
    state: &ModelState,
    scn: &Scenario,
    events: Vec<CommunicationEvent>,
) -> TraceRecord {
    let alt_count = scn.alt_count();
    let mut agents = Vec::with_capacity(state.agents.len());
    let mut choice_counts = vec![0u64; alt_count];
    let mut dissonance_sum = 0.0;
    let mut n_social = 0;
    let mut n_nonsocial = 0;
    for agent in &state.agents {
        let evaluations: Vec<f64> = (0..alt_count)
            .map(|alt| {
                model::evaluation(agent, alt).expect("validated scenario: positive importance")
            })
            .collect();
        choice_counts[agent.current_choice] += 1;
        dissonance_sum += agent.dissonance[agent.current_choice];
        match agent.dilemma {
            DilemmaStatus::SocialDilemma => n_social += 1,
            DilemmaStatus::NonSocialDilemma => n_nonsocial += 1,
            DilemmaStatus::NoDilemma => {}
        }
        agents.push(AgentRecord {
            id: agent.id,
            choice: agent.current_choice,
            evaluations,
            dissonance: agent.dissonance.clone(),
            dilemma: agent.dilemma,
            social_satisfaction: model::social_mean_satisfaction(
                agent,
                &scn.motives,
                agent.current_choice,
            )
            .expect("validated scenario: social motive exists"),
        });
    }
    let n_signal = events
        .iter()
        .filter(|e| e.kind == EventKind::Signal)
        .count() as u64;
    let n_inquire = events.len() as u64 - n_signal;
    TraceRecord {
        tick: state.tick,
        agents,
        events,
        metrics: TickMetrics {
            choice_counts,
            mean_dissonance: dissonance_sum / state.agents.len() as f64,
            n_social_dilemma: n_social,
            n_nonsocial_dilemma: n_nonsocial,
            n_signal,
            n_inquire,
        },
    }
}

/// Advance the state by one tick; returns the tick's record.
pub fn step(state: &mut ModelState, scn: &Scenario) -> Result<TraceRecord, EngineError> {
    let record_tick = state.tick + 1;

    // Phase 1: perfect information about choices.
    sync_alter_choices(&mut state.agents);

    // Phase 2: social satisfaction, dissonance, dilemma.
    for agent in state.agents.iter_mut() {
        refresh_agent(agent, scn, true)?;
    }

    // Phase 3: acts, applied immediately in activation order.
    let mut order: Vec<u32> = (0..state.agents.len() as u32).collect();
    if scn.activation_order == ActivationOrder::ShuffledEachTick {
        state.shuffle.shuffle(&mut order);
    }
    let mut events = Vec::new();
    for &ego in &order {
        if let Some(event) = influence::act(&mut state.agents, ego, &scn.influence, record_tick)? {
            events.push(event);
        }
    }

    // Phase 4: sync again.
    sync_alter_choices(&mut state.agents);

    // Phase 5: social satisfaction, evaluations, dissonance.
    let alt_count = scn.alt_count();
    let mut evaluations: Vec<Vec<f64>> = Vec::with_capacity(state.agents.len());
    for agent in state.agents.iter_mut() {
        refresh_agent(agent, scn, false)?;
        let evals = (0..alt_count)
            .map(|alt| model::evaluation(agent, alt))
            .collect::<Result<Vec<f64>, ModelError>>()?;
        evaluations.push(evals);
    }

    // Phase 6: simultaneous choice.
    for (agent, evals) in state.agents.iter_mut().zip(&evaluations) {
        agent.current_choice = choose_from_evaluations(evals, Some(agent.current_choice));
    }

    state.tick = record_tick;
    Ok(derive_record(state, scn, events))
}

/// Run to completion, handing each record (ticks `0..=T`) to `sink`.
pub fn run_with(
    scn: &Scenario,
    mut sink: impl FnMut(&TraceRecord) -> Result<(), TraceError>,
) -> Result<ModelState, RunError> {
    let mut state = initialize(scn)?;
    sink(&derive_record(&state, scn, Vec::new()))?;
    for _ in 0..scn.ticks {
        let record = step(&mut state, scn)?;
        sink(&record)?;
    }
    Ok(state)
}

/// Run to completion with the whole trace held in memory.
pub fn run(scn: &Scenario) -> Result<RunTrace, RunError> {
    let mut records = Vec::with_capacity(scn.ticks as usize + 1);
    run_with(scn, |record| {
        records.push(record.clone());
        Ok(())
    })?;
    Ok(RunTrace {
        header: crate::trace::TraceHeader::for_scenario(scn),
        records,
    })
}

/// Continue a (possibly imported) state up to `target_tick`, handing each
/// newly produced record to `sink`.
pub fn resume_with(
    state: &mut ModelState,
    scn: &Scenario,
    target_tick: u64,
    mut sink: impl FnMut(&TraceRecord) -> Result<(), TraceError>,
) -> Result<(), RunError> {
    while state.tick < target_tick {
        let record = step(state, scn)?;
        sink(&record)?;
    }
    Ok(())
}

/// Outcome summary of a completed run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub ticks: u64,
    pub agent_count: u32,
    pub total_events: u64,
    pub final_choice_counts: Vec<u64>,
}

/// Run and write the full artifact set into `dir`: trace directory files,
/// the final-state snapshot, and the network edge list.
pub fn run_to_dir(scn: &Scenario, dir: impl AsRef<Path>) -> Result<RunSummary, RunError> {
    let dir = dir.as_ref();
    let mut writer = TraceWriter::create(dir, scn)?;
    let mut total_events = 0u64;
    let mut final_choice_counts = vec![0u64; scn.alt_count()];
    let state = run_with(scn, |record| {
        total_events += record.events.len() as u64;
        final_choice_counts.clone_from(&record.metrics.choice_counts);
        writer.append(record)
    })?;
    writer.finish()?;
    std::fs::write(
        dir.join(FINAL_SNAPSHOT_FILE),
        snapshot::export_snapshot(&state, scn),
    )
    .map_err(TraceError::from)?;
    std::fs::write(dir.join(EDGES_FILE), state.network.edge_csv()).map_err(TraceError::from)?;
    Ok(RunSummary {
        ticks: scn.ticks,
        agent_count: scn.agent_count,
        total_events,
        final_choice_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;

    fn two_agent_config(extra: &str) -> Scenario {
        let text = format!(
            r#"
seed = 11
ticks = 3
epsilon = 0.0
activation_order = "by_id_ascending"
{extra}

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
similarity_weight = 0.5
aspiration_weight = 0.5
learning_rate = 0.5

[network]
kind = "complete"

[[agents]]
id = 0
importances = [0.8, 0.2]
satisfactions = [[1.0, -0.5], [0.0, 0.0]]
aspiration = 0.4

[[agents]]
id = 1
importances = [0.5, 0.5]
satisfactions = [[-0.6, 0.8], [0.0, 0.0]]
aspiration = 0.9
"#
        );
        Scenario::from_toml_str(&text, &[]).unwrap()
    }

    #[test]
    fn initialize_singleton_population() {
        let text = r#"
seed = 1
ticks = 0
epsilon = 0.0
activation_order = "by_id_ascending"

[[motives]]
id = 0
name = "belonging"
group = "social"

[[alternatives]]
id = 0
label = "A"

[[alternatives]]
id = 1
label = "B"

[influence]
similarity_weight = 1.0
aspiration_weight = 0.0
learning_rate = 0.1

[network]
kind = "complete"

[[agents]]
id = 0
importances = [1.0]
satisfactions = [[0.4, -0.2]]
aspiration = 0.5
"#;
        let scn = Scenario::from_toml_str(text, &[]).unwrap();
        let state = initialize(&scn).unwrap();
        assert_eq!(state.agents.len(), 1);
        assert_eq!(state.network.edge_count(), 0);
        // No neighbors: fully like-minded, social satisfaction +1.
        assert_eq!(crate::network::like_minded_fraction(&state.agents[0]), 1.0);
        assert_eq!(state.agents[0].motive_states[0].satisfaction[0], 1.0);
        assert_eq!(state.agents[0].current_choice, 0);
    }

    #[test]
    fn initialize_is_deterministic() {
        let scn = two_agent_config("");
        let a = initialize(&scn).unwrap();
        let b = initialize(&scn).unwrap();
        assert_eq!(a.agents, b.agents);
        assert_eq!(a.network.edges(), b.network.edges());
    }

    #[test]
    fn complete_graph_representation_counts() {
        let text = r#"
seed = 5
ticks = 0
epsilon = 0.0
activation_order = "by_id_ascending"

[[motives]]
id = 0
name = "belonging"
group = "social"

[[alternatives]]
id = 0
label = "A"

[[alternatives]]
id = 1
label = "B"

[influence]
similarity_weight = 1.0
aspiration_weight = 0.0
learning_rate = 0.1

[network]
kind = "complete"

[population]
size = 3
importance = { low = 0.5, high = 1.0 }
satisfaction = { low = -1.0, high = 1.0 }
aspiration = { low = 0.0, high = 1.0 }
"#;
        let scn = Scenario::from_toml_str(text, &[]).unwrap();
        let state = initialize(&scn).unwrap();
        for agent in &state.agents {
            assert_eq!(agent.alter_representations.len(), 2);
        }
    }

    #[test]
    fn dissonance_free_population_is_a_fixed_point() {
        // Both agents all-positive on alternative 0, all-negative on 1:
        // no pros/cons conflict anywhere, so nothing ever happens.
        let text = r#"
seed = 2
ticks = 4
epsilon = 0.0
activation_order = "by_id_ascending"

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
similarity_weight = 0.5
aspiration_weight = 0.5
learning_rate = 0.5

[network]
kind = "complete"

[[agents]]
id = 0
importances = [0.6, 0.4]
satisfactions = [[0.9, -0.3], [0.5, -0.8]]
aspiration = 0.2

[[agents]]
id = 1
importances = [0.3, 0.7]
satisfactions = [[0.7, -0.6], [0.2, -0.1]]
aspiration = 0.8
"#;
        let scn = Scenario::from_toml_str(text, &[]).unwrap();
        let mut state = initialize(&scn).unwrap();
        let initial = state.agents.clone();
        for _ in 0..scn.ticks {
            let record = step(&mut state, &scn).unwrap();
            assert!(record.events.is_empty());
            for (agent, prior) in state.agents.iter().zip(&initial) {
                assert_eq!(agent.current_choice, prior.current_choice);
            }
        }
        assert_eq!(state.agents, initial);
    }

    #[test]
    fn forced_dyad_produces_one_signal() {
        // Agent 0: dissonant about choice 0 and socially dissatisfied
        // (neighbor chose differently), so it must signal its only neighbor.
        let text = r#"
seed = 3
ticks = 1
epsilon = 0.0
activation_order = "by_id_ascending"

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
similarity_weight = 0.5
aspiration_weight = 0.5
learning_rate = 0.1

[network]
kind = "complete"

[[agents]]
id = 0
importances = [1.0, 0.2]
satisfactions = [[1.0, -1.0], [-0.4, 0.0]]
aspiration = 0.5

[[agents]]
id = 1
importances = [1.0, 0.2]
satisfactions = [[-1.0, 1.0], [0.0, 0.0]]
aspiration = 0.5
"#;
        let scn = Scenario::from_toml_str(text, &[]).unwrap();
        let mut state = initialize(&scn).unwrap();
        let record = step(&mut state, &scn).unwrap();
        let signals: Vec<_> = record
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Signal && e.source_id == 0)
            .collect();
        assert_eq!(signals.len(), 1);
        assert_eq!(signals[0].target_id, 1);
    }

    #[test]
    fn run_record_count_and_determinism() {
        let scn = two_agent_config("");
        let a = run(&scn).unwrap();
        assert_eq!(a.records.len(), 4); // ticks 0..=3
        let b = run(&scn).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_tick_run_has_single_record() {
        let mut scn = two_agent_config("");
        scn.ticks = 0;
        let trace = run(&scn).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].tick, 0);
    }

    // Explicit three-agent scenario in which all agents inquire every tick
    // and pull beliefs from each other, so activation order is observable.
    fn order_sensitive_config(seed: u64, activation: &str) -> Scenario {
        let text = format!(
            r#"
seed = {seed}
ticks = 6
epsilon = 0.0
activation_order = "{activation}"

[[motives]]
id = 0
name = "comfort"
group = "experiential"

[[motives]]
id = 1
name = "stewardship"
group = "value"

[[motives]]
id = 2
name = "belonging"
group = "social"

[[alternatives]]
id = 0
label = "A"

[[alternatives]]
id = 1
label = "B"

[influence]
similarity_weight = 0.0
aspiration_weight = 1.0
learning_rate = 0.2

[network]
kind = "complete"

[[agents]]
id = 0
importances = [0.9, 0.4, 0.3]
satisfactions = [[0.80, -0.9], [-0.50, -0.4], [0.0, -0.5]]
aspiration = 0.9

[[agents]]
id = 1
importances = [0.8, 0.5, 0.2]
satisfactions = [[0.75, -0.8], [-0.60, -0.3], [0.0, -0.6]]
aspiration = 0.1

[[agents]]
id = 2
importances = [0.7, 0.3, 0.4]
satisfactions = [[0.70, -0.7], [-0.40, -0.5], [0.0, -0.4]]
aspiration = 0.5
"#
        );
        Scenario::from_toml_str(&text, &[]).unwrap()
    }

    #[test]
    fn by_id_activation_is_rng_free_after_initialization() {
        // Explicit tables and a seed-independent network: different seeds
        // give identical initial states, and with by-id activation the
        // whole trajectory is seed-independent.
        let a = run(&order_sensitive_config(1, "by_id_ascending")).unwrap();
        let b = run(&order_sensitive_config(2, "by_id_ascending")).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn shuffled_activation_depends_on_the_seed() {
        let a = run(&order_sensitive_config(1, "shuffled_each_tick")).unwrap();
        let b = run(&order_sensitive_config(2, "shuffled_each_tick")).unwrap();
        assert_ne!(a.records, b.records);
        // The activation sequences themselves differ: compare the per-tick
        // event source orders.
        let orders = |trace: &crate::trace::RunTrace| -> Vec<Vec<u32>> {
            trace
                .records
                .iter()
                .map(|r| r.events.iter().map(|e| e.source_id).collect())
                .collect()
        };
        assert_ne!(orders(&a), orders(&b));
    }

    #[test]
    fn at_most_one_event_per_agent_per_tick() {
        let scn = two_agent_config("");
        let trace = run(&scn).unwrap();
        for record in &trace.records {
            let mut sources: Vec<u32> = record.events.iter().map(|e| e.source_id).collect();
            sources.sort_unstable();
            sources.dedup();
            assert_eq!(sources.len(), record.events.len());
            assert!(record.events.len() <= scn.agent_count as usize);
        }
    }
}
