//! Straight-line reference implementation of initialization and the tick
//! loop, kept deliberately independent of the engine: no engine functions
//! are called, all model math is re-derived inline, and random draws are
//! taken from `rand_chacha` directly with the documented sampling
//! procedures re-implemented here. Only the public data types (scenario,
//! trace records) are shared, so trajectories can be compared field by
//! field.

use std::collections::BTreeSet;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use humat::config::{ActivationOrder, BeliefInit, InitSpec, Scenario};
use humat::model::DilemmaStatus;
use humat::network::{CommunicationEvent, EventKind, NetworkSpec};
use humat::trace::{AgentRecord, TickMetrics, TraceRecord};
use humat::MotiveGroup;

pub struct RefRng(ChaCha8Rng);

impl RefRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 * 2f64.powi(-53);
        lo + (hi - lo) * u
    }

    fn bounded(&mut self, n: u64) -> u64 {
        let zone = (u64::MAX / n) * n;
        loop {
            let v = self.0.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    fn shuffle(&mut self, slice: &mut [u32]) {
        for i in (1..slice.len()).rev() {
            let j = self.bounded(i as u64 + 1) as usize;
            slice.swap(i, j);
        }
    }
}

#[derive(Clone)]
struct RefRep {
    alter: u32,
    believed_choice: usize,
    believed_sats: Vec<Vec<f64>>,
    believed_imps: Vec<f64>,
}

#[derive(Clone)]
struct RefAgent {
    imps: Vec<f64>,
    sats: Vec<Vec<f64>>, // [motive][alternative]
    aspiration: f64,
    choice: usize,
    dissonance: Vec<f64>,
    dilemma: DilemmaStatus,
    reps: Vec<RefRep>, // sorted by alter id
}

pub struct RefState {
    agents: Vec<RefAgent>,
    shuffle_rng: RefRng,
    tick: u64,
}

impl RefState {
    /// Raw satisfaction tensor `[agent][motive][alternative]`, for exact
    /// state-level comparison against the engine.
    pub fn satisfactions(&self) -> Vec<Vec<Vec<f64>>> {
        self.agents.iter().map(|a| a.sats.clone()).collect()
    }

    /// Believed satisfaction tensors per agent, keyed by alter id.
    pub fn believed_satisfactions(&self) -> Vec<Vec<(u32, Vec<Vec<f64>>)>> {
        self.agents
            .iter()
            .map(|a| {
                a.reps
                    .iter()
                    .map(|r| (r.alter, r.believed_sats.clone()))
                    .collect()
            })
            .collect()
    }
}

fn ref_network_edges(spec: &NetworkSpec, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = RefRng::new(seed, 2);
    match *spec {
        NetworkSpec::Complete { n } => {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j));
                }
            }
            edges
        }
        NetworkSpec::Ring { n, k } => ref_ring(n, k).into_iter().collect(),
        NetworkSpec::ErdosRenyi { n, p } => {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.uniform(0.0, 1.0) < p {
                        edges.push((i, j));
                    }
                }
            }
            edges
        }
        NetworkSpec::WattsStrogatz { n, k, beta } => {
            let mut edges = ref_ring(n, k);
            let mut degree = vec![0u32; n as usize];
            for &(a, b) in &edges {
                degree[a as usize] += 1;
                degree[b as usize] += 1;
            }
            for s in 1..=(k / 2) {
                for i in 0..n {
                    if rng.uniform(0.0, 1.0) >= beta {
                        continue;
                    }
                    if degree[i as usize] == n - 1 {
                        continue;
                    }
                    let j = (i + s) % n;
                    let old = (i.min(j), i.max(j));
                    let new = loop {
                        let c = rng.bounded(n as u64) as u32;
                        let cand = (i.min(c), i.max(c));
                        if c != i && !edges.contains(&cand) {
                            break cand;
                        }
                    };
                    edges.remove(&old);
                    edges.insert(new);
                    degree[j as usize] -= 1;
                    let c = if new.0 == i { new.1 } else { new.0 };
                    degree[c as usize] += 1;
                }
            }
            edges.into_iter().collect()
        }
    }
}

fn ref_ring(n: u32, k: u32) -> BTreeSet<(u32, u32)> {
    let mut edges = BTreeSet::new();
    for s in 1..=(k / 2) {
        for i in 0..n {
            let j = (i + s) % n;
            edges.insert((i.min(j), i.max(j)));
        }
    }
    edges
}

fn ref_evaluation(agent: &RefAgent, alt: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for m in 0..agent.imps.len() {
        num += agent.imps[m] * agent.sats[m][alt];
        den += agent.imps[m];
    }
    assert!(den > 0.0, "reference requires positive total importance");
    num / den
}

fn ref_dissonance(agent: &RefAgent, alt: usize) -> f64 {
    let mut pros = 0.0;
    let mut cons = 0.0;
    for m in 0..agent.imps.len() {
        let s = agent.sats[m][alt];
        if s > 0.0 {
            pros += agent.imps[m];
        } else if s < 0.0 {
            cons += agent.imps[m];
        }
    }
    if pros + cons == 0.0 {
        0.0
    } else {
        2.0 * pros.min(cons) / (pros + cons)
    }
}

fn ref_argmax(evals: &[f64], current: Option<usize>) -> usize {
    let mut best = 0;
    for (i, &e) in evals.iter().enumerate().skip(1) {
        if e > evals[best] {
            best = i;
        }
    }
    if let Some(c) = current {
        if evals[c] == evals[best] {
            return c;
        }
    }
    best
}

fn ref_social_mean(agent: &RefAgent, scn: &Scenario, alt: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for motive in &scn.motives {
        if motive.group == MotiveGroup::Social {
            num += agent.imps[motive.id] * agent.sats[motive.id][alt];
            den += agent.imps[motive.id];
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn ref_like_minded(agent: &RefAgent) -> f64 {
    if agent.reps.is_empty() {
        return 1.0;
    }
    let same = agent
        .reps
        .iter()
        .filter(|r| r.believed_choice == agent.choice)
        .count();
    same as f64 / agent.reps.len() as f64
}

/// Update one agent's social satisfaction entries, dissonance vector, and
/// (optionally) dilemma, in place.
fn ref_refresh(agent: &mut RefAgent, scn: &Scenario, classify: bool) {
    let s = 2.0 * ref_like_minded(agent) - 1.0;
    for motive in &scn.motives {
        if motive.group == MotiveGroup::Social {
            let choice = agent.choice;
            agent.sats[motive.id][choice] = s;
        }
    }
    for alt in 0..scn.alt_count() {
        agent.dissonance[alt] = ref_dissonance(agent, alt);
    }
    if classify {
        agent.dilemma = if agent.dissonance[agent.choice] <= scn.epsilon {
            DilemmaStatus::NoDilemma
        } else if ref_social_mean(agent, scn, agent.choice) < 0.0 {
            DilemmaStatus::SocialDilemma
        } else {
            DilemmaStatus::NonSocialDilemma
        };
    }
}

fn ref_sync(agents: &mut [RefAgent]) {
    let choices: Vec<usize> = agents.iter().map(|a| a.choice).collect();
    for agent in agents.iter_mut() {
        for rep in &mut agent.reps {
            rep.believed_choice = choices[rep.alter as usize];
        }
    }
}

fn ref_similarity(imps: &[f64], other: &[f64]) -> f64 {
    let mut dist = 0.0;
    for m in 0..imps.len() {
        dist += (imps[m] - other[m]).abs();
    }
    1.0 - dist / imps.len() as f64
}

fn ref_record(state: &RefState, scn: &Scenario, events: Vec<CommunicationEvent>) -> TraceRecord {
    let n = state.agents.len();
    let k = scn.alt_count();
    let mut agents = Vec::with_capacity(n);
    let mut choice_counts = vec![0u64; k];
    let mut dissonance_sum = 0.0;
    let mut n_social = 0;
    let mut n_nonsocial = 0;
    for (id, a) in state.agents.iter().enumerate() {
        let evaluations: Vec<f64> = (0..k).map(|alt| ref_evaluation(a, alt)).collect();
        choice_counts[a.choice] += 1;
        dissonance_sum += a.dissonance[a.choice];
        match a.dilemma {
            DilemmaStatus::SocialDilemma => n_social += 1,
            DilemmaStatus::NonSocialDilemma => n_nonsocial += 1,
            DilemmaStatus::NoDilemma => {}
        }
        agents.push(AgentRecord {
            id: id as u32,
            choice: a.choice,
            evaluations,
            dissonance: a.dissonance.clone(),
            dilemma: a.dilemma,
            social_satisfaction: ref_social_mean(a, scn, a.choice),
        });
    }
    let n_signal = events
        .iter()
        .filter(|e| e.kind == EventKind::Signal)
        .count() as u64;
    let n_inquire = events
        .iter()
        .filter(|e| e.kind == EventKind::Inquire)
        .count() as u64;
    TraceRecord {
        tick: state.tick,
        agents,
        events,
        metrics: TickMetrics {
            choice_counts,
            mean_dissonance: dissonance_sum / n as f64,
            n_social_dilemma: n_social,
            n_nonsocial_dilemma: n_nonsocial,
            n_signal,
            n_inquire,
        },
    }
}

pub fn ref_initialize(scn: &Scenario) -> RefState {
    let n = scn.agent_count as usize;
    let motive_count = scn.motive_count();
    let alt_count = scn.alt_count();

    // 1. Agent fields, explicit rows or uniform draws in documented order.
    let mut agents: Vec<RefAgent> = match &scn.init {
        InitSpec::Explicit(rows) => rows
            .iter()
            .map(|row| RefAgent {
                imps: row.importances.clone(),
                sats: row.satisfactions.clone(),
                aspiration: row.aspiration,
                choice: 0,
                dissonance: vec![0.0; alt_count],
                dilemma: DilemmaStatus::NoDilemma,
                reps: Vec::new(),
            })
            .collect(),
        InitSpec::Uniform {
            importance,
            satisfaction,
            aspiration,
        } => {
            let mut rng = RefRng::new(scn.seed, 0);
            (0..n)
                .map(|_| {
                    let imps: Vec<f64> = (0..motive_count)
                        .map(|_| rng.uniform(importance.low, importance.high))
                        .collect();
                    let sats: Vec<Vec<f64>> = (0..motive_count)
                        .map(|_| {
                            (0..alt_count)
                                .map(|_| rng.uniform(satisfaction.low, satisfaction.high))
                                .collect()
                        })
                        .collect();
                    let asp = rng.uniform(aspiration.low, aspiration.high);
                    RefAgent {
                        imps,
                        sats,
                        aspiration: asp,
                        choice: 0,
                        dissonance: vec![0.0; alt_count],
                        dilemma: DilemmaStatus::NoDilemma,
                        reps: Vec::new(),
                    }
                })
                .collect()
        }
    };

    // 2. Network.
    let edges = ref_network_edges(&scn.network, scn.seed);
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(a, b) in &edges {
        adjacency[a as usize].push(b);
        adjacency[b as usize].push(a);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    // 3. Initial choices from the sampled satisfactions.
    for agent in agents.iter_mut() {
        let evals: Vec<f64> = (0..alt_count).map(|alt| ref_evaluation(agent, alt)).collect();
        agent.choice = ref_argmax(&evals, None);
    }

    // 4. Alter representations.
    for id in 0..n {
        let neighbors = adjacency[id].clone();
        let reps: Vec<RefRep> = neighbors
            .iter()
            .map(|&alter| {
                let other = &agents[alter as usize];
                match scn.belief_init {
                    BeliefInit::Perfect => RefRep {
                        alter,
                        believed_choice: other.choice,
                        believed_sats: other.sats.clone(),
                        believed_imps: other.imps.clone(),
                    },
                    BeliefInit::Uninformative => RefRep {
                        alter,
                        believed_choice: other.choice,
                        believed_sats: vec![vec![0.0; alt_count]; motive_count],
                        believed_imps: vec![0.0; motive_count],
                    },
                }
            })
            .collect();
        agents[id].reps = reps;
    }

    // 5-7. Social satisfaction, dissonance, dilemma.
    for agent in agents.iter_mut() {
        ref_refresh(agent, scn, true);
    }

    RefState {
        agents,
        shuffle_rng: RefRng::new(scn.seed, 1),
        tick: 0,
    }
}

pub fn ref_step(state: &mut RefState, scn: &Scenario) -> TraceRecord {
    let n = state.agents.len();
    let record_tick = state.tick + 1;

    // Phase 1: sync believed choices.
    ref_sync(&mut state.agents);

    // Phase 2: social satisfaction, dissonance, dilemma.
    for agent in state.agents.iter_mut() {
        ref_refresh(agent, scn, true);
    }

    // Phase 3: acts in activation order, applied immediately.
    let mut order: Vec<u32> = (0..n as u32).collect();
    if scn.activation_order == ActivationOrder::ShuffledEachTick {
        state.shuffle_rng.shuffle(&mut order);
    }
    let mut events = Vec::new();
    for &ego_id in &order {
        let ego = ego_id as usize;
        let dilemma = state.agents[ego].dilemma;
        match dilemma {
            DilemmaStatus::NoDilemma => {}
            DilemmaStatus::NonSocialDilemma => {
                // Inquire with the most persuasive alter (believed similarity
                // plus the alter's visible aspiration); ties to lowest id.
                let mut best: Option<(u32, f64)> = None;
                for rep in &state.agents[ego].reps {
                    let sim = ref_similarity(&state.agents[ego].imps, &rep.believed_imps);
                    let score = scn.influence.similarity_weight * sim
                        + scn.influence.aspiration_weight
                            * state.agents[rep.alter as usize].aspiration;
                    match best {
                        Some((_, s)) if score <= s => {}
                        _ => best = Some((rep.alter, score)),
                    }
                }
                if let Some((target, _)) = best {
                    let subject = state.agents[ego].choice;
                    let rep_idx = state.agents[ego]
                        .reps
                        .iter()
                        .position(|r| r.alter == target)
                        .unwrap();
                    let sim = ref_similarity(
                        &state.agents[ego].imps,
                        &state.agents[ego].reps[rep_idx].believed_imps,
                    );
                    let p = scn.influence.similarity_weight * sim
                        + scn.influence.aspiration_weight
                            * state.agents[target as usize].aspiration;
                    let step = scn.influence.learning_rate * p;
                    for m in 0..scn.motive_count() {
                        let source = state.agents[target as usize].sats[m][subject];
                        let prior = state.agents[ego].sats[m][subject];
                        state.agents[ego].sats[m][subject] =
                            (1.0 - step) * prior + step * source;
                        state.agents[ego].reps[rep_idx].believed_sats[m][subject] = source;
                    }
                    events.push(CommunicationEvent {
                        tick: record_tick,
                        source_id: ego_id,
                        target_id: target,
                        kind: EventKind::Inquire,
                        subject,
                    });
                }
            }
            DilemmaStatus::SocialDilemma => {
                // Signal to the most gullible alter (believed similarity plus
                // the ego's own aspiration); effect uses true similarity.
                let mut best: Option<(u32, f64)> = None;
                for rep in &state.agents[ego].reps {
                    let sim = ref_similarity(&state.agents[ego].imps, &rep.believed_imps);
                    let score = scn.influence.similarity_weight * sim
                        + scn.influence.aspiration_weight * state.agents[ego].aspiration;
                    match best {
                        Some((_, s)) if score <= s => {}
                        _ => best = Some((rep.alter, score)),
                    }
                }
                if let Some((target, _)) = best {
                    let subject = state.agents[ego].choice;
                    let sim = ref_similarity(
                        &state.agents[target as usize].imps,
                        &state.agents[ego].imps,
                    );
                    let q = scn.influence.similarity_weight * sim
                        + scn.influence.aspiration_weight * state.agents[ego].aspiration;
                    let step = scn.influence.learning_rate * q;
                    let rep_idx = state.agents[target as usize]
                        .reps
                        .iter()
                        .position(|r| r.alter == ego_id)
                        .unwrap();
                    for m in 0..scn.motive_count() {
                        let source = state.agents[ego].sats[m][subject];
                        let prior = state.agents[target as usize].sats[m][subject];
                        state.agents[target as usize].sats[m][subject] =
                            (1.0 - step) * prior + step * source;
                        state.agents[target as usize].reps[rep_idx].believed_sats[m][subject] =
                            source;
                    }
                    events.push(CommunicationEvent {
                        tick: record_tick,
                        source_id: ego_id,
                        target_id: target,
                        kind: EventKind::Signal,
                        subject,
                    });
                }
            }
        }
    }

    // Phase 4: sync again.
    ref_sync(&mut state.agents);

    // Phase 5: social satisfaction, evaluations, dissonance (no dilemma).
    let mut evals: Vec<Vec<f64>> = Vec::with_capacity(n);
    for agent in state.agents.iter_mut() {
        ref_refresh(agent, scn, false);
        let e: Vec<f64> = (0..scn.alt_count())
            .map(|alt| ref_evaluation(agent, alt))
            .collect();
        evals.push(e);
    }

    // Phase 6: simultaneous choice from phase-5 evaluations.
    for (agent, e) in state.agents.iter_mut().zip(&evals) {
        agent.choice = ref_argmax(e, Some(agent.choice));
    }

    state.tick = record_tick;
    ref_record(state, scn, events)
}

/// Full reference trajectory: records for ticks `0..=T`, plus the final
/// state for state-level comparisons.
pub fn ref_run(scn: &Scenario) -> (Vec<TraceRecord>, RefState) {
    let mut state = ref_initialize(scn);
    let mut records = vec![ref_record(&state, scn, Vec::new())];
    for _ in 0..scn.ticks {
        records.push(ref_step(&mut state, scn));
    }
    (records, state)
}
