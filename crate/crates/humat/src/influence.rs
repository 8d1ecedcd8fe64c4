//! Dyadic social influence: persuasiveness and gullibility scoring, target
//! selection, and the signal/inquire belief updates.
//!
//! Target selection uses only information the ego holds (its alter
//! representations plus visible aspirations); the effect of a signal is
//! computed from true states. The subject of every communication act is the
//! ego's current choice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AgentId, DilemmaStatus, Humat};
use crate::network::{AlterRepresentation, CommunicationEvent, EventKind};

/// Weights of the persuasiveness model and the global learning rate.
///
/// `similarity_weight + aspiration_weight` must equal 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceParams {
    pub similarity_weight: f64,
    pub aspiration_weight: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InfluenceError {
    #[error("agent {0} is not a neighbor")]
    NotNeighbor(AgentId),
    #[error("ego has no neighbors")]
    NoNeighbors,
}

/// What an agent decided to do this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Act {
    Signal(AgentId),
    Inquire(AgentId),
    Nothing,
}

fn importance_similarity<'a>(
    lhs: impl ExactSizeIterator<Item = &'a f64>,
    rhs: impl Iterator<Item = &'a f64>,
) -> f64 {
    let motive_count = lhs.len();
    let mut distance = 0.0;
    for (a, b) in lhs.zip(rhs) {
        distance += (a - b).abs();
    }
    1.0 - distance / motive_count as f64
}

/// Similarity between the ego and its belief about one alter: one minus the
/// normalized L1 distance between the importance vectors.
pub fn similarity(ego: &Humat, rep: &AlterRepresentation) -> f64 {
    importance_similarity(
        ego.motive_states.iter().map(|m| &m.importance),
        rep.believed_importances.iter(),
    )
}

/// Similarity computed from both agents' true importance vectors.
pub fn true_similarity(a: &Humat, b: &Humat) -> f64 {
    importance_similarity(
        a.motive_states.iter().map(|m| &m.importance),
        b.motive_states.iter().map(|m| &m.importance),
    )
}

/// How persuasive the alter is to the ego: a convex combination of believed
/// similarity and the alter's (visible) aspiration.
pub fn persuasiveness(
    ego: &Humat,
    rep: &AlterRepresentation,
    alter_aspiration: f64,
    params: &InfluenceParams,
) -> f64 {
    params.similarity_weight * similarity(ego, rep) + params.aspiration_weight * alter_aspiration
}

/// How susceptible the alter is to the ego, estimated from ego-held
/// information: believed similarity combined with the ego's own aspiration
/// (what makes the ego persuasive to the alter).
pub fn gullibility(ego: &Humat, rep: &AlterRepresentation, params: &InfluenceParams) -> f64 {
    params.similarity_weight * similarity(ego, rep) + params.aspiration_weight * ego.aspiration
}

/// The most persuasive alter in the ego network; ties go to the lowest id.
pub fn select_inquiry_target(
    ego: &Humat,
    agents: &[Humat],
    params: &InfluenceParams,
) -> Result<AgentId, InfluenceError> {
    let mut best: Option<(AgentId, f64)> = None;
    for rep in &ego.alter_representations {
        let score = persuasiveness(ego, rep, agents[rep.alter_id as usize].aspiration, params);
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((rep.alter_id, score)),
        }
    }
    best.map(|(id, _)| id).ok_or(InfluenceError::NoNeighbors)
}

/// The most gullible alter in the ego network; ties go to the lowest id.
pub fn select_signal_target(
    ego: &Humat,
    params: &InfluenceParams,
) -> Result<AgentId, InfluenceError> {
    let mut best: Option<(AgentId, f64)> = None;
    for rep in &ego.alter_representations {
        let score = gullibility(ego, rep, params);
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((rep.alter_id, score)),
        }
    }
    best.map(|(id, _)| id).ok_or(InfluenceError::NoNeighbors)
}

fn pair_mut(agents: &mut [Humat], a: usize, b: usize) -> (&mut Humat, &mut Humat) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = agents.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = agents.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

/// The ego asks `target` for advice about its current choice.
///
/// The ego's satisfactions for the subject move toward the alter's with step
/// `learning_rate * p`, where `p` is the alter's persuasiveness to the ego;
/// the ego's believed satisfactions of the alter for the subject are
/// refreshed to the alter's true values. The alter is unchanged.
pub fn inquire(
    agents: &mut [Humat],
    ego_id: AgentId,
    target: AgentId,
    params: &InfluenceParams,
    tick: u64,
) -> Result<CommunicationEvent, InfluenceError> {
    let (ego, alter) = pair_mut(agents, ego_id as usize, target as usize);
    let rep_idx = ego
        .alter_representations
        .binary_search_by_key(&target, |r| r.alter_id)
        .map_err(|_| InfluenceError::NotNeighbor(target))?;
    let p = persuasiveness(
        ego,
        &ego.alter_representations[rep_idx],
        alter.aspiration,
        params,
    );
    let step = params.learning_rate * p;
    let subject = ego.current_choice;
    for (m, state) in ego.motive_states.iter_mut().enumerate() {
        let source = alter.motive_states[m].satisfaction[subject];
        state.satisfaction[subject] = (1.0 - step) * state.satisfaction[subject] + step * source;
        ego.alter_representations[rep_idx].believed_satisfactions[m][subject] = source;
    }
    Ok(CommunicationEvent {
        tick,
        source_id: ego_id,
        target_id: target,
        kind: EventKind::Inquire,
        subject,
    })
}

/// The ego signals to `target`, trying to persuade it about the ego's
/// current choice.
///
/// Mirror of [`inquire`] with roles swapped: the alter's satisfactions for
/// the subject move toward the ego's with step `learning_rate * q`, where
/// `q` is the ego's persuasiveness from the alter's perspective computed
/// from true states; the alter's believed satisfactions of the ego are
/// refreshed. The ego's motive states are unchanged.
pub fn signal(
    agents: &mut [Humat],
    ego_id: AgentId,
    target: AgentId,
    params: &InfluenceParams,
    tick: u64,
) -> Result<CommunicationEvent, InfluenceError> {
    let (ego, alter) = pair_mut(agents, ego_id as usize, target as usize);
    if ego.representation_of(target).is_none() {
        return Err(InfluenceError::NotNeighbor(target));
    }
    let rep_idx = alter
        .alter_representations
        .binary_search_by_key(&ego_id, |r| r.alter_id)
        .map_err(|_| InfluenceError::NotNeighbor(target))?;
    let q = params.similarity_weight * true_similarity(alter, ego)
        + params.aspiration_weight * ego.aspiration;
    let step = params.learning_rate * q;
    let subject = ego.current_choice;
    for (m, state) in alter.motive_states.iter_mut().enumerate() {
        let source = ego.motive_states[m].satisfaction[subject];
        state.satisfaction[subject] = (1.0 - step) * state.satisfaction[subject] + step * source;
        alter.alter_representations[rep_idx].believed_satisfactions[m][subject] = source;
    }
    Ok(CommunicationEvent {
        tick,
        source_id: ego_id,
        target_id: target,
        kind: EventKind::Signal,
        subject,
    })
}

/// Resolve and apply the ego's act for this tick.
///
/// No dilemma means doing nothing; a non-social dilemma inquires with the
/// most persuasive alter; a social dilemma signals to the most gullible
/// alter. An agent without neighbors degrades to doing nothing.
pub fn act(
    agents: &mut [Humat],
    ego_id: AgentId,
    params: &InfluenceParams,
    tick: u64,
) -> Result<Option<CommunicationEvent>, InfluenceError> {
    let decision = decide_act(agents, ego_id, params);
    match decision {
        Act::Nothing => Ok(None),
        Act::Inquire(target) => inquire(agents, ego_id, target, params, tick).map(Some),
        Act::Signal(target) => signal(agents, ego_id, target, params, tick).map(Some),
    }
}

/// Decide the ego's act without applying it.
pub fn decide_act(agents: &[Humat], ego_id: AgentId, params: &InfluenceParams) -> Act {
    let ego = &agents[ego_id as usize];
    match ego.dilemma {
        DilemmaStatus::NoDilemma => Act::Nothing,
        DilemmaStatus::NonSocialDilemma => match select_inquiry_target(ego, agents, params) {
            Ok(target) => Act::Inquire(target),
            Err(_) => Act::Nothing,
        },
        DilemmaStatus::SocialDilemma => match select_signal_target(ego, params) {
            Ok(target) => Act::Signal(target),
            Err(_) => Act::Nothing,
        },
    }
}
