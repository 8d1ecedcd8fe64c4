//! Single-agent attitude math: satisfaction evaluation, dissonance strength,
//! choice selection, dilemma classification.
//!
//! Everything here is a pure function of its inputs. Where a result is the
//! sum of per-motive terms, motives are accumulated in ascending `motive_id`
//! order; re-implementations must keep that order to reproduce results
//! bit-for-bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::AlterRepresentation;

pub type AgentId = u32;
pub type MotiveId = usize;
pub type AltId = usize;

/// Which of the three need groups a motive belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotiveGroup {
    Experiential,
    Social,
    Value,
}

/// A need or value agents weigh when forming an attitude.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Motive {
    pub id: MotiveId,
    pub name: String,
    pub group: MotiveGroup,
}

/// One of the discrete options agents decide between.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alternative {
    pub id: AltId,
    pub label: String,
}

/// Per-motive importance weight plus how well each alternative satisfies
/// the motive.
///
/// `importance` is in `[0, 1]`; every `satisfaction` entry is in `[-1, 1]`
/// and the vector has one entry per alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct MotiveState {
    pub importance: f64,
    pub satisfaction: Vec<f64>,
}

/// Outcome of dilemma classification for an agent's current choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DilemmaStatus {
    NoDilemma,
    SocialDilemma,
    NonSocialDilemma,
}

/// One agent: motive states, current choice, cached dissonance and dilemma,
/// and its beliefs about every neighbor.
///
/// `dissonance` has one entry per alternative. `alter_representations` is
/// sorted by alter id and covers exactly the agent's neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct Humat {
    pub id: AgentId,
    pub motive_states: Vec<MotiveState>,
    pub current_choice: AltId,
    pub dissonance: Vec<f64>,
    pub dilemma: DilemmaStatus,
    pub aspiration: f64,
    pub alter_representations: Vec<AlterRepresentation>,
}

impl Humat {
    /// Importance vector in motive order.
    pub fn importances(&self) -> impl Iterator<Item = f64> + '_ {
        self.motive_states.iter().map(|m| m.importance)
    }

    /// Representation of neighbor `alter`, if linked.
    pub fn representation_of(&self, alter: AgentId) -> Option<&AlterRepresentation> {
        self.alter_representations
            .binary_search_by_key(&alter, |r| r.alter_id)
            .ok()
            .map(|i| &self.alter_representations[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    /// Every motive importance is zero; evaluations are undefined.
    #[error("agent has zero total motive importance")]
    ZeroImportance,
    /// The scenario defines no social-group motive.
    #[error("scenario defines no social-group motive")]
    NoSocialMotive,
}

/// Importance-weighted mean satisfaction of alternative `alt`.
///
/// Returns a value in `[-1, 1]`; errors with [`ModelError::ZeroImportance`]
/// when all importances are zero.
pub fn evaluation(agent: &Humat, alt: AltId) -> Result<f64, ModelError> {
    let mut weighted = 0.0;
    let mut total = 0.0;
    for state in &agent.motive_states {
        weighted += state.importance * state.satisfaction[alt];
        total += state.importance;
    }
    if total == 0.0 {
        return Err(ModelError::ZeroImportance);
    }
    Ok(weighted / total)
}

/// Importance mass behind the pros and cons of `alt`.
///
/// Pros sum the importances of motives the alternative satisfies
/// (satisfaction > 0), cons those it dissatisfies (satisfaction < 0).
/// Zero-satisfaction motives contribute to neither side.
pub fn pros_cons(agent: &Humat, alt: AltId) -> (f64, f64) {
    let mut pros = 0.0;
    let mut cons = 0.0;
    for state in &agent.motive_states {
        let sat = state.satisfaction[alt];
        if sat > 0.0 {
            pros += state.importance;
        } else if sat < 0.0 {
            cons += state.importance;
        }
    }
    (pros, cons)
}

/// Dissonance evoked by alternative `alt`: `2 * min(P, C) / (P + C)`.
///
/// Zero when the alternative has no pros or no cons, one when the importance
/// mass behind pros and cons balances exactly.
pub fn dissonance_strength(agent: &Humat, alt: AltId) -> f64 {
    let (pros, cons) = pros_cons(agent, alt);
    let total = pros + cons;
    if total == 0.0 {
        return 0.0;
    }
    2.0 * pros.min(cons) / total
}

/// Pick the alternative maximizing [`evaluation`].
///
/// Ties keep `current` when it is among the maximizers, otherwise the lowest
/// alternative id wins. `current = None` (no prior choice yet) always falls
/// through to the lowest-id rule.
pub fn choose_from_evaluations(evaluations: &[f64], current: Option<AltId>) -> AltId {
    debug_assert!(!evaluations.is_empty());
    let mut best = 0;
    for (alt, &e) in evaluations.iter().enumerate().skip(1) {
        if e > evaluations[best] {
            best = alt;
        }
    }
    if let Some(cur) = current {
        if evaluations[cur] == evaluations[best] {
            return cur;
        }
    }
    best
}

/// Evaluate every alternative and pick per [`choose_from_evaluations`],
/// keeping the agent's current choice on ties.
pub fn choose(agent: &Humat) -> Result<AltId, ModelError> {
    let alt_count = agent.motive_states[0].satisfaction.len();
    let evals = (0..alt_count)
        .map(|alt| evaluation(agent, alt))
        .collect::<Result<Vec<f64>, ModelError>>()?;
    Ok(choose_from_evaluations(&evals, Some(agent.current_choice)))
}

/// Map the like-minded neighbor fraction onto the `[-1, 1]` satisfaction
/// scale: `2 * fraction - 1`.
pub fn social_satisfaction(like_minded_fraction: f64) -> f64 {
    2.0 * like_minded_fraction - 1.0
}

/// Importance-weighted mean satisfaction of `alt` over social-group motives.
///
/// Returns 0 when the social importance mass is zero (a socially indifferent
/// agent is treated as neither satisfied nor dissatisfied). Errors when the
/// motive set contains no social-group motive at all.
pub fn social_mean_satisfaction(
    agent: &Humat,
    motives: &[Motive],
    alt: AltId,
) -> Result<f64, ModelError> {
    let mut weighted = 0.0;
    let mut total = 0.0;
    let mut seen = false;
    for motive in motives {
        if motive.group == MotiveGroup::Social {
            seen = true;
            let state = &agent.motive_states[motive.id];
            weighted += state.importance * state.satisfaction[alt];
            total += state.importance;
        }
    }
    if !seen {
        return Err(ModelError::NoSocialMotive);
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(weighted / total)
}

/// Classify the agent's dilemma about its current choice.
///
/// No dilemma while `dissonance[current] <= epsilon`. Above the threshold the
/// dilemma is social when the social need is dissatisfied (social mean
/// satisfaction < 0), non-social otherwise.
pub fn classify_dilemma(
    agent: &Humat,
    motives: &[Motive],
    epsilon: f64,
) -> Result<DilemmaStatus, ModelError> {
    let social_mean = social_mean_satisfaction(agent, motives, agent.current_choice)?;
    if agent.dissonance[agent.current_choice] <= epsilon {
        return Ok(DilemmaStatus::NoDilemma);
    }
    if social_mean < 0.0 {
        Ok(DilemmaStatus::SocialDilemma)
    } else {
        Ok(DilemmaStatus::NonSocialDilemma)
    }
}
