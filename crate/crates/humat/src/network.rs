//! Undirected social graph, ego-network queries, alter representations, and
//! seeded graph generators.
//!
//! Topology is immutable once built. Generators are pinned algorithms over
//! the [`crate::rng`] primitives so that a graph is reproducible bit-for-bit
//! from `(spec, seed)`:
//!
//! * `complete(n)`: every pair `{i, j}`, `i < j`.
//! * `ring(n, k)`: lattice edges `{i, (i+s) mod n}` for `s` in `1..=k/2`,
//!   `i` in `0..n` (`k` even, `k < n`; node degree is `k`).
//! * `erdos_renyi(n, p)`: visit pairs in row-major upper-triangle order
//!   (`i` ascending, then `j` in `i+1..n`); draw `u = uniform_f64(0, 1)` per
//!   pair and keep the edge iff `u < p`.
//! * `watts_strogatz(n, k, beta)`: build `ring(n, k)`, then for `s` in
//!   `1..=k/2` and `i` in `0..n` draw `u = uniform_f64(0, 1)`; if `u < beta`
//!   and node `i` is not already connected to everyone, draw candidates
//!   `c = bounded_u64(n)` until `c != i` and `{i, c}` is absent, then replace
//!   `{i, (i+s) mod n}` with `{i, c}`. A saturated node consumes no
//!   candidate draws.
//!
//! All draws come from substream [`crate::rng::STREAM_NETWORK`] of the given
//! seed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AgentId, AltId, Humat};
use crate::rng::{SeedStream, STREAM_NETWORK};

/// Immutable undirected graph over agent ids `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialNetwork {
    agent_count: u32,
    /// Normalized `i < j`, lexicographically sorted.
    edges: Vec<(AgentId, AgentId)>,
    /// Sorted neighbor list per agent id.
    adjacency: Vec<Vec<AgentId>>,
}

impl SocialNetwork {
    /// Build from an edge list, validating graph invariants.
    ///
    /// Edges may arrive in any order and orientation; they are normalized to
    /// `i < j` and sorted. Self-loops, duplicates, and endpoints outside
    /// `0..agent_count` are rejected.
    pub fn from_edges(
        agent_count: u32,
        edges: impl IntoIterator<Item = (AgentId, AgentId)>,
    ) -> Result<Self, NetworkError> {
        let mut normalized = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(NetworkError::InvalidGraph(format!("self-loop at {a}")));
            }
            if a >= agent_count || b >= agent_count {
                return Err(NetworkError::InvalidGraph(format!(
                    "edge ({a}, {b}) references an agent outside 0..{agent_count}"
                )));
            }
            if !normalized.insert((a.min(b), a.max(b))) {
                return Err(NetworkError::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    a.min(b),
                    a.max(b)
                )));
            }
        }
        let edges: Vec<(AgentId, AgentId)> = normalized.into_iter().collect();
        let mut adjacency = vec![Vec::new(); agent_count as usize];
        for &(a, b) in &edges {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            agent_count,
            edges,
            adjacency,
        })
    }

    pub fn agent_count(&self) -> u32 {
        self.agent_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges normalized `i < j`, lexicographically sorted.
    pub fn edges(&self) -> &[(AgentId, AgentId)] {
        &self.edges
    }

    /// Neighbors of `id`, sorted ascending.
    pub fn neighbors(&self, id: AgentId) -> Result<&[AgentId], NetworkError> {
        self.adjacency
            .get(id as usize)
            .map(Vec::as_slice)
            .ok_or(NetworkError::UnknownAgent(id))
    }

    /// Two-column CSV of the edge list (`source_id,target_id`, one row per
    /// undirected edge, `i < j`).
    pub fn edge_csv(&self) -> String {
        let mut out = String::from("source_id,target_id\n");
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a},{b}\n"));
        }
        out
    }
}

/// Generator specification for the scenario's social network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkSpec {
    Complete { n: u32 },
    Ring { n: u32, k: u32 },
    ErdosRenyi { n: u32, p: f64 },
    WattsStrogatz { n: u32, k: u32, beta: f64 },
}

impl NetworkSpec {
    pub fn agent_count(&self) -> u32 {
        match *self {
            NetworkSpec::Complete { n }
            | NetworkSpec::Ring { n, .. }
            | NetworkSpec::ErdosRenyi { n, .. }
            | NetworkSpec::WattsStrogatz { n, .. } => n,
        }
    }

    /// Check parameter validity without generating.
    pub fn validate(&self) -> Result<(), NetworkError> {
        let invalid = |msg: String| Err(NetworkError::InvalidSpec(msg));
        match *self {
            NetworkSpec::Complete { n } | NetworkSpec::ErdosRenyi { n, .. }
                if n == 0 =>
            {
                return invalid("n must be at least 1".into());
            }
            NetworkSpec::Ring { n, .. } | NetworkSpec::WattsStrogatz { n, .. } if n == 0 => {
                return invalid("n must be at least 1".into());
            }
            _ => {}
        }
        match *self {
            NetworkSpec::Complete { .. } => Ok(()),
            NetworkSpec::Ring { n, k } => {
                if k % 2 != 0 {
                    invalid(format!("ring degree k={k} must be even"))
                } else if k >= n {
                    invalid(format!("ring degree k={k} must be < n={n}"))
                } else {
                    Ok(())
                }
            }
            NetworkSpec::ErdosRenyi { p, .. } => {
                if !(0.0..=1.0).contains(&p) {
                    invalid(format!("p={p} must lie in [0, 1]"))
                } else {
                    Ok(())
                }
            }
            NetworkSpec::WattsStrogatz { n, k, beta } => {
                if k % 2 != 0 {
                    invalid(format!("lattice degree k={k} must be even"))
                } else if k >= n {
                    invalid(format!("lattice degree k={k} must be < n={n}"))
                } else if !(0.0..=1.0).contains(&beta) {
                    invalid(format!("beta={beta} must lie in [0, 1]"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Ring-lattice edge set shared by `ring` and `watts_strogatz`.
fn ring_edges(n: u32, k: u32) -> BTreeSet<(AgentId, AgentId)> {
    let mut edges = BTreeSet::new();
    for s in 1..=(k / 2) {
        for i in 0..n {
            let j = (i + s) % n;
            edges.insert((i.min(j), i.max(j)));
        }
    }
    edges
}

/// Generate the graph for `(spec, seed)`; deterministic for fixed inputs.
pub fn generate_network(spec: &NetworkSpec, seed: u64) -> Result<SocialNetwork, NetworkError> {
    spec.validate()?;
    let mut rng = SeedStream::new(seed, STREAM_NETWORK);
    let edges: Vec<(AgentId, AgentId)> = match *spec {
        NetworkSpec::Complete { n } => {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j));
                }
            }
            edges
        }
        NetworkSpec::Ring { n, k } => ring_edges(n, k).into_iter().collect(),
        NetworkSpec::ErdosRenyi { n, p } => {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.uniform_f64(0.0, 1.0) < p {
                        edges.push((i, j));
                    }
                }
            }
            edges
        }
        NetworkSpec::WattsStrogatz { n, k, beta } => {
            let mut edges = ring_edges(n, k);
            let mut degree = vec![0u32; n as usize];
            for &(a, b) in edges.iter() {
                degree[a as usize] += 1;
                degree[b as usize] += 1;
            }
            for s in 1..=(k / 2) {
                for i in 0..n {
                    if rng.uniform_f64(0.0, 1.0) >= beta {
                        continue;
                    }
                    if degree[i as usize] == n - 1 {
                        continue;
                    }
                    let old = {
                        let j = (i + s) % n;
                        (i.min(j), i.max(j))
                    };
                    let new = loop {
                        let c = rng.bounded_u64(n as u64) as u32;
                        let cand = (i.min(c), i.max(c));
                        if c != i && !edges.contains(&cand) {
                            break cand;
                        }
                    };
                    edges.remove(&old);
                    edges.insert(new);
                    let j = if old.0 == i { old.1 } else { old.0 };
                    let c = if new.0 == i { new.1 } else { new.0 };
                    degree[j as usize] -= 1;
                    degree[c as usize] += 1;
                }
            }
            edges.into_iter().collect()
        }
    };
    SocialNetwork::from_edges(spec.agent_count(), edges)
}

/// The ego's stored beliefs about one linked alter.
#[derive(Debug, Clone, PartialEq)]
pub struct AlterRepresentation {
    pub alter_id: AgentId,
    pub believed_choice: AltId,
    /// `[motive][alternative]`, same dimensions as the scenario.
    pub believed_satisfactions: Vec<Vec<f64>>,
    pub believed_importances: Vec<f64>,
}

/// Kind of communication act between two linked agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Signal,
    Inquire,
}

/// One communication act: an activated link between source and target about
/// the subject alternative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationEvent {
    pub tick: u64,
    pub source_id: AgentId,
    pub target_id: AgentId,
    pub kind: EventKind,
    pub subject: AltId,
}

/// Push every agent's actual choice into its neighbors' representations.
///
/// Only `believed_choice` is overwritten; believed satisfactions and
/// importances change through communication alone. Agents are indexed by id,
/// so `agents[i].id == i` must hold.
pub fn sync_alter_choices(agents: &mut [Humat]) {
    let choices: Vec<AltId> = agents.iter().map(|a| a.current_choice).collect();
    for agent in agents.iter_mut() {
        for rep in &mut agent.alter_representations {
            rep.believed_choice = choices[rep.alter_id as usize];
        }
    }
}

/// Fraction of the ego's neighbors whose believed choice matches the ego's
/// current choice. An agent with no neighbors counts as fully like-minded
/// (fraction 1.0).
pub fn like_minded_fraction(ego: &Humat) -> f64 {
    if ego.alter_representations.is_empty() {
        return 1.0;
    }
    let like_minded = ego
        .alter_representations
        .iter()
        .filter(|rep| rep.believed_choice == ego.current_choice)
        .count();
    like_minded as f64 / ego.alter_representations.len() as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("unknown agent id {0}")]
    UnknownAgent(AgentId),
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}
