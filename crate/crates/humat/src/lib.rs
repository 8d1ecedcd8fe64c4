//! Deterministic simulator for attitude formation on social networks, plus
//! a replication harness.
//!
//! Agents weigh experiential, social, and value motives over a set of
//! discrete alternatives. An alternative that satisfies some motives while
//! dissatisfying others evokes dissonance; dissonant agents resolve the
//! tension socially, either inquiring with their most persuasive neighbor
//! (moving their own beliefs) or signaling to their most gullible neighbor
//! (moving the neighbor's beliefs). Choices, like-mindedness, and beliefs
//! feed back through an immutable ego network each tick.
//!
//! The harness side records every agent parameter at every tick in a
//! canonical trace, exports/imports full-state snapshots, and diffs traces
//! within per-field tolerances, so a run can be certified against a golden
//! trace or against a re-implementation in another language.

pub mod canon;
pub mod config;
pub mod diff;
pub mod engine;
pub mod influence;
pub mod model;
pub mod network;
pub mod rng;
pub mod snapshot;
pub mod trace;

/// Schema tag shared by config documents, trace headers, and snapshots.
pub const SCHEMA_VERSION: &str = "humat/1";

pub use config::{ActivationOrder, BeliefInit, Scenario};
pub use diff::{diff_trace_dirs, diff_traces, replay_check, DiffReport, Tolerances};
pub use engine::{initialize, run, run_to_dir, step, ModelState, RunSummary};
pub use influence::InfluenceParams;
pub use model::{DilemmaStatus, Humat, Motive, MotiveGroup};
pub use network::{generate_network, NetworkSpec, SocialNetwork};
pub use snapshot::{export_snapshot, import_snapshot, Snapshot};
pub use trace::{RunTrace, TraceRecord};

#[cfg(test)]
pub(crate) mod test_support {
    /// Two-agent scenario used by cross-module unit tests.
    pub const SMALL_CONFIG: &str = r#"
seed = 17
ticks = 3
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
learning_rate = 0.4

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
"#;
}
