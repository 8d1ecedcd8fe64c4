//! Canonical full-state snapshots.
//!
//! A snapshot is a single self-describing JSON document holding the complete
//! model state at one tick: agents (sorted by id, motives by id,
//! alternatives by id), the network edge list (lexicographic, `i < j`), and
//! the exact RNG position. All reals are decimal strings with 17
//! significant digits, object keys are sorted, and there is no whitespace,
//! so two semantically equal states serialize to identical bytes.
//!
//! Imported documents are untrusted: every type invariant is re-checked and
//! violations name the offending field path. States written by other
//! implementations can be imported and stepped as long as they follow this
//! schema and the pinned RNG algorithm.

use serde_json::{json, Value};
use thiserror::Error;

use crate::canon::{f64_value, parse_f64, to_canonical_json};
use crate::config::Scenario;
use crate::engine::ModelState;
use crate::model::{
    Alternative, DilemmaStatus, Humat, Motive, MotiveGroup, MotiveState,
};
use crate::network::{AlterRepresentation, SocialNetwork};
use crate::rng::{SeedStream, StreamState, RNG_ALGORITHM};

/// An imported snapshot: the state plus the identity fields needed to match
/// it against a scenario and a golden trace.
#[derive(Debug)]
pub struct Snapshot {
    pub config_digest: String,
    pub motives: Vec<Motive>,
    pub alternatives: Vec<Alternative>,
    pub state: ModelState,
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot parse failure: {0}")]
    Parse(String),
    #[error("unsupported snapshot schema: {0}")]
    SchemaMismatch(String),
    #[error("snapshot validation failure at {path}: {message}")]
    Validation { path: String, message: String },
}

fn violation<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T, SnapshotError> {
    Err(SnapshotError::Validation {
        path: path.into(),
        message: message.into(),
    })
}

fn group_str(g: MotiveGroup) -> &'static str {
    match g {
        MotiveGroup::Experiential => "experiential",
        MotiveGroup::Social => "social",
        MotiveGroup::Value => "value",
    }
}

fn dilemma_str(d: DilemmaStatus) -> &'static str {
    match d {
        DilemmaStatus::NoDilemma => "no_dilemma",
        DilemmaStatus::SocialDilemma => "social_dilemma",
        DilemmaStatus::NonSocialDilemma => "non_social_dilemma",
    }
}

/// Serialize the full state as canonical snapshot bytes (UTF-8 JSON plus a
/// trailing newline).
pub fn export_snapshot(state: &ModelState, scn: &Scenario) -> String {
    let rng = state.shuffle.state();
    let agents: Vec<Value> = state
        .agents
        .iter()
        .map(|agent| {
            let motive_states: Vec<Value> = agent
                .motive_states
                .iter()
                .map(|m| {
                    json!({
                        "importance": f64_value(m.importance),
                        "satisfaction": m.satisfaction.iter().copied().map(f64_value).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let reps: Vec<Value> = agent
                .alter_representations
                .iter()
                .map(|rep| {
                    json!({
                        "alter_id": rep.alter_id,
                        "believed_choice": rep.believed_choice,
                        "believed_importances": rep
                            .believed_importances
                            .iter()
                            .copied()
                            .map(f64_value)
                            .collect::<Vec<_>>(),
                        "believed_satisfactions": rep
                            .believed_satisfactions
                            .iter()
                            .map(|row| row.iter().copied().map(f64_value).collect::<Vec<_>>())
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            json!({
                "id": agent.id,
                "aspiration": f64_value(agent.aspiration),
                "current_choice": agent.current_choice,
                "dilemma": dilemma_str(agent.dilemma),
                "dissonance": agent.dissonance.iter().copied().map(f64_value).collect::<Vec<_>>(),
                "motive_states": motive_states,
                "alter_representations": reps,
            })
        })
        .collect();
    let motives: Vec<Value> = scn
        .motives
        .iter()
        .map(|m| json!({"id": m.id, "name": m.name, "group": group_str(m.group)}))
        .collect();
    let alternatives: Vec<Value> = scn
        .alternatives
        .iter()
        .map(|a| json!({"id": a.id, "label": a.label}))
        .collect();
    let edges: Vec<Value> = state
        .network
        .edges()
        .iter()
        .map(|&(a, b)| json!([a, b]))
        .collect();
    let doc = json!({
        "schema_version": crate::SCHEMA_VERSION,
        "config_digest": scn.digest(),
        "rng": {
            "algorithm": RNG_ALGORITHM,
            "seed": hex::encode(rng.seed),
            "stream": rng.stream,
            "word_pos": rng.word_pos.to_string(),
        },
        "state": {
            "tick": state.tick,
            "agents": agents,
            "motives": motives,
            "alternatives": alternatives,
            "network": {
                "agent_count": state.network.agent_count(),
                "edges": edges,
            },
        },
    });
    to_canonical_json(&doc) + "\n"
}

// ---- import ---------------------------------------------------------------

type Obj = serde_json::Map<String, Value>;

fn as_object<'v>(value: &'v Value, path: &str) -> Result<&'v Obj, SnapshotError> {
    match value.as_object() {
        Some(obj) => Ok(obj),
        None => violation(path, "not an object"),
    }
}

fn field<'v>(obj: &'v Obj, key: &str, path: &str) -> Result<&'v Value, SnapshotError> {
    match obj.get(key) {
        Some(v) => Ok(v),
        None => violation(format!("{path}.{key}"), "missing field"),
    }
}

fn get_u64(obj: &Obj, key: &str, path: &str) -> Result<u64, SnapshotError> {
    match field(obj, key, path)?.as_u64() {
        Some(v) => Ok(v),
        None => violation(format!("{path}.{key}"), "not an unsigned integer"),
    }
}

fn get_str<'v>(obj: &'v Obj, key: &str, path: &str) -> Result<&'v str, SnapshotError> {
    match field(obj, key, path)?.as_str() {
        Some(v) => Ok(v),
        None => violation(format!("{path}.{key}"), "not a string"),
    }
}

fn get_array<'v>(obj: &'v Obj, key: &str, path: &str) -> Result<&'v Vec<Value>, SnapshotError> {
    match field(obj, key, path)?.as_array() {
        Some(v) => Ok(v),
        None => violation(format!("{path}.{key}"), "not an array"),
    }
}

fn real_at(value: &Value, path: &str) -> Result<f64, SnapshotError> {
    let text = match value.as_str() {
        Some(t) => t,
        None => return violation(path, "reals must be decimal strings"),
    };
    match parse_f64(text) {
        Ok(x) => Ok(x),
        Err(e) => violation(path, e),
    }
}

fn checked_real(
    value: &Value,
    path: &str,
    lo: f64,
    hi: f64,
) -> Result<f64, SnapshotError> {
    let x = real_at(value, path)?;
    if !(lo..=hi).contains(&x) {
        return violation(path, format!("{x} is outside [{lo}, {hi}]"));
    }
    Ok(x)
}

fn real_list(
    obj: &Obj,
    key: &str,
    path: &str,
    expected_len: usize,
    lo: f64,
    hi: f64,
) -> Result<Vec<f64>, SnapshotError> {
    let array = get_array(obj, key, path)?;
    if array.len() != expected_len {
        return violation(
            format!("{path}.{key}"),
            format!("expected {expected_len} entries, got {}", array.len()),
        );
    }
    array
        .iter()
        .enumerate()
        .map(|(i, v)| checked_real(v, &format!("{path}.{key}[{i}]"), lo, hi))
        .collect()
}

/// Parse and validate canonical snapshot bytes into a live state.
pub fn import_snapshot(text: &str) -> Result<Snapshot, SnapshotError> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| SnapshotError::Parse(e.to_string()))?;
    let root = as_object(&doc, "snapshot")?;

    let schema = get_str(root, "schema_version", "snapshot")?;
    if schema != crate::SCHEMA_VERSION {
        return Err(SnapshotError::SchemaMismatch(format!(
            "'{schema}' (this build reads '{}')",
            crate::SCHEMA_VERSION
        )));
    }
    let config_digest = get_str(root, "config_digest", "snapshot")?.to_string();

    // RNG block.
    let rng_obj = as_object(field(root, "rng", "snapshot")?, "rng")?;
    let algorithm = get_str(rng_obj, "algorithm", "rng")?;
    if algorithm != RNG_ALGORITHM {
        return violation(
            "rng.algorithm",
            format!("'{algorithm}' is not the pinned algorithm '{RNG_ALGORITHM}'"),
        );
    }
    let seed_hex = get_str(rng_obj, "seed", "rng")?;
    let seed_bytes = match hex::decode(seed_hex) {
        Ok(b) if b.len() == 32 => b,
        Ok(b) => return violation("rng.seed", format!("expected 32 bytes, got {}", b.len())),
        Err(e) => return violation("rng.seed", format!("invalid hex: {e}")),
    };
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&seed_bytes);
    let stream = get_u64(rng_obj, "stream", "rng")?;
    let word_pos: u128 = match get_str(rng_obj, "word_pos", "rng")?.parse() {
        Ok(v) => v,
        Err(e) => return violation("rng.word_pos", format!("not an unsigned integer: {e}")),
    };
    let shuffle = SeedStream::restore(&StreamState {
        seed,
        stream,
        word_pos,
    });

    // State block.
    let state_obj = as_object(field(root, "state", "snapshot")?, "state")?;
    let tick = get_u64(state_obj, "tick", "state")?;

    // Motives.
    let mut motives = Vec::new();
    for (i, v) in get_array(state_obj, "motives", "state")?.iter().enumerate() {
        let path = format!("state.motives[{i}]");
        let obj = as_object(v, &path)?;
        let id = get_u64(obj, "id", &path)? as usize;
        if id != i {
            return violation(format!("{path}.id"), format!("expected dense id {i}, got {id}"));
        }
        let group = match get_str(obj, "group", &path)? {
            "experiential" => MotiveGroup::Experiential,
            "social" => MotiveGroup::Social,
            "value" => MotiveGroup::Value,
            other => return violation(format!("{path}.group"), format!("unknown group '{other}'")),
        };
        motives.push(Motive {
            id,
            name: get_str(obj, "name", &path)?.to_string(),
            group,
        });
    }
    if motives.is_empty() {
        return violation("state.motives", "at least one motive is required");
    }
    if !motives.iter().any(|m| m.group == MotiveGroup::Social) {
        return violation("state.motives", "at least one social-group motive is required");
    }

    // Alternatives.
    let mut alternatives = Vec::new();
    for (i, v) in get_array(state_obj, "alternatives", "state")?
        .iter()
        .enumerate()
    {
        let path = format!("state.alternatives[{i}]");
        let obj = as_object(v, &path)?;
        let id = get_u64(obj, "id", &path)? as usize;
        if id != i {
            return violation(format!("{path}.id"), format!("expected dense id {i}, got {id}"));
        }
        alternatives.push(Alternative {
            id,
            label: get_str(obj, "label", &path)?.to_string(),
        });
    }
    if alternatives.len() < 2 {
        return violation("state.alternatives", "at least two alternatives are required");
    }
    let motive_count = motives.len();
    let alt_count = alternatives.len();

    // Network.
    let net_obj = as_object(field(state_obj, "network", "state")?, "state.network")?;
    let agent_count = get_u64(net_obj, "agent_count", "state.network")? as u32;
    if agent_count == 0 {
        return violation("state.network.agent_count", "must be at least 1");
    }
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for (i, v) in get_array(net_obj, "edges", "state.network")?.iter().enumerate() {
        let path = format!("state.network.edges[{i}]");
        let pair = match v.as_array() {
            Some(p) if p.len() == 2 => p,
            _ => return violation(path, "edge must be a two-element array"),
        };
        let a = match pair[0].as_u64() {
            Some(a) => a as u32,
            None => return violation(format!("{path}[0]"), "not an unsigned integer"),
        };
        let b = match pair[1].as_u64() {
            Some(b) => b as u32,
            None => return violation(format!("{path}[1]"), "not an unsigned integer"),
        };
        if a >= b {
            return violation(path, "edges must be canonical (i < j)");
        }
        if let Some(&last) = edges.last().as_ref() {
            if *last >= (a, b) {
                return violation(path, "edges must be strictly lexicographically sorted");
            }
        }
        edges.push((a, b));
    }
    let network = SocialNetwork::from_edges(agent_count, edges).map_err(|e| {
        SnapshotError::Validation {
            path: "state.network.edges".into(),
            message: e.to_string(),
        }
    })?;

    // Agents.
    let agent_values = get_array(state_obj, "agents", "state")?;
    if agent_values.len() != agent_count as usize {
        return violation(
            "state.agents",
            format!(
                "network declares {agent_count} agents, snapshot has {}",
                agent_values.len()
            ),
        );
    }
    let mut agents: Vec<Humat> = Vec::with_capacity(agent_values.len());
    for (i, v) in agent_values.iter().enumerate() {
        let path = format!("state.agents[{i}]");
        let obj = as_object(v, &path)?;
        let id = get_u64(obj, "id", &path)? as usize;
        if id != i {
            return violation(format!("{path}.id"), format!("agents must be sorted by dense id; expected {i}, got {id}"));
        }
        let aspiration = checked_real(field(obj, "aspiration", &path)?, &format!("{path}.aspiration"), 0.0, 1.0)?;
        let current_choice = get_u64(obj, "current_choice", &path)? as usize;
        if current_choice >= alt_count {
            return violation(
                format!("{path}.current_choice"),
                format!("choice {current_choice} outside 0..{alt_count}"),
            );
        }
        let dilemma = match get_str(obj, "dilemma", &path)? {
            "no_dilemma" => DilemmaStatus::NoDilemma,
            "social_dilemma" => DilemmaStatus::SocialDilemma,
            "non_social_dilemma" => DilemmaStatus::NonSocialDilemma,
            other => {
                return violation(format!("{path}.dilemma"), format!("unknown dilemma '{other}'"))
            }
        };
        let dissonance = real_list(obj, "dissonance", &path, alt_count, 0.0, 1.0)?;
        let mut motive_states = Vec::with_capacity(motive_count);
        let states = get_array(obj, "motive_states", &path)?;
        if states.len() != motive_count {
            return violation(
                format!("{path}.motive_states"),
                format!("expected {motive_count} entries, got {}", states.len()),
            );
        }
        for (m, sv) in states.iter().enumerate() {
            let spath = format!("{path}.motive_states[{m}]");
            let sobj = as_object(sv, &spath)?;
            let importance =
                checked_real(field(sobj, "importance", &spath)?, &format!("{spath}.importance"), 0.0, 1.0)?;
            let satisfaction = real_list(sobj, "satisfaction", &spath, alt_count, -1.0, 1.0)?;
            motive_states.push(MotiveState {
                importance,
                satisfaction,
            });
        }
        let mut reps = Vec::new();
        for (r, rv) in get_array(obj, "alter_representations", &path)?.iter().enumerate() {
            let rpath = format!("{path}.alter_representations[{r}]");
            let robj = as_object(rv, &rpath)?;
            let alter_id = get_u64(robj, "alter_id", &rpath)? as u32;
            if alter_id as usize == i {
                return violation(format!("{rpath}.alter_id"), "agent cannot represent itself");
            }
            if alter_id >= agent_count {
                return violation(
                    format!("{rpath}.alter_id"),
                    format!("alter {alter_id} outside 0..{agent_count}"),
                );
            }
            if let Some(last) = reps.last() {
                let last: &AlterRepresentation = last;
                if last.alter_id >= alter_id {
                    return violation(
                        format!("{rpath}.alter_id"),
                        "representations must be strictly sorted by alter id",
                    );
                }
            }
            let believed_choice = get_u64(robj, "believed_choice", &rpath)? as usize;
            if believed_choice >= alt_count {
                return violation(
                    format!("{rpath}.believed_choice"),
                    format!("choice {believed_choice} outside 0..{alt_count}"),
                );
            }
            let believed_importances =
                real_list(robj, "believed_importances", &rpath, motive_count, 0.0, 1.0)?;
            let sat_rows = get_array(robj, "believed_satisfactions", &rpath)?;
            if sat_rows.len() != motive_count {
                return violation(
                    format!("{rpath}.believed_satisfactions"),
                    format!("expected {motive_count} rows, got {}", sat_rows.len()),
                );
            }
            let mut believed_satisfactions = Vec::with_capacity(motive_count);
            for (m, row) in sat_rows.iter().enumerate() {
                let rowpath = format!("{rpath}.believed_satisfactions[{m}]");
                let row = match row.as_array() {
                    Some(r) => r,
                    None => return violation(rowpath, "not an array"),
                };
                if row.len() != alt_count {
                    return violation(
                        rowpath,
                        format!("expected {alt_count} entries, got {}", row.len()),
                    );
                }
                believed_satisfactions.push(
                    row.iter()
                        .enumerate()
                        .map(|(a, v)| checked_real(v, &format!("{rowpath}[{a}]"), -1.0, 1.0))
                        .collect::<Result<Vec<f64>, _>>()?,
                );
            }
            reps.push(AlterRepresentation {
                alter_id,
                believed_choice,
                believed_satisfactions,
                believed_importances,
            });
        }
        agents.push(Humat {
            id: i as u32,
            motive_states,
            current_choice,
            dissonance,
            dilemma,
            aspiration,
            alter_representations: reps,
        });
    }

    // Representations must cover exactly the ego's neighbors.
    for agent in &agents {
        let neighbors = network
            .neighbors(agent.id)
            .expect("agent ids validated against network");
        let rep_ids: Vec<u32> = agent.alter_representations.iter().map(|r| r.alter_id).collect();
        if rep_ids != neighbors {
            return violation(
                format!("state.agents[{}].alter_representations", agent.id),
                format!("representation ids {rep_ids:?} do not match neighbors {neighbors:?}"),
            );
        }
    }

    Ok(Snapshot {
        config_digest,
        motives,
        alternatives,
        state: ModelState {
            tick,
            agents,
            network,
            shuffle,
        },
    })
}

/// Check an imported snapshot's dimensions against a resolved scenario.
pub fn check_snapshot_matches(snapshot: &Snapshot, scn: &Scenario) -> Result<(), SnapshotError> {
    if snapshot.motives.len() != scn.motive_count() {
        return violation(
            "state.motives",
            format!(
                "snapshot has {} motives, scenario has {}",
                snapshot.motives.len(),
                scn.motive_count()
            ),
        );
    }
    if snapshot.alternatives.len() != scn.alt_count() {
        return violation(
            "state.alternatives",
            format!(
                "snapshot has {} alternatives, scenario has {}",
                snapshot.alternatives.len(),
                scn.alt_count()
            ),
        );
    }
    if snapshot.state.network.agent_count() != scn.agent_count {
        return violation(
            "state.network.agent_count",
            format!(
                "snapshot has {} agents, scenario has {}",
                snapshot.state.network.agent_count(),
                scn.agent_count
            ),
        );
    }
    Ok(())
}
