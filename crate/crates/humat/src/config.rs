//! Scenario configuration: TOML ingestion, dotted-path overrides,
//! validation with field-path diagnostics, and the canonical config digest.
//!
//! The raw TOML document is deserialized into [`RawConfig`], then
//! [`Scenario::resolve`] checks every invariant and produces the validated
//! runtime form. The digest identifying a scenario is the SHA-256 of its
//! canonical JSON rendering, so formatting and comment differences in the
//! TOML source do not change identity.

use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::canon::{f64_value, to_canonical_json};
use crate::influence::InfluenceParams;
use crate::model::{Alternative, Motive, MotiveGroup};
use crate::network::NetworkSpec;

/// How agents are ordered in the act phase of each tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationOrder {
    ByIdAscending,
    ShuffledEachTick,
}

impl ActivationOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            ActivationOrder::ByIdAscending => "by_id_ascending",
            ActivationOrder::ShuffledEachTick => "shuffled_each_tick",
        }
    }
}

/// How believed satisfactions/importances of alters start out. Believed
/// choices always start from the alters' actual choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefInit {
    /// Copy the alter's true values (perfect initial information).
    Perfect,
    /// All-zero beliefs until communication fills them in.
    Uninformative,
}

impl BeliefInit {
    pub fn as_str(self) -> &'static str {
        match self {
            BeliefInit::Perfect => "perfect",
            BeliefInit::Uninformative => "uninformative",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: u64,
    pub ticks: u64,
    pub epsilon: f64,
    pub activation_order: ActivationOrder,
    #[serde(default = "default_belief_init")]
    pub belief_init: BeliefInit,
    pub motives: Vec<RawMotive>,
    pub alternatives: Vec<RawAlternative>,
    pub influence: InfluenceParams,
    /// The social network of the scenario.
    #[serde(default)]
    pub network: Option<RawNetwork>,
    /// Reserved multi-network slot; currently must hold exactly one entry.
    /// Interchangeable with `network`.
    #[serde(default)]
    pub networks: Option<Vec<RawNetwork>>,
    #[serde(default)]
    pub population: Option<RawPopulation>,
    #[serde(default)]
    pub agents: Option<Vec<RawAgent>>,
}

fn default_belief_init() -> BeliefInit {
    BeliefInit::Perfect
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMotive {
    pub id: usize,
    pub name: String,
    pub group: MotiveGroup,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAlternative {
    pub id: usize,
    pub label: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNetwork {
    pub kind: String,
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRange {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPopulation {
    pub size: u32,
    pub importance: RawRange,
    pub satisfaction: RawRange,
    pub aspiration: RawRange,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAgent {
    pub id: u32,
    pub importances: Vec<f64>,
    /// `[motive][alternative]`.
    pub satisfactions: Vec<Vec<f64>>,
    pub aspiration: f64,
}

/// Uniform sampling bounds for one scalar field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformRange {
    pub low: f64,
    pub high: f64,
}

/// Fully specified initial state of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentInit {
    pub importances: Vec<f64>,
    pub satisfactions: Vec<Vec<f64>>,
    pub aspiration: f64,
}

/// Where initial agent states come from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Explicit per-agent table, indexed by agent id.
    Explicit(Vec<AgentInit>),
    /// Uniform sampling from the given ranges.
    Uniform {
        importance: UniformRange,
        satisfaction: UniformRange,
        aspiration: UniformRange,
    },
}

/// Validated runtime scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub motives: Vec<Motive>,
    pub alternatives: Vec<Alternative>,
    pub agent_count: u32,
    pub init: InitSpec,
    pub network: NetworkSpec,
    pub influence: InfluenceParams,
    pub epsilon: f64,
    pub ticks: u64,
    pub seed: u64,
    pub activation_order: ActivationOrder,
    pub belief_init: BeliefInit,
    digest: String,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config at {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("invalid override '{0}': {1}")]
    Override(String, String),
}

fn invalid<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    })
}

fn check_unit_interval(path: &str, x: f64) -> Result<(), ConfigError> {
    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
        return invalid(path, format!("{x} is outside [0, 1]"));
    }
    Ok(())
}

fn check_valence(path: &str, x: f64) -> Result<(), ConfigError> {
    if !x.is_finite() || !(-1.0..=1.0).contains(&x) {
        return invalid(path, format!("{x} is outside [-1, 1]"));
    }
    Ok(())
}

fn check_range(
    path: &str,
    range: RawRange,
    check: fn(&str, f64) -> Result<(), ConfigError>,
) -> Result<UniformRange, ConfigError> {
    check(&format!("{path}.low"), range.low)?;
    check(&format!("{path}.high"), range.high)?;
    if range.low > range.high {
        return invalid(path, format!("low {} > high {}", range.low, range.high));
    }
    Ok(UniformRange {
        low: range.low,
        high: range.high,
    })
}

impl Scenario {
    /// Parse, apply `--set` style overrides, validate, and resolve.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        apply_overrides(&mut doc, overrides)?;
        let raw: RawConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        Self::resolve(raw)
    }

    /// Read a TOML file and resolve it.
    pub fn from_toml_file(
        path: impl AsRef<std::path::Path>,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, overrides)
    }

    /// Validate every constraint and build the runtime form.
    pub fn resolve(raw: RawConfig) -> Result<Self, ConfigError> {
        // Motives: dense 0-based ids, at least one, at least one social.
        if raw.motives.is_empty() {
            return invalid("motives", "at least one motive is required");
        }
        let mut motives: Vec<Option<Motive>> = vec![None; raw.motives.len()];
        for (i, m) in raw.motives.iter().enumerate() {
            if m.id >= motives.len() {
                return invalid(
                    format!("motives[{i}].id"),
                    format!("id {} outside dense range 0..{}", m.id, motives.len()),
                );
            }
            if motives[m.id].is_some() {
                return invalid(format!("motives[{i}].id"), format!("duplicate id {}", m.id));
            }
            motives[m.id] = Some(Motive {
                id: m.id,
                name: m.name.clone(),
                group: m.group,
            });
        }
        let motives: Vec<Motive> = motives.into_iter().map(|m| m.unwrap()).collect();
        if !motives.iter().any(|m| m.group == MotiveGroup::Social) {
            return invalid("motives", "at least one social-group motive is required");
        }

        // Alternatives: dense ids, at least two, CSV-safe unique labels.
        if raw.alternatives.len() < 2 {
            return invalid("alternatives", "at least two alternatives are required");
        }
        let mut alternatives: Vec<Option<Alternative>> = vec![None; raw.alternatives.len()];
        for (i, a) in raw.alternatives.iter().enumerate() {
            if a.id >= alternatives.len() {
                return invalid(
                    format!("alternatives[{i}].id"),
                    format!("id {} outside dense range 0..{}", a.id, alternatives.len()),
                );
            }
            if alternatives[a.id].is_some() {
                return invalid(
                    format!("alternatives[{i}].id"),
                    format!("duplicate id {}", a.id),
                );
            }
            if a.label.is_empty()
                || !a
                    .label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return invalid(
                    format!("alternatives[{i}].label"),
                    "label must be nonempty and use only [A-Za-z0-9_-]",
                );
            }
            alternatives[a.id] = Some(Alternative {
                id: a.id,
                label: a.label.clone(),
            });
        }
        let alternatives: Vec<Alternative> =
            alternatives.into_iter().map(|a| a.unwrap()).collect();
        for i in 0..alternatives.len() {
            for j in (i + 1)..alternatives.len() {
                if alternatives[i].label == alternatives[j].label {
                    return invalid(
                        format!("alternatives[{j}].label"),
                        format!("duplicate label '{}'", alternatives[j].label),
                    );
                }
            }
        }
        let motive_count = motives.len();
        let alt_count = alternatives.len();

        // Influence parameters.
        check_unit_interval("influence.similarity_weight", raw.influence.similarity_weight)?;
        check_unit_interval("influence.aspiration_weight", raw.influence.aspiration_weight)?;
        check_unit_interval("influence.learning_rate", raw.influence.learning_rate)?;
        let weight_sum = raw.influence.similarity_weight + raw.influence.aspiration_weight;
        if (weight_sum - 1.0).abs() > 1e-9 {
            return invalid(
                "influence",
                format!("similarity_weight + aspiration_weight = {weight_sum}, must equal 1"),
            );
        }

        if !raw.epsilon.is_finite() || raw.epsilon < 0.0 {
            return invalid("epsilon", format!("{} must be >= 0", raw.epsilon));
        }

        // Initialization: exactly one of population/agents.
        let (agent_count, init) = match (&raw.population, &raw.agents) {
            (Some(_), Some(_)) => {
                return invalid(
                    "population",
                    "provide either [population] or [[agents]], not both",
                );
            }
            (None, None) => {
                return invalid(
                    "population",
                    "one of [population] or [[agents]] is required",
                );
            }
            (Some(pop), None) => {
                if pop.size == 0 {
                    return invalid("population.size", "population must have at least 1 agent");
                }
                let importance =
                    check_range("population.importance", pop.importance, check_unit_interval)?;
                if importance.high <= 0.0 {
                    return invalid(
                        "population.importance.high",
                        "importance range must admit nonzero importances",
                    );
                }
                let satisfaction =
                    check_range("population.satisfaction", pop.satisfaction, check_valence)?;
                let aspiration =
                    check_range("population.aspiration", pop.aspiration, check_unit_interval)?;
                (
                    pop.size,
                    InitSpec::Uniform {
                        importance,
                        satisfaction,
                        aspiration,
                    },
                )
            }
            (None, Some(rows)) => {
                if rows.is_empty() {
                    return invalid("agents", "agent table must not be empty");
                }
                let n = rows.len();
                let mut inits: Vec<Option<AgentInit>> = vec![None; n];
                for (i, row) in rows.iter().enumerate() {
                    let path = format!("agents[{i}]");
                    if row.id as usize >= n {
                        return invalid(
                            format!("{path}.id"),
                            format!("id {} outside dense range 0..{n}", row.id),
                        );
                    }
                    if inits[row.id as usize].is_some() {
                        return invalid(format!("{path}.id"), format!("duplicate id {}", row.id));
                    }
                    if row.importances.len() != motive_count {
                        return invalid(
                            format!("{path}.importances"),
                            format!("expected {motive_count} entries, got {}", row.importances.len()),
                        );
                    }
                    for (m, &imp) in row.importances.iter().enumerate() {
                        check_unit_interval(&format!("{path}.importances[{m}]"), imp)?;
                    }
                    if row.importances.iter().sum::<f64>() == 0.0 {
                        return invalid(
                            format!("{path}.importances"),
                            "total importance must be positive",
                        );
                    }
                    if row.satisfactions.len() != motive_count {
                        return invalid(
                            format!("{path}.satisfactions"),
                            format!("expected {motive_count} rows, got {}", row.satisfactions.len()),
                        );
                    }
                    for (m, sats) in row.satisfactions.iter().enumerate() {
                        if sats.len() != alt_count {
                            return invalid(
                                format!("{path}.satisfactions[{m}]"),
                                format!("expected {alt_count} entries, got {}", sats.len()),
                            );
                        }
                        for (a, &sat) in sats.iter().enumerate() {
                            check_valence(&format!("{path}.satisfactions[{m}][{a}]"), sat)?;
                        }
                    }
                    check_unit_interval(&format!("{path}.aspiration"), row.aspiration)?;
                    inits[row.id as usize] = Some(AgentInit {
                        importances: row.importances.clone(),
                        satisfactions: row.satisfactions.clone(),
                        aspiration: row.aspiration,
                    });
                }
                (
                    n as u32,
                    InitSpec::Explicit(inits.into_iter().map(|i| i.unwrap()).collect()),
                )
            }
        };

        // Network spec: inject n, check kind-specific parameters. The
        // `networks` list is reserved for multi-network scenarios and must
        // hold exactly one entry for now.
        let raw_network = match (&raw.network, &raw.networks) {
            (Some(net), None) => net,
            (None, Some(list)) if list.len() == 1 => &list[0],
            (None, Some(list)) => {
                return invalid(
                    "networks",
                    format!(
                        "exactly one network is supported in this version, got {}",
                        list.len()
                    ),
                );
            }
            (Some(_), Some(_)) => {
                return invalid("networks", "provide either [network] or [[networks]], not both");
            }
            (None, None) => {
                return invalid("network", "one of [network] or [[networks]] is required");
            }
        };
        let network = resolve_network(raw_network, agent_count)?;
        network
            .validate()
            .map_err(|e| ConfigError::Invalid {
                path: "network".into(),
                message: e.to_string(),
            })?;

        let mut scenario = Scenario {
            motives,
            alternatives,
            agent_count,
            init,
            network,
            influence: raw.influence,
            epsilon: raw.epsilon,
            ticks: raw.ticks,
            seed: raw.seed,
            activation_order: raw.activation_order,
            belief_init: raw.belief_init,
            digest: String::new(),
        };
        let canonical = to_canonical_json(&scenario.canonical_value());
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        scenario.digest = hex::encode(hasher.finalize());
        Ok(scenario)
    }

    /// SHA-256 (hex) of the canonical config document.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn motive_count(&self) -> usize {
        self.motives.len()
    }

    pub fn alt_count(&self) -> usize {
        self.alternatives.len()
    }

    /// Canonical JSON form of the resolved scenario; digest input and the
    /// `config.json` document stored inside trace directories.
    pub fn canonical_value(&self) -> Value {
        let motives: Vec<Value> = self
            .motives
            .iter()
            .map(|m| {
                json!({
                    "id": m.id,
                    "name": m.name,
                    "group": match m.group {
                        MotiveGroup::Experiential => "experiential",
                        MotiveGroup::Social => "social",
                        MotiveGroup::Value => "value",
                    },
                })
            })
            .collect();
        let alternatives: Vec<Value> = self
            .alternatives
            .iter()
            .map(|a| json!({"id": a.id, "label": a.label}))
            .collect();
        let network = match self.network {
            NetworkSpec::Complete { n } => json!({"kind": "complete", "n": n}),
            NetworkSpec::Ring { n, k } => json!({"kind": "ring", "n": n, "k": k}),
            NetworkSpec::ErdosRenyi { n, p } => {
                json!({"kind": "erdos_renyi", "n": n, "p": f64_value(p)})
            }
            NetworkSpec::WattsStrogatz { n, k, beta } => {
                json!({"kind": "watts_strogatz", "n": n, "k": k, "beta": f64_value(beta)})
            }
        };
        let init = match &self.init {
            InitSpec::Uniform {
                importance,
                satisfaction,
                aspiration,
            } => {
                let range = |r: &UniformRange| {
                    json!({"low": f64_value(r.low), "high": f64_value(r.high)})
                };
                json!({
                    "mode": "uniform",
                    "importance": range(importance),
                    "satisfaction": range(satisfaction),
                    "aspiration": range(aspiration),
                })
            }
            InitSpec::Explicit(rows) => {
                let rows: Vec<Value> = rows
                    .iter()
                    .enumerate()
                    .map(|(id, row)| {
                        json!({
                            "id": id,
                            "importances": row.importances.iter().copied().map(f64_value).collect::<Vec<_>>(),
                            "satisfactions": row
                                .satisfactions
                                .iter()
                                .map(|sats| sats.iter().copied().map(f64_value).collect::<Vec<_>>())
                                .collect::<Vec<_>>(),
                            "aspiration": f64_value(row.aspiration),
                        })
                    })
                    .collect();
                json!({"mode": "explicit", "agents": rows})
            }
        };
        json!({
            "schema_version": crate::SCHEMA_VERSION,
            "seed": self.seed,
            "ticks": self.ticks,
            "epsilon": f64_value(self.epsilon),
            "activation_order": self.activation_order.as_str(),
            "belief_init": self.belief_init.as_str(),
            "agent_count": self.agent_count,
            "motives": motives,
            "alternatives": alternatives,
            "influence": {
                "similarity_weight": f64_value(self.influence.similarity_weight),
                "aspiration_weight": f64_value(self.influence.aspiration_weight),
                "learning_rate": f64_value(self.influence.learning_rate),
            },
            "network": network,
            "init": init,
        })
    }
}

impl Scenario {
    /// Rebuild a scenario from its canonical JSON document (the
    /// `config.json` stored in trace directories). Validation runs again
    /// and the digest is recomputed; a canonical document round-trips to
    /// the same digest.
    pub fn from_canonical_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| ConfigError::Parse("config document is not an object".into()))?;
        let get = |key: &str| -> Result<&Value, ConfigError> {
            obj.get(key).ok_or_else(|| ConfigError::Invalid {
                path: key.into(),
                message: "missing field".into(),
            })
        };
        let real = |v: &Value, path: &str| -> Result<f64, ConfigError> {
            let text = v.as_str().ok_or_else(|| ConfigError::Invalid {
                path: path.into(),
                message: "reals must be decimal strings".into(),
            })?;
            crate::canon::parse_f64(text).map_err(|e| ConfigError::Invalid {
                path: path.into(),
                message: e,
            })
        };
        let uint = |v: &Value, path: &str| -> Result<u64, ConfigError> {
            v.as_u64().ok_or_else(|| ConfigError::Invalid {
                path: path.into(),
                message: "not an unsigned integer".into(),
            })
        };

        let schema = get("schema_version")?.as_str().unwrap_or_default();
        if schema != crate::SCHEMA_VERSION {
            return Err(ConfigError::Parse(format!(
                "unsupported config schema '{schema}' (this build reads '{}')",
                crate::SCHEMA_VERSION
            )));
        }

        let mut motives = Vec::new();
        for (i, v) in get("motives")?
            .as_array()
            .ok_or_else(|| ConfigError::Parse("motives is not an array".into()))?
            .iter()
            .enumerate()
        {
            let path = format!("motives[{i}]");
            let m = v
                .as_object()
                .ok_or_else(|| ConfigError::Parse(format!("{path} is not an object")))?;
            motives.push(RawMotive {
                id: uint(m.get("id").unwrap_or(&Value::Null), &format!("{path}.id"))? as usize,
                name: m
                    .get("name")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string(),
                group: match m.get("group").and_then(Value::as_str) {
                    Some("experiential") => MotiveGroup::Experiential,
                    Some("social") => MotiveGroup::Social,
                    Some("value") => MotiveGroup::Value,
                    other => {
                        return Err(ConfigError::Invalid {
                            path: format!("{path}.group"),
                            message: format!("unknown group {other:?}"),
                        })
                    }
                },
            });
        }

        let mut alternatives = Vec::new();
        for (i, v) in get("alternatives")?
            .as_array()
            .ok_or_else(|| ConfigError::Parse("alternatives is not an array".into()))?
            .iter()
            .enumerate()
        {
            let path = format!("alternatives[{i}]");
            let a = v
                .as_object()
                .ok_or_else(|| ConfigError::Parse(format!("{path} is not an object")))?;
            alternatives.push(RawAlternative {
                id: uint(a.get("id").unwrap_or(&Value::Null), &format!("{path}.id"))? as usize,
                label: a
                    .get("label")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string(),
            });
        }

        let inf = get("influence")?
            .as_object()
            .ok_or_else(|| ConfigError::Parse("influence is not an object".into()))?;
        let influence = InfluenceParams {
            similarity_weight: real(
                inf.get("similarity_weight").unwrap_or(&Value::Null),
                "influence.similarity_weight",
            )?,
            aspiration_weight: real(
                inf.get("aspiration_weight").unwrap_or(&Value::Null),
                "influence.aspiration_weight",
            )?,
            learning_rate: real(
                inf.get("learning_rate").unwrap_or(&Value::Null),
                "influence.learning_rate",
            )?,
        };

        let agent_count = uint(get("agent_count")?, "agent_count")? as u32;
        let net = get("network")?
            .as_object()
            .ok_or_else(|| ConfigError::Parse("network is not an object".into()))?;
        let declared_n = uint(net.get("n").unwrap_or(&Value::Null), "network.n")? as u32;
        if declared_n != agent_count {
            return Err(ConfigError::Invalid {
                path: "network.n".into(),
                message: format!("network n {declared_n} does not match agent_count {agent_count}"),
            });
        }
        let network = RawNetwork {
            kind: net
                .get("kind")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string(),
            k: match net.get("k") {
                Some(v) => Some(uint(v, "network.k")? as u32),
                None => None,
            },
            beta: match net.get("beta") {
                Some(v) => Some(real(v, "network.beta")?),
                None => None,
            },
            p: match net.get("p") {
                Some(v) => Some(real(v, "network.p")?),
                None => None,
            },
        };

        let init = get("init")?
            .as_object()
            .ok_or_else(|| ConfigError::Parse("init is not an object".into()))?;
        let (population, agents) = match init.get("mode").and_then(Value::as_str) {
            Some("uniform") => {
                let range = |key: &str| -> Result<RawRange, ConfigError> {
                    let r = init
                        .get(key)
                        .and_then(Value::as_object)
                        .ok_or_else(|| ConfigError::Parse(format!("init.{key} is not an object")))?;
                    Ok(RawRange {
                        low: real(r.get("low").unwrap_or(&Value::Null), &format!("init.{key}.low"))?,
                        high: real(
                            r.get("high").unwrap_or(&Value::Null),
                            &format!("init.{key}.high"),
                        )?,
                    })
                };
                (
                    Some(RawPopulation {
                        size: agent_count,
                        importance: range("importance")?,
                        satisfaction: range("satisfaction")?,
                        aspiration: range("aspiration")?,
                    }),
                    None,
                )
            }
            Some("explicit") => {
                let rows = init
                    .get("agents")
                    .and_then(Value::as_array)
                    .ok_or_else(|| ConfigError::Parse("init.agents is not an array".into()))?;
                let mut out = Vec::with_capacity(rows.len());
                for (i, row) in rows.iter().enumerate() {
                    let path = format!("init.agents[{i}]");
                    let row = row
                        .as_object()
                        .ok_or_else(|| ConfigError::Parse(format!("{path} is not an object")))?;
                    let importances = row
                        .get("importances")
                        .and_then(Value::as_array)
                        .ok_or_else(|| ConfigError::Parse(format!("{path}.importances missing")))?
                        .iter()
                        .enumerate()
                        .map(|(m, v)| real(v, &format!("{path}.importances[{m}]")))
                        .collect::<Result<Vec<f64>, _>>()?;
                    let satisfactions = row
                        .get("satisfactions")
                        .and_then(Value::as_array)
                        .ok_or_else(|| ConfigError::Parse(format!("{path}.satisfactions missing")))?
                        .iter()
                        .enumerate()
                        .map(|(m, rowv)| {
                            rowv.as_array()
                                .ok_or_else(|| {
                                    ConfigError::Parse(format!(
                                        "{path}.satisfactions[{m}] is not an array"
                                    ))
                                })?
                                .iter()
                                .enumerate()
                                .map(|(a, v)| real(v, &format!("{path}.satisfactions[{m}][{a}]")))
                                .collect::<Result<Vec<f64>, _>>()
                        })
                        .collect::<Result<Vec<Vec<f64>>, _>>()?;
                    out.push(RawAgent {
                        id: uint(row.get("id").unwrap_or(&Value::Null), &format!("{path}.id"))?
                            as u32,
                        importances,
                        satisfactions,
                        aspiration: real(
                            row.get("aspiration").unwrap_or(&Value::Null),
                            &format!("{path}.aspiration"),
                        )?,
                    });
                }
                (None, Some(out))
            }
            other => {
                return Err(ConfigError::Invalid {
                    path: "init.mode".into(),
                    message: format!("unknown mode {other:?}"),
                })
            }
        };

        let activation_order = match get("activation_order")?.as_str() {
            Some("by_id_ascending") => ActivationOrder::ByIdAscending,
            Some("shuffled_each_tick") => ActivationOrder::ShuffledEachTick,
            other => {
                return Err(ConfigError::Invalid {
                    path: "activation_order".into(),
                    message: format!("unknown order {other:?}"),
                })
            }
        };
        let belief_init = match get("belief_init")?.as_str() {
            Some("perfect") => BeliefInit::Perfect,
            Some("uninformative") => BeliefInit::Uninformative,
            other => {
                return Err(ConfigError::Invalid {
                    path: "belief_init".into(),
                    message: format!("unknown mode {other:?}"),
                })
            }
        };

        Scenario::resolve(RawConfig {
            seed: uint(get("seed")?, "seed")?,
            ticks: uint(get("ticks")?, "ticks")?,
            epsilon: real(get("epsilon")?, "epsilon")?,
            activation_order,
            belief_init,
            motives,
            alternatives,
            influence,
            network: Some(network),
            networks: None,
            population,
            agents,
        })
    }
}

fn resolve_network(raw: &RawNetwork, n: u32) -> Result<NetworkSpec, ConfigError> {
    let forbid = |name: &str, present: bool| -> Result<(), ConfigError> {
        if present {
            invalid(
                format!("network.{name}"),
                format!("not a parameter of kind '{}'", raw.kind),
            )
        } else {
            Ok(())
        }
    };
    let require_k = || -> Result<u32, ConfigError> {
        raw.k.ok_or_else(|| ConfigError::Invalid {
            path: "network.k".into(),
            message: format!("required for kind '{}'", raw.kind),
        })
    };
    match raw.kind.as_str() {
        "complete" => {
            forbid("k", raw.k.is_some())?;
            forbid("beta", raw.beta.is_some())?;
            forbid("p", raw.p.is_some())?;
            Ok(NetworkSpec::Complete { n })
        }
        "ring" => {
            forbid("beta", raw.beta.is_some())?;
            forbid("p", raw.p.is_some())?;
            Ok(NetworkSpec::Ring { n, k: require_k()? })
        }
        "erdos_renyi" => {
            forbid("k", raw.k.is_some())?;
            forbid("beta", raw.beta.is_some())?;
            let p = raw.p.ok_or_else(|| ConfigError::Invalid {
                path: "network.p".into(),
                message: "required for kind 'erdos_renyi'".into(),
            })?;
            Ok(NetworkSpec::ErdosRenyi { n, p })
        }
        "watts_strogatz" => {
            forbid("p", raw.p.is_some())?;
            let beta = raw.beta.ok_or_else(|| ConfigError::Invalid {
                path: "network.beta".into(),
                message: "required for kind 'watts_strogatz'".into(),
            })?;
            Ok(NetworkSpec::WattsStrogatz {
                n,
                k: require_k()?,
                beta,
            })
        }
        other => invalid("network.kind", format!("unknown network kind '{other}'")),
    }
}

/// Apply `key.path=value` overrides to a parsed TOML document.
///
/// The value side is parsed as a TOML literal; if that fails it is taken as
/// a bare string. Intermediate tables must already exist (or be creatable as
/// tables); overriding into an array is not supported.
pub fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> Result<(), ConfigError> {
    for entry in overrides {
        let (path, raw_value) = entry.split_once('=').ok_or_else(|| {
            ConfigError::Override(entry.clone(), "expected key.path=value".into())
        })?;
        let path = path.trim();
        if path.is_empty() {
            return Err(ConfigError::Override(entry.clone(), "empty key path".into()));
        }
        let value = parse_override_value(raw_value.trim());
        let mut segments = path.split('.').collect::<Vec<_>>();
        let leaf = segments.pop().expect("nonempty path");
        let mut table = &mut *doc;
        for seg in segments {
            let slot = table
                .entry(seg.to_string())
                .or_insert(toml::Value::Table(toml::Table::new()));
            table = slot.as_table_mut().ok_or_else(|| {
                ConfigError::Override(
                    entry.clone(),
                    format!("'{seg}' is not a table and cannot be traversed"),
                )
            })?;
        }
        table.insert(leaf.to_string(), value);
    }
    Ok(())
}

fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
