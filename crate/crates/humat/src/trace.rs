//! Run traces: the per-tick record of every agent parameter, the on-disk
//! trace directory format, and CSV projections.
//!
//! A trace directory contains:
//!
//! * `header.json` — schema version, config digest, RNG algorithm, scenario
//!   dimensions, alternative labels, activation order.
//! * `config.json` — the canonical resolved scenario (digest input).
//! * `records.jsonl` — one canonical JSON record per line, ticks `0..=T`
//!   with no gaps. Record 0 describes the initialized state.
//! * `metrics.csv` — plot-ready per-tick metrics.
//!
//! Records are canonical: object keys sorted, reals as 17-significant-digit
//! decimal strings, agents ordered by id. Two runs of the same scenario
//! produce byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use crate::canon::{f64_value, format_f64, parse_f64, to_canonical_json};
use crate::config::Scenario;
use crate::model::{AltId, DilemmaStatus};
use crate::network::{CommunicationEvent, EventKind};
use crate::rng::RNG_ALGORITHM;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const HEADER_FILE: &str = "header.json";
pub const CONFIG_FILE: &str = "config.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const FINAL_SNAPSHOT_FILE: &str = "final.snapshot.json";
pub const EDGES_FILE: &str = "edges.csv";

/// Identity block of a run trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHeader {
    pub schema_version: String,
    pub config_digest: String,
    pub rng_algorithm: String,
    pub agent_count: u32,
    pub motive_count: usize,
    pub alt_count: usize,
    pub ticks: u64,
    pub activation_order: String,
    pub alternative_labels: Vec<String>,
}

impl TraceHeader {
    pub fn for_scenario(scn: &Scenario) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION.to_string(),
            config_digest: scn.digest().to_string(),
            rng_algorithm: RNG_ALGORITHM.to_string(),
            agent_count: scn.agent_count,
            motive_count: scn.motive_count(),
            alt_count: scn.alt_count(),
            ticks: scn.ticks,
            activation_order: scn.activation_order.as_str().to_string(),
            alternative_labels: scn.alternatives.iter().map(|a| a.label.clone()).collect(),
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::json!({
            "schema_version": self.schema_version,
            "config_digest": self.config_digest,
            "rng_algorithm": self.rng_algorithm,
            "agent_count": self.agent_count,
            "motive_count": self.motive_count,
            "alt_count": self.alt_count,
            "ticks": self.ticks,
            "activation_order": self.activation_order,
            "alternatives": self.alternative_labels,
        })
    }

    pub fn from_value(value: &Value) -> Result<Self, TraceError> {
        let obj = as_object(value, "header")?;
        Ok(Self {
            schema_version: get_string(obj, "schema_version", "header")?,
            config_digest: get_string(obj, "config_digest", "header")?,
            rng_algorithm: get_string(obj, "rng_algorithm", "header")?,
            agent_count: get_u64(obj, "agent_count", "header")? as u32,
            motive_count: get_u64(obj, "motive_count", "header")? as usize,
            alt_count: get_u64(obj, "alt_count", "header")? as usize,
            ticks: get_u64(obj, "ticks", "header")?,
            activation_order: get_string(obj, "activation_order", "header")?,
            alternative_labels: get_array(obj, "alternatives", "header")?
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| parse_err(format!("header.alternatives[{i}]: not a string")))
                })
                .collect::<Result<_, _>>()?,
        })
    }
}

/// One agent's parameter block at the end of a tick.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub id: u32,
    pub choice: AltId,
    pub evaluations: Vec<f64>,
    pub dissonance: Vec<f64>,
    pub dilemma: DilemmaStatus,
    pub social_satisfaction: f64,
}

/// Aggregate observables of one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickMetrics {
    pub choice_counts: Vec<u64>,
    pub mean_dissonance: f64,
    pub n_social_dilemma: u64,
    pub n_nonsocial_dilemma: u64,
    pub n_signal: u64,
    pub n_inquire: u64,
}

/// Everything recorded about one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub tick: u64,
    pub agents: Vec<AgentRecord>,
    pub events: Vec<CommunicationEvent>,
    pub metrics: TickMetrics,
}

fn dilemma_str(d: DilemmaStatus) -> &'static str {
    match d {
        DilemmaStatus::NoDilemma => "no_dilemma",
        DilemmaStatus::SocialDilemma => "social_dilemma",
        DilemmaStatus::NonSocialDilemma => "non_social_dilemma",
    }
}

fn dilemma_from_str(s: &str, path: &str) -> Result<DilemmaStatus, TraceError> {
    match s {
        "no_dilemma" => Ok(DilemmaStatus::NoDilemma),
        "social_dilemma" => Ok(DilemmaStatus::SocialDilemma),
        "non_social_dilemma" => Ok(DilemmaStatus::NonSocialDilemma),
        other => Err(parse_err(format!("{path}: unknown dilemma '{other}'"))),
    }
}

fn kind_str(k: EventKind) -> &'static str {
    match k {
        EventKind::Signal => "signal",
        EventKind::Inquire => "inquire",
    }
}

fn kind_from_str(s: &str, path: &str) -> Result<EventKind, TraceError> {
    match s {
        "signal" => Ok(EventKind::Signal),
        "inquire" => Ok(EventKind::Inquire),
        other => Err(parse_err(format!("{path}: unknown event kind '{other}'"))),
    }
}

impl TraceRecord {
    pub fn to_value(&self) -> Value {
        let agents: Vec<Value> = self
            .agents
            .iter()
            .map(|a| {
                serde_json::json!({
                    "id": a.id,
                    "choice": a.choice,
                    "evaluations": a.evaluations.iter().copied().map(f64_value).collect::<Vec<_>>(),
                    "dissonance": a.dissonance.iter().copied().map(f64_value).collect::<Vec<_>>(),
                    "dilemma": dilemma_str(a.dilemma),
                    "social_satisfaction": f64_value(a.social_satisfaction),
                })
            })
            .collect();
        let events: Vec<Value> = self
            .events
            .iter()
            .map(|e| {
                serde_json::json!({
                    "tick": e.tick,
                    "source_id": e.source_id,
                    "target_id": e.target_id,
                    "kind": kind_str(e.kind),
                    "subject": e.subject,
                })
            })
            .collect();
        serde_json::json!({
            "tick": self.tick,
            "agents": agents,
            "events": events,
            "metrics": {
                "choice_counts": self.metrics.choice_counts,
                "mean_dissonance": f64_value(self.metrics.mean_dissonance),
                "n_social_dilemma": self.metrics.n_social_dilemma,
                "n_nonsocial_dilemma": self.metrics.n_nonsocial_dilemma,
                "n_signal": self.metrics.n_signal,
                "n_inquire": self.metrics.n_inquire,
            },
        })
    }

    pub fn to_canonical_line(&self) -> String {
        to_canonical_json(&self.to_value())
    }

    pub fn from_value(value: &Value) -> Result<Self, TraceError> {
        let obj = as_object(value, "record")?;
        let tick = get_u64(obj, "tick", "record")?;
        let mut agents = Vec::new();
        for (i, v) in get_array(obj, "agents", "record")?.iter().enumerate() {
            let path = format!("record.agents[{i}]");
            let a = as_object(v, &path)?;
            agents.push(AgentRecord {
                id: get_u64(a, "id", &path)? as u32,
                choice: get_u64(a, "choice", &path)? as AltId,
                evaluations: get_f64_list(a, "evaluations", &path)?,
                dissonance: get_f64_list(a, "dissonance", &path)?,
                dilemma: dilemma_from_str(
                    &get_string(a, "dilemma", &path)?,
                    &format!("{path}.dilemma"),
                )?,
                social_satisfaction: get_f64_text(a, "social_satisfaction", &path)?,
            });
        }
        let mut events = Vec::new();
        for (i, v) in get_array(obj, "events", "record")?.iter().enumerate() {
            let path = format!("record.events[{i}]");
            let e = as_object(v, &path)?;
            events.push(CommunicationEvent {
                tick: get_u64(e, "tick", &path)?,
                source_id: get_u64(e, "source_id", &path)? as u32,
                target_id: get_u64(e, "target_id", &path)? as u32,
                kind: kind_from_str(&get_string(e, "kind", &path)?, &format!("{path}.kind"))?,
                subject: get_u64(e, "subject", &path)? as AltId,
            });
        }
        let m = as_object(
            obj.get("metrics")
                .ok_or_else(|| parse_err("record.metrics: missing".to_string()))?,
            "record.metrics",
        )?;
        let metrics = TickMetrics {
            choice_counts: get_array(m, "choice_counts", "record.metrics")?
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.as_u64().ok_or_else(|| {
                        parse_err(format!("record.metrics.choice_counts[{i}]: not an integer"))
                    })
                })
                .collect::<Result<_, _>>()?,
            mean_dissonance: get_f64_text(m, "mean_dissonance", "record.metrics")?,
            n_social_dilemma: get_u64(m, "n_social_dilemma", "record.metrics")?,
            n_nonsocial_dilemma: get_u64(m, "n_nonsocial_dilemma", "record.metrics")?,
            n_signal: get_u64(m, "n_signal", "record.metrics")?,
            n_inquire: get_u64(m, "n_inquire", "record.metrics")?,
        };
        Ok(Self {
            tick,
            agents,
            events,
            metrics,
        })
    }
}

/// A whole run held in memory (header plus all records, ticks `0..=T`).
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    /// Load a complete trace directory into memory.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, TraceError> {
        let reader = TraceReader::open(dir)?;
        let header = reader.header().clone();
        let records = reader.records()?.collect::<Result<Vec<_>, _>>()?;
        Ok(Self { header, records })
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace parse failure: {0}")]
    Parse(String),
}

fn parse_err(msg: String) -> TraceError {
    TraceError::Parse(msg)
}

fn as_object<'v>(
    value: &'v Value,
    path: &str,
) -> Result<&'v serde_json::Map<String, Value>, TraceError> {
    value
        .as_object()
        .ok_or_else(|| parse_err(format!("{path}: not an object")))
}

fn get_u64(
    obj: &serde_json::Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<u64, TraceError> {
    obj.get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| parse_err(format!("{path}.{key}: missing or not an unsigned integer")))
}

fn get_string(
    obj: &serde_json::Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<String, TraceError> {
    obj.get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| parse_err(format!("{path}.{key}: missing or not a string")))
}

fn get_array<'v>(
    obj: &'v serde_json::Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<&'v Vec<Value>, TraceError> {
    obj.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(format!("{path}.{key}: missing or not an array")))
}

fn get_f64_text(
    obj: &serde_json::Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<f64, TraceError> {
    let text = get_string(obj, key, path)?;
    parse_f64(&text).map_err(|e| parse_err(format!("{path}.{key}: {e}")))
}

fn get_f64_list(
    obj: &serde_json::Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<Vec<f64>, TraceError> {
    get_array(obj, key, path)?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let text = v
                .as_str()
                .ok_or_else(|| parse_err(format!("{path}.{key}[{i}]: not a string")))?;
            parse_f64(text).map_err(|e| parse_err(format!("{path}.{key}[{i}]: {e}")))
        })
        .collect()
}

/// Streaming writer for a trace directory.
pub struct TraceWriter {
    dir: PathBuf,
    records: BufWriter<File>,
    metrics: BufWriter<File>,
    labels: Vec<String>,
    next_tick: u64,
}

impl TraceWriter {
    /// Create the directory (if needed) and write header, config, and the
    /// metrics CSV header.
    pub fn create(dir: impl AsRef<Path>, scn: &Scenario) -> Result<Self, TraceError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let header = TraceHeader::for_scenario(scn);
        std::fs::write(
            dir.join(HEADER_FILE),
            to_canonical_json(&header.to_value()) + "\n",
        )?;
        std::fs::write(
            dir.join(CONFIG_FILE),
            to_canonical_json(&scn.canonical_value()) + "\n",
        )?;
        let records = BufWriter::new(File::create(dir.join(RECORDS_FILE))?);
        let mut metrics = BufWriter::new(File::create(dir.join(METRICS_FILE))?);
        let labels = header.alternative_labels.clone();
        let mut head = String::from("tick");
        for label in &labels {
            head.push_str(&format!(",alt_{label}_count"));
        }
        head.push_str(",mean_dissonance,n_social_dilemma,n_nonsocial_dilemma,n_signal,n_inquire");
        writeln!(metrics, "{head}")?;
        Ok(Self {
            dir,
            records,
            metrics,
            labels,
            next_tick: 0,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Append one tick record (and its metrics CSV row). Ticks must arrive
    /// in order starting at 0.
    pub fn append(&mut self, record: &TraceRecord) -> Result<(), TraceError> {
        assert_eq!(
            record.tick, self.next_tick,
            "trace records must be appended in tick order"
        );
        self.next_tick += 1;
        writeln!(self.records, "{}", record.to_canonical_line())?;
        let m = &record.metrics;
        let mut row = format!("{}", record.tick);
        debug_assert_eq!(m.choice_counts.len(), self.labels.len());
        for count in &m.choice_counts {
            row.push_str(&format!(",{count}"));
        }
        row.push_str(&format!(
            ",{},{},{},{},{}",
            m.mean_dissonance, m.n_social_dilemma, m.n_nonsocial_dilemma, m.n_signal, m.n_inquire
        ));
        writeln!(self.metrics, "{row}")?;
        Ok(())
    }

    /// Flush everything to disk.
    pub fn finish(mut self) -> Result<(), TraceError> {
        self.records.flush()?;
        self.metrics.flush()?;
        Ok(())
    }
}

/// Reader over a trace directory; records stream line by line.
pub struct TraceReader {
    dir: PathBuf,
    header: TraceHeader,
}

impl TraceReader {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, TraceError> {
        let dir = dir.as_ref().to_path_buf();
        let header_text = std::fs::read_to_string(dir.join(HEADER_FILE))?;
        let value: Value = serde_json::from_str(&header_text)
            .map_err(|e| parse_err(format!("header.json: {e}")))?;
        let header = TraceHeader::from_value(&value)?;
        Ok(Self { dir, header })
    }

    pub fn header(&self) -> &TraceHeader {
        &self.header
    }

    /// The canonical config document stored alongside the records.
    pub fn config_json(&self) -> Result<String, TraceError> {
        Ok(std::fs::read_to_string(self.dir.join(CONFIG_FILE))?)
    }

    /// Iterate records in tick order.
    pub fn records(
        &self,
    ) -> Result<impl Iterator<Item = Result<TraceRecord, TraceError>>, TraceError> {
        let file = File::open(self.dir.join(RECORDS_FILE))?;
        let reader = BufReader::new(file);
        Ok(reader.lines().enumerate().map(|(i, line)| {
            let line = line?;
            let value: Value = serde_json::from_str(&line)
                .map_err(|e| parse_err(format!("records.jsonl line {}: {e}", i + 1)))?;
            TraceRecord::from_value(&value)
        }))
    }
}

/// Write the flat CSV projection (`tick,agent_id,field,value`) of a trace.
///
/// Agent rows carry the parameter block; event rows are attributed to the
/// source agent; metric rows have an empty agent id.
pub fn export_flat_csv(dir: impl AsRef<Path>, out: &mut impl Write) -> Result<(), TraceError> {
    let reader = TraceReader::open(dir)?;
    writeln!(out, "tick,agent_id,field,value")?;
    for record in reader.records()? {
        let record = record?;
        let t = record.tick;
        for a in &record.agents {
            writeln!(out, "{t},{},choice,{}", a.id, a.choice)?;
            for (alt, &e) in a.evaluations.iter().enumerate() {
                writeln!(out, "{t},{},evaluation[{alt}],{}", a.id, format_f64(e))?;
            }
            for (alt, &d) in a.dissonance.iter().enumerate() {
                writeln!(out, "{t},{},dissonance[{alt}],{}", a.id, format_f64(d))?;
            }
            writeln!(out, "{t},{},dilemma,{}", a.id, dilemma_str(a.dilemma))?;
            writeln!(
                out,
                "{t},{},social_satisfaction,{}",
                a.id,
                format_f64(a.social_satisfaction)
            )?;
        }
        for (i, e) in record.events.iter().enumerate() {
            writeln!(out, "{t},{},event[{i}].kind,{}", e.source_id, kind_str(e.kind))?;
            writeln!(out, "{t},{},event[{i}].target_id,{}", e.source_id, e.target_id)?;
            writeln!(out, "{t},{},event[{i}].subject,{}", e.source_id, e.subject)?;
        }
        let m = &record.metrics;
        for (alt, count) in m.choice_counts.iter().enumerate() {
            writeln!(out, "{t},,metrics.choice_counts[{alt}],{count}")?;
        }
        writeln!(
            out,
            "{t},,metrics.mean_dissonance,{}",
            format_f64(m.mean_dissonance)
        )?;
        writeln!(out, "{t},,metrics.n_social_dilemma,{}", m.n_social_dilemma)?;
        writeln!(
            out,
            "{t},,metrics.n_nonsocial_dilemma,{}",
            m.n_nonsocial_dilemma
        )?;
        writeln!(out, "{t},,metrics.n_signal,{}", m.n_signal)?;
        writeln!(out, "{t},,metrics.n_inquire,{}", m.n_inquire)?;
    }
    Ok(())
}
