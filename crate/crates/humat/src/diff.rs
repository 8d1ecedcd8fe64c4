//! Tolerance-aware trace comparison and snapshot replay certification.
//!
//! `diff_traces` compares every agent parameter at every tick: integers and
//! enums exactly, reals within a per-field absolute tolerance (default 0).
//! Dimension mismatches (agent count, motive count, alternative count, tick
//! count) are reported as structural differences rather than errors, so a
//! shape mismatch can never read as a pass.
//!
//! `replay_check` imports a snapshot, steps it to the golden trace's final
//! tick, and diffs the produced records against the golden suffix. At the
//! snapshot tick itself only the agent parameter block is compared (the
//! events that produced that state predate the snapshot and are not
//! recoverable from it); every later tick is compared in full.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::canon::format_f64;
use crate::config::Scenario;
use crate::engine::{self, EngineError};
use crate::snapshot::{check_snapshot_matches, Snapshot, SnapshotError};
use crate::trace::{RunTrace, TraceError, TraceHeader, TraceReader, TraceRecord};

/// Per-field absolute tolerances for real-valued comparisons.
///
/// Lookup tries the full field path with indices stripped (for example
/// `metrics.mean_dissonance`), then the final path segment
/// (`mean_dissonance`), then the default. Integer and enum fields always
/// compare exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    default: f64,
    per_field: BTreeMap<String, f64>,
}

impl Tolerances {
    /// Exact comparison (tolerance 0 everywhere) — same-engine diffs.
    pub fn exact() -> Self {
        Self {
            default: 0.0,
            per_field: BTreeMap::new(),
        }
    }

    /// 1e-9 everywhere — cross-implementation comparisons.
    pub fn cross_implementation() -> Self {
        Self {
            default: 1e-9,
            per_field: BTreeMap::new(),
        }
    }

    pub fn with_default(mut self, tol: f64) -> Self {
        self.default = tol;
        self
    }

    pub fn set(&mut self, field: impl Into<String>, tol: f64) {
        self.per_field.insert(field.into(), tol);
    }

    /// Parse a TOML table of `field = tolerance` pairs; the key `default`
    /// sets the fallback.
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        let table: toml::Table = text.parse().map_err(|e| format!("{e}"))?;
        let mut tol = Tolerances::exact();
        for (key, value) in table {
            let v = value
                .as_float()
                .or_else(|| value.as_integer().map(|i| i as f64))
                .ok_or_else(|| format!("tolerance '{key}' is not a number"))?;
            if !v.is_finite() || v < 0.0 {
                return Err(format!("tolerance '{key}' must be >= 0, got {v}"));
            }
            if key == "default" {
                tol.default = v;
            } else {
                tol.per_field.insert(key, v);
            }
        }
        Ok(tol)
    }

    fn strip_indices(path: &str) -> String {
        let mut out = String::with_capacity(path.len());
        let mut depth = 0;
        for c in path.chars() {
            match c {
                '[' => depth += 1,
                ']' => depth -= 1,
                _ if depth == 0 => out.push(c),
                _ => {}
            }
        }
        out
    }

    pub fn for_field(&self, path: &str) -> f64 {
        let stripped = Self::strip_indices(path);
        if let Some(&t) = self.per_field.get(&stripped) {
            return t;
        }
        if let Some(last) = stripped.rsplit('.').next() {
            if let Some(&t) = self.per_field.get(last) {
                return t;
            }
        }
        self.default
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::exact()
    }
}

/// One value mismatch at a specific coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub tick: u64,
    /// `None` for global fields (events, metrics).
    pub agent_id: Option<u32>,
    pub field: String,
    pub left: String,
    pub right: String,
    /// Absolute difference for real-valued fields.
    pub abs_diff: Option<f64>,
}

/// A dimension mismatch that makes value comparison meaningless.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralDiff {
    pub dimension: String,
    pub left: String,
    pub right: String,
}

/// Outcome of a trace comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct DiffReport {
    pub structural: Vec<StructuralDiff>,
    pub discrepancies: Vec<Discrepancy>,
    pub ticks_compared: u64,
}

impl DiffReport {
    /// True iff the traces agree within tolerance at every compared field.
    pub fn is_empty(&self) -> bool {
        self.structural.is_empty() && self.discrepancies.is_empty()
    }

    pub fn has_structural(&self) -> bool {
        !self.structural.is_empty()
    }

    /// Earliest tick with a value discrepancy.
    pub fn first_divergence_tick(&self) -> Option<u64> {
        self.discrepancies.iter().map(|d| d.tick).min()
    }

    fn sort(&mut self) {
        self.discrepancies.sort_by(|a, b| {
            let ka = (a.tick, a.agent_id.map_or(u64::MAX, u64::from), &a.field);
            let kb = (b.tick, b.agent_id.map_or(u64::MAX, u64::from), &b.field);
            ka.cmp(&kb)
        });
    }

    /// Human-readable report.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.structural {
            out.push_str(&format!(
                "structural: {} left={} right={}\n",
                s.dimension, s.left, s.right
            ));
        }
        for d in &self.discrepancies {
            let agent = match d.agent_id {
                Some(id) => format!("agent={id}"),
                None => "global".to_string(),
            };
            let diff = match d.abs_diff {
                Some(x) => format!(" |diff|={x:e}"),
                None => String::new(),
            };
            out.push_str(&format!(
                "tick={} {} field={} left={} right={}{}\n",
                d.tick, agent, d.field, d.left, d.right, diff
            ));
        }
        if self.is_empty() {
            out.push_str(&format!(
                "traces match: {} ticks compared, no discrepancies\n",
                self.ticks_compared
            ));
        } else {
            let first = self
                .first_divergence_tick()
                .map(|t| format!(", first divergence at tick {t}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "summary: {} discrepancies, {} structural{}\n",
                self.discrepancies.len(),
                self.structural.len(),
                first
            ));
        }
        out
    }

    /// Machine-readable JSON report.
    pub fn to_json(&self) -> String {
        let value = serde_json::json!({
            "structural": self.structural,
            "discrepancies": self.discrepancies,
            "ticks_compared": self.ticks_compared,
            "first_divergence_tick": self.first_divergence_tick(),
            "empty": self.is_empty(),
        });
        serde_json::to_string_pretty(&value).expect("report serialization cannot fail")
    }
}

fn push_exact<T: PartialEq + std::fmt::Display>(
    out: &mut Vec<Discrepancy>,
    tick: u64,
    agent_id: Option<u32>,
    field: String,
    left: T,
    right: T,
) {
    if left != right {
        out.push(Discrepancy {
            tick,
            agent_id,
            field,
            left: left.to_string(),
            right: right.to_string(),
            abs_diff: None,
        });
    }
}

fn push_real(
    out: &mut Vec<Discrepancy>,
    tol: &Tolerances,
    tick: u64,
    agent_id: Option<u32>,
    field: String,
    left: f64,
    right: f64,
) {
    let diff = (left - right).abs();
    if diff > tol.for_field(&field) {
        out.push(Discrepancy {
            tick,
            agent_id,
            field,
            left: format_f64(left),
            right: format_f64(right),
            abs_diff: Some(diff),
        });
    }
}

/// Compare one pair of records; `full` includes events and metrics.
fn compare_records(
    left: &TraceRecord,
    right: &TraceRecord,
    tol: &Tolerances,
    full: bool,
    out: &mut Vec<Discrepancy>,
) {
    let tick = left.tick;
    if left.agents.len() != right.agents.len() {
        push_exact(
            out,
            tick,
            None,
            "agents.len".into(),
            left.agents.len(),
            right.agents.len(),
        );
        return;
    }
    for (l, r) in left.agents.iter().zip(&right.agents) {
        let id = Some(l.id);
        push_exact(out, tick, id, "id".into(), l.id, r.id);
        push_exact(out, tick, id, "choice".into(), l.choice, r.choice);
        push_exact(
            out,
            tick,
            id,
            "dilemma".into(),
            format!("{:?}", l.dilemma),
            format!("{:?}", r.dilemma),
        );
        for (k, (&le, &re)) in l.evaluations.iter().zip(&r.evaluations).enumerate() {
            push_real(out, tol, tick, id, format!("evaluation[{k}]"), le, re);
        }
        for (k, (&ld, &rd)) in l.dissonance.iter().zip(&r.dissonance).enumerate() {
            push_real(out, tol, tick, id, format!("dissonance[{k}]"), ld, rd);
        }
        push_real(
            out,
            tol,
            tick,
            id,
            "social_satisfaction".into(),
            l.social_satisfaction,
            r.social_satisfaction,
        );
    }
    if !full {
        return;
    }
    if left.events.len() != right.events.len() {
        push_exact(
            out,
            tick,
            None,
            "events.len".into(),
            left.events.len(),
            right.events.len(),
        );
    } else {
        for (i, (l, r)) in left.events.iter().zip(&right.events).enumerate() {
            push_exact(
                out,
                tick,
                None,
                format!("events[{i}].kind"),
                format!("{:?}", l.kind),
                format!("{:?}", r.kind),
            );
            push_exact(
                out,
                tick,
                None,
                format!("events[{i}].source_id"),
                l.source_id,
                r.source_id,
            );
            push_exact(
                out,
                tick,
                None,
                format!("events[{i}].target_id"),
                l.target_id,
                r.target_id,
            );
            push_exact(
                out,
                tick,
                None,
                format!("events[{i}].subject"),
                l.subject,
                r.subject,
            );
        }
    }
    let (lm, rm) = (&left.metrics, &right.metrics);
    for (k, (&lc, &rc)) in lm.choice_counts.iter().zip(&rm.choice_counts).enumerate() {
        push_exact(out, tick, None, format!("metrics.choice_counts[{k}]"), lc, rc);
    }
    push_real(
        out,
        tol,
        tick,
        None,
        "metrics.mean_dissonance".into(),
        lm.mean_dissonance,
        rm.mean_dissonance,
    );
    push_exact(
        out,
        tick,
        None,
        "metrics.n_social_dilemma".into(),
        lm.n_social_dilemma,
        rm.n_social_dilemma,
    );
    push_exact(
        out,
        tick,
        None,
        "metrics.n_nonsocial_dilemma".into(),
        lm.n_nonsocial_dilemma,
        rm.n_nonsocial_dilemma,
    );
    push_exact(out, tick, None, "metrics.n_signal".into(), lm.n_signal, rm.n_signal);
    push_exact(out, tick, None, "metrics.n_inquire".into(), lm.n_inquire, rm.n_inquire);
}

fn compare_headers(left: &TraceHeader, right: &TraceHeader, report: &mut DiffReport) {
    let mut dim = |name: &str, l: String, r: String| {
        if l != r {
            report.structural.push(StructuralDiff {
                dimension: name.to_string(),
                left: l,
                right: r,
            });
        }
    };
    dim(
        "agent_count",
        left.agent_count.to_string(),
        right.agent_count.to_string(),
    );
    dim(
        "motive_count",
        left.motive_count.to_string(),
        right.motive_count.to_string(),
    );
    dim(
        "alt_count",
        left.alt_count.to_string(),
        right.alt_count.to_string(),
    );
    dim("ticks", left.ticks.to_string(), right.ticks.to_string());
}

/// Compare two in-memory traces.
pub fn diff_traces(left: &RunTrace, right: &RunTrace, tol: &Tolerances) -> DiffReport {
    let mut report = DiffReport::default();
    compare_headers(&left.header, &right.header, &mut report);
    if report.has_structural() {
        return report;
    }
    if left.records.len() != right.records.len() {
        report.structural.push(StructuralDiff {
            dimension: "record_count".into(),
            left: left.records.len().to_string(),
            right: right.records.len().to_string(),
        });
        return report;
    }
    for (l, r) in left.records.iter().zip(&right.records) {
        compare_records(l, r, tol, true, &mut report.discrepancies);
        report.ticks_compared += 1;
    }
    report.sort();
    report
}

/// Compare two trace directories, streaming record by record.
pub fn diff_trace_dirs(
    left_dir: impl AsRef<std::path::Path>,
    right_dir: impl AsRef<std::path::Path>,
    tol: &Tolerances,
) -> Result<DiffReport, TraceError> {
    let left = TraceReader::open(left_dir)?;
    let right = TraceReader::open(right_dir)?;
    let mut report = DiffReport::default();
    compare_headers(left.header(), right.header(), &mut report);
    if report.has_structural() {
        return Ok(report);
    }
    let mut lrecs = left.records()?;
    let mut rrecs = right.records()?;
    let mut count_left = 0u64;
    let mut count_right = 0u64;
    loop {
        match (lrecs.next(), rrecs.next()) {
            (Some(l), Some(r)) => {
                compare_records(&l?, &r?, tol, true, &mut report.discrepancies);
                count_left += 1;
                count_right += 1;
                report.ticks_compared += 1;
            }
            (Some(l), None) => {
                l?;
                count_left += 1;
            }
            (None, Some(r)) => {
                r?;
                count_right += 1;
            }
            (None, None) => break,
        }
    }
    if count_left != count_right {
        report.structural.push(StructuralDiff {
            dimension: "record_count".into(),
            left: count_left.to_string(),
            right: count_right.to_string(),
        });
    }
    report.sort();
    Ok(report)
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("replay precondition violated: {0}")]
    Precondition(String),
}

/// Import a snapshot, step it to the golden trace's final tick, and diff
/// against the golden suffix. An empty report certifies replication.
pub fn replay_check(
    snapshot: Snapshot,
    golden: &RunTrace,
    scn: &Scenario,
    tol: &Tolerances,
) -> Result<DiffReport, ReplayError> {
    let mut report = DiffReport::default();

    // Shape of snapshot vs scenario, and scenario vs golden.
    if let Err(SnapshotError::Validation { path, message }) = check_snapshot_matches(&snapshot, scn)
    {
        report.structural.push(StructuralDiff {
            dimension: path,
            left: message,
            right: String::new(),
        });
    }
    compare_headers(&TraceHeader::for_scenario(scn), &golden.header, &mut report);
    if report.has_structural() {
        return Ok(report);
    }

    let last_golden_tick = match golden.records.last() {
        Some(r) => r.tick,
        None => {
            return Err(ReplayError::Precondition(
                "golden trace has no records".into(),
            ))
        }
    };
    let start = snapshot.state.tick;
    if start > last_golden_tick {
        return Err(ReplayError::Precondition(format!(
            "snapshot tick {start} is beyond the golden trace's final tick {last_golden_tick}"
        )));
    }
    let base = golden.records[0].tick;
    if base != 0 {
        return Err(ReplayError::Precondition(format!(
            "golden trace must start at tick 0, starts at {base}"
        )));
    }

    let mut state = snapshot.state;

    // At the snapshot tick only the state-derived agent block is comparable.
    let derived = engine::derive_record(&state, scn, Vec::new());
    compare_records(
        &derived,
        &golden.records[start as usize],
        tol,
        false,
        &mut report.discrepancies,
    );
    report.ticks_compared += 1;

    engine::resume_with(&mut state, scn, last_golden_tick, |record| {
        compare_records(
            record,
            &golden.records[record.tick as usize],
            tol,
            true,
            &mut report.discrepancies,
        );
        report.ticks_compared += 1;
        Ok(())
    })
    .map_err(|e| match e {
        engine::RunError::Engine(inner) => ReplayError::Engine(inner),
        engine::RunError::Trace(inner) => ReplayError::Trace(inner),
        engine::RunError::Snapshot(inner) => ReplayError::Snapshot(inner),
    })?;
    report.sort();
    Ok(report)
}
