//! Batch front end for the humat simulator: run scenarios, sweep seeds or
//! population sizes, extract snapshots, diff traces, and replay snapshots
//! against golden traces.
//!
//! Exit codes form a total mapping of outcomes:
//!   0  success (for diff/replay: traces agree)
//!   1  runtime or I/O failure
//!   2  invalid configuration or usage
//!   3  shape mismatch between compared traces
//!   4  differences found by diff/replay

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use humat::config::{ConfigError, Scenario};
use humat::diff::{diff_trace_dirs, replay_check, DiffReport, Tolerances};
use humat::engine::{run_to_dir, RunSummary};
use humat::snapshot::import_snapshot;
use humat::trace::{self, RunTrace};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SHAPE: u8 = 3;
const EXIT_DIFFERENCES: u8 = 4;

#[derive(Parser)]
#[command(
    name = "humat",
    version,
    about = "Deterministic attitude-formation simulator and replication harness",
    after_help = "Exit codes: 0 success, 1 runtime failure, 2 invalid config/usage, \
                  3 shape mismatch, 4 differences found."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path overrides, e.g. --set seed=7 --set network.beta=0.2
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and write its trace, metrics, final snapshot, and
    /// edge list to a directory.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output trace directory.
        #[arg(long)]
        out: PathBuf,
        /// Also write the flat CSV projection of the trace to this path.
        #[arg(long)]
        trace_csv: Option<PathBuf>,
    },
    /// Compare two trace directories field by field.
    Diff {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// TOML file of per-field absolute tolerances (`default` sets the
        /// fallback; omitted fields compare exactly).
        #[arg(long)]
        tolerances: Option<PathBuf>,
        /// Write the machine-readable JSON report here.
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Run the scenario once per value of the chosen axis.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Sweep axis: `seed` or `population`.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values, e.g. 1,2,3.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
        /// Output directory (one subdirectory per value).
        #[arg(long)]
        out: PathBuf,
        /// Maximum concurrent runs (default: available parallelism).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Re-derive the model state at a tick of a recorded trace and export
    /// it as a canonical snapshot.
    Snapshot {
        /// Trace directory produced by `run`.
        #[arg(long)]
        trace: PathBuf,
        /// Tick to snapshot (0..=ticks of the trace).
        #[arg(long)]
        tick: u64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Import a snapshot, step it to the golden trace's final tick, and
    /// diff against the golden records.
    Replay {
        /// Snapshot JSON file.
        #[arg(long)]
        snapshot: PathBuf,
        /// Golden trace directory.
        #[arg(long)]
        golden: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        tolerances: Option<PathBuf>,
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Parse and validate a scenario config, printing its digest.
    ValidateConfig {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SweepAxis {
    Seed,
    Population,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Io(_) => EXIT_RUNTIME,
            _ => EXIT_CONFIG,
        };
        fail(code, e.to_string())
    }
}

fn load_scenario(args: &ConfigArgs) -> Result<Scenario, Failure> {
    Ok(Scenario::from_toml_file(&args.config, &args.set)?)
}

fn load_tolerances(path: &Option<PathBuf>) -> Result<Tolerances, Failure> {
    match path {
        None => Ok(Tolerances::exact()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| fail(EXIT_RUNTIME, format!("cannot read {}: {e}", p.display())))?;
            Tolerances::from_toml_str(&text)
                .map_err(|e| fail(EXIT_CONFIG, format!("invalid tolerances file: {e}")))
        }
    }
}

fn report_outcome(
    report: &DiffReport,
    json_out: &Option<PathBuf>,
) -> Result<ExitCode, Failure> {
    print!("{}", report.to_text());
    if let Some(path) = json_out {
        std::fs::write(path, report.to_json())
            .map_err(|e| fail(EXIT_RUNTIME, format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(if report.has_structural() {
        ExitCode::from(EXIT_SHAPE)
    } else if report.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_DIFFERENCES)
    })
}

fn summary_line(scn: &Scenario, summary: &RunSummary, out: &Path) -> String {
    let choices: Vec<String> = scn
        .alternatives
        .iter()
        .zip(&summary.final_choice_counts)
        .map(|(alt, count)| format!("{}:{count}", alt.label))
        .collect();
    format!(
        "run complete: agents={} ticks={} events={} final_choices=[{}] out={}",
        summary.agent_count,
        summary.ticks,
        summary.total_events,
        choices.join(","),
        out.display()
    )
}

fn dispatch(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Run {
            config,
            out,
            trace_csv,
        } => {
            let scn = load_scenario(&config)?;
            let summary = run_to_dir(&scn, &out)
                .map_err(|e| fail(EXIT_RUNTIME, format!("run failed: {e}")))?;
            if let Some(csv_path) = trace_csv {
                let file = std::fs::File::create(&csv_path).map_err(|e| {
                    fail(EXIT_RUNTIME, format!("cannot write {}: {e}", csv_path.display()))
                })?;
                let mut writer = std::io::BufWriter::new(file);
                trace::export_flat_csv(&out, &mut writer)
                    .and_then(|()| writer.flush().map_err(Into::into))
                    .map_err(|e| fail(EXIT_RUNTIME, format!("flat CSV export failed: {e}")))?;
            }
            println!("{}", summary_line(&scn, &summary, &out));
            Ok(ExitCode::SUCCESS)
        }

        Command::Diff {
            left,
            right,
            tolerances,
            json_out,
        } => {
            let tol = load_tolerances(&tolerances)?;
            let report = diff_trace_dirs(&left, &right, &tol)
                .map_err(|e| fail(EXIT_RUNTIME, format!("diff failed: {e}")))?;
            report_outcome(&report, &json_out)
        }

        Command::Sweep {
            config,
            axis,
            values,
            out,
            jobs,
        } => sweep(config, axis, values, out, jobs),

        Command::Snapshot { trace, tick, out } => {
            let reader = trace::TraceReader::open(&trace)
                .map_err(|e| fail(EXIT_RUNTIME, format!("cannot open trace: {e}")))?;
            if tick > reader.header().ticks {
                return Err(fail(
                    EXIT_CONFIG,
                    format!(
                        "tick {tick} is beyond the trace's final tick {}",
                        reader.header().ticks
                    ),
                ));
            }
            let config_json = reader
                .config_json()
                .map_err(|e| fail(EXIT_RUNTIME, format!("cannot read trace config: {e}")))?;
            let scn = Scenario::from_canonical_json(&config_json)?;
            let mut state = humat::engine::initialize(&scn)
                .map_err(|e| fail(EXIT_RUNTIME, format!("initialize failed: {e}")))?;
            while state.tick < tick {
                humat::engine::step(&mut state, &scn)
                    .map_err(|e| fail(EXIT_RUNTIME, format!("step failed: {e}")))?;
            }
            let bytes = humat::snapshot::export_snapshot(&state, &scn);
            match out {
                Some(path) => std::fs::write(&path, bytes).map_err(|e| {
                    fail(EXIT_RUNTIME, format!("cannot write {}: {e}", path.display()))
                })?,
                None => print!("{bytes}"),
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Replay {
            snapshot,
            golden,
            config,
            tolerances,
            json_out,
        } => {
            let scn = load_scenario(&config)?;
            let tol = load_tolerances(&tolerances)?;
            let text = std::fs::read_to_string(&snapshot).map_err(|e| {
                fail(EXIT_RUNTIME, format!("cannot read {}: {e}", snapshot.display()))
            })?;
            let snap = import_snapshot(&text)
                .map_err(|e| fail(EXIT_RUNTIME, format!("snapshot import failed: {e}")))?;
            let golden_trace = RunTrace::load(&golden)
                .map_err(|e| fail(EXIT_RUNTIME, format!("cannot load golden trace: {e}")))?;
            let report = replay_check(snap, &golden_trace, &scn, &tol)
                .map_err(|e| fail(EXIT_RUNTIME, format!("replay failed: {e}")))?;
            report_outcome(&report, &json_out)
        }

        Command::ValidateConfig { config } => {
            let scn = load_scenario(&config)?;
            println!(
                "config valid: digest={} agents={} motives={} alternatives={} ticks={}",
                scn.digest(),
                scn.agent_count,
                scn.motive_count(),
                scn.alt_count(),
                scn.ticks
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn sweep(
    config: ConfigArgs,
    axis: SweepAxis,
    values: Vec<u64>,
    out: PathBuf,
    jobs: Option<usize>,
) -> Result<ExitCode, Failure> {
    if values.is_empty() {
        return Err(fail(EXIT_CONFIG, "sweep requires at least one value"));
    }
    let axis_key = match axis {
        SweepAxis::Seed => "seed",
        SweepAxis::Population => "population.size",
    };
    // Resolve every scenario up front so config errors surface before any
    // run starts.
    let mut runs: Vec<(u64, Scenario, PathBuf)> = Vec::with_capacity(values.len());
    for &value in &values {
        let mut overrides = config.set.clone();
        overrides.push(format!("{axis_key}={value}"));
        let scn = Scenario::from_toml_file(&config.config, &overrides).map_err(|e| {
            fail(EXIT_CONFIG, format!("{axis_key}={value}: {e}"))
        })?;
        runs.push((value, scn, out.join(format!("{axis_key}-{value}").replace('.', "-"))));
    }
    std::fs::create_dir_all(&out)
        .map_err(|e| fail(EXIT_RUNTIME, format!("cannot create {}: {e}", out.display())))?;

    let default_jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let jobs = jobs.unwrap_or(default_jobs).max(1).min(runs.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(u64, Result<RunSummary, String>)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                let Some((value, scn, dir)) = runs.get(index) else {
                    break;
                };
                let outcome = run_to_dir(scn, dir).map_err(|e| e.to_string());
                results.lock().unwrap().push((*value, outcome));
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(value, _)| values.iter().position(|v| v == value));

    // Per-run status table.
    let mut any_failed = false;
    println!("{axis_key:<16} status");
    for (value, outcome) in &results {
        match outcome {
            Ok(summary) => println!("{value:<16} ok ({} events)", summary.total_events),
            Err(message) => {
                any_failed = true;
                println!("{value:<16} FAILED: {message}");
            }
        }
    }
    if any_failed {
        return Err(fail(EXIT_RUNTIME, "one or more sweep runs failed"));
    }

    // Aggregate CSV: final-tick metrics row per value.
    let mut aggregate = String::new();
    for (i, (value, _)) in results.iter().enumerate() {
        let dir = &runs[i].2;
        let metrics = std::fs::read_to_string(dir.join(trace::METRICS_FILE))
            .map_err(|e| fail(EXIT_RUNTIME, format!("cannot read sweep metrics: {e}")))?;
        let mut lines = metrics.lines();
        let header = lines
            .next()
            .ok_or_else(|| fail(EXIT_RUNTIME, "empty metrics file"))?;
        if i == 0 {
            aggregate.push_str(&format!("value,{header}\n"));
        }
        let last = lines
            .last()
            .ok_or_else(|| fail(EXIT_RUNTIME, "metrics file has no data rows"))?;
        aggregate.push_str(&format!("{value},{last}\n"));
    }
    let aggregate_path = out.join("sweep.csv");
    std::fs::write(&aggregate_path, aggregate)
        .map_err(|e| fail(EXIT_RUNTIME, format!("cannot write sweep.csv: {e}")))?;
    println!(
        "sweep complete: {} runs, aggregate at {}",
        results.len(),
        aggregate_path.display()
    );
    Ok(ExitCode::SUCCESS)
}
