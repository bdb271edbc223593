//! Subcommand implementations for the `specrev` binary.
//!
//! Exit codes: 0 when the (revised) specification is satisfiable, 2 when no
//! revision exists or a given revision does not help, 1 for bad input.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use specrev_core::benchgen::{render_tables, run_campaign_with, BenchConfig, CampaignReport, InstanceFilter};
use specrev_core::instance::{Instance, RevisionFile};
use specrev_core::{arpp, build_graph, verify_revision, Objective, Removal, RevisionOutcome, Witness};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNSATISFIABLE: i32 = 2;

pub const THREADS_ENV: &str = "SPEC_REVISE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "specrev", version, about = "Preference-aware revision of unsatisfiable specifications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a revision that makes the specification satisfiable.
    Revise {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Sum)]
        objective: ObjectiveArg,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Check that a revision makes the specification satisfiable.
    Verify {
        instance: PathBuf,
        /// Revision JSON (`{"removals": [...]}`); `-` reads stdin.
        revision: String,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Run random benchmark campaigns and write reports.
    Bench(BenchArgs),
    /// Print the revision graph in DOT format.
    DumpGraph { instance: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Sum,
    Max,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Objective {
        match o {
            ObjectiveArg::Sum => Objective::Sum,
            ObjectiveArg::Max => Objective::Max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FilterArg {
    Any,
    RevisionProblems,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON benchmark configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Product sizes, one campaign each (perfect squares).
    #[arg(long, value_delimiter = ',')]
    pub product_nodes: Vec<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Edge factor range `lo,hi` (a single value fixes it).
    #[arg(long, value_delimiter = ',', num_args = 1..=2)]
    pub edge_factor: Vec<f64>,
    /// Accepting-state fraction range `lo,hi` (a single value fixes it).
    #[arg(long, value_delimiter = ',', num_args = 1..=2)]
    pub sink_fraction: Vec<f64>,
    /// Preference range `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub theta_range: Vec<f64>,
    #[arg(long, value_enum)]
    pub filter: Option<FilterArg>,
    #[arg(long)]
    pub oracle_max_subsets: Option<u64>,
    #[arg(long)]
    pub oracle_max_seconds: Option<f64>,
    /// Skip the additive brute-force oracle.
    #[arg(long)]
    pub no_sum_oracle: bool,
    /// Worker threads; defaults to the environment variable, then all cores.
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

fn input(err: impl std::fmt::Display) -> CliError {
    CliError::Input(err.to_string())
}

/// Runs a parsed command, writing results to `out`. Returns the exit code;
/// errors map to [`EXIT_INPUT`].
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Revise {
            instance,
            objective,
            emit,
        } => revise(&instance, objective.into(), emit, out),
        Command::Verify {
            instance,
            revision,
            emit,
        } => verify(&instance, &revision, emit, out),
        Command::Bench(args) => bench(&args, out),
        Command::DumpGraph { instance } => {
            let inst = Instance::read(&instance).map_err(input)?;
            let graph = build_graph(&inst.system, &inst.spec);
            out.write_all(graph.to_dot().as_bytes()).map_err(CliError::io("stdout"))?;
            Ok(EXIT_OK)
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReviseReport {
    pub status: &'static str,
    pub objective: &'static str,
    pub removals: Vec<Removal>,
    pub sum_cost: Option<f64>,
    pub max_cost: Option<f64>,
    pub witness: Option<Witness>,
}

pub fn revise_report(instance: &Instance, objective: Objective) -> ReviseReport {
    let graph = build_graph(&instance.system, &instance.spec);
    let outcome = arpp(&graph, objective);
    let status = match outcome {
        RevisionOutcome::AlreadySatisfiable { .. } => "ALREADY_SATISFIABLE",
        RevisionOutcome::Revised { .. } => "REVISED",
        RevisionOutcome::NoRevisionExists => "NO_REVISION_EXISTS",
    };
    let set = outcome.removals(&graph);
    ReviseReport {
        status,
        objective: objective.name(),
        removals: set
            .as_ref()
            .map(|s| graph.to_revision(s).removals.into_iter().collect())
            .unwrap_or_default(),
        sum_cost: set.as_ref().map(|s| graph.sum_theta(s)),
        max_cost: set.as_ref().map(|s| graph.max_theta(s)),
        witness: outcome.run().map(|run| run.witness(&graph)),
    }
}

fn write_witness(out: &mut dyn Write, witness: &Witness) -> io::Result<()> {
    let (prefix, lasso) = witness.render();
    writeln!(out, "prefix: {prefix}")?;
    writeln!(out, "lasso: {lasso}")
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    writeln!(out, "{text}").map_err(CliError::io("stdout"))
}

fn revise(path: &Path, objective: Objective, emit: Emit, out: &mut dyn Write) -> Result<i32, CliError> {
    let instance = Instance::read(path).map_err(input)?;
    let report = revise_report(&instance, objective);
    match emit {
        Emit::Json => write_json(out, &report)?,
        Emit::Text => {
            let cost = |c: Option<f64>| c.map_or_else(|| "-".to_owned(), |v| v.to_string());
            let removals: Vec<String> = report.removals.iter().map(ToString::to_string).collect();
            (|| -> io::Result<()> {
                writeln!(out, "status: {}", report.status)?;
                writeln!(out, "objective: {}", report.objective)?;
                writeln!(out, "removals: [{}]", removals.join(", "))?;
                writeln!(out, "sum-cost: {}", cost(report.sum_cost))?;
                writeln!(out, "max-cost: {}", cost(report.max_cost))?;
                if let Some(w) = &report.witness {
                    write_witness(out, w)?;
                }
                Ok(())
            })()
            .map_err(CliError::io("stdout"))?;
        }
    }
    Ok(if report.status == "NO_REVISION_EXISTS" {
        EXIT_UNSATISFIABLE
    } else {
        EXIT_OK
    })
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    satisfiable: bool,
    witness: Option<Witness>,
}

fn verify(path: &Path, revision: &str, emit: Emit, out: &mut dyn Write) -> Result<i32, CliError> {
    let instance = Instance::read(path).map_err(input)?;
    let text = if revision == "-" {
        let mut buf = String::new();
        io::stdin().read_to_string(&mut buf).map_err(CliError::io("stdin"))?;
        buf
    } else {
        fs::read_to_string(revision).map_err(CliError::io(revision))?
    };
    let rev = RevisionFile::from_json(&text).map_err(|e| CliError::Input(format!("{revision}: {e}")))?;
    let witness = verify_revision(&instance.system, &instance.spec, &rev).map_err(input)?;
    let report = VerifyReport {
        satisfiable: witness.is_some(),
        witness,
    };
    match emit {
        Emit::Json => write_json(out, &report)?,
        Emit::Text => (|| -> io::Result<()> {
            match &report.witness {
                Some(w) => {
                    writeln!(out, "SATISFIABLE")?;
                    write_witness(out, w)
                }
                None => writeln!(out, "UNSATISFIABLE"),
            }
        })()
        .map_err(CliError::io("stdout"))?,
    }
    Ok(if report.satisfiable { EXIT_OK } else { EXIT_UNSATISFIABLE })
}

fn range(values: &[f64], flag: &str) -> Result<Option<(f64, f64)>, CliError> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some((*v, *v))),
        [lo, hi] => Ok(Some((*lo, *hi))),
        _ => Err(CliError::Input(format!("--{flag} takes one or two values"))),
    }
}

/// Builds one configuration per requested product size.
pub fn bench_configs(args: &BenchArgs) -> Result<Vec<BenchConfig>, CliError> {
    let mut base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(CliError::io(path.display().to_string()))?;
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => BenchConfig::default(),
    };
    if let Some(t) = args.trials {
        base.trials = t;
    }
    if let Some(s) = args.seed {
        base.seed = s;
    }
    if let Some(r) = range(&args.edge_factor, "edge-factor")? {
        base.edge_factor = r;
    }
    if let Some(r) = range(&args.sink_fraction, "sink-fraction")? {
        base.sink_fraction = r;
    }
    if let Some(r) = range(&args.theta_range, "theta-range")? {
        base.theta_range = r;
    }
    if let Some(f) = args.filter {
        base.filter = match f {
            FilterArg::Any => InstanceFilter::Any,
            FilterArg::RevisionProblems => InstanceFilter::RevisionProblems,
        };
    }
    if let Some(m) = args.oracle_max_subsets {
        base.oracle_max_subsets = m;
    }
    if let Some(s) = args.oracle_max_seconds {
        base.oracle_max_seconds = s;
    }
    if args.no_sum_oracle {
        base.sum_oracle = false;
    }
    let sizes = if args.product_nodes.is_empty() {
        vec![base.product_nodes]
    } else {
        args.product_nodes.clone()
    };
    let configs: Vec<BenchConfig> = sizes
        .into_iter()
        .map(|n| BenchConfig {
            product_nodes: n,
            ..base.clone()
        })
        .collect();
    for c in &configs {
        c.validate().map_err(input)?;
    }
    Ok(configs)
}

/// Runs each campaign, streaming per-trial records to `trials.partial.jsonl`
/// as they finish, then writes `report.txt`, `report.jsonl` and
/// `timings.jsonl` under the output directory.
fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let configs = bench_configs(args)?;
    let dir = &args.out;
    fs::create_dir_all(dir).map_err(CliError::io(dir.display().to_string()))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads.filter(|&n| n > 0) {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Input(format!("thread pool: {e}")))?;

    let partial_path = dir.join("trials.partial.jsonl");
    let partial = File::create(&partial_path).map_err(CliError::io(partial_path.display().to_string()))?;
    let partial = Mutex::new(BufWriter::new(partial));

    let mut reports: Vec<CampaignReport> = Vec::new();
    for cfg in &configs {
        let report = pool
            .install(|| {
                run_campaign_with(cfg, |result| {
                    let mut w = partial.lock().expect("partial writer");
                    let line = serde_json::json!({
                        "product_nodes": cfg.product_nodes,
                        "record": result.record,
                        "timing": result.timing,
                    });
                    // Best effort; the final reports are authoritative.
                    let _ = writeln!(w, "{line}").and_then(|_| w.flush());
                })
            })
            .map_err(input)?;
        reports.push(report);
    }

    let tables = render_tables(&reports);
    let jsonl: String = reports.iter().map(CampaignReport::to_jsonl).collect();
    let timings: String = reports.iter().map(CampaignReport::timings_jsonl).collect();
    for (name, body) in [("report.txt", &tables), ("report.jsonl", &jsonl), ("timings.jsonl", &timings)] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(CliError::io(path.display().to_string()))?;
    }
    out.write_all(tables.as_bytes()).map_err(CliError::io("stdout"))?;
    Ok(EXIT_OK)
}
