//! Seeded random benchmark instances and the comparison campaign.
//!
//! Each instance pairs two random DAGs of `n` nodes (`n² = product_nodes`),
//! one for the system and one for the specification, with self-loops on
//! their leaves. The alphabet has `4n` symbols. Every trial draws from its
//! own ChaCha stream keyed by `(seed, trial, stream)`, so trials are
//! reproducible independently of execution order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{Revision, SpecAutomaton, Symbol, SystemFsm};
use crate::oracle::{oracle_min_max, oracle_min_sum, OracleBudget, OracleOutcome};
use crate::product::{build_graph, check_emptiness, verify_revision, RevisionGraph};
use crate::search::{arpp, Objective, RevisionOutcome};
use crate::COST_TOLERANCE;

pub const RESAMPLE_LIMIT: usize = 1000;

const STREAM_SYSTEM: u64 = 1;
const STREAM_SPEC: u64 = 2;
const STREAM_THETA: u64 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("trial {trial}: no acceptable instance after {attempts} attempts")]
    ResampleLimitExceeded { trial: usize, attempts: usize },
}

/// Which generated instances a trial accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFilter {
    /// Any instance whose system is fully reachable.
    Any,
    /// Only instances that are unsatisfiable as given but admit a revision.
    RevisionProblems,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    /// |Q|·|S_B|; must be a perfect square n², each DAG gets n nodes.
    pub product_nodes: usize,
    /// Forward edges per node, sampled uniformly per DAG from this range
    /// (capped at n(n-1)/2 edges).
    pub edge_factor: (f64, f64),
    /// Fraction of spec states that accept, sampled uniformly per trial.
    pub sink_fraction: (f64, f64),
    /// Uniform range of per-symbol preference levels (rounded to 1e-3).
    pub theta_range: (f64, f64),
    pub trials: usize,
    /// Inclusive range of symbols per spec transition label.
    pub label_size: (usize, usize),
    /// Probability that a symbol holds at a system state.
    pub state_label_density: f64,
    pub filter: InstanceFilter,
    pub oracle_max_subsets: u64,
    pub oracle_max_seconds: f64,
    /// Run the additive brute-force oracle (the bottleneck oracle always runs).
    pub sum_oracle: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 42,
            product_nodes: 9,
            edge_factor: (2.0, 3.0),
            sink_fraction: (0.05, 0.40),
            theta_range: (1.0, 10.0),
            trials: 200,
            label_size: (1, 3),
            state_label_density: 0.5,
            filter: InstanceFilter::RevisionProblems,
            oracle_max_subsets: 1_000_000,
            oracle_max_seconds: 7200.0,
            sum_oracle: true,
        }
    }
}

impl BenchConfig {
    /// Nodes per DAG.
    pub fn dag_nodes(&self) -> usize {
        self.product_nodes.isqrt()
    }

    pub fn alphabet_size(&self) -> usize {
        4 * self.dag_nodes()
    }

    pub fn oracle_budget(&self) -> OracleBudget {
        OracleBudget {
            max_subsets: self.oracle_max_subsets,
            max_wall_time: Duration::from_secs_f64(self.oracle_max_seconds),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidConfig(m));
        let n = self.dag_nodes();
        if self.product_nodes == 0 || n * n != self.product_nodes {
            return bad(format!("product_nodes = {} is not a perfect square", self.product_nodes));
        }
        let within = |(lo, hi): (f64, f64), min: f64, max: f64| lo <= hi && lo >= min && hi <= max;
        if !within(self.edge_factor, 2.0, 3.0) {
            return bad(format!("edge_factor {:?} must lie within [2, 3]", self.edge_factor));
        }
        if !within(self.sink_fraction, 0.05, 0.40) {
            return bad(format!("sink_fraction {:?} must lie within [0.05, 0.40]", self.sink_fraction));
        }
        let (lo, hi) = self.theta_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return bad(format!("theta_range {:?} must be finite, nonnegative and ordered", self.theta_range));
        }
        let (a, b) = self.label_size;
        if a == 0 || a > b || b > self.alphabet_size() {
            return bad(format!("label_size {:?} must be nonempty and at most the alphabet size", self.label_size));
        }
        if !(0.0..=1.0).contains(&self.state_label_density) {
            return bad("state_label_density must be a probability".into());
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.oracle_max_subsets == 0 || self.oracle_max_seconds.is_nan() || self.oracle_max_seconds <= 0.0 {
            return bad("oracle budget must be positive".into());
        }
        Ok(())
    }
}

fn trial_rng(seed: u64, trial: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((trial as u64) << 8) | stream);
    rng
}

fn padded(prefix: &str, i: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len();
    format!("{prefix}{i:0width$}")
}

/// Forward edges `i -> j` (i < j) of a random DAG whose nodes are all
/// reachable from node 0, by rejection.
fn random_dag(rng: &mut ChaCha8Rng, n: usize, edge_factor: (f64, f64)) -> Option<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    for _ in 0..RESAMPLE_LIMIT {
        let factor = rng.random_range(edge_factor.0..=edge_factor.1);
        let m = ((factor * n as f64).round() as usize).min(pairs.len());
        let mut edges: Vec<(usize, usize)> = sample(rng, pairs.len(), m).into_iter().map(|k| pairs[k]).collect();
        edges.sort_unstable();
        if reachable_from_zero(n, &edges) {
            return Some(edges);
        }
    }
    None
}

fn reachable_from_zero(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in edges {
        succ[a].push(b);
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn leaves(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut has_out = vec![false; n];
    for &(a, _) in edges {
        has_out[a] = true;
    }
    (0..n).filter(|&v| !has_out[v]).collect()
}

fn draw_instance(cfg: &BenchConfig, sys_rng: &mut ChaCha8Rng, spec_rng: &mut ChaCha8Rng, theta: &BTreeMap<Symbol, f64>) -> Option<(SystemFsm, SpecAutomaton)> {
    let n = cfg.dag_nodes();
    let alphabet: Vec<Symbol> = theta.keys().cloned().collect();
    let sys_name = |i| padded("t", i, n);
    let spec_name = |i| padded("s", i, n);

    let sys_edges = random_dag(sys_rng, n, cfg.edge_factor)?;
    let mut edges: BTreeSet<(String, String)> = sys_edges.iter().map(|&(a, b)| (sys_name(a), sys_name(b))).collect();
    for leaf in leaves(n, &sys_edges) {
        edges.insert((sys_name(leaf), sys_name(leaf)));
    }
    let labels = (0..n)
        .map(|q| {
            let label = alphabet
                .iter()
                .filter(|_| sys_rng.random_bool(cfg.state_label_density))
                .cloned()
                .collect();
            (sys_name(q), label)
        })
        .collect();
    let system = SystemFsm {
        states: (0..n).map(sys_name).collect(),
        initial: [sys_name(0)].into(),
        edges,
        labels,
    };

    let spec_edges = random_dag(spec_rng, n, cfg.edge_factor)?;
    let mut pairs = spec_edges.clone();
    pairs.extend(leaves(n, &spec_edges).into_iter().map(|v| (v, v)));
    pairs.sort_unstable();
    let mut transitions = BTreeMap::new();
    for (a, b) in pairs {
        let k = spec_rng.random_range(cfg.label_size.0..=cfg.label_size.1);
        let label: BTreeSet<Symbol> = sample(spec_rng, alphabet.len(), k).into_iter().map(|i| alphabet[i].clone()).collect();
        transitions.insert((spec_name(a), spec_name(b)), label);
    }
    let fraction = spec_rng.random_range(cfg.sink_fraction.0..=cfg.sink_fraction.1);
    let accepting_count = ((fraction * n as f64).round() as usize).clamp(1, n);
    let accepting = sample(spec_rng, n, accepting_count).into_iter().map(spec_name).collect();
    let mut spec = SpecAutomaton {
        states: (0..n).map(spec_name).collect(),
        initial: spec_name(0),
        transitions,
        accepting,
        preferences: BTreeMap::new(),
    };
    for (symbol, &value) in theta {
        spec.set_default_preference(symbol, value);
    }
    Some((system, spec))
}

/// Generates the instance for one trial.
pub fn generate_instance(cfg: &BenchConfig, trial: usize) -> Result<(SystemFsm, SpecAutomaton), BenchError> {
    cfg.validate()?;
    let mut sys_rng = trial_rng(cfg.seed, trial, STREAM_SYSTEM);
    let mut spec_rng = trial_rng(cfg.seed, trial, STREAM_SPEC);
    let mut theta_rng = trial_rng(cfg.seed, trial, STREAM_THETA);

    let n = cfg.dag_nodes();
    let alphabet_size = cfg.alphabet_size();
    let (lo, hi) = cfg.theta_range;
    let theta: BTreeMap<Symbol, f64> = (0..alphabet_size)
        .map(|i| {
            let value = theta_rng.random_range(lo..=hi);
            (Symbol::new(padded("p", i, alphabet_size)), (value * 1000.0).round() / 1000.0)
        })
        .collect();

    let exceeded = BenchError::ResampleLimitExceeded {
        trial,
        attempts: RESAMPLE_LIMIT,
    };
    for _ in 0..RESAMPLE_LIMIT {
        let (system, spec) = draw_instance(cfg, &mut sys_rng, &mut spec_rng, &theta).ok_or(exceeded.clone())?;
        debug_assert_eq!(system.states.len(), n);
        let accept = match cfg.filter {
            InstanceFilter::Any => true,
            InstanceFilter::RevisionProblems => {
                let graph = build_graph(&system, &spec);
                check_emptiness(&graph, true).is_none() && check_emptiness(&graph, false).is_some()
            }
        };
        if accept {
            return Ok((system, spec));
        }
    }
    Err(exceeded)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ArppStatus {
    AlreadySatisfiable,
    Revised,
    NoRevisionExists,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OracleStatus {
    Optimal,
    Infeasible,
    TimedOut,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArppSummary {
    pub status: ArppStatus,
    pub sum_cost: Option<f64>,
    pub max_cost: Option<f64>,
    pub size: Option<usize>,
    pub removals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub status: OracleStatus,
    pub cost: Option<f64>,
    pub size: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub removable_symbols: usize,
    pub graph_edges: usize,
    pub arpp_sum: ArppSummary,
    pub arpp_max: ArppSummary,
    pub oracle_sum: OracleSummary,
    pub oracle_max: OracleSummary,
    /// ARPP sum cost over the optimal sum cost.
    pub ratio: Option<f64>,
    /// Sum cost of the Max result over sum cost of the Sum result.
    pub ratio1: Option<f64>,
    /// Max cost of the Sum result over max cost of the Max result.
    pub ratio2: Option<f64>,
    /// Size of the Max result over size of the Sum result.
    pub size_ratio: Option<f64>,
    /// ARPP max cost equals the bottleneck optimum.
    pub max_exact: Option<bool>,
    /// ARPP sum cost is no better than the additive optimum.
    pub sum_sound: Option<bool>,
    /// Both ARPP revisions make the specification satisfiable.
    pub arpp_valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialTiming {
    pub trial: usize,
    pub arpp_sum_ms: f64,
    pub arpp_max_ms: f64,
    pub oracle_sum_ms: f64,
    pub oracle_max_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub record: TrialRecord,
    pub timing: TrialTiming,
}

/// min / avg / max over the defined values, rounded to 4 decimals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub min: Option<f64>,
    pub avg: Option<f64>,
    pub max: Option<f64>,
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Stats {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Stats {
                count: 0,
                min: None,
                avg: None,
                max: None,
            };
        }
        let sum: f64 = values.iter().sum();
        Stats {
            count: values.len(),
            min: Some(round4(values.iter().copied().fold(f64::INFINITY, f64::min))),
            avg: Some(round4(sum / values.len() as f64)),
            max: Some(round4(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub product_nodes: usize,
    pub trials: usize,
    pub arpp_sum_succ: usize,
    pub arpp_max_succ: usize,
    pub oracle_sum_succ: usize,
    pub oracle_max_succ: usize,
    pub ratio: Stats,
    pub ratio1: Stats,
    pub ratio2: Stats,
    pub size_ratio: Stats,
    pub sum_size: Stats,
    pub max_size: Stats,
    /// Trials where ARPP max cost differs from the bottleneck optimum.
    pub max_mismatches: Vec<usize>,
    /// Trials where ARPP sum cost beats the additive optimum.
    pub sum_violations: Vec<usize>,
    /// Trials whose ARPP revision fails verification.
    pub invalid: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingAggregate {
    pub product_nodes: usize,
    pub arpp_sum: Stats,
    pub arpp_max: Stats,
    pub oracle_sum: Stats,
    pub oracle_max: Stats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: BenchConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregate: Aggregate,
    pub timings: Vec<TrialTiming>,
    pub timing_aggregate: TimingAggregate,
}

/// Distribution choices that affect comparability with other generators.
pub const GENERATOR_NOTES: &[&str] = &[
    "spec labels: label_size symbols drawn uniformly without replacement from the 4n alphabet",
    "system labels: each symbol holds independently with probability state_label_density",
    "preferences: one level per symbol, uniform in theta_range, rounded to 1e-3",
    "edges: round(edge_factor * n) distinct forward pairs, rejection-sampled for reachability from node 0",
    "leaves carry self-loops in both DAGs; leaf spec self-loops are labeled like other transitions",
];

fn safe_ratio(num: f64, den: f64) -> Option<f64> {
    if den.abs() <= COST_TOLERANCE {
        (num.abs() <= COST_TOLERANCE).then_some(1.0)
    } else {
        Some(num / den)
    }
}

fn summarize_arpp(graph: &RevisionGraph, outcome: &RevisionOutcome) -> ArppSummary {
    let status = match outcome {
        RevisionOutcome::AlreadySatisfiable { .. } => ArppStatus::AlreadySatisfiable,
        RevisionOutcome::Revised { .. } => ArppStatus::Revised,
        RevisionOutcome::NoRevisionExists => ArppStatus::NoRevisionExists,
    };
    match outcome.removals(graph) {
        Some(set) => ArppSummary {
            status,
            sum_cost: Some(graph.sum_theta(&set)),
            max_cost: Some(graph.max_theta(&set)),
            size: Some(set.len()),
            removals: graph.to_revision(&set).removals.iter().map(ToString::to_string).collect(),
        },
        None => ArppSummary {
            status,
            sum_cost: None,
            max_cost: None,
            size: None,
            removals: Vec::new(),
        },
    }
}

fn summarize_oracle(graph: &RevisionGraph, outcome: Option<&OracleOutcome>) -> OracleSummary {
    match outcome {
        None => OracleSummary {
            status: OracleStatus::Skipped,
            cost: None,
            size: None,
        },
        Some(OracleOutcome::Optimal { removals, cost, .. }) => {
            debug_assert!(removals.is_subset(&graph.full_set()));
            OracleSummary {
                status: OracleStatus::Optimal,
                cost: Some(*cost),
                size: Some(removals.len()),
            }
        }
        Some(OracleOutcome::Infeasible) => OracleSummary {
            status: OracleStatus::Infeasible,
            cost: None,
            size: None,
        },
        Some(OracleOutcome::TimedOut) => OracleSummary {
            status: OracleStatus::TimedOut,
            cost: None,
            size: None,
        },
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

fn revision_is_valid(system: &SystemFsm, spec: &SpecAutomaton, rev: Option<Revision>) -> bool {
    match rev {
        Some(rev) => matches!(verify_revision(system, spec, &rev), Ok(Some(_))),
        None => true,
    }
}

/// Runs every solver on one generated instance.
pub fn run_trial(cfg: &BenchConfig, trial: usize) -> Result<TrialResult, BenchError> {
    let (system, spec) = generate_instance(cfg, trial)?;
    let graph = build_graph(&system, &spec);

    let (sum_out, arpp_sum_ms) = timed(|| arpp(&graph, Objective::Sum));
    let (max_out, arpp_max_ms) = timed(|| arpp(&graph, Objective::Max));
    let (oracle_sum, oracle_sum_ms) = if cfg.sum_oracle {
        let (o, t) = timed(|| oracle_min_sum(&graph, cfg.oracle_budget()));
        (Some(o), t)
    } else {
        (None, 0.0)
    };
    let (oracle_max, oracle_max_ms) = timed(|| oracle_min_max(&graph, cfg.oracle_budget()));

    let arpp_sum = summarize_arpp(&graph, &sum_out);
    let arpp_max = summarize_arpp(&graph, &max_out);
    let oracle_sum = summarize_oracle(&graph, oracle_sum.as_ref());
    let oracle_max = summarize_oracle(&graph, Some(&oracle_max));

    let ratio = match (arpp_sum.sum_cost, oracle_sum.cost) {
        (Some(a), Some(o)) => safe_ratio(a, o),
        _ => None,
    };
    let ratio1 = match (arpp_max.sum_cost, arpp_sum.sum_cost) {
        (Some(m), Some(s)) => safe_ratio(m, s),
        _ => None,
    };
    let ratio2 = match (arpp_sum.max_cost, arpp_max.max_cost) {
        (Some(s), Some(m)) => safe_ratio(s, m),
        _ => None,
    };
    let size_ratio = match (arpp_max.size, arpp_sum.size) {
        (Some(m), Some(s)) => safe_ratio(m as f64, s as f64),
        _ => None,
    };
    let max_exact = match (oracle_max.status, arpp_max.max_cost, oracle_max.cost) {
        (OracleStatus::Optimal, Some(a), Some(o)) => Some((a - o).abs() <= COST_TOLERANCE),
        (OracleStatus::Infeasible, None, _) => Some(true),
        (OracleStatus::Optimal, None, _) | (OracleStatus::Infeasible, Some(_), _) => Some(false),
        _ => None,
    };
    let sum_sound = match (oracle_sum.status, arpp_sum.sum_cost, oracle_sum.cost) {
        (OracleStatus::Optimal, Some(a), Some(o)) => Some(a >= o - COST_TOLERANCE),
        (OracleStatus::Infeasible, None, _) => Some(true),
        (OracleStatus::Optimal, None, _) | (OracleStatus::Infeasible, Some(_), _) => Some(false),
        _ => None,
    };
    let arpp_valid = revision_is_valid(&system, &spec, sum_out.revision(&graph))
        && revision_is_valid(&system, &spec, max_out.revision(&graph));

    Ok(TrialResult {
        record: TrialRecord {
            trial,
            removable_symbols: graph.removables().len(),
            graph_edges: graph.edges().len(),
            arpp_sum,
            arpp_max,
            oracle_sum,
            oracle_max,
            ratio,
            ratio1,
            ratio2,
            size_ratio,
            max_exact,
            sum_sound,
            arpp_valid,
        },
        timing: TrialTiming {
            trial,
            arpp_sum_ms,
            arpp_max_ms,
            oracle_sum_ms,
            oracle_max_ms,
        },
    })
}

pub fn run_campaign(cfg: &BenchConfig) -> Result<CampaignReport, BenchError> {
    run_campaign_with(cfg, |_| {})
}

/// Runs all trials in parallel; `on_trial` sees each result as it
/// completes. The report is ordered by trial index.
pub fn run_campaign_with(
    cfg: &BenchConfig,
    on_trial: impl Fn(&TrialResult) + Sync,
) -> Result<CampaignReport, BenchError> {
    cfg.validate()?;
    let results: Vec<TrialResult> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let result = run_trial(cfg, trial)?;
            on_trial(&result);
            Ok(result)
        })
        .collect::<Result<_, BenchError>>()?;

    let (trials, timings): (Vec<TrialRecord>, Vec<TrialTiming>) =
        results.into_iter().map(|r| (r.record, r.timing)).unzip();
    let aggregate = aggregate(cfg, &trials);
    let timing_aggregate = TimingAggregate {
        product_nodes: cfg.product_nodes,
        arpp_sum: Stats::of(timings.iter().map(|t| t.arpp_sum_ms)),
        arpp_max: Stats::of(timings.iter().map(|t| t.arpp_max_ms)),
        oracle_sum: Stats::of(
            trials
                .iter()
                .zip(&timings)
                .filter(|(r, _)| r.oracle_sum.status != OracleStatus::Skipped)
                .map(|(_, t)| t.oracle_sum_ms),
        ),
        oracle_max: Stats::of(timings.iter().map(|t| t.oracle_max_ms)),
    };
    Ok(CampaignReport {
        config: cfg.clone(),
        trials,
        aggregate,
        timings,
        timing_aggregate,
    })
}

fn aggregate(cfg: &BenchConfig, trials: &[TrialRecord]) -> Aggregate {
    let count = |f: &dyn Fn(&TrialRecord) -> bool| trials.iter().filter(|r| f(r)).count();
    let select = |f: &dyn Fn(&TrialRecord) -> bool| trials.iter().filter(|r| f(r)).map(|r| r.trial).collect();
    Aggregate {
        product_nodes: cfg.product_nodes,
        trials: trials.len(),
        arpp_sum_succ: count(&|r| r.arpp_sum.size.is_some()),
        arpp_max_succ: count(&|r| r.arpp_max.size.is_some()),
        oracle_sum_succ: count(&|r| r.oracle_sum.status == OracleStatus::Optimal),
        oracle_max_succ: count(&|r| r.oracle_max.status == OracleStatus::Optimal),
        ratio: Stats::of(trials.iter().filter_map(|r| r.ratio)),
        ratio1: Stats::of(trials.iter().filter_map(|r| r.ratio1)),
        ratio2: Stats::of(trials.iter().filter_map(|r| r.ratio2)),
        size_ratio: Stats::of(trials.iter().filter_map(|r| r.size_ratio)),
        sum_size: Stats::of(trials.iter().filter_map(|r| r.arpp_sum.size.map(|s| s as f64))),
        max_size: Stats::of(trials.iter().filter_map(|r| r.arpp_max.size.map(|s| s as f64))),
        max_mismatches: select(&|r| r.max_exact == Some(false)),
        sum_violations: select(&|r| r.sum_sound == Some(false)),
        invalid: select(&|r| !r.arpp_valid),
    }
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ReportLine<'a> {
    Header {
        config: &'a BenchConfig,
        generator: &'a [&'a str],
    },
    Trial(&'a TrialRecord),
    Aggregate(&'a Aggregate),
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TimingLine<'a> {
    Timing(&'a TrialTiming),
    TimingAggregate(&'a TimingAggregate),
}

impl CampaignReport {
    /// One JSON object per line: header, trials, aggregate. Contains no
    /// wall-clock data, so identical configurations give identical bytes.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &ReportLine| {
            out.push_str(&serde_json::to_string(line).expect("report serializes"));
            out.push('\n');
        };
        push(&ReportLine::Header {
            config: &self.config,
            generator: GENERATOR_NOTES,
        });
        for t in &self.trials {
            push(&ReportLine::Trial(t));
        }
        push(&ReportLine::Aggregate(&self.aggregate));
        out
    }

    pub fn timings_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &TimingLine| {
            out.push_str(&serde_json::to_string(line).expect("timings serialize"));
            out.push('\n');
        };
        for t in &self.timings {
            push(&TimingLine::Timing(t));
        }
        push(&TimingLine::TimingAggregate(&self.timing_aggregate));
        out
    }
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_owned(), |v| v.to_string())
}

fn succ(n: usize, of: usize) -> String {
    format!("{n}/{of}")
}

fn render_table(out: &mut String, title: &str, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        cells
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{}", line(&mut header.iter().copied()));
    for row in rows {
        let _ = writeln!(out, "{}", line(&mut row.iter().map(String::as_str)));
    }
    out.push('\n');
}

/// Aligned-column tables: oracle vs. Sum (times and RATIO), Sum vs. Max
/// (times, RATIO1, RATIO2), and revision sizes. Times are in milliseconds.
pub fn render_tables(reports: &[CampaignReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# generator");
    for note in GENERATOR_NOTES {
        let _ = writeln!(out, "#   {note}");
    }
    for r in reports {
        let c = &r.config;
        let _ = writeln!(
            out,
            "# nodes={} seed={} trials={} edge_factor={:?} sink_fraction={:?} theta_range={:?} label_size={:?} density={} filter={:?} oracle_max_subsets={}",
            c.product_nodes, c.seed, c.trials, c.edge_factor, c.sink_fraction, c.theta_range, c.label_size, c.state_label_density, c.filter, c.oracle_max_subsets
        );
    }
    out.push('\n');

    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let (a, t) = (&r.aggregate, &r.timing_aggregate);
            vec![
                a.product_nodes.to_string(),
                cell(t.oracle_sum.min),
                cell(t.oracle_sum.avg),
                cell(t.oracle_sum.max),
                succ(a.oracle_sum_succ, a.trials),
                cell(t.arpp_sum.min),
                cell(t.arpp_sum.avg),
                cell(t.arpp_sum.max),
                succ(a.arpp_sum_succ, a.trials),
                cell(a.ratio.min),
                cell(a.ratio.avg),
                cell(a.ratio.max),
            ]
        })
        .collect();
    render_table(
        &mut out,
        "Brute-force vs. Min-Sum revision, times in ms (RATIO = ARPP sum / optimal sum)",
        &[
            "nodes", "bf_min", "bf_avg", "bf_max", "bf_succ", "sum_min", "sum_avg", "sum_max", "sum_succ", "ratio_min",
            "ratio_avg", "ratio_max",
        ],
        &rows,
    );

    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let (a, t) = (&r.aggregate, &r.timing_aggregate);
            vec![
                a.product_nodes.to_string(),
                cell(t.arpp_sum.min),
                cell(t.arpp_sum.avg),
                cell(t.arpp_sum.max),
                succ(a.arpp_sum_succ, a.trials),
                cell(t.arpp_max.min),
                cell(t.arpp_max.avg),
                cell(t.arpp_max.max),
                succ(a.arpp_max_succ, a.trials),
                cell(a.ratio1.min),
                cell(a.ratio1.avg),
                cell(a.ratio1.max),
                cell(a.ratio2.min),
                cell(a.ratio2.avg),
                cell(a.ratio2.max),
            ]
        })
        .collect();
    render_table(
        &mut out,
        "Min-Sum vs. Min-Max revision, times in ms (RATIO1 = sum(Max) / sum(Sum), RATIO2 = max(Sum) / max(Max))",
        &[
            "nodes", "sum_min", "sum_avg", "sum_max", "sum_succ", "max_min", "max_avg", "max_max", "max_succ", "r1_min",
            "r1_avg", "r1_max", "r2_min", "r2_avg", "r2_max",
        ],
        &rows,
    );

    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let a = &r.aggregate;
            vec![
                a.product_nodes.to_string(),
                cell(a.sum_size.avg),
                cell(a.max_size.avg),
                cell(a.size_ratio.min),
                cell(a.size_ratio.avg),
                cell(a.size_ratio.max),
            ]
        })
        .collect();
    render_table(
        &mut out,
        "Revision sizes (RATIO = |Max| / |Sum|)",
        &["nodes", "sum_avg", "max_avg", "ratio_min", "ratio_avg", "ratio_max"],
        &rows,
    );

    for r in reports {
        let a = &r.aggregate;
        let _ = writeln!(
            out,
            "# nodes={}: max mismatches {:?}, sum violations {:?}, invalid revisions {:?}",
            a.product_nodes, a.max_mismatches, a.sum_violations, a.invalid
        );
    }
    out
}
