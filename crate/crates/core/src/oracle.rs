//! Exact solvers used as ground truth.
//!
//! The bottleneck problem is solved by a threshold sweep over preference
//! levels; the additive problem by best-first enumeration of removal sets in
//! nondecreasing total preference. Neither shares code with the label
//! search in [`crate::search`] beyond the emptiness check.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use crate::bitset::RemovalSet;
use crate::product::{check_emptiness_with, AcceptingRun, RevisionGraph};
use crate::COST_TOLERANCE;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleBudget {
    /// Candidate removal sets examined before giving up.
    pub max_subsets: u64,
    pub max_wall_time: Duration,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_subsets: 1_000_000,
            max_wall_time: Duration::from_secs(2 * 60 * 60),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleOutcome {
    Optimal {
        removals: RemovalSet,
        cost: f64,
        run: AcceptingRun,
    },
    /// No accepting run even with every removable symbol removed.
    Infeasible,
    TimedOut,
}

impl OracleOutcome {
    pub fn cost(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal { cost, .. } => Some(*cost),
            _ => None,
        }
    }

    pub fn removals(&self) -> Option<&RemovalSet> {
        match self {
            OracleOutcome::Optimal { removals, .. } => Some(removals),
            _ => None,
        }
    }
}

fn feasible_under(graph: &RevisionGraph, removed: &RemovalSet) -> Option<AcceptingRun> {
    check_emptiness_with(graph, |e| e.label.is_subset(removed))
}

/// Accepting run using only edges whose labels have preference at most
/// `threshold`.
pub fn feasible_at_threshold(graph: &RevisionGraph, threshold: f64) -> Option<AcceptingRun> {
    check_emptiness_with(graph, |e| e.max_theta <= threshold)
}

/// Minimizes the largest removed preference level by sweeping thresholds in
/// ascending order; the first threshold admitting an accepting run is
/// optimal because feasibility is monotone in the threshold.
pub fn oracle_min_max(graph: &RevisionGraph, budget: OracleBudget) -> OracleOutcome {
    let started = Instant::now();
    let mut thresholds: Vec<f64> = std::iter::once(0.0)
        .chain(graph.edges().iter().map(|e| e.max_theta))
        .collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    for t in thresholds {
        if started.elapsed() > budget.max_wall_time {
            return OracleOutcome::TimedOut;
        }
        if let Some(run) = feasible_at_threshold(graph, t) {
            let removals = run.removals(graph);
            let cost = graph.max_theta(&removals);
            return OracleOutcome::Optimal { removals, cost, run };
        }
    }
    OracleOutcome::Infeasible
}

struct Candidate {
    sum: f64,
    /// Positions into the weight-sorted element list, ascending.
    members: Vec<u32>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sum
            .total_cmp(&other.sum)
            .then_with(|| self.members.cmp(&other.members))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimizes the total removed preference level.
///
/// Only occurrences that label some edge are candidates. Subsets of them are
/// generated in nondecreasing sum (each subset is produced exactly once by
/// either appending the next element or replacing the last one with it), and
/// each is checked for an accepting run over the edges it enables. Emptiness
/// results are memoized by enabled-edge set. Among subsets tying with the
/// first feasible one, the lexicographically smallest sorted removal list is
/// returned.
pub fn oracle_min_sum(graph: &RevisionGraph, budget: OracleBudget) -> OracleOutcome {
    let started = Instant::now();
    let cap = graph.removables().len();

    let mut relevant = graph.empty_set();
    for e in graph.edges() {
        relevant.union_with(&e.label);
    }
    if feasible_under(graph, &relevant).is_none() {
        return OracleOutcome::Infeasible;
    }

    let theta = graph.theta();
    let mut elements: Vec<usize> = relevant.iter().collect();
    elements.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]).then(a.cmp(&b)));
    let weight = |pos: u32| theta[elements[pos as usize]];

    let disabled: Vec<&RemovalSet> = graph
        .edges()
        .iter()
        .filter(|e| !e.is_enabled())
        .map(|e| &e.label)
        .collect();
    let mut memo: HashMap<Vec<u64>, bool> = HashMap::new();
    let mut examined: u64 = 0;

    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Candidate {
        sum: 0.0,
        members: Vec::new(),
    }));
    let mut best: Option<(f64, RemovalSet)> = None;

    while let Some(Reverse(candidate)) = heap.pop() {
        if let Some((best_sum, _)) = &best {
            if candidate.sum > best_sum + COST_TOLERANCE {
                break;
            }
        }
        examined += 1;
        if examined > budget.max_subsets
            || (examined.is_multiple_of(1024) && started.elapsed() > budget.max_wall_time)
        {
            return OracleOutcome::TimedOut;
        }

        let set = RemovalSet::from_indices(
            cap,
            candidate.members.iter().map(|&p| elements[p as usize]),
        );
        let mut mask = vec![0u64; disabled.len().div_ceil(64)];
        for (i, label) in disabled.iter().enumerate() {
            if label.is_subset(&set) {
                mask[i / 64] |= 1 << (i % 64);
            }
        }
        let feasible = *memo
            .entry(mask)
            .or_insert_with(|| feasible_under(graph, &set).is_some());
        if feasible {
            match &best {
                Some((_, current)) if !lexicographically_smaller(&set, current) => {}
                _ => best = Some((candidate.sum, set)),
            }
        }

        if let Some(&last) = candidate.members.last() {
            let next = last + 1;
            if (next as usize) < elements.len() {
                let mut extended = candidate.members.clone();
                extended.push(next);
                heap.push(Reverse(Candidate {
                    sum: exact_sum(&extended, &weight),
                    members: extended,
                }));
                let mut swapped = candidate.members;
                *swapped.last_mut().expect("nonempty") = next;
                heap.push(Reverse(Candidate {
                    sum: exact_sum(&swapped, &weight),
                    members: swapped,
                }));
            }
        } else if !elements.is_empty() {
            heap.push(Reverse(Candidate {
                sum: weight(0),
                members: vec![0],
            }));
        }
    }

    let (_, removals) = best.expect("the full relevant set is feasible");
    let run = feasible_under(graph, &removals).expect("memoized as feasible");
    let cost = graph.sum_theta(&removals);
    OracleOutcome::Optimal { removals, cost, run }
}

fn exact_sum(members: &[u32], weight: &impl Fn(u32) -> f64) -> f64 {
    members.iter().map(|&p| weight(p)).fold(0.0, |acc, w| acc + w)
}

/// Compares sorted index lists, which is the order of sorted removal lists.
fn lexicographically_smaller(a: &RemovalSet, b: &RemovalSet) -> bool {
    a.iter().lt(b.iter())
}
