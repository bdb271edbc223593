//! Dijkstra-style label search over the revision graph.
//!
//! Every node carries the set of symbol occurrences that must be removed to
//! reach it together with the preference level of that set under a chosen
//! objective. A prefix search from the source finds a removal set for every
//! reachable accepting node; a lasso search from each of them, seeded with
//! the prefix set, finds the cheapest way back. The best combination is the
//! revision. Under the bottleneck objective the search is exact; under the
//! additive objective it is an approximation.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::Revision;
use crate::bitset::RemovalSet;
use crate::product::{AcceptingRun, EdgeId, Node, NodeId, RevisionGraph};

/// How the preference level of a removal set is aggregated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Sum of preference levels.
    Sum,
    /// Largest preference level, 0 for the empty set.
    Max,
}

impl Objective {
    pub fn pref(self, set: &RemovalSet, theta: &[f64]) -> f64 {
        match self {
            Objective::Sum => set.iter().map(|i| theta[i]).fold(0.0, |acc, t| acc + t),
            Objective::Max => set.iter().map(|i| theta[i]).fold(0.0, f64::max),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Sum => "sum",
            Objective::Max => "max",
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(Objective::Sum),
            "max" => Ok(Objective::Max),
            other => Err(format!("unknown objective `{other}` (expected sum or max)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("node {0} was not reached")]
    Unreached(NodeId),
}

/// Per-node removal set and its preference level.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub labels: RemovalSet,
    pub cost: f64,
}

/// Search state: the removal-set table, parent pointers and visited nodes.
///
/// Unreached nodes hold the whole removable space with infinite cost.
#[derive(Clone, Debug)]
pub struct SearchTables {
    pub entries: Vec<Entry>,
    pub parent: Vec<Option<NodeId>>,
    pub visited: Vec<bool>,
}

impl SearchTables {
    pub fn new(graph: &RevisionGraph) -> Self {
        let unreached = Entry {
            labels: graph.full_set(),
            cost: f64::INFINITY,
        };
        SearchTables {
            entries: vec![unreached; graph.len()],
            parent: vec![None; graph.len()],
            visited: vec![false; graph.len()],
        }
    }

    /// Fresh tables with `root` seeded at the empty set and cost 0.
    pub fn rooted(graph: &RevisionGraph, root: NodeId) -> Self {
        let mut tables = Self::new(graph);
        tables.entries[root] = Entry {
            labels: graph.empty_set(),
            cost: 0.0,
        };
        tables
    }

    pub fn cost(&self, v: NodeId) -> f64 {
        self.entries[v].cost
    }

    pub fn is_reached(&self, v: NodeId) -> bool {
        self.entries[v].cost < f64::INFINITY
    }

    fn reset(&mut self, v: NodeId, graph: &RevisionGraph) {
        self.entries[v] = Entry {
            labels: graph.full_set(),
            cost: f64::INFINITY,
        };
    }

    /// Nodes from `start` to `end` following parent pointers. In lasso
    /// tables (`start == end`) the path leaves `start` and comes back.
    pub fn path(&self, start: NodeId, end: NodeId) -> Result<Vec<NodeId>, SearchError> {
        if !self.is_reached(end) {
            return Err(SearchError::Unreached(end));
        }
        if start == end && self.parent[end].is_none() {
            return Ok(vec![end]);
        }
        let mut path = vec![end];
        let mut v = end;
        loop {
            v = self.parent[v].ok_or(SearchError::Unreached(end))?;
            path.push(v);
            if v == start {
                break;
            }
            if path.len() > self.parent.len() + 1 {
                return Err(SearchError::Unreached(end));
            }
        }
        path.reverse();
        Ok(path)
    }
}

/// Relaxes `edge`: if the union of the tail's removal set with the edge label
/// is strictly cheaper than the head's current level, the head takes it and
/// its parent becomes the tail. Returns whether the head changed.
pub fn relax(graph: &RevisionGraph, tables: &mut SearchTables, edge: EdgeId, objective: Objective) -> bool {
    let e = graph.edge(edge);
    let candidate = tables.entries[e.from].labels.union(&e.label);
    let cost = objective.pref(&candidate, graph.theta());
    if cost < tables.entries[e.to].cost {
        tables.entries[e.to] = Entry {
            labels: candidate,
            cost,
        };
        tables.parent[e.to] = Some(e.from);
        true
    } else {
        false
    }
}

#[derive(PartialEq)]
struct Key(f64, NodeId);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Label-setting search rooted at `root`, starting from the entries already
/// in `tables` (parents and visited marks are reset).
///
/// With `lasso` set, after the root's out-edges have been relaxed the root
/// entry is replaced by its self-loop extension, or by the unreached entry
/// if there is no self-loop, so that any path back to the root competes on
/// equal terms. Nodes are extracted by (cost, canonical index).
pub fn find_min_path(
    graph: &RevisionGraph,
    root: NodeId,
    tables: &mut SearchTables,
    lasso: bool,
    objective: Objective,
) {
    tables.parent.fill(None);
    tables.visited.fill(false);
    tables.visited[root] = true;

    let mut heap = BinaryHeap::new();
    for &e in graph.out_edges(root) {
        let to = graph.edge(e).to;
        if to != root && relax(graph, tables, e, objective) {
            heap.push(Reverse(Key(tables.cost(to), to)));
        }
    }

    if lasso {
        match graph.edge_between(root, root) {
            Some(self_loop) => {
                let label = &graph.edge(self_loop).label;
                let entry = &mut tables.entries[root];
                entry.labels.union_with(label);
                entry.cost = objective.pref(&entry.labels.union(label), graph.theta());
                tables.parent[root] = Some(root);
            }
            None => tables.reset(root, graph),
        }
    }

    while let Some(Reverse(Key(cost, u))) = heap.pop() {
        if tables.visited[u] || cost != tables.cost(u) {
            continue;
        }
        tables.visited[u] = true;
        for &e in graph.out_edges(u) {
            let to = graph.edge(e).to;
            if relax(graph, tables, e, objective) && !tables.visited[to] {
                heap.push(Reverse(Key(tables.cost(to), to)));
            }
        }
    }
}

/// The removal set that enables the recorded path from `start` to `end`.
pub fn get_ap_from_path(
    graph: &RevisionGraph,
    start: NodeId,
    end: NodeId,
    tables: &SearchTables,
) -> Result<RemovalSet, SearchError> {
    if !tables.is_reached(end) {
        return Err(SearchError::Unreached(end));
    }
    let labels = tables.entries[end].labels.clone();
    if cfg!(debug_assertions) {
        let path = tables.path(start, end)?;
        let mut along = graph.empty_set();
        for w in path.windows(2) {
            let e = graph.edge_between(w[0], w[1]).expect("parent edge exists");
            along.union_with(&graph.edge(e).label);
        }
        if start == end {
            // lasso tables are seeded with the prefix set
            debug_assert!(along.is_subset(&labels));
        } else {
            debug_assert_eq!(along, labels);
        }
    }
    Ok(labels)
}

#[derive(Clone, Debug, PartialEq)]
pub enum RevisionOutcome {
    /// The specification is satisfiable as given.
    AlreadySatisfiable { run: AcceptingRun },
    /// Removing `removals` makes the specification satisfiable.
    Revised {
        removals: RemovalSet,
        cost: f64,
        run: AcceptingRun,
    },
    /// No accepting run exists even with every symbol removed.
    NoRevisionExists,
}

impl RevisionOutcome {
    pub fn removals(&self, graph: &RevisionGraph) -> Option<RemovalSet> {
        match self {
            RevisionOutcome::AlreadySatisfiable { .. } => Some(graph.empty_set()),
            RevisionOutcome::Revised { removals, .. } => Some(removals.clone()),
            RevisionOutcome::NoRevisionExists => None,
        }
    }

    pub fn revision(&self, graph: &RevisionGraph) -> Option<Revision> {
        self.removals(graph).map(|set| graph.to_revision(&set))
    }

    pub fn run(&self) -> Option<&AcceptingRun> {
        match self {
            RevisionOutcome::AlreadySatisfiable { run } | RevisionOutcome::Revised { run, .. } => Some(run),
            RevisionOutcome::NoRevisionExists => None,
        }
    }
}

/// Computes a revision under `objective`: prefix search from the source,
/// then a lasso search from each reached accepting node. Candidates are
/// compared with `<=`, so among equally good sinks the last one in
/// canonical order wins.
pub fn arpp(graph: &RevisionGraph, objective: Objective) -> RevisionOutcome {
    let source = graph.source();
    let mut prefix = SearchTables::rooted(graph, source);
    find_min_path(graph, source, &mut prefix, false, objective);

    let mut best: Option<(RemovalSet, NodeId, SearchTables)> = None;
    let mut best_cost = objective.pref(&graph.full_set(), graph.theta());

    for &sink in graph.sinks() {
        if !prefix.visited[sink] || !prefix.is_reached(sink) {
            continue;
        }
        let prefix_set = get_ap_from_path(graph, source, sink, &prefix).expect("sink was reached");
        let mut lasso = SearchTables::new(graph);
        lasso.entries[sink] = prefix.entries[sink].clone();
        find_min_path(graph, sink, &mut lasso, true, objective);
        let Ok(lasso_set) = get_ap_from_path(graph, sink, sink, &lasso) else {
            continue;
        };
        let candidate = prefix_set.union(&lasso_set);
        let cost = objective.pref(&candidate, graph.theta());
        if cost <= best_cost {
            best_cost = cost;
            best = Some((candidate, sink, lasso));
        }
    }

    let Some((removals, sink, lasso)) = best else {
        return RevisionOutcome::NoRevisionExists;
    };
    let mut prefix_path = prefix.path(source, sink).expect("sink was reached");
    if matches!(graph.node(source), Node::Root) {
        prefix_path.remove(0);
    }
    let run = AcceptingRun {
        prefix: prefix_path,
        lasso: lasso.path(sink, sink).expect("lasso was closed"),
    };
    if removals.is_empty() {
        RevisionOutcome::AlreadySatisfiable { run }
    } else {
        RevisionOutcome::Revised {
            removals,
            cost: best_cost,
            run,
        }
    }
}
