//! The revision graph: the product of a system and a specification in which
//! every transition pair is kept, and transitions blocked by the
//! specification label carry the symbol occurrences whose removal would
//! enable them.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::automata::{apply_revision, AutomataError, Removal, Revision, SpecAutomaton, StateId, SystemFsm};
use crate::bitset::RemovalSet;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    /// Pair of (system state index, spec state index).
    Product { system: usize, spec: usize },
    /// Virtual super-source linking to every initial product state. Only
    /// present when the system has more than one initial state.
    Root,
}

#[derive(Clone, Debug)]
pub struct GraphEdge {
    pub from: NodeId,
    pub to: NodeId,
    /// Occurrences that must be removed to enable this edge; empty iff the
    /// edge is enabled in the product.
    pub label: RemovalSet,
    /// Spec transition (from, to) as state indices; `None` for root edges.
    pub spec_edge: Option<(usize, usize)>,
    /// Largest preference level in `label`, 0 if empty.
    pub max_theta: f64,
}

impl GraphEdge {
    pub fn is_enabled(&self) -> bool {
        self.label.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct RevisionGraph {
    system_states: Vec<StateId>,
    spec_states: Vec<StateId>,
    removables: Vec<Removal>,
    theta: Vec<f64>,
    nodes: Vec<Node>,
    edges: Vec<GraphEdge>,
    out: Vec<Vec<EdgeId>>,
    source: NodeId,
    sources: Vec<NodeId>,
    sinks: Vec<NodeId>,
    is_sink: Vec<bool>,
    edge_index: BTreeMap<(NodeId, NodeId), EdgeId>,
}

/// Builds the revision graph of `fsm` × `spec`. Both inputs are expected to
/// be validated.
pub fn build_graph(fsm: &SystemFsm, spec: &SpecAutomaton) -> RevisionGraph {
    let system_states: Vec<StateId> = fsm.states.iter().cloned().collect();
    let spec_states: Vec<StateId> = spec.states.iter().cloned().collect();
    let sys_idx: BTreeMap<&str, usize> = system_states
        .iter()
        .enumerate()
        .map(|(i, q)| (q.as_str(), i))
        .collect();
    let spec_idx: BTreeMap<&str, usize> = spec_states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let removables: Vec<Removal> = spec.occurrences().into_iter().collect();
    let removable_idx: BTreeMap<&Removal, usize> =
        removables.iter().enumerate().map(|(i, r)| (r, i)).collect();
    let theta: Vec<f64> = removables.iter().map(|r| spec.theta(r)).collect();
    let cap = removables.len();

    let n_spec = spec_states.len();
    let product_count = system_states.len() * n_spec;
    let mut nodes: Vec<Node> = (0..product_count)
        .map(|i| Node::Product {
            system: i / n_spec,
            spec: i % n_spec,
        })
        .collect();
    let node_of = |q: usize, s: usize| q * n_spec + s;

    let mut edges = Vec::new();
    let empty_label = std::collections::BTreeSet::new();
    for (q, q2) in &fsm.edges {
        let (qi, qj) = (sys_idx[q.as_str()], sys_idx[q2.as_str()]);
        let h = fsm.label(q2).unwrap_or(&empty_label);
        for ((s, s2), label) in &spec.transitions {
            let (si, sj) = (spec_idx[s.as_str()], spec_idx[s2.as_str()]);
            let mut blocked = RemovalSet::empty(cap);
            let mut max_theta: f64 = 0.0;
            for p in label.difference(h) {
                let i = removable_idx[&Removal::new(p.clone(), s.clone(), s2.clone())];
                blocked.insert(i);
                max_theta = max_theta.max(theta[i]);
            }
            edges.push(GraphEdge {
                from: node_of(qi, si),
                to: node_of(qj, sj),
                label: blocked,
                spec_edge: Some((si, sj)),
                max_theta,
            });
        }
    }

    let s0 = spec_idx[spec.initial.as_str()];
    let sources: Vec<NodeId> = fsm
        .initial
        .iter()
        .map(|q| node_of(sys_idx[q.as_str()], s0))
        .collect();
    let source = if sources.len() == 1 {
        sources[0]
    } else {
        let root = nodes.len();
        nodes.push(Node::Root);
        for &v in &sources {
            edges.push(GraphEdge {
                from: root,
                to: v,
                label: RemovalSet::empty(cap),
                spec_edge: None,
                max_theta: 0.0,
            });
        }
        root
    };

    let mut is_sink = vec![false; nodes.len()];
    for s in &spec.accepting {
        let si = spec_idx[s.as_str()];
        for qi in 0..system_states.len() {
            is_sink[node_of(qi, si)] = true;
        }
    }
    let sinks = (0..nodes.len()).filter(|&v| is_sink[v]).collect();

    edges.sort_by_key(|e| (e.from, e.to));
    let mut out = vec![Vec::new(); nodes.len()];
    let mut edge_index = BTreeMap::new();
    for (id, e) in edges.iter().enumerate() {
        out[e.from].push(id);
        edge_index.insert((e.from, e.to), id);
    }

    RevisionGraph {
        system_states,
        spec_states,
        removables,
        theta,
        nodes,
        edges,
        out,
        source,
        sources,
        sinks,
        is_sink,
        edge_index,
    }
}

impl RevisionGraph {
    /// Number of nodes, including the virtual root when present.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of product nodes, |Q|·|S_B|.
    pub fn product_node_count(&self) -> usize {
        self.system_states.len() * self.spec_states.len()
    }

    pub fn node(&self, v: NodeId) -> Node {
        self.nodes[v]
    }

    pub fn node_id(&self, system: &str, spec: &str) -> Option<NodeId> {
        let q = self.system_states.binary_search_by(|x| x.as_str().cmp(system)).ok()?;
        let s = self.spec_states.binary_search_by(|x| x.as_str().cmp(spec)).ok()?;
        Some(q * self.spec_states.len() + s)
    }

    /// (system state, spec state) of a product node.
    pub fn node_states(&self, v: NodeId) -> Option<(&str, &str)> {
        match self.nodes[v] {
            Node::Product { system, spec } => {
                Some((&self.system_states[system], &self.spec_states[spec]))
            }
            Node::Root => None,
        }
    }

    pub fn node_name(&self, v: NodeId) -> String {
        match self.node_states(v) {
            Some((q, s)) => format!("({q},{s})"),
            None => "root".to_owned(),
        }
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &GraphEdge {
        &self.edges[e]
    }

    /// Outgoing edges of `v`, sorted by target node.
    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.out[v]
    }

    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<EdgeId> {
        self.edge_index.get(&(u, v)).copied()
    }

    /// Search root: the unique initial product node, or the virtual root.
    pub fn source(&self) -> NodeId {
        self.source
    }

    /// Initial product nodes.
    pub fn sources(&self) -> &[NodeId] {
        &self.sources
    }

    pub fn sinks(&self) -> &[NodeId] {
        &self.sinks
    }

    pub fn is_sink(&self, v: NodeId) -> bool {
        self.is_sink[v]
    }

    /// The removable-symbol space, in canonical order. Bit `i` of every
    /// [`RemovalSet`] refers to `removables()[i]`.
    pub fn removables(&self) -> &[Removal] {
        &self.removables
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn empty_set(&self) -> RemovalSet {
        RemovalSet::empty(self.removables.len())
    }

    pub fn full_set(&self) -> RemovalSet {
        RemovalSet::full(self.removables.len())
    }

    pub fn to_revision(&self, set: &RemovalSet) -> Revision {
        set.iter().map(|i| self.removables[i].clone()).collect()
    }

    /// Converts a revision to a removal set; `None` if some removal is not in
    /// the removable space of this graph.
    pub fn to_set(&self, rev: &Revision) -> Option<RemovalSet> {
        let mut set = self.empty_set();
        for r in &rev.removals {
            set.insert(self.removables.binary_search(r).ok()?);
        }
        Some(set)
    }

    pub fn sum_theta(&self, set: &RemovalSet) -> f64 {
        set.iter().map(|i| self.theta[i]).fold(0.0, |acc, t| acc + t)
    }

    pub fn max_theta(&self, set: &RemovalSet) -> f64 {
        set.iter().map(|i| self.theta[i]).fold(0.0, f64::max)
    }

    /// DOT rendering: enabled edges solid, disabled edges dotted and labeled
    /// with the sorted symbols to remove, accepting nodes double circles.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph revision {\n  rankdir=LR;\n");
        for v in 0..self.nodes.len() {
            let shape = if self.is_sink[v] {
                "doublecircle"
            } else if matches!(self.nodes[v], Node::Root) {
                "point"
            } else {
                "circle"
            };
            let _ = writeln!(out, "  n{v} [label=\"{}\", shape={shape}];", self.node_name(v));
        }
        for &s in &self.sources {
            let _ = writeln!(out, "  start{s} [shape=none, label=\"\"];\n  start{s} -> n{s};");
        }
        for e in &self.edges {
            if e.is_enabled() {
                let _ = writeln!(out, "  n{} -> n{};", e.from, e.to);
            } else {
                let mut symbols: Vec<&str> = e
                    .label
                    .iter()
                    .map(|i| self.removables[i].symbol.as_str())
                    .collect();
                symbols.sort_unstable();
                let _ = writeln!(
                    out,
                    "  n{} -> n{} [style=dotted, label=\"{{{}}}\"];",
                    e.from,
                    e.to,
                    symbols.join(",")
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

/// An accepting run as a prefix (source to accepting node) followed by a
/// lasso (accepting node back to itself). Both include their endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcceptingRun {
    pub prefix: Vec<NodeId>,
    pub lasso: Vec<NodeId>,
}

/// An accepting run spelled out as (system state, spec state) pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub prefix: Vec<(StateId, StateId)>,
    pub lasso: Vec<(StateId, StateId)>,
}

impl AcceptingRun {
    /// Edges traversed by the prefix and then the lasso.
    pub fn edges(&self, graph: &RevisionGraph) -> Vec<EdgeId> {
        self.prefix
            .windows(2)
            .chain(self.lasso.windows(2))
            .map(|w| {
                graph
                    .edge_between(w[0], w[1])
                    .expect("run follows graph edges")
            })
            .collect()
    }

    /// Union of edge labels along the run.
    pub fn removals(&self, graph: &RevisionGraph) -> RemovalSet {
        let mut set = graph.empty_set();
        for e in self.edges(graph) {
            set.union_with(&graph.edge(e).label);
        }
        set
    }

    pub fn witness(&self, graph: &RevisionGraph) -> Witness {
        let states = |path: &[NodeId]| {
            path.iter()
                .filter_map(|&v| graph.node_states(v))
                .map(|(q, s)| (q.to_owned(), s.to_owned()))
                .collect()
        };
        Witness {
            prefix: states(&self.prefix),
            lasso: states(&self.lasso),
        }
    }
}

impl Witness {
    pub fn render(&self) -> (String, String) {
        let fmt = |path: &[(StateId, StateId)]| {
            path.iter()
                .map(|(q, s)| format!("({q},{s})"))
                .collect::<Vec<_>>()
                .join(" -> ")
        };
        (fmt(&self.prefix), fmt(&self.lasso))
    }
}

/// Finds an accepting run over the edges selected by `permitted`: forward
/// reachability from the source for the prefix, then a breadth-first search
/// from each reachable sink (in canonical order) back to itself.
pub fn check_emptiness_with(
    graph: &RevisionGraph,
    permitted: impl Fn(&GraphEdge) -> bool,
) -> Option<AcceptingRun> {
    let n = graph.len();
    let source = graph.source();
    let mut parent = vec![usize::MAX; n];
    parent[source] = source;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &e in graph.out_edges(u) {
            let edge = graph.edge(e);
            if parent[edge.to] == usize::MAX && permitted(edge) {
                parent[edge.to] = u;
                queue.push_back(edge.to);
            }
        }
    }

    let mut back = vec![usize::MAX; n];
    for &sink in graph.sinks() {
        if parent[sink] == usize::MAX {
            continue;
        }
        if let Some(lasso) = find_cycle(graph, sink, &permitted, &mut back) {
            let mut prefix = vec![sink];
            let mut v = sink;
            while v != source {
                v = parent[v];
                prefix.push(v);
            }
            prefix.reverse();
            if matches!(graph.node(source), Node::Root) {
                prefix.remove(0);
            }
            return Some(AcceptingRun { prefix, lasso });
        }
    }
    None
}

fn find_cycle(
    graph: &RevisionGraph,
    sink: NodeId,
    permitted: &impl Fn(&GraphEdge) -> bool,
    back: &mut [usize],
) -> Option<Vec<NodeId>> {
    back.fill(usize::MAX);
    let mut queue = VecDeque::from([sink]);
    while let Some(u) = queue.pop_front() {
        for &e in graph.out_edges(u) {
            let edge = graph.edge(e);
            if !permitted(edge) {
                continue;
            }
            if edge.to == sink {
                let mut lasso = vec![u];
                let mut v = u;
                while v != sink {
                    v = back[v];
                    lasso.push(v);
                }
                lasso.reverse();
                lasso.push(sink);
                return Some(lasso);
            }
            if back[edge.to] == usize::MAX {
                back[edge.to] = u;
                queue.push_back(edge.to);
            }
        }
    }
    None
}

/// Decides Büchi nonemptiness over enabled edges only (`enabled_only`) or
/// over every edge of the graph.
pub fn check_emptiness(graph: &RevisionGraph, enabled_only: bool) -> Option<AcceptingRun> {
    if enabled_only {
        check_emptiness_with(graph, GraphEdge::is_enabled)
    } else {
        check_emptiness_with(graph, |_| true)
    }
}

/// Builds the product of `fsm` with the revised specification and returns an
/// accepting run if the revised specification is satisfiable.
pub fn verify_revision(
    fsm: &SystemFsm,
    spec: &SpecAutomaton,
    rev: &Revision,
) -> Result<Option<Witness>, AutomataError> {
    fsm.validate()?;
    spec.validate()?;
    let revised = apply_revision(spec, rev)?;
    let graph = build_graph(fsm, &revised);
    Ok(check_emptiness(&graph, true).map(|run| run.witness(&graph)))
}
