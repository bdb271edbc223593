use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use specrev_core::benchgen::{generate_instance, BenchConfig, InstanceFilter};
use specrev_core::instance::{Instance, InstanceFile};
use specrev_core::oracle::{feasible_at_threshold, oracle_min_max, oracle_min_sum, OracleBudget, OracleOutcome};
use specrev_core::product::{check_emptiness, RevisionGraph};
use specrev_core::search::{find_min_path, SearchTables};
use specrev_core::{
    apply_revision, arpp, build_graph, is_relaxation, verify_revision, Objective, Removal, Revision, RevisionOutcome,
    SpecAutomaton, SystemFsm, COST_TOLERANCE,
};

/// Random instance (any satisfiability) with optionally several initial
/// system states, which exercises the virtual source.
fn instance() -> impl Strategy<Value = (SystemFsm, SpecAutomaton)> {
    (
        prop::sample::select(vec![1usize, 4, 9, 16]),
        any::<u64>(),
        0usize..64,
        any::<u8>(),
    )
        .prop_map(|(product_nodes, seed, trial, extra_initial)| {
            let cfg = BenchConfig {
                seed,
                product_nodes,
                filter: InstanceFilter::Any,
                ..Default::default()
            };
            let (mut system, spec) = generate_instance(&cfg, trial).expect("generation succeeds");
            for (i, q) in system.states.clone().into_iter().enumerate() {
                if extra_initial & (1 << (i % 8)) != 0 && i % 3 == 1 {
                    system.initial.insert(q);
                }
            }
            (system, spec)
        })
}

/// Instance plus two nested revisions R1 ⊆ R2 drawn from its occurrences.
fn instance_with_revisions() -> impl Strategy<Value = (SystemFsm, SpecAutomaton, Revision, Revision)> {
    (instance(), any::<u64>(), any::<u64>()).prop_map(|((system, spec), m1, m2)| {
        let occ: Vec<Removal> = spec.occurrences().into_iter().collect();
        let pick = |mask: u64| -> Revision {
            occ.iter()
                .enumerate()
                .filter(|(i, _)| mask.rotate_left(*i as u32) & 1 == 1)
                .map(|(_, r)| r.clone())
                .collect()
        };
        let r1 = pick(m1);
        let r2 = r1.union(&pick(m2));
        (system, spec, r1, r2)
    })
}

fn reachable(graph: &RevisionGraph, from: usize, enabled_only: bool) -> Vec<bool> {
    let mut seen = vec![false; graph.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        for &e in graph.out_edges(u) {
            let edge = graph.edge(e);
            if (!enabled_only || edge.is_enabled()) && !seen[edge.to] {
                seen[edge.to] = true;
                queue.push_back(edge.to);
            }
        }
    }
    seen
}

/// Accepting run exists iff some sink is reachable from the source and lies
/// on a cycle (reachable from one of its successors).
fn has_accepting_run(graph: &RevisionGraph, enabled_only: bool) -> bool {
    let from_source = reachable(graph, graph.source(), enabled_only);
    graph.sinks().iter().any(|&f| {
        from_source[f]
            && graph.out_edges(f).iter().any(|&e| {
                let edge = graph.edge(e);
                (!enabled_only || edge.is_enabled()) && reachable(graph, edge.to, enabled_only)[f]
            })
    })
}

fn budget() -> OracleBudget {
    OracleBudget {
        max_subsets: 200_000,
        ..Default::default()
    }
}

fn small_config() -> ProptestConfig {
    ProptestConfig {
        cases: 128,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(small_config())]

    #[test]
    fn empty_revision_is_identity((_, spec) in instance()) {
        prop_assert_eq!(apply_revision(&spec, &Revision::new()).unwrap(), spec);
    }

    #[test]
    fn nested_revisions_are_relaxations((_, spec, r1, r2) in instance_with_revisions()) {
        let a = apply_revision(&spec, &r1).unwrap();
        let b = apply_revision(&spec, &r2).unwrap();
        prop_assert!(is_relaxation(&spec, &a));
        prop_assert!(is_relaxation(&a, &b));
    }

    #[test]
    fn removal_composes((_, spec, r1, r2) in instance_with_revisions()) {
        let stepwise = apply_revision(&apply_revision(&spec, &r1).unwrap(), &r2.difference(&r1)).unwrap();
        prop_assert_eq!(stepwise, apply_revision(&spec, &r1.union(&r2)).unwrap());
    }

    #[test]
    fn costs_are_monotone((_, spec, r1, r2) in instance_with_revisions()) {
        prop_assert!(r1.sum_cost(&spec) <= r2.sum_cost(&spec) + COST_TOLERANCE);
        prop_assert!(r1.max_cost(&spec) <= r2.max_cost(&spec));
        prop_assert!(r1.max_cost(&spec) <= r1.sum_cost(&spec) + COST_TOLERANCE);
    }

    #[test]
    fn graph_edges_match_definition((system, spec) in instance()) {
        let g = build_graph(&system, &spec);
        let mut seen = BTreeSet::new();
        for e in g.edges() {
            let (Some((q, s)), Some((q2, s2))) = (g.node_states(e.from), g.node_states(e.to)) else {
                // edges out of the virtual source are free and lead to initial nodes
                prop_assert!(e.is_enabled());
                prop_assert!(g.sources().contains(&e.to));
                continue;
            };
            prop_assert!(system.edges.contains(&(q.to_owned(), q2.to_owned())));
            let label = spec.label(s, s2).expect("spec transition");
            let h = system.label(q2).cloned().unwrap_or_default();
            let expected: BTreeSet<Removal> =
                label.difference(&h).map(|p| Removal::new(p.clone(), s, s2)).collect();
            prop_assert_eq!(&g.to_revision(&e.label).removals, &expected);
            prop_assert_eq!(e.is_enabled(), expected.is_empty());
            seen.insert((e.from, e.to));
        }
        // every synchronized step is present
        for (q, q2) in &system.edges {
            for (s, s2) in spec.transitions.keys() {
                let pair = (g.node_id(q, s).unwrap(), g.node_id(q2, s2).unwrap());
                prop_assert!(seen.contains(&pair));
            }
        }
    }

    #[test]
    fn emptiness_matches_cycle_search((system, spec) in instance()) {
        let g = build_graph(&system, &spec);
        prop_assert_eq!(check_emptiness(&g, true).is_some(), has_accepting_run(&g, true));
        prop_assert_eq!(check_emptiness(&g, false).is_some(), has_accepting_run(&g, false));
    }

    #[test]
    fn path_labels_form_a_revision((system, spec) in instance()) {
        let g = build_graph(&system, &spec);
        if let Some(run) = check_emptiness(&g, false) {
            let rev = g.to_revision(&run.removals(&g));
            prop_assert!(verify_revision(&system, &spec, &rev).unwrap().is_some());
        }
    }

    #[test]
    fn verification_is_monotone((system, spec, r1, r2) in instance_with_revisions()) {
        if verify_revision(&system, &spec, &r1).unwrap().is_some() {
            prop_assert!(verify_revision(&system, &spec, &r2).unwrap().is_some());
        }
    }

    #[test]
    fn arpp_outcomes_are_valid((system, spec) in instance()) {
        let g = build_graph(&system, &spec);
        for objective in [Objective::Sum, Objective::Max] {
            let outcome = arpp(&g, objective);
            match &outcome {
                RevisionOutcome::AlreadySatisfiable { .. } => prop_assert!(check_emptiness(&g, true).is_some()),
                RevisionOutcome::Revised { removals, cost, .. } => {
                    prop_assert!(check_emptiness(&g, true).is_none());
                    prop_assert!(!removals.is_empty());
                    let rev = g.to_revision(removals);
                    prop_assert!(verify_revision(&system, &spec, &rev).unwrap().is_some());
                    let recomputed = match objective {
                        Objective::Sum => rev.sum_cost(&spec),
                        Objective::Max => rev.max_cost(&spec),
                    };
                    prop_assert!((cost - recomputed).abs() <= COST_TOLERANCE);
                }
                RevisionOutcome::NoRevisionExists => prop_assert!(check_emptiness(&g, false).is_none()),
            }
            prop_assert_eq!(outcome, arpp(&g, objective));
        }
    }

    #[test]
    fn max_objective_is_exact((system, spec) in instance()) {
        let g = build_graph(&system, &spec);
        let ours = arpp(&g, Objective::Max).removals(&g).map(|s| g.max_theta(&s));
        match oracle_min_max(&g, budget()) {
            OracleOutcome::Optimal { cost, .. } => {
                let ours = ours.expect("oracle found a revision");
                prop_assert!((ours - cost).abs() <= COST_TOLERANCE, "arpp {} vs oracle {}", ours, cost);
            }
            OracleOutcome::Infeasible => prop_assert!(ours.is_none()),
            OracleOutcome::TimedOut => {}
        }
    }

    #[test]
    fn sum_objective_is_sound((system, spec) in instance()) {
        let g = build_graph(&system, &spec);
        let ours = arpp(&g, Objective::Sum).removals(&g).map(|s| g.sum_theta(&s));
        match oracle_min_sum(&g, budget()) {
            OracleOutcome::Optimal { cost, removals, .. } => {
                prop_assert!(ours.expect("oracle found a revision") >= cost - COST_TOLERANCE);
                let rev = g.to_revision(&removals);
                prop_assert!(verify_revision(&system, &spec, &rev).unwrap().is_some());
                let max = oracle_min_max(&g, budget()).cost().unwrap();
                prop_assert!(max <= cost + COST_TOLERANCE);
            }
            OracleOutcome::Infeasible => prop_assert!(ours.is_none()),
            OracleOutcome::TimedOut => {}
        }
    }

    #[test]
    fn prefix_search_reaches_exactly_the_reachable_nodes((system, spec) in instance()) {
        let g = build_graph(&system, &spec);
        for objective in [Objective::Sum, Objective::Max] {
            let mut tables = SearchTables::rooted(&g, g.source());
            find_min_path(&g, g.source(), &mut tables, false, objective);
            let reach = reachable(&g, g.source(), false);
            for (v, &reached) in reach.iter().enumerate() {
                prop_assert_eq!(tables.cost(v) < f64::INFINITY, reached, "node {}", g.node_name(v));
            }
        }
    }

    #[test]
    fn threshold_feasibility_is_monotone((system, spec) in instance()) {
        let g = build_graph(&system, &spec);
        let mut ts: Vec<f64> = g.edges().iter().map(|e| e.max_theta).collect();
        ts.push(0.0);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let feasible: Vec<bool> = ts.iter().map(|&t| feasible_at_threshold(&g, t).is_some()).collect();
        prop_assert!(feasible.windows(2).all(|w| !w[0] || w[1]));
    }

    #[test]
    fn instance_json_round_trips((system, spec) in instance()) {
        let inst = Instance { system, spec };
        let text = InstanceFile::from_instance(&inst, None).to_json();
        prop_assert_eq!(Instance::from_json(&text).unwrap(), inst);
    }
}
