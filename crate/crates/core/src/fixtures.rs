//! Small hand-built instances used by tests, docs and the CLI fixtures.

use crate::automata::{SpecAutomaton, Symbol, SystemFsm};

fn pairs(edges: &[(&str, &str)]) -> std::collections::BTreeSet<(String, String)> {
    edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

/// Three-state system `t0 -> t1 -> t2` with self-loops, where each state
/// satisfies exactly one of `a`, `b`, `c`, and a four-state automaton for
/// "infinitely often a, and then b" with accepting states `s0` and `s3`.
/// Preference levels: a = 3, b = 5, c = 4. The specification is not
/// satisfiable on the system.
pub fn example1() -> (SystemFsm, SpecAutomaton) {
    let fsm = SystemFsm {
        states: ["t0", "t1", "t2"].iter().map(|s| s.to_string()).collect(),
        initial: ["t0".to_owned()].into(),
        edges: pairs(&[("t0", "t0"), ("t0", "t1"), ("t1", "t1"), ("t1", "t2"), ("t2", "t2")]),
        labels: [("t0", "a"), ("t1", "b"), ("t2", "c")]
            .iter()
            .map(|(q, p)| (q.to_string(), [Symbol::from(*p)].into()))
            .collect(),
    };

    let transitions: &[(&str, &str, &[&str])] = &[
        ("s0", "s0", &["a", "b"]),
        ("s0", "s1", &["a"]),
        ("s0", "s2", &[]),
        ("s1", "s0", &["a", "b"]),
        ("s1", "s1", &[]),
        ("s1", "s2", &["b"]),
        ("s2", "s0", &["a", "b"]),
        ("s2", "s2", &[]),
        ("s2", "s3", &["a"]),
        ("s3", "s0", &["a", "b"]),
        ("s3", "s1", &[]),
        ("s3", "s2", &["b"]),
    ];
    let mut spec = SpecAutomaton {
        states: ["s0", "s1", "s2", "s3"].iter().map(|s| s.to_string()).collect(),
        initial: "s0".into(),
        transitions: transitions
            .iter()
            .map(|(s, t, label)| {
                (
                    (s.to_string(), t.to_string()),
                    label.iter().map(|&p| Symbol::from(p)).collect(),
                )
            })
            .collect(),
        accepting: ["s0".to_owned(), "s3".to_owned()].into(),
        preferences: Default::default(),
    };
    for (p, theta) in [("a", 3.0), ("b", 5.0), ("c", 4.0)] {
        spec.set_default_preference(&Symbol::from(p), theta);
    }
    (fsm, spec)
}

/// Example 1 with every system state also satisfying `a` and `b`, which
/// makes the specification satisfiable as given.
pub fn satisfiable() -> (SystemFsm, SpecAutomaton) {
    let (mut fsm, spec) = example1();
    for label in fsm.labels.values_mut() {
        label.insert("a".into());
        label.insert("b".into());
    }
    (fsm, spec)
}
