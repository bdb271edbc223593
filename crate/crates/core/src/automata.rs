//! System abstractions, specification automata with preference levels, and
//! revisions (symbol removals) over specification transitions.
//!
//! All collections are ordered (`BTreeSet`/`BTreeMap`) so the lexicographic
//! order over state ids and symbols is the canonical order used for
//! tie-breaking everywhere downstream.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// State identifier, shared by systems and specifications.
pub type StateId = String;

/// An atomic proposition. Negative literals are just other symbols:
/// `"g1"` and `"!g1"` are unrelated.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(name: impl Into<String>) -> Self {
        Symbol(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol(s.to_owned())
    }
}

/// A symbol occurrence on one specification transition: the unit of removal.
///
/// Field order gives the canonical (symbol, from, to) ordering.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Removal {
    pub symbol: Symbol,
    pub from: StateId,
    pub to: StateId,
}

impl Removal {
    pub fn new(symbol: impl Into<Symbol>, from: impl Into<String>, to: impl Into<String>) -> Self {
        Removal {
            symbol: symbol.into(),
            from: from.into(),
            to: to.into(),
        }
    }
}

impl fmt::Display for Removal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@({},{})", self.symbol, self.from, self.to)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutomataError {
    #[error("initial state set is empty")]
    EmptyInitialSet,
    #[error("states not reachable from any initial state: {}", .0.join(", "))]
    UnreachableState(Vec<StateId>),
    #[error("edge ({0}, {1}) refers to an unknown state")]
    DanglingEdge(StateId, StateId),
    #[error("unknown state `{0}`")]
    UnknownState(StateId),
    #[error("symbol names must be nonempty")]
    EmptySymbol,
    #[error("no preference level for symbol `{}` on transition ({}, {})", .0.symbol, .0.from, .0.to)]
    MissingPreference(Removal),
    #[error("preference level {1} for {0} must be finite and nonnegative")]
    InvalidPreference(Removal, f64),
    #[error("preference given for nonexistent transition ({0}, {1})")]
    PreferenceOnMissingTransition(StateId, StateId),
    #[error("invalid removal {0}: symbol is not on that transition")]
    InvalidRemoval(Removal),
}

/// Finite-state abstraction of the system: states, initial states, a
/// transition relation and a labeling `h` of each state by the symbols true
/// there. States missing from `labels` carry the empty label.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SystemFsm {
    pub states: BTreeSet<StateId>,
    pub initial: BTreeSet<StateId>,
    pub edges: BTreeSet<(StateId, StateId)>,
    pub labels: BTreeMap<StateId, BTreeSet<Symbol>>,
}

impl SystemFsm {
    pub fn label(&self, state: &str) -> Option<&BTreeSet<Symbol>> {
        self.labels.get(state)
    }

    /// Checks structural consistency and that every state is reachable
    /// from some initial state.
    pub fn validate(&self) -> Result<(), AutomataError> {
        if self.initial.is_empty() {
            return Err(AutomataError::EmptyInitialSet);
        }
        if let Some(q) = self.initial.iter().find(|q| !self.states.contains(*q)) {
            return Err(AutomataError::UnknownState(q.clone()));
        }
        if let Some((a, b)) = self
            .edges
            .iter()
            .find(|(a, b)| !self.states.contains(a) || !self.states.contains(b))
        {
            return Err(AutomataError::DanglingEdge(a.clone(), b.clone()));
        }
        if let Some(q) = self.labels.keys().find(|q| !self.states.contains(*q)) {
            return Err(AutomataError::UnknownState(q.clone()));
        }
        if self.labels.values().flatten().any(|p| p.as_str().is_empty()) {
            return Err(AutomataError::EmptySymbol);
        }

        let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in &self.edges {
            succ.entry(a).or_default().push(b);
        }
        let mut seen: BTreeSet<&str> = self.initial.iter().map(String::as_str).collect();
        let mut queue: VecDeque<&str> = seen.iter().copied().collect();
        while let Some(q) = queue.pop_front() {
            for &next in succ.get(q).into_iter().flatten() {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        let unreachable: Vec<StateId> = self
            .states
            .iter()
            .filter(|q| !seen.contains(q.as_str()))
            .cloned()
            .collect();
        if unreachable.is_empty() {
            Ok(())
        } else {
            Err(AutomataError::UnreachableState(unreachable))
        }
    }
}

/// Validates a system abstraction.
pub fn validate_system(fsm: &SystemFsm) -> Result<(), AutomataError> {
    fsm.validate()
}

/// Büchi specification automaton whose transition labels carry preference
/// levels per symbol occurrence.
///
/// Transitions are keyed by their ordered state pair, so there is at most
/// one transition between any two states. An empty label is satisfied
/// everywhere.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SpecAutomaton {
    pub states: BTreeSet<StateId>,
    pub initial: StateId,
    pub transitions: BTreeMap<(StateId, StateId), BTreeSet<Symbol>>,
    pub accepting: BTreeSet<StateId>,
    pub preferences: BTreeMap<Removal, f64>,
}

impl SpecAutomaton {
    pub fn label(&self, from: &str, to: &str) -> Option<&BTreeSet<Symbol>> {
        self.transitions.get(&(from.to_owned(), to.to_owned()))
    }

    /// Preference level of a symbol occurrence. Panics if the occurrence
    /// has no preference; validated automata always have one.
    pub fn theta(&self, removal: &Removal) -> f64 {
        self.preferences[removal]
    }

    /// Assigns `value` to every occurrence of `symbol` that does not yet
    /// have a preference level.
    pub fn set_default_preference(&mut self, symbol: &Symbol, value: f64) {
        for ((from, to), label) in &self.transitions {
            if label.contains(symbol) {
                self.preferences
                    .entry(Removal::new(symbol.clone(), from.clone(), to.clone()))
                    .or_insert(value);
            }
        }
    }

    /// All symbol occurrences on the current labels, in canonical order.
    pub fn occurrences(&self) -> BTreeSet<Removal> {
        self.transitions
            .iter()
            .flat_map(|((from, to), label)| {
                label
                    .iter()
                    .map(move |p| Removal::new(p.clone(), from.clone(), to.clone()))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), AutomataError> {
        if !self.states.contains(&self.initial) {
            return Err(AutomataError::UnknownState(self.initial.clone()));
        }
        if let Some(s) = self.accepting.iter().find(|s| !self.states.contains(*s)) {
            return Err(AutomataError::UnknownState(s.clone()));
        }
        for ((from, to), label) in &self.transitions {
            if !self.states.contains(from) || !self.states.contains(to) {
                return Err(AutomataError::DanglingEdge(from.clone(), to.clone()));
            }
            if label.iter().any(|p| p.as_str().is_empty()) {
                return Err(AutomataError::EmptySymbol);
            }
        }
        for occurrence in self.occurrences() {
            if !self.preferences.contains_key(&occurrence) {
                return Err(AutomataError::MissingPreference(occurrence));
            }
        }
        for (removal, &value) in &self.preferences {
            if !self
                .transitions
                .contains_key(&(removal.from.clone(), removal.to.clone()))
            {
                return Err(AutomataError::PreferenceOnMissingTransition(
                    removal.from.clone(),
                    removal.to.clone(),
                ));
            }
            if !value.is_finite() || value < 0.0 {
                return Err(AutomataError::InvalidPreference(removal.clone(), value));
            }
        }
        Ok(())
    }
}

/// A set of symbol removals from specification transitions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Revision {
    pub removals: BTreeSet<Removal>,
}

impl Revision {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.removals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.removals.is_empty()
    }

    pub fn insert(&mut self, removal: Removal) -> bool {
        self.removals.insert(removal)
    }

    pub fn union(&self, other: &Revision) -> Revision {
        Revision {
            removals: self.removals.union(&other.removals).cloned().collect(),
        }
    }

    pub fn difference(&self, other: &Revision) -> Revision {
        Revision {
            removals: self.removals.difference(&other.removals).cloned().collect(),
        }
    }

    pub fn is_subset(&self, other: &Revision) -> bool {
        self.removals.is_subset(&other.removals)
    }

    /// Sum of preference levels of the removed occurrences.
    pub fn sum_cost(&self, spec: &SpecAutomaton) -> f64 {
        self.removals.iter().map(|r| spec.theta(r)).fold(0.0, |acc, t| acc + t)
    }

    /// Largest preference level among the removed occurrences, 0 if empty.
    pub fn max_cost(&self, spec: &SpecAutomaton) -> f64 {
        self.removals
            .iter()
            .map(|r| spec.theta(r))
            .fold(0.0, f64::max)
    }

    /// Every removal must name a symbol currently on an existing transition.
    pub fn validate_against(&self, spec: &SpecAutomaton) -> Result<(), AutomataError> {
        match self.removals.iter().find(|r| {
            !spec
                .label(&r.from, &r.to)
                .is_some_and(|label| label.contains(&r.symbol))
        }) {
            Some(r) => Err(AutomataError::InvalidRemoval(r.clone())),
            None => Ok(()),
        }
    }
}

impl FromIterator<Removal> for Revision {
    fn from_iter<I: IntoIterator<Item = Removal>>(iter: I) -> Self {
        Revision {
            removals: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Revision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, r) in self.removals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("}")
    }
}

/// Removes the revision's symbols from their transitions. Transitions whose
/// label becomes empty are kept with the empty label.
pub fn apply_revision(spec: &SpecAutomaton, rev: &Revision) -> Result<SpecAutomaton, AutomataError> {
    rev.validate_against(spec)?;
    let mut out = spec.clone();
    for r in &rev.removals {
        if let Some(label) = out.transitions.get_mut(&(r.from.clone(), r.to.clone())) {
            label.remove(&r.symbol);
        }
    }
    Ok(out)
}

/// True iff `relaxed` has the same states, initial state, accepting set and
/// preferences as `base`, the same transition pairs, and every label of
/// `relaxed` is a subset of the corresponding label of `base`.
pub fn is_relaxation(base: &SpecAutomaton, relaxed: &SpecAutomaton) -> bool {
    base.states == relaxed.states
        && base.initial == relaxed.initial
        && base.accepting == relaxed.accepting
        && base.preferences == relaxed.preferences
        && base.transitions.len() == relaxed.transitions.len()
        && base.transitions.iter().all(|(pair, label)| {
            relaxed
                .transitions
                .get(pair)
                .is_some_and(|relaxed_label| relaxed_label.is_subset(label))
        })
}
