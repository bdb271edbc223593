//! JSON instance and revision files.
//!
//! ```json
//! {
//!   "system": {
//!     "states": ["t0", "t1"],
//!     "initial": ["t0"],
//!     "edges": [["t0", "t1"], ["t1", "t1"]],
//!     "labels": {"t0": ["a"], "t1": ["b"]}
//!   },
//!   "spec": {
//!     "states": ["s0"],
//!     "initial": "s0",
//!     "accepting": ["s0"],
//!     "transitions": [{"from": "s0", "to": "s0", "label": ["a"]}],
//!     "preferences": {
//!       "per_symbol": {"a": 3},
//!       "per_occurrence": [{"symbol": "a", "from": "s0", "to": "s0", "value": 2.5}]
//!     }
//!   },
//!   "meta": {}
//! }
//! ```
//!
//! Per-occurrence preferences override per-symbol defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{AutomataError, Removal, Revision, SpecAutomaton, StateId, Symbol, SystemFsm};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("system: {0}")]
    System(AutomataError),
    #[error("spec: {0}")]
    Spec(AutomataError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub states: Vec<StateId>,
    pub initial: Vec<StateId>,
    #[serde(default)]
    pub edges: Vec<(StateId, StateId)>,
    #[serde(default)]
    pub labels: BTreeMap<StateId, Vec<Symbol>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionFile {
    pub from: StateId,
    pub to: StateId,
    #[serde(default)]
    pub label: Vec<Symbol>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccurrencePreference {
    pub symbol: Symbol,
    pub from: StateId,
    pub to: StateId,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferencesFile {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_symbol: BTreeMap<Symbol, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_occurrence: Vec<OccurrencePreference>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub states: Vec<StateId>,
    pub initial: StateId,
    pub accepting: Vec<StateId>,
    pub transitions: Vec<TransitionFile>,
    #[serde(default)]
    pub preferences: PreferencesFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub system: SystemFile,
    pub spec: SpecFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

/// A validated system/specification pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub system: SystemFsm,
    pub spec: SpecAutomaton,
}

fn field(field: impl Into<String>, message: impl Into<String>) -> InstanceError {
    InstanceError::Field {
        field: field.into(),
        message: message.into(),
    }
}

fn unique(items: &[StateId], name: &str) -> Result<BTreeSet<StateId>, InstanceError> {
    let mut set = BTreeSet::new();
    for (i, s) in items.iter().enumerate() {
        if s.is_empty() {
            return Err(field(format!("{name}[{i}]"), "state ids must be nonempty"));
        }
        if !set.insert(s.clone()) {
            return Err(field(format!("{name}[{i}]"), format!("duplicate state `{s}`")));
        }
    }
    Ok(set)
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            InstanceError::Parse {
                path,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })
    }

    pub fn read(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// Converts to automata and validates both.
    pub fn into_instance(self) -> Result<Instance, InstanceError> {
        let sys = &self.system;
        let states = unique(&sys.states, "system.states")?;
        let system = SystemFsm {
            initial: sys.initial.iter().cloned().collect(),
            edges: sys.edges.iter().cloned().collect(),
            labels: sys
                .labels
                .iter()
                .map(|(q, ps)| (q.clone(), ps.iter().cloned().collect()))
                .collect(),
            states,
        };
        system.validate().map_err(InstanceError::System)?;

        let sp = &self.spec;
        let mut transitions = BTreeMap::new();
        for (i, t) in sp.transitions.iter().enumerate() {
            let label: BTreeSet<Symbol> = t.label.iter().cloned().collect();
            if transitions.insert((t.from.clone(), t.to.clone()), label).is_some() {
                return Err(field(
                    format!("spec.transitions[{i}]"),
                    format!("second transition from `{}` to `{}`", t.from, t.to),
                ));
            }
        }
        let mut spec = SpecAutomaton {
            states: unique(&sp.states, "spec.states")?,
            initial: sp.initial.clone(),
            transitions,
            accepting: sp.accepting.iter().cloned().collect(),
            preferences: BTreeMap::new(),
        };
        for (i, p) in sp.preferences.per_occurrence.iter().enumerate() {
            let key = (p.from.clone(), p.to.clone());
            if !spec.transitions.contains_key(&key) {
                return Err(field(
                    format!("spec.preferences.per_occurrence[{i}]"),
                    format!("no transition from `{}` to `{}`", p.from, p.to),
                ));
            }
            spec.preferences
                .insert(Removal::new(p.symbol.clone(), p.from.clone(), p.to.clone()), p.value);
        }
        for (symbol, &value) in &sp.preferences.per_symbol {
            spec.set_default_preference(symbol, value);
        }
        spec.validate().map_err(InstanceError::Spec)?;
        Ok(Instance { system, spec })
    }

    /// File representation of an instance. Preferences are written per
    /// occurrence.
    pub fn from_instance(instance: &Instance, meta: Option<serde_json::Value>) -> Self {
        let system = &instance.system;
        let spec = &instance.spec;
        InstanceFile {
            system: SystemFile {
                states: system.states.iter().cloned().collect(),
                initial: system.initial.iter().cloned().collect(),
                edges: system.edges.iter().cloned().collect(),
                labels: system
                    .labels
                    .iter()
                    .map(|(q, ps)| (q.clone(), ps.iter().cloned().collect()))
                    .collect(),
            },
            spec: SpecFile {
                states: spec.states.iter().cloned().collect(),
                initial: spec.initial.clone(),
                accepting: spec.accepting.iter().cloned().collect(),
                transitions: spec
                    .transitions
                    .iter()
                    .map(|((from, to), label)| TransitionFile {
                        from: from.clone(),
                        to: to.clone(),
                        label: label.iter().cloned().collect(),
                    })
                    .collect(),
                preferences: PreferencesFile {
                    per_symbol: BTreeMap::new(),
                    per_occurrence: spec
                        .preferences
                        .iter()
                        .map(|(r, &value)| OccurrencePreference {
                            symbol: r.symbol.clone(),
                            from: r.from.clone(),
                            to: r.to.clone(),
                            value,
                        })
                        .collect(),
                },
            },
            meta,
        }
    }
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        InstanceFile::from_json(text)?.into_instance()
    }

    pub fn read(path: &Path) -> Result<Self, InstanceError> {
        InstanceFile::read(path)?.into_instance()
    }
}

/// Revision file: `{"removals": [{"symbol": .., "from": .., "to": ..}]}`.
/// Other top-level fields are ignored, so the JSON output of a revise run
/// can be fed back as a revision file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevisionFile {
    pub removals: Vec<Removal>,
}

impl RevisionFile {
    pub fn from_json(text: &str) -> Result<Revision, InstanceError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: RevisionFile = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            InstanceError::Parse {
                path,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })?;
        Ok(file.removals.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example1;

    const EXAMPLE: &str = r#"{
      "system": {"states": ["t0"], "initial": ["t0"], "edges": [["t0", "t0"]], "labels": {"t0": ["a"]}},
      "spec": {
        "states": ["s0"], "initial": "s0", "accepting": ["s0"],
        "transitions": [{"from": "s0", "to": "s0", "label": ["a", "b"]}],
        "preferences": {
          "per_symbol": {"a": 3, "b": 5},
          "per_occurrence": [{"symbol": "b", "from": "s0", "to": "s0", "value": 1.5}]
        }
      }
    }"#;

    #[test]
    fn parses_and_overrides_per_symbol() {
        let inst = Instance::from_json(EXAMPLE).unwrap();
        assert_eq!(inst.spec.theta(&Removal::new("a", "s0", "s0")), 3.0);
        assert_eq!(inst.spec.theta(&Removal::new("b", "s0", "s0")), 1.5);
    }

    #[test]
    fn round_trips_example1() {
        let (system, spec) = example1();
        let inst = Instance { system, spec };
        let text = InstanceFile::from_instance(&inst, None).to_json();
        assert_eq!(Instance::from_json(&text).unwrap(), inst);
    }

    #[test]
    fn reports_field_path_on_type_error() {
        let bad = EXAMPLE.replace(r#""initial": "s0""#, r#""initial": 7"#);
        match Instance::from_json(&bad) {
            Err(InstanceError::Parse { path, line, .. }) => {
                assert_eq!(path, "spec.initial");
                assert!(line > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_transition() {
        let bad = EXAMPLE.replace(
            r#"[{"from": "s0", "to": "s0", "label": ["a", "b"]}]"#,
            r#"[{"from": "s0", "to": "s0", "label": ["a"]}, {"from": "s0", "to": "s0", "label": ["b"]}]"#,
        );
        let err = Instance::from_json(&bad).unwrap_err();
        assert!(err.to_string().starts_with("spec.transitions[1]"), "{err}");
    }

    #[test]
    fn rejects_missing_preference_and_unreachable_state() {
        let bad = EXAMPLE.replace(r#""per_symbol": {"a": 3, "b": 5}"#, r#""per_symbol": {"b": 5}"#);
        assert!(matches!(
            Instance::from_json(&bad),
            Err(InstanceError::Spec(AutomataError::MissingPreference(_)))
        ));
        let bad = EXAMPLE.replace(r#""states": ["t0"]"#, r#""states": ["t0", "t1"]"#);
        assert!(matches!(
            Instance::from_json(&bad),
            Err(InstanceError::System(AutomataError::UnreachableState(_)))
        ));
    }

    #[test]
    fn revision_file_ignores_extra_fields() {
        let rev = RevisionFile::from_json(
            r#"{"status": "REVISED", "removals": [{"symbol": "a", "from": "s0", "to": "s0"}]}"#,
        )
        .unwrap();
        assert_eq!(rev.to_string(), "{a@(s0,s0)}");
    }
}
