//! Revision of unsatisfiable Büchi specifications under symbol preferences.
//!
//! Given a system abstraction and a specification automaton whose transition
//! symbols carry preference levels, find a set of symbol removals that makes
//! the specification satisfiable on the system while removing as little
//! preference as possible, either in total ([`Objective::Sum`]) or in the
//! worst single removal ([`Objective::Max`]).

pub mod automata;
pub mod benchgen;
pub mod bitset;
pub mod fixtures;
pub mod instance;
pub mod oracle;
pub mod product;
pub mod search;

pub use automata::{
    apply_revision, is_relaxation, validate_system, AutomataError, Removal, Revision, SpecAutomaton, StateId,
    Symbol, SystemFsm,
};
pub use bitset::RemovalSet;
pub use product::{build_graph, check_emptiness, verify_revision, AcceptingRun, RevisionGraph, Witness};
pub use search::{arpp, Objective, RevisionOutcome};

/// Absolute tolerance used whenever costs are compared.
pub const COST_TOLERANCE: f64 = 1e-9;
