//! Provenance circuits for tree automata and treelike instances.
//!
//! The crate compiles unions of conjunctive queries to bottom-up tree
//! automata, runs them over tree encodings of bounded-treewidth instances to
//! obtain Boolean or `N[X]` provenance circuits, and evaluates query
//! probabilities exactly on pc, pcc, BID and probabilistic XML inputs.

pub mod automata;
pub mod circuits;
pub mod encoding;
pub mod error;
pub mod prob;
pub mod provcirc;
pub mod prxml;
pub mod rational;
pub mod relational;
pub mod tree;
pub mod ucq;

pub use error::{Error, Result};

/// Default cap on the number of automaton states explored by lazy
/// constructions such as determinization.
pub const DEFAULT_STATE_CAP: usize = 1 << 16;
