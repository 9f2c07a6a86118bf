//! An available, self-stabilizing binary min-heap.
//!
//! The heap lives in a fixed array of `K` node records ([`HeapState`]) whose
//! fields may be corrupted arbitrarily between operations. [`StabHeap`]
//! answers `insert`/`delete_min` consistently with the current active tree
//! from any state and drifts back to a legitimate state within a number of
//! operations linear in the number of active items.
//!
//! Modules:
//! * [`node`]: storage and navigation.
//! * [`ops`]: the operations and their internal routines.
//! * [`analysis`]: truncation tree, active tree, legitimacy, `gap`.
//! * [`fault`]: fault injection and state generation.
//! * [`history`]: history recording and behaviour checkers.
//! * [`experiments`]: the experiment drivers behind the CLI.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod fault;
pub mod history;
pub mod node;
pub mod ops;
pub mod reference;
pub mod snapshot;
pub mod strawman;

pub use analysis::{
    active_tree, check_legitimacy, gap_value, truncation_tree, AnalysisReport, BalanceParams,
};
pub use error::{Error, Result};
pub use node::{HeapState, ItemValue, NodeId, NodeRecord, Side, Toggle};
pub use ops::{OpResponse, Outcome, StabHeap, TieBreak};
