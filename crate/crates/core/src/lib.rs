//! Random-walk insertion for two-choice bucketed allocation.
//!
//! `n` bins of capacity `d` receive items that each name two distinct
//! bins. [`table`] implements the insertion, [`graph`] the twin
//! orientation bookkeeping, [`structure`] the saturated-set closure and
//! component census, [`bounds`] the closed-form bounds, and [`harness`]
//! the seeded experiments that tie them together.

pub mod bounds;
pub mod cli;
pub mod graph;
pub mod harness;
pub mod output;
pub mod rng;
pub mod structure;
pub mod table;

/// Bin index in `0..n`.
pub type BinId = u32;
/// Caller-assigned dense item identifier.
pub type ItemId = u32;

pub use graph::{AllocationGraph, DigraphView, EdgeRecord, Multigraph, Orientation};
pub use table::{BothFreePolicy, InsertOutcome, Item, Table, TableConfig, TableError};
