//! Model checking for transactional memory semantics: Snapshot Isolation,
//! Robust Snapshot Isolation and Release/Acquire with MRSW locks.
//!
//! The crate is organised around [`graph::ExecutionGraph`]. Litmus programs
//! ([`litmus`]) are expanded into every execution graph a model admits
//! ([`enumerate`]), lock-based implementations of transactions are produced
//! by [`stm`], and [`mrsw`] checks concrete reader/writer lock algorithms
//! against the abstract lock axioms.

pub mod consistency;
pub mod corpus;
pub mod enumerate;
pub mod graph;
pub mod litmus;
pub mod mrsw;
pub mod relation;
pub mod report;
pub mod stm;
pub mod suite;

pub use consistency::{Axiom, ModelId, Verdict};
pub use graph::{Event, EventId, ExecutionGraph, GraphBuilder, GraphError, Kind};
pub use relation::{EventSet, Relation};
