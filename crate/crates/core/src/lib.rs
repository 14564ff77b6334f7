//! Verifiable IVF-PQ vector search.
//!
//! A corpus is shaped into a fixed-shape IVF-PQ [`Snapshot`], committed with
//! Poseidon Merkle trees, and queried under a deterministic five-step semantics.
//! Answers can be proved in zero knowledge with one of two plonky2 circuits:
//! a baseline that sorts and looks up tables in-circuit, or a multiset design
//! that replaces both with randomized multiset equality and inclusion checks.

pub mod commitment;
pub mod config;
pub mod costmodel;
pub mod dataset;
mod error;
pub mod fixedpoint;
pub mod fixtures;
pub mod format;
pub mod gadgets;
pub mod hash;
pub mod proving;
pub mod semantics;
pub mod shaping;
pub mod utility;

pub use commitment::{commit_snapshot, Commitment, CommitmentTree, ListOpening};
pub use config::{CircuitShape, IvfPqConfig, Variant};
pub use error::{Error, Result};
pub use fixedpoint::{FieldSpec, FxScale, FxVector};
pub use hash::Digest;
pub use proving::{circuit_stats, CircuitStats, ProofBundle, PublicInputs, QueryCircuit, WitnessBundle};
pub use semantics::{run_query, QueryResult};
pub use shaping::{build_snapshot, RebalanceReport, SlotRecord, Snapshot};
