//! Pauli-based computation (PBC) compiler and simulator.
//!
//! Pipeline: [`circuit`] (Clifford+T IR) → [`gadget`] (T-gadgetization) →
//! [`engine`] (measurement back-propagation, case classification, layering),
//! with [`greedy`] weight reduction, [`mbqc`] pattern pre-compilation and the
//! constant-weight [`incpbc`] model alongside.

pub mod circuit;
pub mod engine;
pub mod gadget;
pub mod greedy;
pub mod incpbc;
pub mod mbqc;
pub mod pauli;
pub mod statevec;
pub mod stats;

pub use circuit::{BitId, Circuit, CircuitMetrics, Condition, Instruction};
pub use gadget::{gadgetize, AdaptiveCliffordCircuit};
pub use pauli::{CliffordGate, Direction, Pauli, PauliOperator, VUnitary};
pub use engine::{BackendKind, Case, PbcProgram, PbcStep, SampleConfig};
pub use greedy::{GreedyConfig, GreedyMode};
