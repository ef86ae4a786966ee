//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Unified error for model validation, circuit construction, and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter ordering violated for supplier {supplier}: need o > c > w, got o={o}, c={c}, w={w}")]
    ParameterOrder {
        supplier: usize,
        o: f64,
        c: f64,
        w: f64,
    },

    #[error("selling price must be positive, got p={p}")]
    InvalidPrice { p: f64 },

    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("supplier {supplier}: order of {q} units exceeds capacity {capacity}")]
    CapacityExceeded {
        supplier: usize,
        q: u32,
        capacity: u32,
    },

    #[error("empty support: {what}")]
    EmptySupport { what: &'static str },

    #[error("invalid probability vector: {reason}")]
    InvalidDistribution { reason: String },

    #[error("qubit index {index} out of range for {n_qubits} qubit(s)")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("qubit count {n} outside the supported range 1..={max}")]
    QubitCountOutOfRange { n: usize, max: usize },

    #[error("gate targets and controls must be disjoint and distinct (qubit {index})")]
    OverlappingQubits { index: usize },

    #[error("register width mismatch: {what}")]
    WidthMismatch { what: String },

    #[error("invalid argument: {what}")]
    InvalidArgument { what: String },
}

pub type Result<T> = std::result::Result<T, Error>;
