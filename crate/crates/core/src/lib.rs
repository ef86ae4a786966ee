//! Quantum-amplitude-estimation toolkit for the multi-supplier unreliable
//! newsvendor problem.
//!
//! The library is organized bottom-up:
//!
//! - [`model`]: the economics. Market parameters, suppliers with random
//!   yield, discretized demand, the profit function, and exact expected
//!   profit by full enumeration (the oracle every estimator is judged
//!   against).
//! - [`classical`]: seeded Monte Carlo estimation and Sample Average
//!   Approximation baselines.
//! - [`qsim`]: a dense statevector simulator with controlled gates, the
//!   inverse quantum Fourier transform, exact marginals, and seeded shot
//!   sampling.
//! - [`encoding`]: problem-specific circuits. Probability loaders (exact
//!   and variational), the demand-vs-supply comparator, the scaled payoff
//!   rotation, and the inversion from measured probability back to money.
//! - [`qae`]: Grover-operator synthesis, canonical (phase-estimation)
//!   amplitude estimation, iterative amplitude estimation, and median
//!   boosting.
//! - [`optimizer`]: grid search over order quantities and 2-D reliability
//!   sweeps producing heatmap data.
//!
//! Everything is deterministic given explicit seeds. Qubit 0 is always the
//! least-significant bit of a basis-state index.

pub mod classical;
pub mod encoding;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod qae;
pub mod qsim;

pub use error::{Error, Result};
