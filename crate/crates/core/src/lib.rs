//! Multilevel approximation of functions from Sobolev balls `B(W_p^r([0,1]^d))`
//! in the `L_q` norm, under a query-counting model.
//!
//! The algorithm computes a classical piecewise-polynomial approximation at a
//! base level and refines it with a hierarchy of level corrections. Each
//! correction is a finite-dimensional `L_p^N -> L_q^N` embedding problem which
//! is handed to a pluggable backend: exact reads, classical sampling, or a
//! desk-scale simulation of the quantum query model (Grover search with
//! closed-form success probabilities). Every oracle use is charged to a
//! [`QueryLedger`](qsim::QueryLedger).
//!
//! Module map:
//!
//! * [`funcspace`]: functions on the unit cube, `L_q`/Sobolev norms, piecewise polynomials.
//! * [`dyadic`]: dyadic cube partitions and the localization operators.
//! * [`interp`]: interpolation operators, the detail basis and level coefficient maps.
//! * [`seqspace`]: normalized sequence spaces `L_u^N`.
//! * [`qsim`]: quantization, simulated quantum primitives, embedding backends, median boosting.
//! * [`schedule`]: regime classification and level/budget arithmetic.
//! * [`pipeline`]: the end-to-end algorithm, error measurement, cost reports and rate sweeps.
//! * [`hardgen`]: hard-instance generation for the lower-bound construction.
//! * [`calib`]: measured constants used by the backends and checks.
//! * [`selftest`]: a quick invariant suite.

pub mod calib;
pub mod dyadic;
mod error;
pub mod funcspace;
pub mod hardgen;
pub mod interp;
pub mod linalg;
pub mod pipeline;
pub mod qsim;
pub mod rng;
pub mod schedule;
pub mod selftest;
pub mod seqspace;
pub mod serde_norm;

pub use error::{Error, Result};

/// Checks that `q` is a valid norm index in `[1, ∞]`.
pub fn check_norm_index(q: f64) -> Result<()> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::Parameter(format!("norm index {q} outside [1, inf]")));
    }
    Ok(())
}
