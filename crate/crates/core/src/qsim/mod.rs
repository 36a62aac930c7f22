//! Fixed-point quantization, simulated quantum primitives, finite-dimensional
//! embedding backends and median boosting.

mod backend;
mod inputs;
mod ledger;
mod median;
mod primitives;
mod quant;

pub use backend::{approx_embedding, BackendKind, EmbedOutcome, QuantumParams};
pub use inputs::{random_ball_vector, random_spikes};
pub use ledger::QueryLedger;
pub use median::{median_combine, median_index};
pub use primitives::{ae_distribution, ae_sample, grover_success_prob, grover_trial};
pub use quant::{beta, gamma, quantize, QuantConfig, MAX_BITS};
