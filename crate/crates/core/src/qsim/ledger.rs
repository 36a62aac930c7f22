use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

/// Tallies of every charged oracle use.
///
/// `fn_evals` counts classical evaluations of the input function
/// (including the `2κ″` evaluations charged per finite-dimensional query);
/// `q_queries`, `coord_reads` and `measurements` count backend-level
/// primitives. The estimates are filled in by the cost report; merging adds
/// every counter except the qubit width, which takes the maximum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub fn_evals: u64,
    pub q_queries: u64,
    pub coord_reads: u64,
    pub measurements: u64,
    pub gate_estimate: u64,
    pub qubit_estimate: u64,
}

impl QueryLedger {
    /// Backend queries, quantum or classical.
    pub fn findim_queries(&self) -> u64 {
        self.q_queries + self.coord_reads
    }

    pub fn merge(&mut self, other: &QueryLedger) {
        *self += *other;
    }
}

impl AddAssign for QueryLedger {
    fn add_assign(&mut self, o: Self) {
        self.fn_evals += o.fn_evals;
        self.q_queries += o.q_queries;
        self.coord_reads += o.coord_reads;
        self.measurements += o.measurements;
        self.gate_estimate += o.gate_estimate;
        self.qubit_estimate = self.qubit_estimate.max(o.qubit_estimate);
    }
}
