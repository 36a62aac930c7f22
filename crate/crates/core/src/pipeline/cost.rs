use serde::{Deserialize, Serialize};

use super::RunResult;

/// Measured ledger counts next to the cost formulas
/// `Σ ν_l n_l ⌈log2 N_l⌉` (gates), `⌈log2 max N_l⌉ + m*` (qubits) and
/// `Σ ν_l n_l² N_l^{−1} max(log2(n_l/√N_l), 1)^{−1}` (measurements).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub ntilde: u64,
    pub fn_evals: u64,
    pub q_queries: u64,
    pub coord_reads: u64,
    pub measurements: u64,
    pub gate_estimate: u64,
    pub qubit_estimate: u64,
    pub measurement_estimate: f64,
}

fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

pub fn cost_report(result: &RunResult) -> CostReport {
    let rows = &result.schedule.rows;
    let gate_estimate = rows
        .iter()
        .map(|r| r.nu_l as u64 * r.n_l * ceil_log2(r.big_n))
        .sum();
    let qubit_estimate = match (rows.iter().map(|r| r.big_n).max(), result.quant) {
        (Some(nmax), Some(qc)) => ceil_log2(nmax) + qc.m_star as u64,
        _ => 0,
    };
    let measurement_estimate = rows
        .iter()
        .map(|r| {
            let (nl, bn) = (r.n_l as f64, r.big_n as f64);
            let lg = (nl / bn.sqrt()).log2().max(1.0);
            r.nu_l as f64 * nl * nl / bn / lg
        })
        .fold(0.0, |a, b| a + b);
    let l = &result.ledger;
    CostReport {
        ntilde: result.schedule.ntilde,
        fn_evals: l.fn_evals,
        q_queries: l.q_queries,
        coord_reads: l.coord_reads,
        measurements: l.measurements,
        gate_estimate,
        qubit_estimate,
        measurement_estimate,
    }
}
