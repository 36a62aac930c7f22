use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::primitives::grover_trial;
use super::QueryLedger;
use crate::rng::Rng;
use crate::seqspace::SeqVec;
use crate::{Error, Result};

/// Tuning of the simulated quantum thresholding search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumParams {
    /// Growth factor of the iteration range after a failed Grover run.
    pub lambda: f64,
    /// Failed runs at the iteration cap `√N` after which a shell counts as
    /// exhausted.
    pub give_up: u32,
    /// Constant in the per-shell cost estimate `c·√(N m) + m` used to pick
    /// the first shell.
    pub cost_const: f64,
}

impl Default for QuantumParams {
    fn default() -> Self {
        Self {
            lambda: 1.2,
            give_up: 3,
            cost_const: 1.0,
        }
    }
}

/// Approximator for the finite-dimensional embedding `J: L_p^N → L_q^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    /// Reads all `N` coordinates.
    Exact,
    /// Reads `min(n, N)` uniformly chosen coordinates, rescaled by `N/n`.
    ClassicalSample,
    /// Simulated quantum search for the large coordinates.
    QuantumSim(QuantumParams),
}

impl BackendKind {
    pub fn quantum() -> Self {
        BackendKind::QuantumSim(QuantumParams::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            BackendKind::Exact => "exact",
            BackendKind::ClassicalSample => "classical",
            BackendKind::QuantumSim(_) => "quantum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(BackendKind::Exact),
            "classical" | "classical-sample" => Some(BackendKind::ClassicalSample),
            "quantum" | "quantum-sim" => Some(Self::quantum()),
            _ => None,
        }
    }
}

/// A backend's output and what it spent.
#[derive(Debug, Clone)]
pub struct EmbedOutcome {
    pub xhat: SeqVec,
    /// Backend queries spent (quantum queries plus coordinate reads).
    pub used: u64,
    /// Independently tallied quantum queries, for auditing the ledger.
    pub shadow_queries: u64,
    /// Coordinates whose values were recovered.
    pub found: usize,
}

/// Approximates `x ∈ R·B(L_p^N)` in `L_q^N` with at most `budget` backend
/// queries (the exact backend always spends `N`).
///
/// The simulation reads `x` directly to decide which coordinates a Grover
/// run would mark; only charged primitives reveal information to the output.
#[allow(clippy::too_many_arguments)]
pub fn approx_embedding(
    x: &SeqVec,
    p: f64,
    _q: f64,
    radius: f64,
    budget: u64,
    backend: &BackendKind,
    rng: &mut Rng,
    ledger: &mut QueryLedger,
) -> Result<EmbedOutcome> {
    if budget < 1 {
        return Err(Error::Parameter("backend budget must be at least 1".into()));
    }
    let n = x.len();
    match backend {
        BackendKind::Exact => {
            ledger.coord_reads += n as u64;
            Ok(EmbedOutcome {
                xhat: x.clone(),
                used: n as u64,
                shadow_queries: 0,
                found: n,
            })
        }
        BackendKind::ClassicalSample => {
            let s = (budget as usize).min(n);
            let scale = n as f64 / s as f64;
            let mut idx: Vec<usize> = sample(rng, n, s).into_vec();
            idx.sort_unstable();
            let entries = idx.into_iter().map(|i| (i, scale * x.get(i))).collect();
            ledger.coord_reads += s as u64;
            Ok(EmbedOutcome {
                xhat: SeqVec::sparse(n, entries)?.compact(),
                used: s as u64,
                shadow_queries: 0,
                found: s,
            })
        }
        BackendKind::QuantumSim(params) => {
            Ok(quantum_search(x, p, radius, budget, params, rng, ledger))
        }
    }
}

/// Worst-case number of coordinates with `|x_i| ≥ τ_j = R N^{1/p} 2^{−j}`
/// for `‖x‖_{L_p^N} ≤ R`.
fn shell_count(n: usize, p: f64, j: u32) -> f64 {
    if p.is_infinite() {
        return n as f64;
    }
    (j as f64 * p).exp2().min(n as f64)
}

fn quantum_search(
    x: &SeqVec,
    p: f64,
    radius: f64,
    budget: u64,
    params: &QuantumParams,
    rng: &mut Rng,
    ledger: &mut QueryLedger,
) -> EmbedOutcome {
    let n = x.len();
    let nf = n as f64;
    let cap = nf.sqrt();
    // nonzeros by decreasing magnitude; [0, nfound) holds recovered entries
    let mut order = x.nonzeros();
    order.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    let mut found: Vec<(usize, f64)> = Vec::new();
    let mut nfound = 0usize;
    let mut prefix = 0usize;
    let mut used = 0u64;
    let mut shadow = 0u64;

    let top = if p.is_infinite() {
        radius
    } else {
        radius * nf.powf(1.0 / p)
    };
    let mut j = 0u32;
    while j < 64 {
        let m = shell_count(n, p, j + 1);
        if params.cost_const * (nf * m).sqrt() + m > budget as f64 {
            break;
        }
        j += 1;
    }

    'shells: while used < budget && j < 1100 {
        let tau = top * (-(j as f64)).exp2();
        if tau == 0.0 {
            break;
        }
        while prefix < order.len() && order[prefix].1.abs() >= tau {
            prefix += 1;
        }
        let mut range = 1.0f64;
        let mut fails_at_cap = 0u32;
        loop {
            let remaining = budget - used;
            if remaining == 0 {
                break 'shells;
            }
            if remaining >= (n - found.len()) as u64 {
                // cheaper to read everything still unknown
                let reads = (n - found.len()) as u64;
                ledger.coord_reads += reads;
                used += reads;
                found = order.clone();
                break 'shells;
            }
            let k = (rng.gen::<f64>() * range).floor() as u64;
            let k = k.min(remaining - 1);
            let marked = (prefix - nfound) as u64;
            shadow += k + 1;
            used += k + 1;
            if grover_trial(n as u64, marked, k, rng, ledger) {
                let pick = nfound + rng.gen_range(0..(prefix - nfound));
                order.swap(nfound, pick);
                // the verifying query returns the coordinate value
                found.push(order[nfound]);
                nfound += 1;
            } else {
                range = (range * params.lambda).min(cap);
                if range >= cap {
                    fails_at_cap += 1;
                    if fails_at_cap >= params.give_up {
                        break;
                    }
                }
            }
        }
        j += 1;
    }
    let count = found.len();
    let xhat = SeqVec::sparse(n, found)
        .expect("indices come from x")
        .compact();
    EmbedOutcome {
        xhat,
        used,
        shadow_queries: shadow,
        found: count,
    }
}
