//! Closed-form outcome distributions of Grover search and amplitude
//! estimation, sampled with a caller-owned generator.

use rand::Rng as _;

use super::QueryLedger;
use crate::rng::Rng;

/// `sin²((2k+1)·asin√(m/N))`.
pub fn grover_success_prob(n: u64, m: u64, k: u64) -> f64 {
    assert!(m <= n && n > 0);
    if m == 0 {
        return 0.0;
    }
    let theta = ((m as f64) / (n as f64)).sqrt().asin();
    ((2 * k + 1) as f64 * theta).sin().powi(2)
}

/// One Grover run with `k` iterations followed by a measurement and a
/// verifying oracle call: charges `k + 1` queries and one measurement.
/// Returns whether a marked element was observed; the caller draws which one
/// (uniform over the marked set, by symmetry of the Grover state).
pub fn grover_trial(n: u64, m: u64, k: u64, rng: &mut Rng, ledger: &mut QueryLedger) -> bool {
    ledger.q_queries += k + 1;
    ledger.measurements += 1;
    let p = grover_success_prob(n, m, k);
    if p <= 0.0 {
        // keep the stream position independent of the outcome
        let _: f64 = rng.gen();
        return false;
    }
    rng.gen::<f64>() < p
}

/// Fejér kernel `sin²(Mπx)/(M² sin²(πx))`, `1` at integers.
fn fejer(m: usize, x: f64) -> f64 {
    let s = (std::f64::consts::PI * x).sin();
    if s.abs() < 1e-15 {
        return 1.0;
    }
    let t = (m as f64 * std::f64::consts::PI * x).sin();
    (t * t) / ((m * m) as f64 * s * s)
}

/// Outcome distribution of amplitude estimation with grid `M` for
/// `θ = asin√a`: `P(y) = ½[F(y/M − θ/π) + F(y/M + θ/π)]`.
pub fn ae_distribution(a: f64, m: usize) -> Vec<f64> {
    assert!(m >= 2);
    let theta = a.clamp(0.0, 1.0).sqrt().asin();
    let shift = theta / std::f64::consts::PI;
    let mut p: Vec<f64> = (0..m)
        .map(|y| {
            let x = y as f64 / m as f64;
            0.5 * (fejer(m, x - shift) + fejer(m, x + shift))
        })
        .collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    p
}

/// Samples an amplitude estimate `â = sin²(πy/M)`; charges `M − 1` queries
/// and one measurement.
pub fn ae_sample(a: f64, m: usize, rng: &mut Rng, ledger: &mut QueryLedger) -> f64 {
    ledger.q_queries += (m - 1) as u64;
    ledger.measurements += 1;
    let dist = ae_distribution(a, m);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut y = m - 1;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            y = i;
            break;
        }
    }
    (std::f64::consts::PI * y as f64 / m as f64).sin().powi(2)
}
