use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{approximate, measure_error, RunParams};
use crate::calib::Calibration;
use crate::dyadic::cell_count;
use crate::funcspace::{sweep_bump, Quadrature};
use crate::qsim::BackendKind;
use crate::rng::{stream, task};
use crate::schedule::{classify_regime, theory_exponents, Exponents, Regime};
use crate::{Error, Result};

/// Algorithm variants compared by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepBackend {
    /// Base interpolant only (`l* = l0`).
    Deterministic,
    Exact,
    Classical,
    Quantum,
}

impl SweepBackend {
    pub fn name(&self) -> &'static str {
        match self {
            SweepBackend::Deterministic => "deterministic",
            SweepBackend::Exact => "exact",
            SweepBackend::Classical => "classical",
            SweepBackend::Quantum => "quantum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "deterministic" => Some(SweepBackend::Deterministic),
            "exact" => Some(SweepBackend::Exact),
            "classical" | "classical-sample" => Some(SweepBackend::Classical),
            "quantum" | "quantum-sim" => Some(SweepBackend::Quantum),
            _ => None,
        }
    }

    fn kind(&self) -> BackendKind {
        match self {
            SweepBackend::Deterministic | SweepBackend::Exact => BackendKind::Exact,
            SweepBackend::Classical => BackendKind::ClassicalSample,
            SweepBackend::Quantum => BackendKind::quantum(),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, SweepBackend::Classical | SweepBackend::Quantum)
    }
}

/// Bump level for budget `n`, as in the lower-bound construction:
/// `2^{dk} ≥ 2n`, or `2n²` when `r/d ≤ 2/p − 2/q`.
pub fn family_level(n: u64, regime: Regime, d: usize) -> u32 {
    crate::hardgen::hard_level(n, regime, d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(with = "crate::serde_norm")]
    pub p: f64,
    #[serde(with = "crate::serde_norm")]
    pub q: f64,
    pub r: usize,
    pub d: usize,
    pub n_list: Vec<u64>,
    pub trials: u32,
    pub seed: u64,
    pub backends: Vec<SweepBackend>,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub backend: String,
    #[serde(with = "crate::serde_norm")]
    pub p: f64,
    #[serde(with = "crate::serde_norm")]
    pub q: f64,
    pub r: usize,
    pub d: usize,
    pub n: u64,
    pub ntilde: u64,
    pub trial: u32,
    pub error: f64,
    pub fn_evals: u64,
    pub q_queries: u64,
    pub measurements: u64,
    pub seed: u64,
    /// Not written to CSV.
    #[serde(skip)]
    pub gate_estimate: u64,
    #[serde(skip)]
    pub coord_reads: u64,
}

pub const CSV_HEADER: &str =
    "backend,p,q,r,d,n,ntilde,trial,error,fn_evals,q_queries,measurements,seed";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.16e},{},{},{},{}",
            self.backend,
            crate::serde_norm::format(self.p),
            crate::serde_norm::format(self.q),
            self.r,
            self.d,
            self.n,
            self.ntilde,
            self.trial,
            self.error,
            self.fn_evals,
            self.q_queries,
            self.measurements,
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: u64,
    pub ntilde: u64,
    pub median_error: f64,
    pub trials: usize,
}

/// Least-squares fit of `log2 y = a + b log2 x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub ci_half_width: f64,
    pub max_residual: f64,
}

pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    let m = x.len();
    if m != y.len() || m < 3 {
        return Err(Error::Contract(format!(
            "slope fit needs at least 3 points, got {m}"
        )));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    if ly.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("slope fit on non-positive values".into()));
    }
    let mx = lx.iter().sum::<f64>() / m as f64;
    let my = ly.iter().sum::<f64>() / m as f64;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Contract(
            "degenerate slope fit: zero variance in x".into(),
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| b - intercept - slope * a)
        .collect();
    let sse: f64 = res.iter().map(|r| r * r).sum();
    let se = (sse / (m - 2) as f64 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, (m - 2) as f64)
        .map_err(|e| Error::Contract(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(SlopeFit {
        slope,
        intercept,
        ci_half_width: t * se,
        max_residual: res.iter().fold(0.0, |a, r| a.max(r.abs())),
    })
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRate {
    pub backend: String,
    pub points: Vec<RatePoint>,
    pub fit: Option<SlopeFit>,
    /// Why no fit is reported, if so.
    pub diagnostic: Option<String>,
    pub theory_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    #[serde(with = "crate::serde_norm")]
    pub p: f64,
    #[serde(with = "crate::serde_norm")]
    pub q: f64,
    pub r: usize,
    pub d: usize,
    pub regime: Regime,
    pub exponents: Exponents,
    pub backends: Vec<BackendRate>,
}

impl RateReport {
    pub fn backend(&self, name: &str) -> Option<&BackendRate> {
        self.backends.iter().find(|b| b.backend == name)
    }
}

/// Runs every backend over the bump family on each `n`, `trials` times
/// (once for the deterministic baseline), and fits error-vs-`ñ` slopes.
pub fn rate_sweep(cfg: &SweepConfig, calib: &Calibration) -> Result<(RateReport, Vec<SweepRow>)> {
    let SweepConfig { p, q, r, d, .. } = *cfg;
    let regime = classify_regime(p, q, r, d)?;
    let exponents = theory_exponents(p, q, r, d)?;
    let mut rows = Vec::new();
    let mut rates = Vec::new();
    for &b in &cfg.backends {
        let trials = if b.is_stochastic() {
            cfg.trials.max(1)
        } else {
            1
        };
        let mut points = Vec::new();
        for &n in &cfg.n_list {
            let jobs: Vec<u32> = (0..trials).collect();
            let results: Vec<Result<SweepRow>> = jobs
                .par_iter()
                .map(|&t| run_trial(cfg, calib, b, regime, n, t))
                .collect();
            let mut errs = Vec::new();
            let mut ntilde = 0;
            for res in results {
                let row = res?;
                ntilde = row.ntilde;
                errs.push(row.error);
                rows.push(row);
            }
            points.push(RatePoint {
                n,
                ntilde,
                median_error: median(&errs),
                trials: errs.len(),
            });
        }
        let xs: Vec<f64> = points.iter().map(|p| p.ntilde as f64).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.median_error).collect();
        let (fit, diagnostic) = match fit_slope(&xs, &ys) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let theory_exponent = match b {
            SweepBackend::Deterministic => exponents.deterministic,
            SweepBackend::Classical => exponents.random,
            _ => exponents.quantum,
        };
        rates.push(BackendRate {
            backend: b.name().into(),
            points,
            fit,
            diagnostic,
            theory_exponent,
        });
    }
    Ok((
        RateReport {
            p,
            q,
            r,
            d,
            regime,
            exponents,
            backends: rates,
        },
        rows,
    ))
}

fn run_trial(
    cfg: &SweepConfig,
    calib: &Calibration,
    b: SweepBackend,
    regime: Regime,
    n: u64,
    t: u32,
) -> Result<SweepRow> {
    let (p, q, r, d) = (cfg.p, cfg.q, cfg.r, cfg.d);
    // The deterministic baseline is probed with its own extremal family.
    let k = family_level(
        n,
        if b == SweepBackend::Deterministic {
            Regime::High
        } else {
            regime
        },
        d,
    );
    let mut rng = stream(cfg.seed ^ n.rotate_left(17), task::INSTANCE, t);
    let cell = rng.gen_range(0..cell_count(k, d)?);
    let f = sweep_bump(p, r, d, k, cell)?.to_evalfn();
    let seed = cfg.seed ^ n.rotate_left(29) ^ ((t as u64) << 1);
    let mut params = RunParams::new(p, q, r, d, n, b.kind(), seed, calib)?;
    params.force_classical = b == SweepBackend::Deterministic;
    let res = approximate(&f, &params)?;
    let quad = Quadrature::for_run(res.schedule.l_star, r);
    let error = measure_error(&f, &res, q, &quad)?;
    Ok(SweepRow {
        backend: b.name().into(),
        p,
        q,
        r,
        d,
        n,
        ntilde: res.schedule.ntilde,
        trial: t,
        error,
        fn_evals: res.ledger.fn_evals,
        q_queries: res.ledger.q_queries,
        measurements: res.ledger.measurements,
        seed,
        gate_estimate: res.ledger.gate_estimate,
        coord_reads: res.ledger.coord_reads,
    })
}
