//! Hard instances for the lower-bound construction.
//!
//! A vector `a` in the unit ball of `L_p^N`, `N = 2^{dk}`, is embedded into
//! the Sobolev ball by `Γ(a) = Σ_i γ(β(a_i)) ψ_i` with disjoint scaled bumps
//! `ψ_i = R_{ki}ψ`, and read back by the cell-averaging map
//! `(Φf)(i) = N ∫_{D_{ki}} f`. Since `Φψ_i = σ₁ e_i`, running an `L_q`
//! approximation algorithm on `Γ(a)` and projecting with `Φ` solves the
//! finite-dimensional problem, which is what ties the two complexities.
//!
//! [`lower_bound_probe`] runs the pipeline on such instances and reports
//! the error against the predicted rate. It checks consistency only; no
//! experiment can prove a lower bound over all algorithms.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::Calibration;
use crate::dyadic::{cell_count, CubeIndex};
use crate::funcspace::{gauss_legendre, sigma1, sigma2, EvalFn, Quadrature, TestFunction};
use crate::pipeline::{approximate, measure_error, RunParams};
use crate::qsim::{quantize, BackendKind};
use crate::rng::{stream, task, Rng};
use crate::schedule::{classify_regime, theory_exponents, Regime};
use crate::seqspace::{lpn_norm, SeqVec};
use crate::{check_norm_index, Error, Result};

/// Largest family size.
pub const MAX_CELLS: u64 = 1 << 20;
/// The constant `c0 ∈ (0, 1]` of the level choice.
pub const C0: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFamily {
    pub k: u32,
    pub d: usize,
    pub big_n: u64,
    /// `∫_D ψ`.
    pub sigma1: f64,
}

impl BumpFamily {
    /// `ψ_i = R_{ki}ψ`.
    pub fn psi(&self, i: u64) -> Result<TestFunction> {
        TestFunction::bump(self.d, self.k, i, 1.0)
    }

    /// `∫_{D_{ki}} ψ_i = σ₁/N`.
    pub fn cell_integral(&self) -> f64 {
        self.sigma1 / self.big_n as f64
    }
}

pub fn bump_family(k: u32, d: usize) -> Result<BumpFamily> {
    let big_n = cell_count(k, d)?;
    if big_n > MAX_CELLS {
        return Err(Error::Capability(format!(
            "bump family of 2^{} cells exceeds 2^20",
            d as u32 * k
        )));
    }
    Ok(BumpFamily {
        k,
        d,
        big_n,
        sigma1: sigma1(d),
    })
}

/// Level of the hard family for budget `n`: `k = ⌈(log2(n/c0) + 1)/d⌉`, with
/// `n²` in place of `n` when `r/d ≤ 2/p − 2/q`.
pub fn hard_level(n: u64, regime: Regime, d: usize) -> u32 {
    let m = match regime {
        Regime::Low | Regime::Critical => 2.0 * (n as f64).log2(),
        _ => (n as f64).log2(),
    };
    ((m - C0.log2() + 1.0) / d as f64).ceil() as u32
}

/// Smallest even `m*` with `m*/2 − 1 ≥ dk/p`.
pub fn min_code_width(d: usize, k: u32, p: f64) -> u32 {
    let need = if p.is_infinite() {
        0.0
    } else {
        (d as u32 * k) as f64 / p
    };
    2 * (need.ceil() as u32 + 1)
}

/// Checks `m*/2 − 1 ≥ dk/p`, which keeps `β` clamp-free on the unit ball.
pub fn check_code_width(m_star: u32, d: usize, k: u32, p: f64) -> Result<()> {
    let need = if p.is_infinite() {
        0.0
    } else {
        (d as u32 * k) as f64 / p
    };
    if !m_star.is_multiple_of(2) || (m_star / 2) as f64 - 1.0 < need {
        return Err(Error::Config(format!(
            "m* = {m_star} violates m*/2 - 1 >= dk/p = {need}"
        )));
    }
    Ok(())
}

/// `Γ(a)` with its norm certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardInstance {
    pub k: u32,
    pub d: usize,
    pub big_n: u64,
    #[serde(with = "crate::serde_norm")]
    pub p: f64,
    pub r: usize,
    pub m_star: u32,
    pub a: SeqVec,
    /// `γ(β(a_i))`.
    pub coeffs: SeqVec,
    pub sigma1: f64,
    pub sigma2: f64,
    /// `σ₂ 2^{rk}(1 + 2^{−m*/2})`.
    pub certificate: f64,
    pub f: TestFunction,
}

impl HardInstance {
    pub fn evalfn(&self) -> EvalFn {
        self.f.to_evalfn()
    }

    /// `‖Γ(a)‖_{W_p^r}` in closed form.
    pub fn sobolev_norm(&self) -> Result<f64> {
        self.f.sobolev_norm(self.p, self.r, false)
    }

    /// `Γ(a)` scaled into the unit Sobolev ball by the certificate.
    pub fn normalized(&self) -> Result<TestFunction> {
        scaled_by(&self.f, 1.0 / self.certificate)
    }
}

fn scaled_by(f: &TestFunction, c: f64) -> Result<TestFunction> {
    match &f.kind {
        crate::funcspace::TestKind::HardInstance {
            k,
            cells,
            coeffs,
            scale,
        } => TestFunction::hard_instance(f.d, *k, cells.clone(), coeffs.clone(), scale * c),
        _ => Err(Error::Parameter("not a hard instance".into())),
    }
}

/// Builds `Γ(a) = Σ_i γ(β(a_i)) ψ_i` for `‖a‖_{L_p^N} ≤ 1`.
pub fn embed_hard(
    a: &SeqVec,
    p: f64,
    r: usize,
    d: usize,
    k: u32,
    m_star: u32,
) -> Result<HardInstance> {
    check_norm_index(p)?;
    let fam = bump_family(k, d)?;
    if a.len() as u64 != fam.big_n {
        return Err(Error::Parameter(format!(
            "vector length {} differs from N = {}",
            a.len(),
            fam.big_n
        )));
    }
    let norm = lpn_norm(a, p)?;
    if norm > 1.0 + 1e-12 {
        return Err(Error::Parameter(format!(
            "‖a‖ = {norm} outside the unit ball"
        )));
    }
    check_code_width(m_star, d, k, p)?;
    let q: Vec<(usize, f64)> = a
        .nonzeros()
        .into_iter()
        .map(|(i, v)| (i, quantize(v, m_star)))
        .collect();
    // γ(β(0)) = 0, so zeros stay zeros
    let coeffs = SeqVec::sparse(a.len(), q.clone())?.compact();
    let f = TestFunction::hard_instance(
        d,
        k,
        q.iter().map(|&(i, _)| i as u64).collect(),
        q.iter().map(|&(_, v)| v).collect(),
        1.0,
    )?;
    let s2 = sigma2(p, r, d);
    let certificate = s2 * (r as f64 * k as f64).exp2() * (1.0 + (-((m_star / 2) as f64)).exp2());
    Ok(HardInstance {
        k,
        d,
        big_n: fam.big_n,
        p,
        r,
        m_star,
        a: a.clone(),
        coeffs,
        sigma1: fam.sigma1,
        sigma2: s2,
        certificate,
        f,
    })
}

/// Composite tensor Gauss rule on each cell of level `k`: `2^{sub_levels}`
/// pieces per axis, `order` nodes per piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRule {
    pub sub_levels: u32,
    pub order: usize,
}

impl CellRule {
    pub fn for_dim(d: usize) -> Self {
        match d {
            1 => Self {
                sub_levels: 6,
                order: 10,
            },
            2 => Self {
                sub_levels: 4,
                order: 8,
            },
            _ => Self {
                sub_levels: 2,
                order: 6,
            },
        }
    }

    /// Nodes and weights on `[0,1]` (weights sum to 1).
    fn rule_1d(&self) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(self.order);
        let m = 1usize << self.sub_levels;
        let h = 1.0 / m as f64;
        let mut nodes = Vec::with_capacity(m * x.len());
        let mut weights = Vec::with_capacity(m * x.len());
        for j in 0..m {
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push((j as f64 + xi) * h);
                weights.push(wi * h);
            }
        }
        (nodes, weights)
    }

    /// Calls `visit(value, weight)` on every node of cell `c`.
    fn for_each(&self, f: &EvalFn, c: &CubeIndex, mut visit: impl FnMut(f64, f64)) {
        let (x, w) = self.rule_1d();
        let d = c.d;
        let m = x.len();
        let mut idx = vec![0usize; d];
        let mut u = vec![0.0; d];
        loop {
            let mut wt = 1.0;
            for j in 0..d {
                u[j] = x[idx[j]];
                wt *= w[idx[j]];
            }
            visit(f.eval_uncharged(&c.to_global(&u)), wt);
            let mut a = d;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < m {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
}

fn cells_of(f: &EvalFn, k: u32) -> Result<Vec<u64>> {
    let d = f.d();
    let n = cell_count(k, d)?;
    if n > MAX_CELLS {
        return Err(Error::Capability(format!(
            "2^{} cells exceed 2^20",
            d as u32 * k
        )));
    }
    Ok((0..n).collect())
}

/// `(Φf)(i) = N ∫_{D_{ki}} f`, by [`CellRule::for_dim`].
pub fn project_phi(f: &EvalFn, k: u32) -> Result<SeqVec> {
    project_phi_with(f, k, &CellRule::for_dim(f.d()))
}

pub fn project_phi_with(f: &EvalFn, k: u32, rule: &CellRule) -> Result<SeqVec> {
    let d = f.d();
    let v: Vec<f64> = cells_of(f, k)?
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            rule.for_each(f, &CubeIndex { l: k, i, d }, |v, w| s += v * w);
            s
        })
        .collect();
    Ok(SeqVec::dense(v))
}

/// `‖f‖_{L_q(D)}` on the nodes of the cell rule at level `k`. The same
/// nodes as [`project_phi_with`] make `‖Φf‖ ≤ ‖f‖` hold exactly for the
/// discrete pair, so a violation would point at `Φ` itself.
pub fn lq_on_cells(f: &EvalFn, k: u32, q: f64, rule: &CellRule) -> Result<f64> {
    check_norm_index(q)?;
    let d = f.d();
    let n = cell_count(k, d)? as f64;
    let parts: Vec<f64> = cells_of(f, k)?
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0f64;
            rule.for_each(f, &CubeIndex { l: k, i, d }, |v, w| {
                if q.is_infinite() {
                    s = s.max(v.abs());
                } else {
                    s += w * v.abs().powf(q);
                }
            });
            s
        })
        .collect();
    Ok(if q.is_infinite() {
        parts.into_iter().fold(0.0, f64::max)
    } else {
        (parts.iter().sum::<f64>() / n).powf(1.0 / q)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionAudit {
    pub pairs: usize,
    /// `max ‖Φu − Φv‖_{L_q^N} / ‖u − v‖_{L_q(D)}`.
    pub max_ratio: f64,
    /// `max (‖Φu − Φv‖ − ‖u − v‖)`, at most `1e-9` when `Φ` contracts.
    pub max_excess: f64,
}

/// A random smooth function: a trigonometric term plus a random hard
/// instance on a level at or below `k + 1`.
fn random_smooth(d: usize, k: u32, rng: &mut Rng) -> Result<(TestFunction, TestFunction)> {
    let freq: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..4.0)).collect();
    let phase: Vec<f64> = (0..d)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    let trig = TestFunction::trig(rng.gen_range(-1.0..1.0), freq, phase)?;
    let kk = rng.gen_range(0..=k + 1);
    let n = cell_count(kk, d)?;
    let cnt = rng.gen_range(1..=n.min(16));
    let cells: Vec<u64> = (0..cnt).map(|_| rng.gen_range(0..n)).collect();
    let coeffs: Vec<f64> = (0..cnt).map(|_| rng.gen_range(-2.0..2.0)).collect();
    Ok((
        trig,
        TestFunction::hard_instance(d, kk, cells, coeffs, 1.0)?,
    ))
}

/// Checks `‖Φu − Φv‖_{L_q^N} ≤ ‖u − v‖_{L_q(D)}` on random pairs.
pub fn contraction_audit(
    d: usize,
    k: u32,
    q: f64,
    pairs: usize,
    seed: u64,
) -> Result<ContractionAudit> {
    // the discrete inequality holds for any rule; a coarse one suffices
    let rule = CellRule {
        sub_levels: 2,
        order: 6,
    };
    let mut max_ratio = 0.0f64;
    let mut max_excess = f64::NEG_INFINITY;
    for t in 0..pairs {
        let mut rng = stream(seed, task::PROBE, t as u32);
        let (u1, u2) = random_smooth(d, k, &mut rng)?;
        let (v1, v2) = random_smooth(d, k, &mut rng)?;
        let w = EvalFn::new(d, move |s: &[f64]| {
            u1.eval(s) + u2.eval(s) - v1.eval(s) - v2.eval(s)
        });
        let lhs = lpn_norm(&project_phi_with(&w, k, &rule)?, q)?;
        let rhs = lq_on_cells(&w, k, q, &rule)?;
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
        max_excess = max_excess.max(lhs - rhs);
    }
    Ok(ContractionAudit {
        pairs,
        max_ratio,
        max_excess,
    })
}

/// Error of the pipeline on one spike shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeError {
    /// Number of spikes.
    pub s: usize,
    pub errors: Vec<f64>,
    pub median_error: f64,
    /// Largest `‖Γ(a)‖_{W_p^r}` over the trials divided by its certificate.
    pub max_certificate_use: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub n: u64,
    pub ntilde: u64,
    pub k: u32,
    pub big_n: u64,
    pub shapes: Vec<ShapeError>,
    /// Largest median error over the shapes.
    pub worst_error: f64,
    /// `ñ^{e}` with the predicted exponent `e`.
    pub rate: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    #[serde(with = "crate::serde_norm")]
    pub p: f64,
    #[serde(with = "crate::serde_norm")]
    pub q: f64,
    pub r: usize,
    pub d: usize,
    pub regime: Regime,
    pub exponent: f64,
    pub points: Vec<ProbePoint>,
    /// `[min, max]` of the error/rate ratios.
    pub band: [f64; 2],
}

fn probe_exponent(backend: &BackendKind, ex: &crate::schedule::Exponents) -> f64 {
    match backend {
        BackendKind::ClassicalSample => ex.random,
        _ => ex.quantum,
    }
}

/// Measurement rule for probe errors; one sub-level keeps dense instances
/// on `2^20` cells affordable.
fn probe_quadrature(l_star: u32, k: u32, r: usize) -> Quadrature {
    let mut quad = Quadrature::for_run(l_star, r);
    quad.level = quad.level.min(k + 1);
    quad.sub_levels = 1;
    quad
}

/// Runs the pipeline on `trials` random hard instances for each spike
/// count `s ∈ {1, √N, N}` and compares the worst median error with `ñ^e`,
/// `e` the predicted exponent for `backend`.
#[allow(clippy::too_many_arguments)]
pub fn lower_bound_probe(
    p: f64,
    q: f64,
    r: usize,
    d: usize,
    n: u64,
    backend: &BackendKind,
    trials: u32,
    seed: u64,
    calib: &Calibration,
) -> Result<ProbePoint> {
    let regime = classify_regime(p, q, r, d)?;
    let ex = theory_exponents(p, q, r, d)?;
    let e = probe_exponent(backend, &ex);
    let k = hard_level(n, regime, d);
    let fam = bump_family(k, d)?;
    let big_n = fam.big_n as usize;
    let m_star = min_code_width(d, k, p);
    let root = ((big_n as f64).sqrt().round() as usize).max(1);
    let mut shapes_s = vec![1, root, big_n];
    shapes_s.dedup();
    let mut shapes = Vec::new();
    let mut ntilde = 0;
    for (si, &s) in shapes_s.iter().enumerate() {
        let runs: Vec<Result<(f64, f64, u64)>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(
                    seed ^ n.rotate_left(23),
                    task::PROBE,
                    ((si as u32) << 20) | t,
                );
                let a = crate::qsim::random_spikes(big_n, s, p, &mut rng);
                let h = embed_hard(&a, p, r, d, k, m_star)?;
                let use_ = h.sobolev_norm()? / h.certificate;
                let f = h.normalized()?.to_evalfn();
                let params = RunParams::new(
                    p,
                    q,
                    r,
                    d,
                    n,
                    *backend,
                    seed ^ ((si as u64) << 40) ^ t as u64,
                    calib,
                )?;
                let res = approximate(&f, &params)?;
                let quad = probe_quadrature(res.schedule.l_star, k, r);
                Ok((
                    measure_error(&f, &res, q, &quad)?,
                    use_,
                    res.schedule.ntilde,
                ))
            })
            .collect();
        let mut errors = Vec::new();
        let mut max_use = 0.0f64;
        for run in runs {
            let (err, u, nt) = run?;
            errors.push(err);
            max_use = max_use.max(u);
            ntilde = nt;
        }
        let median_error = crate::pipeline::median(&errors);
        shapes.push(ShapeError {
            s,
            errors,
            median_error,
            max_certificate_use: max_use,
        });
    }
    let worst_error = shapes.iter().map(|s| s.median_error).fold(0.0, f64::max);
    let rate = (ntilde as f64).powf(e);
    Ok(ProbePoint {
        n,
        ntilde,
        k,
        big_n: fam.big_n,
        shapes,
        worst_error,
        rate,
        ratio: worst_error / rate,
    })
}

/// [`lower_bound_probe`] over `n_list`.
#[allow(clippy::too_many_arguments)]
pub fn probe_sweep(
    p: f64,
    q: f64,
    r: usize,
    d: usize,
    n_list: &[u64],
    backend: &BackendKind,
    trials: u32,
    seed: u64,
    calib: &Calibration,
) -> Result<ProbeReport> {
    let regime = classify_regime(p, q, r, d)?;
    let ex = theory_exponents(p, q, r, d)?;
    let exponent = probe_exponent(backend, &ex);
    let points = n_list
        .iter()
        .map(|&n| lower_bound_probe(p, q, r, d, n, backend, trials, seed, calib))
        .collect::<Result<Vec<_>>>()?;
    let lo = points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(ProbeReport {
        p,
        q,
        r,
        d,
        regime,
        exponent,
        points,
        band: [lo, hi],
    })
}
