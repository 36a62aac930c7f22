//! Measured constants: the embedding constant `c_emb`, the coefficient-ball
//! constant `C_ball`, the backend contract constant and the norm-equivalence
//! interval of the level bases. Values are measured by [`Calibration::measure`]
//! and stored as JSON; [`Calibration::frozen`] holds the shipped set.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dyadic::cell_count;
use crate::funcspace::{lq_norm, sweep_bump, Quadrature, TestFunction};
use crate::interp::{level_coeffs_uncharged, reconstruct_v_l, LevelCoeffs};
use crate::pipeline::detail_basis;
use crate::qsim::{approx_embedding, random_ball_vector, BackendKind, QueryLedger};
use crate::rng::{stream, task, Rng};
use crate::schedule::gap;
use crate::seqspace::{embed_error, lpn_norm, SeqVec};
use crate::serde_norm::format as fmt_norm;
use crate::Result;

/// `C·R·min(N^{1/p−1/q}, ((N/n)·log2(n/√N + 2))^{2/p−2/q})`, the error
/// bound a backend with budget `n` must meet with probability `≥ 3/4`.
pub fn contract_bound(c: f64, radius: f64, big_n: u64, n: u64, p: f64, q: f64) -> f64 {
    let g = gap(p, q);
    if g <= 0.0 {
        return c * radius;
    }
    let nf = big_n as f64;
    let trivial = nf.powf(0.5 * g);
    let shape = (nf / n as f64 * ((n as f64) / nf.sqrt() + 2.0).log2()).powf(g);
    c * radius * trivial.min(shape)
}

/// Backend calibration design point.
pub const DESIGN_N: u64 = 1024;
pub const DESIGN_BUDGET: u64 = 256;
pub const DESIGN_TRIALS: u32 = 200;
pub const DESIGN_PERCENTILE: f64 = 0.75;
/// Factor applied to the measured design-point constant.
pub const BACKEND_SAFETY: f64 = 1.5;
/// Factor applied to measured maxima of `c_emb` and `C_ball`.
pub const MAX_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Keyed by `"p,r,d"`.
    pub c_emb: BTreeMap<String, f64>,
    /// Keyed by `"p,r,d"`.
    pub c_ball: BTreeMap<String, f64>,
    /// Keyed by `"p,q"`.
    pub backend_c: BTreeMap<String, f64>,
    /// `[c1, c2]`, keyed by `"r,d,u"`.
    pub norm_equiv: BTreeMap<String, [f64; 2]>,
}

pub fn key_prd(p: f64, r: usize, d: usize) -> String {
    format!("{},{r},{d}", fmt_norm(p))
}
pub fn key_pq(p: f64, q: f64) -> String {
    format!("{},{}", fmt_norm(p), fmt_norm(q))
}
pub fn key_rdu(r: usize, d: usize, u: f64) -> String {
    format!("{r},{d},{}", fmt_norm(u))
}

/// Parameter sets covered by the shipped calibration.
pub const PRD_SET: &[(f64, usize, usize)] = &[
    (1.0, 2, 1),
    (2.0, 2, 1),
    (1.0, 3, 2),
    (2.0, 3, 2),
    (1.0, 1, 1),
    (2.0, 1, 1),
    (1.0, 2, 2),
    (2.0, 2, 2),
];
pub const PQ_SET: &[(f64, f64)] = &[
    (1.0, 2.0),
    (1.0, f64::INFINITY),
    (1.0, 4.0),
    (2.0, f64::INFINITY),
];
pub const RD_SET: &[(usize, usize)] = &[(1, 1), (2, 1), (3, 1), (2, 2), (3, 2)];

impl Calibration {
    /// The shipped constants (see `--calibrate` in the CLI to re-measure).
    pub fn frozen() -> Self {
        serde_json::from_str(FROZEN).expect("embedded calibration parses")
    }

    pub fn empty() -> Self {
        Self {
            c_emb: BTreeMap::new(),
            c_ball: BTreeMap::new(),
            backend_c: BTreeMap::new(),
            norm_equiv: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Stored `c_emb`, measured on the fly when absent.
    pub fn c_emb(&self, p: f64, r: usize, d: usize) -> Result<f64> {
        match self.c_emb.get(&key_prd(p, r, d)) {
            Some(v) => Ok(*v),
            None => measure_c_emb(p, r, d),
        }
    }

    /// Stored `C_ball`, measured on the fly when absent.
    pub fn c_ball(&self, p: f64, r: usize, d: usize) -> Result<f64> {
        match self.c_ball.get(&key_prd(p, r, d)) {
            Some(v) => Ok(*v),
            None => measure_c_ball(p, r, d, 0),
        }
    }

    /// Stored backend constant; `1` when absent.
    pub fn backend_c(&self, p: f64, q: f64) -> f64 {
        self.backend_c.get(&key_pq(p, q)).copied().unwrap_or(1.0)
    }

    pub fn norm_equiv(&self, r: usize, d: usize, u: f64) -> Option<[f64; 2]> {
        self.norm_equiv.get(&key_rdu(r, d, u)).copied()
    }

    /// Measures every constant for the shipped parameter sets.
    pub fn measure(seed: u64) -> Result<Self> {
        let mut c = Self::empty();
        for &(p, r, d) in PRD_SET {
            c.c_emb.insert(key_prd(p, r, d), measure_c_emb(p, r, d)?);
            c.c_ball
                .insert(key_prd(p, r, d), measure_c_ball(p, r, d, seed)?);
        }
        for &(p, q) in PQ_SET {
            let (v, _) = measure_backend_c(p, q, DESIGN_N, DESIGN_BUDGET, DESIGN_TRIALS, seed)?;
            c.backend_c.insert(key_pq(p, q), v);
        }
        for &(r, d) in RD_SET {
            for u in [1.0, 2.0, f64::INFINITY] {
                let ratios = norm_equiv_ratios(r, d, u, 1..=5, 8, seed)?;
                let all: Vec<f64> = ratios.iter().flatten().copied().collect();
                let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = all.iter().cloned().fold(0.0, f64::max);
                c.norm_equiv.insert(key_rdu(r, d, u), [lo, hi]);
            }
        }
        Ok(c)
    }
}

/// Members of the bump/trig/constant families used for `c_emb` and `C_ball`.
pub fn embedding_family(p: f64, r: usize, d: usize) -> Result<Vec<TestFunction>> {
    let mut fam = vec![TestFunction::polynomial(d, 1, vec![1.0])?];
    for k in 0..=3u32 {
        let cells = cell_count(k, d)?;
        fam.push(sweep_bump(p, r, d, k, cells / 2)?);
    }
    for &w in &[0.25, 0.5, 1.0, 2.0] {
        fam.push(TestFunction::trig(1.0, vec![w; d], vec![0.3; d])?);
        fam.push(TestFunction::trig(1.0, vec![w; d], vec![0.0; d])?);
    }
    Ok(fam)
}

/// `MAX_SAFETY · max ‖f‖_∞ / ‖f‖_{W_p^r}` over [`embedding_family`].
pub fn measure_c_emb(p: f64, r: usize, d: usize) -> Result<f64> {
    let mut best = 0.0f64;
    for f in embedding_family(p, r, d)? {
        best = best.max(embedding_ratio(&f, p, r)?);
    }
    Ok(MAX_SAFETY * best)
}

pub fn embedding_ratio(f: &TestFunction, p: f64, r: usize) -> Result<f64> {
    Ok(f.lq_norm(f64::INFINITY)? / f.sobolev_norm(p, r, false)?)
}

/// `2^{rl} ‖Γ_l f‖_{L_p^{N_l}} / ‖f‖_{W_p^r}` for `l = 1..=5` (unquantized,
/// which differs from `Γ_l` by at most the quantization step).
pub fn ball_ratios(f: &TestFunction, p: f64, r: usize, d: usize) -> Result<Vec<f64>> {
    let basis = detail_basis(r, d)?;
    let w = f.sobolev_norm(p, r, false)?;
    let ef = f.to_evalfn();
    (1..=5u32)
        .map(|l| {
            let u = level_coeffs_uncharged(&basis, &ef, l, None)?;
            Ok((r as f64 * l as f64).exp2() * lpn_norm(&u.values, p)? / w)
        })
        .collect()
}

/// `MAX_SAFETY · max` of [`ball_ratios`] over the family plus random-cell bumps.
pub fn measure_c_ball(p: f64, r: usize, d: usize, seed: u64) -> Result<f64> {
    let mut fam = embedding_family(p, r, d)?;
    let mut rng = stream(seed, task::CALIBRATION, 1);
    for k in 4..=7u32 {
        let cell = rng.gen_range(0..cell_count(k, d)?);
        fam.push(sweep_bump(p, r, d, k, cell)?);
    }
    let mut best = 0.0f64;
    for f in fam {
        for v in ball_ratios(&f, p, r, d)? {
            best = best.max(v);
        }
    }
    Ok(MAX_SAFETY * best)
}

/// Ratios `err / contract_bound(1, 1, N, n)` of the quantum backend on
/// random unit-ball inputs.
pub fn backend_ratios(
    p: f64,
    q: f64,
    big_n: u64,
    n: u64,
    trials: u32,
    seed: u64,
) -> Result<Vec<f64>> {
    let shape = contract_bound(1.0, 1.0, big_n, n, p, q);
    (0..trials)
        .map(|t| {
            let mut rng: Rng = stream(seed, task::CALIBRATION, 1000 + t);
            let x = random_ball_vector(big_n as usize, p, &mut rng);
            let mut lg = QueryLedger::default();
            let out =
                approx_embedding(&x, p, q, 1.0, n, &BackendKind::quantum(), &mut rng, &mut lg)?;
            Ok(embed_error(&x, &out.xhat, q)? / shape)
        })
        .collect()
}

pub fn percentile(v: &[f64], pct: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let idx = ((pct * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1;
    s[idx]
}

/// `(BACKEND_SAFETY · 75th percentile, raw ratios)` at the design point.
pub fn measure_backend_c(
    p: f64,
    q: f64,
    big_n: u64,
    n: u64,
    trials: u32,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    let r = backend_ratios(p, q, big_n, n, trials, seed)?;
    Ok((BACKEND_SAFETY * percentile(&r, DESIGN_PERCENTILE), r))
}

/// Ratios `‖Σ α_{ij} R_{li}ψ_j‖_{L_u} / ‖α‖_{L_u^{N_l}}` for Gaussian
/// arrays, `samples` per level.
pub fn norm_equiv_ratios(
    r: usize,
    d: usize,
    u: f64,
    levels: std::ops::RangeInclusive<u32>,
    samples: u32,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let basis = detail_basis(r, d)?;
    let quad = Quadrature::for_poly(r);
    levels
        .map(|l| {
            let big_n = basis.n_l(l)? as usize;
            (0..samples)
                .map(|s| {
                    let mut rng = stream(seed, task::CALIBRATION, (l << 16) | s);
                    let a = SeqVec::dense(
                        (0..big_n)
                            .map(|_| rng.sample::<f64, _>(StandardNormal))
                            .collect(),
                    );
                    let g = reconstruct_v_l(
                        &basis,
                        &LevelCoeffs {
                            l,
                            kappa_prime: basis.kappa_prime,
                            values: a.clone(),
                        },
                    )?;
                    Ok(lq_norm(&g, u, &quad)? / lpn_norm(&a, u)?)
                })
                .collect()
        })
        .collect()
}

const FROZEN: &str = include_str!("calib_frozen.json");
