use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bump::{bump_deriv, bump_deriv_norm, combine_sobolev, multi_indices};
use super::poly::eval_tensor;
use super::quad::{integrate, ActiveSet};
use super::{EvalFn, Support};
use crate::dyadic::CubeIndex;
use crate::{check_norm_index, Error, Result};

/// Test inputs with analytic derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestKind {
    /// `Σ_α c_α s^α`, per-axis degree `< degree`, row-major `α`.
    Polynomial { degree: usize, coeffs: Vec<f64> },
    /// `scale · R_{k,cell} ψ`.
    Bump { k: u32, cell: u64, scale: f64 },
    /// `amp · ∏_j cos(2π freq_j s_j + phase_j)`.
    Trig {
        amp: f64,
        freq: Vec<f64>,
        phase: Vec<f64>,
    },
    /// `scale · Σ_i c_i R_{k,i} ψ` over the listed cells.
    HardInstance {
        k: u32,
        cells: Vec<u64>,
        coeffs: Vec<f64>,
        scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub d: usize,
    #[serde(flatten)]
    pub kind: TestKind,
}

/// Quadrature grid used for norms without a closed form.
const REF_LEVEL: u32 = 3;
const REF_ORDER: usize = 12;
const REF_SUP: usize = 17;

impl TestFunction {
    pub fn polynomial(d: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != degree.pow(d as u32) {
            return Err(Error::Parameter(format!(
                "expected {} coefficients",
                degree.pow(d as u32)
            )));
        }
        Ok(Self {
            d,
            kind: TestKind::Polynomial { degree, coeffs },
        })
    }

    pub fn bump(d: usize, k: u32, cell: u64, scale: f64) -> Result<Self> {
        CubeIndex::new(k, cell, d)?;
        Ok(Self {
            d,
            kind: TestKind::Bump { k, cell, scale },
        })
    }

    pub fn trig(amp: f64, freq: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        if freq.len() != phase.len() || freq.is_empty() {
            return Err(Error::Parameter(
                "trig frequency/phase lengths differ".into(),
            ));
        }
        Ok(Self {
            d: freq.len(),
            kind: TestKind::Trig { amp, freq, phase },
        })
    }

    pub fn hard_instance(
        d: usize,
        k: u32,
        cells: Vec<u64>,
        coeffs: Vec<f64>,
        scale: f64,
    ) -> Result<Self> {
        if cells.len() != coeffs.len() {
            return Err(Error::Parameter(
                "hard instance cells/coeffs lengths differ".into(),
            ));
        }
        for &c in &cells {
            CubeIndex::new(k, c, d)?;
        }
        let mut pairs: Vec<(u64, f64)> = cells.into_iter().zip(coeffs).collect();
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        let (cells, coeffs) = pairs.into_iter().unzip();
        Ok(Self {
            d,
            kind: TestKind::HardInstance {
                k,
                cells,
                coeffs,
                scale,
            },
        })
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        self.deriv(&vec![0; self.d], s)
    }

    /// `∂^α f(s)`.
    pub fn deriv(&self, alpha: &[usize], s: &[f64]) -> f64 {
        match &self.kind {
            TestKind::Polynomial { degree, coeffs } => {
                poly_deriv(coeffs, *degree, self.d, alpha, s)
            }
            TestKind::Bump { k, cell, scale } => {
                let c = CubeIndex {
                    l: *k,
                    i: *cell,
                    d: self.d,
                };
                if !c.contains(s) {
                    return 0.0;
                }
                let ord: usize = alpha.iter().sum();
                scale * (ord as f64 * *k as f64).exp2() * bump_deriv(alpha, &c.to_local(s))
            }
            TestKind::Trig { amp, freq, phase } => {
                let mut v = *amp;
                for j in 0..self.d {
                    let w = 2.0 * std::f64::consts::PI * freq[j];
                    let a = alpha[j];
                    v *= w.powi(a as i32)
                        * (w * s[j] + phase[j] + a as f64 * std::f64::consts::FRAC_PI_2).cos();
                }
                v
            }
            TestKind::HardInstance {
                k,
                cells,
                coeffs,
                scale,
            } => {
                let c = CubeIndex::locate(*k, s);
                match cells.binary_search(&c.i) {
                    Ok(pos) => {
                        let ord: usize = alpha.iter().sum();
                        scale
                            * coeffs[pos]
                            * (ord as f64 * *k as f64).exp2()
                            * bump_deriv(alpha, &c.to_local(s))
                    }
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Cells outside of which `f` vanishes, if that is a proper subset of `D`.
    pub fn support(&self) -> Option<Support> {
        match &self.kind {
            TestKind::Bump { k, cell, .. } => Some(Support {
                level: *k,
                cells: vec![*cell],
            }),
            TestKind::HardInstance {
                k, cells, coeffs, ..
            } => Some(Support {
                level: *k,
                cells: cells
                    .iter()
                    .zip(coeffs)
                    .filter(|(_, &c)| c != 0.0)
                    .map(|(&i, _)| i)
                    .collect(),
            }),
            _ => None,
        }
    }

    pub fn active_set(&self) -> ActiveSet {
        match self.support() {
            Some(s) => {
                let mut a = ActiveSet::new(self.d);
                for &i in &s.cells {
                    a.insert(s.level, i);
                }
                a
            }
            None => ActiveSet::full(self.d),
        }
    }

    /// Uncounted evaluator carrying this descriptor and its support.
    pub fn to_evalfn(&self) -> EvalFn {
        let me = Arc::new(self.clone());
        let g = me.clone();
        let mut f = EvalFn::new(self.d, move |s: &[f64]| g.eval(s)).with_descriptor(me.clone());
        if let Some(s) = me.support() {
            f = f.with_support(s);
        }
        f
    }

    /// `‖∂^α f‖_{L_p(D)}`, closed form for bump kinds.
    pub fn deriv_norm(&self, alpha: &[usize], p: f64) -> Result<f64> {
        check_norm_index(p)?;
        let ord: usize = alpha.iter().sum();
        let d = self.d as f64;
        match &self.kind {
            TestKind::Bump { k, scale, .. } => {
                let kf = *k as f64;
                let vol = if p.is_infinite() {
                    1.0
                } else {
                    (-d * kf / p).exp2()
                };
                Ok(scale.abs() * (ord as f64 * kf).exp2() * vol * bump_deriv_norm(alpha, p))
            }
            TestKind::HardInstance {
                k, coeffs, scale, ..
            } => {
                let kf = *k as f64;
                let base = scale.abs() * (ord as f64 * kf).exp2() * bump_deriv_norm(alpha, p);
                if p.is_infinite() {
                    Ok(base * coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())))
                } else {
                    let s: f64 = coeffs.iter().map(|c| c.abs().powf(p)).sum();
                    Ok(base * ((-d * kf).exp2() * s).powf(1.0 / p))
                }
            }
            TestKind::Polynomial { .. } | TestKind::Trig { .. } => {
                let f = |s: &[f64]| self.deriv(alpha, s);
                Ok(integrate(
                    self.d,
                    &f,
                    &ActiveSet::full(self.d),
                    REF_LEVEL,
                    REF_ORDER,
                    REF_SUP,
                    p,
                ))
            }
        }
    }

    /// `‖f‖_{L_q(D)}`.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        self.deriv_norm(&vec![0; self.d], q)
    }

    /// The Sobolev norm `‖f‖_{W_p^r}` (sum over `|α| ≤ r`) or the seminorm
    /// `|f|_{r,p,D}` (sum over `|α| = r`).
    pub fn sobolev_norm(&self, p: f64, r: usize, seminorm_only: bool) -> Result<f64> {
        check_norm_index(p)?;
        let parts = multi_indices(self.d, r, seminorm_only)
            .iter()
            .map(|a| self.deriv_norm(a, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(combine_sobolev(parts, p))
    }
}

fn poly_deriv(coeffs: &[f64], degree: usize, d: usize, alpha: &[usize], s: &[f64]) -> f64 {
    if alpha.iter().all(|&a| a == 0) {
        return eval_tensor(coeffs, degree, d, s);
    }
    let mut out = vec![0.0; coeffs.len()];
    for (flat, &c) in coeffs.iter().enumerate() {
        let mut rem = flat;
        let mut exps = vec![0usize; d];
        for j in (0..d).rev() {
            exps[j] = rem % degree;
            rem /= degree;
        }
        let mut factor = c;
        let mut target = 0usize;
        for j in 0..d {
            if exps[j] < alpha[j] {
                factor = 0.0;
                break;
            }
            factor *= (exps[j] - alpha[j] + 1..=exps[j])
                .map(|x| x as f64)
                .product::<f64>();
            target = target * degree + (exps[j] - alpha[j]);
        }
        if factor != 0.0 {
            out[target] += factor;
        }
    }
    eval_tensor(&out, degree, d, s)
}

/// Scaled bump used by the rate sweeps: `2^{−(r−d/p)k} R_{k,cell}ψ / σ₂`,
/// of unit `W_p^r` norm up to the lower-order terms.
pub fn sweep_bump(p: f64, r: usize, d: usize, k: u32, cell: u64) -> Result<TestFunction> {
    let s2 = super::bump::sigma2(p, r, d);
    let dp = if p.is_infinite() { 0.0 } else { d as f64 / p };
    let scale = (-(r as f64 - dp) * k as f64).exp2() / s2;
    TestFunction::bump(d, k, cell, scale)
}
