use rayon::prelude::*;

use crate::dyadic::{cell_count, CubeIndex};
use crate::funcspace::{EvalFn, PiecewisePoly};
use crate::{Error, Result};

/// Largest supported `κ = r^d`.
pub const MAX_KAPPA: usize = 1 << 16;

/// Tensor-product Lagrange interpolation `Pf = Σ_j f(t_j) φ_j` on the
/// uniform grid `{0, 1/(r−1), …, 1}^d` (the single node `0` for `r = 1`).
#[derive(Debug, Clone)]
pub struct InterpOperator {
    pub r: usize,
    pub d: usize,
    pub kappa: usize,
    /// `t_j`, row-major over the per-axis node indices.
    pub nodes: Vec<Vec<f64>>,
    /// Monomial coefficients (in `[0,1]^d`) of each `φ_j`.
    pub basis: Vec<Vec<f64>>,
}

pub fn nodes_1d(r: usize) -> Vec<f64> {
    if r == 1 {
        return vec![0.0];
    }
    (0..r).map(|k| k as f64 / (r - 1) as f64).collect()
}

/// Monomial coefficients of the 1-D Lagrange cardinal polynomials.
fn lagrange_1d(x: &[f64]) -> Vec<Vec<f64>> {
    let r = x.len();
    (0..r)
        .map(|a| {
            let mut c = vec![1.0];
            for b in (0..r).filter(|&b| b != a) {
                let denom = x[a] - x[b];
                let mut next = vec![0.0; c.len() + 1];
                for (k, ck) in c.iter().enumerate() {
                    next[k + 1] += ck / denom;
                    next[k] -= ck * x[b] / denom;
                }
                c = next;
            }
            c
        })
        .collect()
}

/// Base-`r` digits of `flat`, most significant first.
pub(crate) fn digits(mut flat: usize, r: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for j in (0..d).rev() {
        out[j] = flat % r;
        flat /= r;
    }
    out
}

pub fn build_interp(r: usize, d: usize) -> Result<InterpOperator> {
    if r == 0 || d == 0 {
        return Err(Error::Parameter("r and d must be positive".into()));
    }
    let kappa = (r as u64)
        .checked_pow(d as u32)
        .filter(|&k| k <= MAX_KAPPA as u64)
        .ok_or_else(|| Error::Capability(format!("kappa = {r}^{d} exceeds {MAX_KAPPA}")))?
        as usize;
    let x = nodes_1d(r);
    let l1 = lagrange_1d(&x);
    let mut nodes = Vec::with_capacity(kappa);
    let mut basis = Vec::with_capacity(kappa);
    for j in 0..kappa {
        let jm = digits(j, r, d);
        nodes.push(jm.iter().map(|&a| x[a]).collect());
        let mut c = vec![0.0; kappa];
        for (flat, v) in c.iter_mut().enumerate() {
            let am = digits(flat, r, d);
            *v = (0..d).map(|ax| l1[jm[ax]][am[ax]]).product();
        }
        basis.push(c);
    }
    Ok(InterpOperator {
        r,
        d,
        kappa,
        nodes,
        basis,
    })
}

impl InterpOperator {
    /// Cell polynomial interpolating the given node values.
    pub fn combine(&self, values: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.kappa];
        for (v, phi) in values.iter().zip(&self.basis) {
            if *v != 0.0 {
                for (a, b) in c.iter_mut().zip(phi) {
                    *a += v * b;
                }
            }
        }
        c
    }

    /// `P f` as a level-0 piecewise polynomial; `κ` charged evaluations.
    pub fn apply(&self, f: &EvalFn) -> PiecewisePoly {
        self.apply_level(f, 0).expect("level 0 always fits")
    }

    /// `P_l f = Σ_i R_{li} P E_{li} f`, charging `κ` evaluations per cell.
    pub fn apply_level(&self, f: &EvalFn, l: u32) -> Result<PiecewisePoly> {
        let cells = cell_count(l, self.d)?;
        let (r, d) = (self.r, self.d);
        let rows: Vec<(u64, Vec<f64>)> = (0..cells)
            .into_par_iter()
            .map(|i| {
                let c = CubeIndex { l, i, d };
                let vals: Vec<f64> = self.nodes.iter().map(|t| f.eval(&c.to_global(t))).collect();
                (i, self.combine(&vals))
            })
            .collect();
        let mut out = PiecewisePoly::zero(l, d, r);
        for (i, c) in rows {
            out.set_cell(i, c);
        }
        Ok(out)
    }
}

/// `P_l f` (see [`InterpOperator::apply_level`]).
pub fn apply_p_l(op: &InterpOperator, f: &EvalFn, l: u32) -> Result<PiecewisePoly> {
    op.apply_level(f, l)
}
