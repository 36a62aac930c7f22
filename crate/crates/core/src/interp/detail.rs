use std::collections::BTreeMap;

use super::lagrange::{build_interp, InterpOperator};
use crate::dyadic::CubeIndex;
use crate::funcspace::{eval_tensor, gauss_legendre, substitute, PiecewisePoly};
use crate::linalg::{pivoted_cholesky, solve};
use crate::{Error, Result};

/// Relative pivot threshold for extracting an independent subfamily.
pub const PIVOT_TOL: f64 = 1e-10;

/// Coefficients below this magnitude are snapped to zero.
const SNAP: f64 = 1e-12;

/// The detail operator `P′ = P_1 − P_0` written as
/// `P′f = Σ_j (Σ_k a_{jk} f(t′_k)) ψ_j` with linearly independent level-1
/// piecewise polynomials `ψ_j` (unit sup norm).
///
/// The nodes `t′_k` are the distinct interpolation nodes used by `P_1` and
/// `P_0`, shared by all `j`.
#[derive(Debug, Clone)]
pub struct DetailBasis {
    pub op: InterpOperator,
    pub kappa_prime: usize,
    pub kappa_dprime: usize,
    pub nodes: Vec<Vec<f64>>,
    /// `a_{jk}`, row-major `κ′ × κ″`.
    pub a: Vec<f64>,
    pub psi: Vec<PiecewisePoly>,
    /// Ratio of largest to smallest accepted Gram pivot.
    pub gram_cond: f64,
}

fn node_key(t: &[f64], r: usize) -> Vec<i64> {
    let scale = 2.0 * r.max(2) as f64 * 4096.0;
    t.iter().map(|x| (x * scale).round() as i64).collect()
}

/// Sup of `|p|` over a tensor grid per cell.
fn sup_norm(p: &PiecewisePoly) -> f64 {
    let (r, d) = (p.r(), p.d());
    let pts = 4 * r + 1;
    let grid: Vec<f64> = (0..pts).map(|k| k as f64 / (pts - 1) as f64).collect();
    let total = pts.pow(d as u32);
    let mut best = 0.0f64;
    for (_, c) in p.cells() {
        for flat in 0..total {
            let u: Vec<f64> = super::lagrange::digits(flat, pts, d)
                .iter()
                .map(|&k| grid[k])
                .collect();
            best = best.max(eval_tensor(c, r, d, &u).abs());
        }
    }
    best
}

pub fn build_detail_basis(op: &InterpOperator) -> Result<DetailBasis> {
    let (r, d, kappa) = (op.r, op.d, op.kappa);
    let children: Vec<CubeIndex> = CubeIndex::root(d).children().collect();

    let mut keys: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    let mut index_of = |t: Vec<f64>| -> usize {
        let k = node_key(&t, r);
        if let Some(&i) = keys.get(&k) {
            return i;
        }
        keys.insert(k, nodes.len());
        nodes.push(t);
        nodes.len() - 1
    };
    let uses1: Vec<(usize, usize, usize)> = children
        .iter()
        .flat_map(|c| (0..kappa).map(move |j| (c.i as usize, j)))
        .map(|(i, j)| (i, j, index_of(children[i].to_global(&op.nodes[j]))))
        .collect();
    let uses0: Vec<(usize, usize)> = (0..kappa)
        .map(|j| (j, index_of(op.nodes[j].clone())))
        .collect();
    let kdd = nodes.len();

    // cardinal functions g_k of P′ as level-1 polynomials
    let mut g: Vec<PiecewisePoly> = vec![PiecewisePoly::zero(1, d, r); kdd];
    for &(i, j, k) in &uses1 {
        g[k].add_to_cell(i as u64, &op.basis[j], 1.0);
    }
    for &(j, k) in &uses0 {
        for c in &children {
            let local = substitute(&op.basis[j], r, d, &c.anchor(), 0.5);
            g[k].add_to_cell(c.i, &local, -1.0);
        }
    }
    for gk in &mut g {
        gk.prune();
    }

    let gram = gram_matrix(&g, r, d);
    let chol = pivoted_cholesky(&gram, kdd, PIVOT_TOL);
    if chol.pivots.is_empty() {
        return Err(Error::Construction(
            "detail operator has empty range".into(),
        ));
    }
    let kp = chol.pivots.len();
    let scales: Vec<f64> = chol.pivots.iter().map(|&k| sup_norm(&g[k])).collect();
    let psi: Vec<PiecewisePoly> = chol
        .pivots
        .iter()
        .zip(&scales)
        .map(|(&k, &s)| g[k].scaled(1.0 / s))
        .collect();

    let mut gpp = vec![0.0; kp * kp];
    for a in 0..kp {
        for b in 0..kp {
            gpp[a * kp + b] = gram[chol.pivots[a] * kdd + chol.pivots[b]] / (scales[a] * scales[b]);
        }
    }
    let mut gpg = vec![0.0; kp * kdd];
    for a in 0..kp {
        for k in 0..kdd {
            gpg[a * kdd + k] = gram[chol.pivots[a] * kdd + k] / scales[a];
        }
    }
    let mut coef = solve(&gpp, kp, &gpg, kdd).ok_or_else(|| {
        Error::Construction(format!(
            "Gram matrix of the {kp} selected detail functions is singular"
        ))
    })?;
    let amax = coef.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut coef {
        if v.abs() < SNAP * amax.max(1.0) {
            *v = 0.0;
        }
    }

    // every cardinal function must lie in the span of the selected ones,
    // relative to the size of the monomial coefficients
    let cmax = g
        .iter()
        .flat_map(|gk| gk.cells().flat_map(|(_, c)| c.iter().copied()))
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for (k, gk) in g.iter().enumerate() {
        let mut rec = PiecewisePoly::zero(1, d, r);
        for (j, p) in psi.iter().enumerate() {
            rec = rec.add_scaled(p, coef[j * kdd + k])?;
        }
        worst = worst.max(gk.max_coeff_diff(&rec)?);
    }
    if worst > 1e-10 * cmax {
        return Err(Error::Construction(format!(
            "detail basis does not reproduce P' (max coefficient residual {worst:e} at scale {cmax:e}, pivots {:?})",
            chol.pivot_values
        )));
    }
    let pmax = chol.pivot_values.iter().cloned().fold(0.0, f64::max);
    let pmin = chol
        .pivot_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(DetailBasis {
        op: op.clone(),
        kappa_prime: kp,
        kappa_dprime: kdd,
        nodes,
        a: coef,
        psi,
        gram_cond: pmax / pmin,
    })
}

/// Exact `L_2(D)` Gram matrix of level-1 polynomials (Gauss with `r`
/// points per axis is exact for products of per-axis degree `2r − 2`).
fn gram_matrix(g: &[PiecewisePoly], r: usize, d: usize) -> Vec<f64> {
    let n = g.len();
    let (x, w) = gauss_legendre(r);
    let pts = r.pow(d as u32);
    let cells = 1usize << d;
    let mut weights = Vec::with_capacity(pts);
    let mut locals = Vec::with_capacity(pts);
    for flat in 0..pts {
        let dg = super::lagrange::digits(flat, r, d);
        locals.push(dg.iter().map(|&k| x[k]).collect::<Vec<f64>>());
        weights.push(dg.iter().map(|&k| w[k]).product::<f64>() / cells as f64);
    }
    let vals: Vec<Vec<f64>> = g
        .iter()
        .map(|p| {
            let mut v = Vec::with_capacity(cells * pts);
            for i in 0..cells as u64 {
                match p.cell(i) {
                    Some(c) => v.extend(locals.iter().map(|u| eval_tensor(c, r, d, u))),
                    None => v.extend(std::iter::repeat_n(0.0, pts)),
                }
            }
            v
        })
        .collect();
    let mut gram = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let s: f64 = (0..cells * pts)
                .map(|t| vals[a][t] * vals[b][t] * weights[t % pts])
                .sum();
            gram[a * n + b] = s;
            gram[b * n + a] = s;
        }
    }
    gram
}

impl DetailBasis {
    pub fn new(r: usize, d: usize) -> Result<Self> {
        build_detail_basis(&build_interp(r, d)?)
    }

    pub fn r(&self) -> usize {
        self.op.r
    }
    pub fn d(&self) -> usize {
        self.op.d
    }

    pub fn coeff(&self, j: usize, k: usize) -> f64 {
        self.a[j * self.kappa_dprime + k]
    }

    /// `Σ_k |a_{jk}|`, maximized over `j`.
    pub fn abs_row_sum(&self) -> f64 {
        (0..self.kappa_prime)
            .map(|j| {
                (0..self.kappa_dprime)
                    .map(|k| self.coeff(j, k).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `N_l = κ′ 2^{dl}`.
    pub fn n_l(&self, l: u32) -> Result<u64> {
        let cells = crate::dyadic::cell_count(l, self.d())?;
        cells
            .checked_mul(self.kappa_prime as u64)
            .ok_or_else(|| Error::Capability(format!("N_l overflows at level {l}")))
    }

    /// Detail coefficients `(Σ_k a_{jk} v_k)_j` from node values `v`.
    pub fn apply_rows(&self, values: &[f64]) -> Vec<f64> {
        (0..self.kappa_prime)
            .map(|j| {
                values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| self.coeff(j, k) * v)
                    .sum()
            })
            .collect()
    }

    /// `Σ_j c_j ψ_j` as a level-1 polynomial.
    pub fn combine(&self, c: &[f64]) -> PiecewisePoly {
        let mut out = PiecewisePoly::zero(1, self.d(), self.r());
        for (j, &cj) in c.iter().enumerate() {
            if cj != 0.0 {
                for (i, cell) in self.psi[j].cells() {
                    out.add_to_cell(i, cell, cj);
                }
            }
        }
        out
    }
}
