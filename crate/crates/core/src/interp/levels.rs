use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detail::DetailBasis;
use crate::dyadic::{cell_count, CubeIndex};
use crate::funcspace::{EvalFn, PiecewisePoly};
use crate::qsim::{quantize, QuantConfig};
use crate::seqspace::SeqVec;
use crate::{Error, Result};

/// Level-`l` detail coefficients, flat index `i·κ′ + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCoeffs {
    pub l: u32,
    pub kappa_prime: usize,
    pub values: SeqVec,
}

impl LevelCoeffs {
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn get(&self, i: u64, j: usize) -> f64 {
        self.values.get(i as usize * self.kappa_prime + j)
    }
}

/// Level-`l` cells on which `f` can be nonzero: descendants or ancestors of
/// the declared support, or `None` for all cells.
fn candidate_cells(f: &EvalFn, l: u32) -> Option<Vec<u64>> {
    let s = f.support()?;
    let d = f.d();
    let mut out = BTreeSet::new();
    for &i in &s.cells {
        let c = CubeIndex { l: s.level, i, d };
        if l <= s.level {
            out.insert(c.ancestor(l).i);
        } else {
            let extra = l - s.level;
            let n = cell_count(extra, d).ok()?;
            if n > 1 << 24 {
                return None;
            }
            for j in 0..n {
                out.insert(c.compose(&CubeIndex { l: extra, i: j, d }).i);
            }
        }
    }
    Some(out.into_iter().collect())
}

/// Coefficients of `U_l f` (or `Γ_l f` when `quant` is given), computed
/// without charging `f`'s counter. Cells outside `f`'s declared support are
/// skipped (their coefficients vanish).
pub fn level_coeffs_uncharged(
    basis: &DetailBasis,
    f: &EvalFn,
    l: u32,
    quant: Option<&QuantConfig>,
) -> Result<LevelCoeffs> {
    let d = basis.d();
    let total = basis.n_l(l)?;
    if total > usize::MAX as u64 {
        return Err(Error::Capability(format!("N_l = {total} too large")));
    }
    let kp = basis.kappa_prime;
    let cells: Vec<u64> = match candidate_cells(f, l) {
        Some(c) => c,
        None => (0..cell_count(l, d)?).collect(),
    };
    let rows: Vec<Vec<(usize, f64)>> = cells
        .par_iter()
        .map(|&i| {
            let c = CubeIndex { l, i, d };
            let vals: Vec<f64> = basis
                .nodes
                .iter()
                .map(|t| {
                    let v = f.eval_uncharged(&c.to_global(t));
                    match quant {
                        Some(qc) => quantize(v, qc.m_star),
                        None => v,
                    }
                })
                .collect();
            basis
                .apply_rows(&vals)
                .into_iter()
                .enumerate()
                .filter(|(_, v)| *v != 0.0)
                .map(|(j, v)| (i as usize * kp + j, v))
                .collect()
        })
        .collect();
    let entries: Vec<(usize, f64)> = rows.into_iter().flatten().collect();
    let values = SeqVec::sparse(total as usize, entries)?.compact();
    Ok(LevelCoeffs {
        l,
        kappa_prime: kp,
        values,
    })
}

fn charge_coordinates(basis: &DetailBasis, f: &EvalFn, l: u32) -> Result<()> {
    if let Some(c) = f.counter() {
        c.add(basis.n_l(l)? * basis.kappa_dprime as u64);
    }
    Ok(())
}

/// `U_l f(i,j) = Σ_k a_{jk} f(s_{li} + 2^{−l} t′_k)`; charges `κ″`
/// evaluations per coordinate.
pub fn coeffs_u_l(basis: &DetailBasis, f: &EvalFn, l: u32) -> Result<LevelCoeffs> {
    let out = level_coeffs_uncharged(basis, f, l, None)?;
    charge_coordinates(basis, f, l)?;
    Ok(out)
}

/// `Γ_l f(i,j) = Σ_k a_{jk} γ(β(f(s_{li} + 2^{−l} t′_k)))`; charges `κ″`
/// evaluations per coordinate.
pub fn quantized_coeffs_gamma_l(
    basis: &DetailBasis,
    f: &EvalFn,
    l: u32,
    qc: &QuantConfig,
) -> Result<LevelCoeffs> {
    qc.check_range()?;
    let out = level_coeffs_uncharged(basis, f, l, Some(qc))?;
    charge_coordinates(basis, f, l)?;
    Ok(out)
}

/// `V_l g = Σ_{ij} g(i,j) R_{li} ψ_j`, a level-`(l+1)` polynomial.
pub fn reconstruct_v_l(basis: &DetailBasis, g: &LevelCoeffs) -> Result<PiecewisePoly> {
    let expected = basis.n_l(g.l)?;
    if g.kappa_prime != basis.kappa_prime || g.len() as u64 != expected {
        return Err(Error::Parameter(format!(
            "coefficient vector of length {} does not match N_{} = {expected}",
            g.len(),
            g.l
        )));
    }
    let (d, kp) = (basis.d(), basis.kappa_prime);
    let mut out = PiecewisePoly::zero(g.l + 1, d, basis.r());
    let nz = g.values.nonzeros();
    let mut pos = 0;
    while pos < nz.len() {
        let i = nz[pos].0 / kp;
        let mut c = vec![0.0; kp];
        while pos < nz.len() && nz[pos].0 / kp == i {
            c[nz[pos].0 % kp] = nz[pos].1;
            pos += 1;
        }
        let local = basis.combine(&c);
        let cube = CubeIndex {
            l: g.l,
            i: i as u64,
            d,
        };
        for (sub, coeffs) in local.cells() {
            out.set_cell(
                cube.compose(&CubeIndex { l: 1, i: sub, d }).i,
                coeffs.to_vec(),
            );
        }
    }
    Ok(out)
}
