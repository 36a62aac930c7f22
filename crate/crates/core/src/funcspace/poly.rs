use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::quad::{local_poly_norm_part, ActiveSet, Quadrature};
use crate::dyadic::{cell_count, CubeIndex};
use crate::{check_norm_index, Error, Result};

/// Evaluates the tensor polynomial `Σ_α c_α u^α` (per-axis degree `< r`,
/// row-major `α`, last axis fastest) at local coordinates `u`.
pub fn eval_tensor(coeffs: &[f64], r: usize, d: usize, u: &[f64]) -> f64 {
    debug_assert_eq!(coeffs.len(), r.pow(d as u32));
    if d == 1 {
        return horner(coeffs, u[0]);
    }
    let mut buf: Vec<f64> = coeffs.to_vec();
    let mut len = buf.len();
    for axis in (0..d).rev() {
        let x = u[axis];
        len /= r;
        for g in 0..len {
            buf[g] = horner(&buf[g * r..g * r + r], x);
        }
    }
    buf[0]
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Matrix of the 1-D substitution `p(u) ↦ p(offset + h u)` on monomial
/// coefficients; entry `[b][a]` maps `c_a` to the `u^b` coefficient.
fn affine_matrix(r: usize, offset: f64, h: f64) -> Vec<f64> {
    let mut m = vec![0.0; r * r];
    for a in 0..r {
        let mut binom = 1.0;
        for b in 0..=a {
            m[b * r + a] = binom * offset.powi((a - b) as i32) * h.powi(b as i32);
            binom = binom * (a - b) as f64 / (b + 1) as f64;
        }
    }
    m
}

fn apply_axis(coeffs: &mut [f64], r: usize, d: usize, axis: usize, mat: &[f64]) {
    let stride = r.pow((d - 1 - axis) as u32);
    let block = stride * r;
    let mut tmp = vec![0.0; r];
    for start in (0..coeffs.len()).step_by(block) {
        for off in 0..stride {
            for (b, t) in tmp.iter_mut().enumerate() {
                *t = (0..r)
                    .map(|a| mat[b * r + a] * coeffs[start + off + a * stride])
                    .sum();
            }
            for (b, t) in tmp.iter().enumerate() {
                coeffs[start + off + b * stride] = *t;
            }
        }
    }
}

/// Re-expresses a cell polynomial on the sub-cube `u ∈ offset + h [0,1]^d`.
pub fn substitute(coeffs: &[f64], r: usize, d: usize, offset: &[f64], h: f64) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    for (axis, &o) in offset.iter().enumerate().take(d) {
        let m = affine_matrix(r, o, h);
        apply_axis(&mut c, r, d, axis, &m);
    }
    c
}

/// A function on `D` given cell-wise by tensor polynomials of per-coordinate
/// degree `≤ r - 1` on the `2^{dL}` dyadic cells of level `L`.
///
/// Coefficients are stored per cell in local coordinates `u ∈ [0,1]^d` of the
/// cell. Cells without an entry are identically zero, so sparse corrections at
/// deep levels stay cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    level: u32,
    d: usize,
    r: usize,
    cells: BTreeMap<u64, Vec<f64>>,
}

/// Serialized form: `{level, r, d, cells: [[coeffs…]…]}` in row-major cell
/// order. Sparse polynomials additionally carry the flat `indices` of the
/// listed cells.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PolyDump {
    pub level: u32,
    pub r: usize,
    pub d: usize,
    pub cells: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<u64>>,
}

/// Cell-count limit for dense dumps.
const DENSE_DUMP_LIMIT: u64 = 1 << 20;

impl PiecewisePoly {
    /// The zero function at level `level`.
    pub fn zero(level: u32, d: usize, r: usize) -> Self {
        Self {
            level,
            d,
            r,
            cells: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, r: usize, c: f64) -> Self {
        let mut p = Self::zero(0, d, r);
        let mut coeffs = vec![0.0; r.pow(d as u32)];
        coeffs[0] = c;
        p.set_cell(0, coeffs);
        p
    }

    pub fn level(&self) -> u32 {
        self.level
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn coeffs_per_cell(&self) -> usize {
        self.r.pow(self.d as u32)
    }

    /// Total number of cells, `2^{dL}`.
    pub fn cell_count(&self) -> u64 {
        cell_count(self.level, self.d).expect("level validated at construction")
    }

    /// Number of cells with a stored (possibly nonzero) polynomial.
    pub fn stored_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, i: u64) -> Option<&[f64]> {
        self.cells.get(&i).map(|v| v.as_slice())
    }

    pub fn cells(&self) -> impl Iterator<Item = (u64, &[f64])> {
        self.cells.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn set_cell(&mut self, i: u64, coeffs: Vec<f64>) {
        assert_eq!(coeffs.len(), self.coeffs_per_cell());
        debug_assert!(i < self.cell_count());
        if coeffs.iter().all(|&c| c == 0.0) {
            self.cells.remove(&i);
        } else {
            self.cells.insert(i, coeffs);
        }
    }

    /// Adds `scale · coeffs` to cell `i`.
    pub fn add_to_cell(&mut self, i: u64, coeffs: &[f64], scale: f64) {
        let k = self.coeffs_per_cell();
        let e = self.cells.entry(i).or_insert_with(|| vec![0.0; k]);
        for (a, b) in e.iter_mut().zip(coeffs) {
            *a += scale * b;
        }
    }

    /// Drops cells whose coefficients are all exactly zero.
    pub fn prune(&mut self) {
        self.cells.retain(|_, v| v.iter().any(|&c| c != 0.0));
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        let c = CubeIndex::locate(self.level, s);
        match self.cells.get(&c.i) {
            None => 0.0,
            Some(coeffs) => eval_tensor(coeffs, self.r, self.d, &c.to_local(s)),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.cells.values_mut() {
            for a in v.iter_mut() {
                *a *= c;
            }
        }
        out.prune();
        out
    }

    /// The same function expressed at level `level + extra`.
    pub fn refine(&self, extra: u32) -> Self {
        if extra == 0 {
            return self.clone();
        }
        let mut out = Self::zero(self.level + extra, self.d, self.r);
        let h = (-(extra as f64)).exp2();
        let subs: Vec<CubeIndex> = (0..cell_count(extra, self.d).expect("refine level"))
            .map(|i| CubeIndex {
                l: extra,
                i,
                d: self.d,
            })
            .collect();
        for (&i, coeffs) in &self.cells {
            let cube = CubeIndex {
                l: self.level,
                i,
                d: self.d,
            };
            for sub in &subs {
                let local = substitute(coeffs, self.r, self.d, &sub.anchor(), h);
                out.set_cell(cube.compose(sub).i, local);
            }
        }
        out
    }

    /// `self + scale·other`; the result lives at the finer of the two levels.
    pub fn add_scaled(&self, other: &PiecewisePoly, scale: f64) -> Result<Self> {
        if self.d != other.d || self.r != other.r {
            return Err(Error::Parameter(
                "piecewise polynomials of different shape".into(),
            ));
        }
        let level = self.level.max(other.level);
        let mut out = self.refine(level - self.level);
        let o = other.refine(level - other.level);
        for (i, c) in o.cells() {
            out.add_to_cell(i, c, scale);
        }
        out.prune();
        Ok(out)
    }

    /// `R_{li}` applied to `self`: the cell polynomials are unchanged, only
    /// their cells move to level `L + l` inside `D_{li}`.
    pub fn restrict_rescale(&self, c: &CubeIndex) -> Self {
        let mut out = Self::zero(self.level + c.l, self.d, self.r);
        for (&i, coeffs) in &self.cells {
            let sub = CubeIndex {
                l: self.level,
                i,
                d: self.d,
            };
            out.cells.insert(c.compose(&sub).i, coeffs.clone());
        }
        out
    }

    /// Active set covering the stored cells.
    pub fn active_set(&self) -> ActiveSet {
        let mut a = ActiveSet::new(self.d);
        self.mark_active(&mut a);
        a
    }

    pub fn mark_active(&self, a: &mut ActiveSet) {
        for &i in self.cells.keys() {
            a.insert(self.level, i);
        }
    }

    /// Largest absolute coefficient difference to `other` after bringing both
    /// to a common level.
    pub fn max_coeff_diff(&self, other: &PiecewisePoly) -> Result<f64> {
        let diff = self.add_scaled(other, -1.0)?;
        Ok(diff
            .cells
            .values()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs())))
    }

    /// Norm relative to the polynomial's own cells: each stored cell is split
    /// into `2^{d·sub_levels}` pieces, so the result is independent of where
    /// the cells lie in `D`.
    pub fn lq_norm(&self, q: f64, quad: &Quadrature) -> Result<f64> {
        check_norm_index(q)?;
        let (r, d, sub) = (self.r, self.d, quad.sub_levels);
        let parts: Vec<f64> = self
            .cells
            .values()
            .map(|c| local_poly_norm_part(c, r, d, sub, quad.order, quad.sup_points, q))
            .collect();
        if q.is_infinite() {
            return Ok(parts.into_iter().fold(0.0, f64::max));
        }
        let vol = (-(self.level as f64) * d as f64).exp2();
        Ok((vol * parts.into_iter().sum::<f64>()).powf(1.0 / q))
    }

    pub fn to_dump(&self) -> PolyDump {
        let total = self.cell_count();
        if total <= DENSE_DUMP_LIMIT {
            let zero = vec![0.0; self.coeffs_per_cell()];
            let cells = (0..total)
                .map(|i| self.cells.get(&i).cloned().unwrap_or_else(|| zero.clone()))
                .collect();
            PolyDump {
                level: self.level,
                r: self.r,
                d: self.d,
                cells,
                indices: None,
            }
        } else {
            PolyDump {
                level: self.level,
                r: self.r,
                d: self.d,
                indices: Some(self.cells.keys().copied().collect()),
                cells: self.cells.values().cloned().collect(),
            }
        }
    }

    pub fn from_dump(dump: &PolyDump) -> Result<Self> {
        let total = cell_count(dump.level, dump.d)?;
        let mut p = Self::zero(dump.level, dump.d, dump.r);
        let k = p.coeffs_per_cell();
        let indices: Vec<u64> = match &dump.indices {
            Some(ix) => ix.clone(),
            None => {
                if dump.cells.len() as u64 != total {
                    return Err(Error::Parameter(format!(
                        "dense dump has {} cells, expected {total}",
                        dump.cells.len()
                    )));
                }
                (0..total).collect()
            }
        };
        if indices.len() != dump.cells.len() {
            return Err(Error::Parameter(
                "dump indices and cells differ in length".into(),
            ));
        }
        for (i, c) in indices.into_iter().zip(&dump.cells) {
            if c.len() != k || i >= total {
                return Err(Error::Parameter(format!("malformed cell {i}")));
            }
            p.set_cell(i, c.clone());
        }
        Ok(p)
    }
}
