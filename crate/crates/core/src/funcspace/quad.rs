use std::collections::HashSet;

use rayon::prelude::*;

use crate::dyadic::CubeIndex;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Quadrature settings for `L_q` norms.
///
/// Integrals use tensor Gauss rules of `order` points per axis on every dyadic
/// leaf cell of level `level` (or `sub_levels` below an input's own cells);
/// sup norms take the maximum over `sup_points` uniformly spaced points per
/// axis per leaf, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub level: u32,
    pub order: usize,
    pub sub_levels: u32,
    pub sup_points: usize,
}

impl Quadrature {
    pub fn with_level(level: u32, order: usize) -> Self {
        Self {
            level,
            order,
            sub_levels: 2,
            sup_points: 5,
        }
    }

    /// Rule for piecewise polynomials of per-axis degree `< r`.
    pub fn for_poly(r: usize) -> Self {
        Self {
            level: 0,
            order: r + 2,
            sub_levels: 2,
            sup_points: r.max(2) * 2 + 1,
        }
    }

    /// Default rule for a run whose finest correction level is `l_star`.
    pub fn for_run(l_star: u32, r: usize) -> Self {
        Self {
            level: (l_star + 2).max(6),
            order: r + 2,
            sub_levels: 2,
            sup_points: 5,
        }
    }
}

/// Upper bound on the number of leaf cells one integration touches.
pub const MAX_LEAVES: u64 = 1 << 20;

/// A set of dyadic cells (possibly of mixed levels) whose union contains the
/// support of an integrand; everything outside is taken to be zero.
#[derive(Debug, Clone)]
pub struct ActiveSet {
    d: usize,
    listed: HashSet<(u32, u64)>,
    ancestors: HashSet<(u32, u64)>,
}

impl ActiveSet {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            listed: HashSet::new(),
            ancestors: HashSet::new(),
        }
    }

    /// The whole domain.
    pub fn full(d: usize) -> Self {
        let mut a = Self::new(d);
        a.insert(0, 0);
        a
    }

    pub fn insert(&mut self, l: u32, i: u64) {
        if !self.listed.insert((l, i)) {
            return;
        }
        let c = CubeIndex { l, i, d: self.d };
        for k in (0..l).rev() {
            if !self.ancestors.insert((k, c.ancestor(k).i)) {
                break;
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.listed.is_empty()
    }

    pub fn merge(&mut self, other: &ActiveSet) {
        for &(l, i) in &other.listed {
            self.insert(l, i);
        }
    }

    /// Leaf cells covering the active region, each at least at `leaf` or at
    /// the level of the deepest listed cell below it.
    pub fn leaves(&self, leaf: u32) -> Vec<CubeIndex> {
        let mut out = Vec::new();
        if self.is_empty() {
            return out;
        }
        let mut stack = vec![(CubeIndex::root(self.d), false)];
        while let Some((c, covered)) = stack.pop() {
            let covered = covered || self.listed.contains(&(c.l, c.i));
            let has_below = self.ancestors.contains(&(c.l, c.i));
            if !covered && !has_below {
                continue;
            }
            if has_below {
                let mut ch: Vec<CubeIndex> = c.children().collect();
                ch.reverse();
                stack.extend(ch.into_iter().map(|k| (k, covered)));
            } else {
                push_uniform(&c, leaf, self.d, &mut out);
            }
        }
        out
    }
}

fn push_uniform(c: &CubeIndex, leaf: u32, d: usize, out: &mut Vec<CubeIndex>) {
    let mut extra = leaf.saturating_sub(c.l);
    // keep each covered cell within the leaf budget
    while extra > 0 && (d as u64) * extra as u64 > MAX_LEAVES.trailing_zeros() as u64 {
        extra -= 1;
    }
    let n = 1u64 << (d as u32 * extra);
    for j in 0..n {
        out.push(c.compose(&CubeIndex { l: extra, i: j, d }));
    }
}

const CHUNK: usize = 256;

/// `‖f‖_{L_q}` over the active region, with leaves refined to `leaf`.
pub fn integrate(
    d: usize,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    active: &ActiveSet,
    leaf: u32,
    order: usize,
    sup_points: usize,
    q: f64,
) -> f64 {
    let leaves = active.leaves(leaf);
    if leaves.is_empty() {
        return 0.0;
    }
    if q.is_infinite() {
        let pts = sup_grid(sup_points);
        let partial: Vec<f64> = leaves
            .par_chunks(CHUNK)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|c| cell_max(d, f, c, &pts))
                    .fold(0.0, f64::max)
            })
            .collect();
        return partial.into_iter().fold(0.0, f64::max);
    }
    let (x, w) = gauss_legendre(order);
    let partial: Vec<f64> = leaves
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|c| cell_power_sum(d, f, c, &x, &w, q))
                .sum()
        })
        .collect();
    partial.into_iter().sum::<f64>().powf(1.0 / q)
}

/// Uniform points on `[0,1]`, endpoints pulled inside by a relative `1e-12`
/// so each point evaluates on the cell it belongs to.
pub(crate) fn sup_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    let eps = 1e-12;
    (0..n)
        .map(|k| (k as f64 / (n - 1) as f64).clamp(eps, 1.0 - eps))
        .collect()
}

fn for_each_tensor_point(d: usize, nodes: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; d];
    loop {
        visit(&idx);
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < nodes {
                break;
            }
            idx[a] = 0;
        }
    }
}

fn cell_power_sum(
    d: usize,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    c: &CubeIndex,
    x: &[f64],
    w: &[f64],
    q: f64,
) -> f64 {
    let h = c.side();
    let anchor = c.anchor();
    let vol = h.powi(d as i32);
    let mut s = vec![0.0; d];
    let mut acc = 0.0;
    for_each_tensor_point(d, x.len(), |idx| {
        let mut wt = 1.0;
        for a in 0..d {
            s[a] = anchor[a] + h * x[idx[a]];
            wt *= w[idx[a]];
        }
        acc += wt * abs_pow(f(&s), q);
    });
    acc * vol
}

fn cell_max(d: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync), c: &CubeIndex, pts: &[f64]) -> f64 {
    let h = c.side();
    let anchor = c.anchor();
    let mut s = vec![0.0; d];
    let mut m = 0.0f64;
    for_each_tensor_point(d, pts.len(), |idx| {
        for a in 0..d {
            s[a] = anchor[a] + h * pts[idx[a]];
        }
        m = m.max(f(&s).abs());
    });
    m
}

pub(crate) fn abs_pow(v: f64, q: f64) -> f64 {
    let a = v.abs();
    if q == 1.0 {
        a
    } else if q == 2.0 {
        a * a
    } else {
        a.powf(q)
    }
}

/// Power sum `Σ w |p|^q` (or max for `q = ∞`) of one local polynomial over
/// `[0,1]^d` split into `2^{d·sub}` pieces.
pub(crate) fn local_poly_norm_part(
    coeffs: &[f64],
    r: usize,
    d: usize,
    sub: u32,
    order: usize,
    sup_points: usize,
    q: f64,
) -> f64 {
    let n = 1u64 << (d as u32 * sub);
    let f = |u: &[f64]| super::poly::eval_tensor(coeffs, r, d, u);
    if q.is_infinite() {
        let pts: Vec<f64> = (0..sup_points.max(2))
            .map(|k| k as f64 / (sup_points.max(2) - 1) as f64)
            .collect();
        (0..n)
            .map(|j| cell_max(d, &f, &CubeIndex { l: sub, i: j, d }, &pts))
            .fold(0.0, f64::max)
    } else {
        let (x, w) = gauss_legendre(order);
        (0..n)
            .map(|j| cell_power_sum(d, &f, &CubeIndex { l: sub, i: j, d }, &x, &w, q))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn leaves_of_mixed_set() {
        let mut a = ActiveSet::new(1);
        a.insert(1, 0);
        a.insert(3, 6);
        let leaves = a.leaves(2);
        let total: f64 = leaves.iter().map(|c| c.side()).sum();
        assert!((total - 0.625).abs() < 1e-15);
        assert!(leaves.iter().any(|c| c.l == 3 && c.i == 6));
    }

    #[test]
    fn integrate_constant_over_full() {
        let f = |_: &[f64]| 2.0;
        let v = integrate(2, &f, &ActiveSet::full(2), 3, 2, 3, 2.0);
        assert!((v - 2.0).abs() < 1e-13);
    }
}
