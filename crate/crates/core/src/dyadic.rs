//! Dyadic partitions of `D = [0,1]^d` and the localization operators.
//!
//! Level `l` splits `D` into `2^{dl}` congruent cubes `D_{li}`. Cubes are
//! enumerated row-major: the flat index `i` has base-`2^l` digits
//! `(i_1, ..., i_d)` with the last coordinate varying fastest. Cells are
//! half-open `[a, a + 2^{-l})` per axis, except the last cell on each axis,
//! which is closed; with this rule every point of `D` lies in exactly one
//! cube of each level.

use crate::funcspace::{EvalFn, PiecewisePoly};
use crate::{Error, Result};

/// Largest supported `d·l`; flat indices must fit in a `u64`.
pub const MAX_DL: u32 = 62;

/// The cube `D_{li}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeIndex {
    pub l: u32,
    pub i: u64,
    pub d: usize,
}

/// Number of cubes at level `l` in dimension `d`.
pub fn cell_count(l: u32, d: usize) -> Result<u64> {
    let dl = d as u32 * l;
    if dl > MAX_DL {
        return Err(Error::Capability(format!(
            "2^{dl} cells exceed the index range"
        )));
    }
    Ok(1u64 << dl)
}

impl CubeIndex {
    pub fn new(l: u32, i: u64, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        let n = cell_count(l, d)?;
        if i >= n {
            return Err(Error::Parameter(format!("cube index {i} >= {n}")));
        }
        Ok(Self { l, i, d })
    }

    /// The whole cube `D` (level 0).
    pub fn root(d: usize) -> Self {
        Self { l: 0, i: 0, d }
    }

    /// Side length `2^{-l}`.
    pub fn side(&self) -> f64 {
        (-(self.l as f64)).exp2()
    }

    /// Per-axis digits `(i_1, ..., i_d)`.
    pub fn multi(&self) -> Vec<u64> {
        decode(self.i, self.l, self.d)
    }

    pub fn from_multi(l: u32, m: &[u64]) -> Self {
        Self {
            l,
            i: encode(m, l),
            d: m.len(),
        }
    }

    /// Lower corner `s_{li} = 2^{-l}(i_1, ..., i_d)`.
    pub fn anchor(&self) -> Vec<f64> {
        let h = self.side();
        self.multi().into_iter().map(|k| k as f64 * h).collect()
    }

    /// The cube of level `l` owning the point `s` (boundary rule above).
    pub fn locate(l: u32, s: &[f64]) -> Self {
        let scale = (l as f64).exp2();
        let top = (1u64 << l) - 1;
        let m: Vec<u64> = s
            .iter()
            .map(|&x| {
                let k = (x * scale).floor();
                if k <= 0.0 {
                    0
                } else {
                    (k as u64).min(top)
                }
            })
            .collect();
        Self::from_multi(l, &m)
    }

    pub fn contains(&self, s: &[f64]) -> bool {
        Self::locate(self.l, s).i == self.i
    }

    /// Local coordinates `2^l (s - s_{li})`.
    pub fn to_local(&self, s: &[f64]) -> Vec<f64> {
        let scale = (self.l as f64).exp2();
        let a = self.anchor();
        s.iter().zip(a).map(|(x, a)| (x - a) * scale).collect()
    }

    /// Global point `s_{li} + 2^{-l} u`.
    pub fn to_global(&self, u: &[f64]) -> Vec<f64> {
        let h = self.side();
        self.anchor()
            .into_iter()
            .zip(u)
            .map(|(a, x)| a + h * x)
            .collect()
    }

    /// The ancestor at level `level <= self.l`.
    pub fn ancestor(&self, level: u32) -> Self {
        debug_assert!(level <= self.l);
        let shift = self.l - level;
        let m: Vec<u64> = self.multi().into_iter().map(|k| k >> shift).collect();
        Self::from_multi(level, &m)
    }

    /// The cube `D_{l+m, .}` obtained by mapping the level-`m` cube `sub` of
    /// the reference cube into `self`.
    pub fn compose(&self, sub: &CubeIndex) -> Self {
        let a = self.multi();
        let b = sub.multi();
        let m: Vec<u64> = a.iter().zip(&b).map(|(x, y)| (x << sub.l) | y).collect();
        Self::from_multi(self.l + sub.l, &m)
    }

    /// The `2^d` children at level `l + 1`, in row-major order.
    pub fn children(&self) -> impl Iterator<Item = CubeIndex> + '_ {
        let d = self.d;
        let base = self.multi();
        (0..1u64 << d).map(move |bits| {
            let m: Vec<u64> = (0..d)
                .map(|j| (base[j] << 1) | ((bits >> (d - 1 - j)) & 1))
                .collect();
            CubeIndex::from_multi(self.l + 1, &m)
        })
    }
}

pub(crate) fn decode(mut i: u64, l: u32, d: usize) -> Vec<u64> {
    let mask = (1u64 << l) - 1;
    let mut m = vec![0; d];
    for j in (0..d).rev() {
        m[j] = i & mask;
        i >>= l;
    }
    m
}

pub(crate) fn encode(m: &[u64], l: u32) -> u64 {
    m.iter().fold(0u64, |acc, &k| (acc << l) | k)
}

/// `E_{li} f`: `s ↦ f(s_{li} + 2^{-l} s)`. Evaluations are charged to `f`'s ledger.
pub fn localize(f: &EvalFn, c: &CubeIndex) -> EvalFn {
    let anchor = c.anchor();
    let h = c.side();
    let inner = f.clone();
    EvalFn::new(f.d(), move |s: &[f64]| {
        let t: Vec<f64> = anchor.iter().zip(s).map(|(a, x)| a + h * x).collect();
        inner.eval_uncharged(&t)
    })
    .with_optional_counter(f.counter().cloned())
}

/// `R_{li} f`: `f(2^l (s - s_{li}))` on `D_{li}`, zero elsewhere. Only
/// evaluations inside the cube query `f`.
pub fn restrict_rescale_fn(f: &EvalFn, c: &CubeIndex) -> EvalFn {
    let cube = *c;
    let inner = f.clone();
    EvalFn::new(f.d(), move |s: &[f64]| {
        if cube.contains(s) {
            inner.eval(&cube.to_local(s))
        } else {
            0.0
        }
    })
}

/// `R_{li} g` for a piecewise polynomial at level `L`; the result lives at level `L + l`.
pub fn restrict_rescale_poly(g: &PiecewisePoly, c: &CubeIndex) -> PiecewisePoly {
    g.restrict_rescale(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{lq_norm, EvalCounter, Quadrature};
    use rand::{Rng, SeedableRng};

    #[test]
    fn anchors() {
        assert_eq!(CubeIndex::new(0, 0, 3).unwrap().anchor(), vec![0.0; 3]);
        assert_eq!(CubeIndex::new(1, 1, 1).unwrap().anchor(), vec![0.5]);
        assert_eq!(CubeIndex::new(1, 3, 2).unwrap().anchor(), vec![0.5, 0.5]);
        // row-major: index 1 at level 1 in 2D is (0, 1)
        assert_eq!(CubeIndex::new(1, 1, 2).unwrap().anchor(), vec![0.0, 0.5]);
    }

    #[test]
    fn index_out_of_range() {
        assert!(CubeIndex::new(1, 2, 1).is_err());
        assert!(cell_count(40, 2).is_err());
    }

    #[test]
    fn localize_identity_and_shift() {
        let f = EvalFn::new(1, |s: &[f64]| s[0]);
        let e0 = localize(&f, &CubeIndex::root(1));
        assert_eq!(e0.eval(&[0.3]), 0.3);
        let e = localize(&f, &CubeIndex::new(1, 1, 1).unwrap());
        assert_eq!(e.eval(&[0.5]), 0.75);
        assert_eq!(e.eval(&[0.0]), 0.5);
    }

    #[test]
    fn localize_charges_parent_ledger() {
        let counter = EvalCounter::default();
        let f = EvalFn::new(2, |s: &[f64]| s[0] * s[1]).with_counter(counter.clone());
        let e = localize(&f, &CubeIndex::new(2, 5, 2).unwrap());
        for _ in 0..7 {
            e.eval(&[0.1, 0.2]);
        }
        assert_eq!(counter.get(), 7);
    }

    #[test]
    fn localize_after_restrict_is_identity_on_cell() {
        let g = EvalFn::new(2, |s: &[f64]| (s[0] + 2.0 * s[1]).sin());
        let c = CubeIndex::new(2, 9, 2).unwrap();
        let back = localize(&restrict_rescale_fn(&g, &c), &c);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let s = [rng.gen::<f64>() * 0.999, rng.gen::<f64>() * 0.999];
            assert!((back.eval(&s) - g.eval(&s)).abs() < 1e-12);
        }
    }

    #[test]
    fn restrict_indicator_and_scaling() {
        let one = EvalFn::new(1, |_: &[f64]| 1.0);
        let c = CubeIndex::new(1, 0, 1).unwrap();
        let r = restrict_rescale_fn(&one, &c);
        assert_eq!(r.eval(&[0.25]), 1.0);
        assert_eq!(r.eval(&[0.5]), 0.0);
        assert_eq!(r.eval(&[0.75]), 0.0);
        let n1 = lq_norm(&r, 1.0, &Quadrature::with_level(6, 3)).unwrap();
        assert!((n1 - 0.5).abs() < 1e-12);
        let r0 = restrict_rescale_fn(&one, &CubeIndex::root(1));
        assert_eq!(r0.eval(&[1.0]), 1.0);
    }

    #[test]
    fn partition_is_exact() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for d in 1..=3usize {
            for _ in 0..1000 {
                let mut s: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
                // put some points on faces
                if rng.gen_bool(0.3) {
                    let j = rng.gen_range(0..d);
                    s[j] = (rng.gen_range(0..=8) as f64) / 8.0;
                }
                for l in 0..=6u32 {
                    let owners = (0..cell_count(l, d).unwrap())
                        .filter(|&i| CubeIndex { l, i, d }.contains(&s))
                        .count();
                    assert_eq!(owners, 1);
                }
            }
        }
    }

    #[test]
    fn face_goes_to_larger_anchor() {
        assert_eq!(CubeIndex::locate(1, &[0.5]).i, 1);
        assert_eq!(CubeIndex::locate(1, &[1.0]).i, 1);
        assert_eq!(CubeIndex::locate(2, &[0.5, 0.25]).multi(), vec![2, 1]);
    }

    #[test]
    fn compose_and_ancestor() {
        let a = CubeIndex::new(1, 1, 2).unwrap();
        let b = CubeIndex::new(1, 2, 2).unwrap();
        let c = a.compose(&b);
        assert_eq!(c.l, 2);
        assert_eq!(c.multi(), vec![1, 2]);
        assert_eq!(c.ancestor(1), a);
        let kids: Vec<_> = a.children().map(|k| k.multi()).collect();
        assert_eq!(kids, vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]]);
    }
}
