//! The `C^∞` bump `ψ(t) = ∏_j ψ₁(t_j)` with `ψ₁(t) = e^{4 − 1/(t(1−t))}` on
//! `(0,1)`, zero elsewhere; scaled so that `ψ₁(1/2) = 1 = ‖ψ‖_∞`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use super::quad::{abs_pow, gauss_legendre};

/// Largest derivative order supported by the jet arithmetic.
pub const MAX_ORDER: usize = 12;

/// `ψ₁^{(m)}(t)` for `m = 0..=order`.
pub fn bump1_jet(t: f64, order: usize) -> Vec<f64> {
    assert!(order <= MAX_ORDER);
    let mut out = vec![0.0; order + 1];
    if t <= 0.0 || t >= 1.0 {
        return out;
    }
    // g = t(1−t) around t: [g0, 1−2t, −1, 0, …]
    let mut g = vec![0.0; order + 1];
    g[0] = t * (1.0 - t);
    if order >= 1 {
        g[1] = 1.0 - 2.0 * t;
    }
    if order >= 2 {
        g[2] = -1.0;
    }
    let mut w = vec![0.0; order + 1];
    w[0] = 1.0 / g[0];
    for n in 1..=order {
        let s: f64 = (1..=n.min(2)).map(|k| g[k] * w[n - k]).sum();
        w[n] = -s / g[0];
    }
    let mut h: Vec<f64> = w.iter().map(|x| -x).collect();
    h[0] += 4.0;
    if h[0] < -700.0 {
        return out;
    }
    let mut e = vec![0.0; order + 1];
    e[0] = h[0].exp();
    for n in 1..=order {
        let s: f64 = (1..=n).map(|k| k as f64 * h[k] * e[n - k]).sum();
        e[n] = s / n as f64;
    }
    let mut fact = 1.0;
    for m in 0..=order {
        if m > 0 {
            fact *= m as f64;
        }
        out[m] = fact * e[m];
    }
    out
}

pub fn bump1(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let h = 4.0 - 1.0 / (t * (1.0 - t));
    if h < -700.0 {
        0.0
    } else {
        h.exp()
    }
}

/// `ψ(u)` on `[0,1]^d`.
pub fn bump(u: &[f64]) -> f64 {
    u.iter().map(|&t| bump1(t)).product()
}

/// `∂^α ψ(u)`.
pub fn bump_deriv(alpha: &[usize], u: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(u)
        .map(|(&a, &t)| if a == 0 { bump1(t) } else { bump1_jet(t, a)[a] })
        .product()
}

const COMPOSITE_CELLS: usize = 1 << 12;
const GAUSS_ORDER: usize = 10;
const SUP_SAMPLES: usize = 1 << 16;

fn cache() -> &'static Mutex<HashMap<(usize, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `‖ψ₁^{(m)}‖_{L_p(0,1)}` by composite Gauss quadrature (dense sampling with
/// local refinement for `p = ∞`). Cached.
pub fn bump1_norm(m: usize, p: f64) -> f64 {
    let key = (m, p.to_bits());
    if let Some(v) = cache().lock().expect("bump cache").get(&key) {
        return *v;
    }
    let f = |t: f64| if m == 0 { bump1(t) } else { bump1_jet(t, m)[m] };
    let v = if p.is_infinite() {
        let h = 1.0 / SUP_SAMPLES as f64;
        let (mut best, mut arg) = (0.0f64, 0.5);
        for k in 0..=SUP_SAMPLES {
            let t = k as f64 * h;
            let a = f(t).abs();
            if a > best {
                best = a;
                arg = t;
            }
        }
        // golden-section polish inside the bracketing samples
        let (mut a, mut b) = ((arg - h).max(0.0), (arg + h).min(1.0));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if f(c).abs() > f(d).abs() {
                b = d;
            } else {
                a = c;
            }
        }
        best.max(f(0.5 * (a + b)).abs())
    } else {
        let (x, w) = gauss_legendre(GAUSS_ORDER);
        let h = 1.0 / COMPOSITE_CELLS as f64;
        let mut acc = 0.0;
        for c in 0..COMPOSITE_CELLS {
            let a = c as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                acc += wi * h * abs_pow(f(a + h * xi), p);
            }
        }
        acc.powf(1.0 / p)
    };
    cache().lock().expect("bump cache").insert(key, v);
    v
}

/// `‖∂^α ψ‖_{L_p(D)}` as a product of one-dimensional norms.
pub fn bump_deriv_norm(alpha: &[usize], p: f64) -> f64 {
    alpha.iter().map(|&a| bump1_norm(a, p)).product()
}

/// `σ₁ = ∫_D ψ`.
pub fn sigma1(d: usize) -> f64 {
    bump1_norm(0, 1.0).powi(d as i32)
}

/// Multi-indices `α ∈ N_0^d` with `|α| ≤ r` (or `|α| = r` when `exact`).
pub fn multi_indices(d: usize, r: usize, exact: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; d];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, exact: bool, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            if !exact || left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for a in 0..=left {
            cur[pos] = a;
            rec(pos + 1, left - a, cur, exact, out);
        }
        cur[pos] = 0;
    }
    rec(0, r, &mut cur, exact, &mut out);
    out
}

/// Combines per-multi-index norms into the Sobolev (semi)norm.
pub fn combine_sobolev(parts: impl IntoIterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        parts.into_iter().fold(0.0, f64::max)
    } else {
        parts
            .into_iter()
            .map(|v| v.powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// `σ₂ = ‖ψ‖_{W_p^r(D)}`.
pub fn sigma2(p: f64, r: usize, d: usize) -> f64 {
    combine_sobolev(
        multi_indices(d, r, false)
            .iter()
            .map(|a| bump_deriv_norm(a, p)),
        p,
    )
}
