use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::rng::Rng;
use crate::seqspace::{lpn_norm, SeqVec};

/// Random element of the unit sphere of `L_p^N` with a power-law magnitude
/// profile `|x|_{(k)} ∝ k^{−β/p}`, `β ∈ [1, 1.25]`, randomly permuted and
/// signed. These are the compressible shapes for which few large
/// coordinates carry the `L_q` mass.
pub fn random_ball_vector(n: usize, p: f64, rng: &mut Rng) -> SeqVec {
    let beta: f64 = rng.gen_range(1.0..=1.25);
    let e = if p.is_infinite() { beta } else { beta / p };
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut v = vec![0.0; n];
    for (k, &i) in perm.iter().enumerate() {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        v[i] = sign * ((k + 1) as f64).powf(-e);
    }
    let x = SeqVec::dense(v);
    let norm = lpn_norm(&x, p).expect("valid index");
    x.scaled(1.0 / norm)
}

/// `s` coordinates of magnitude `(N/s)^{1/p}` with random signs (unit
/// `L_p^N` norm).
pub fn random_spikes(n: usize, s: usize, p: f64, rng: &mut Rng) -> SeqVec {
    let s = s.clamp(1, n);
    let mag = if p.is_infinite() {
        1.0
    } else {
        (n as f64 / s as f64).powf(1.0 / p)
    };
    let idx = rand::seq::index::sample(rng, n, s).into_vec();
    let entries = idx
        .into_iter()
        .map(|i| (i, if rng.gen::<bool>() { mag } else { -mag }))
        .collect();
    SeqVec::sparse(n, entries)
        .expect("indices in range")
        .compact()
}
