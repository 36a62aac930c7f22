use proptest::prelude::*;
use qapprox::dyadic::CubeIndex;
use qapprox::funcspace::{EvalCounter, EvalFn, PiecewisePoly, TestFunction};
use qapprox::interp::*;
use qapprox::qsim::{quantize, QuantConfig};
use qapprox::seqspace::SeqVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tensor_poly(rng: &mut ChaCha8Rng, r: usize, d: usize) -> TestFunction {
    let coeffs = (0..r.pow(d as u32))
        .map(|_| rng.gen_range(-2.0..2.0))
        .collect();
    TestFunction::polynomial(d, r, coeffs).unwrap()
}

/// Smooth, non-polynomial test input.
fn smooth(rng: &mut ChaCha8Rng, d: usize) -> EvalFn {
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..3.0)).collect();
    let ph: f64 = rng.gen_range(0.0..6.0);
    let c: f64 = rng.gen_range(-1.0..1.0);
    EvalFn::new(d, move |s: &[f64]| {
        let arg: f64 = s.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() + ph;
        arg.sin() + c * (s[0] * s[0] - 0.3).exp()
    })
}

fn random_points(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

#[test]
fn interp_examples() {
    let p = build_interp(1, 1).unwrap();
    assert_eq!(p.kappa, 1);
    assert_eq!(p.nodes, vec![vec![0.0]]);
    let p = build_interp(2, 1).unwrap();
    assert_eq!(p.nodes, vec![vec![0.0], vec![1.0]]);
    assert_eq!(p.basis, vec![vec![1.0, -1.0], vec![0.0, 1.0]]);
    let p = build_interp(2, 2).unwrap();
    assert_eq!(p.kappa, 4);
    assert!(build_interp(2, 17).is_err());
    let f = EvalFn::new(1, |s: &[f64]| (3.0 * s[0]).cos());
    let pf = build_interp(1, 1).unwrap().apply(&f);
    assert_eq!(pf.eval(&[0.7]), 1.0);
}

#[test]
fn partition_of_unity() {
    for (r, d) in [(1, 1), (2, 2), (3, 2), (4, 1)] {
        let op = build_interp(r, d).unwrap();
        let mut sum = vec![0.0; op.kappa];
        for phi in &op.basis {
            for (a, b) in sum.iter_mut().zip(phi) {
                *a += b;
            }
        }
        assert!((sum[0] - 1.0).abs() < 1e-12);
        assert!(sum[1..].iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn polynomial_reproduction_at_levels() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (r, d) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2)] {
        let op = build_interp(r, d).unwrap();
        for l in 0..3 {
            let tf = random_tensor_poly(&mut rng, r, d);
            let counter = EvalCounter::default();
            let f = tf.to_evalfn().with_counter(counter.clone());
            let pl = apply_p_l(&op, &f, l).unwrap();
            assert_eq!(counter.get(), (op.kappa as u64) << (d as u32 * l));
            for s in random_points(&mut rng, d, 300) {
                assert!((pl.eval(&s) - tf.eval(&s)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn detail_basis_linear_case() {
    let b = DetailBasis::new(2, 1).unwrap();
    assert_eq!(b.kappa_prime, 1);
    assert_eq!(b.kappa_dprime, 3);
    let mut pairs: Vec<(f64, f64)> = (0..3).map(|k| (b.nodes[k][0], b.coeff(0, k))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let want = [(0.0, -0.5), (0.5, 1.0), (1.0, -0.5)];
    for (got, want) in pairs.iter().zip(want) {
        assert!(
            (got.0 - want.0).abs() < 1e-15 && (got.1 - want.1).abs() < 1e-12,
            "{pairs:?}"
        );
    }
    let hat = &b.psi[0];
    assert!((hat.eval(&[0.5]) - 1.0).abs() < 1e-12);
    assert!((hat.eval(&[0.25]) - 0.5).abs() < 1e-12);
    assert!(hat.eval(&[0.0]).abs() < 1e-12);
}

#[test]
fn detail_basis_sizes() {
    for r in 1..=3usize {
        for d in 1..=2usize {
            let b = DetailBasis::new(r, d).unwrap();
            let kappa = r.pow(d as u32);
            let bound = kappa * ((1 << d) + 1);
            assert!(
                b.kappa_prime <= bound && b.kappa_dprime <= bound,
                "r={r} d={d}"
            );
            let (kp, kdd) = if r == 1 {
                ((1 << d) - 1, 1 << d)
            } else {
                ((2 * r - 1).pow(d as u32) - kappa, (2 * r - 1).pow(d as u32))
            };
            assert_eq!((b.kappa_prime, b.kappa_dprime), (kp, kdd), "r={r} d={d}");
            assert!(b.gram_cond.is_finite());
        }
    }
}

#[test]
fn detail_reproduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (r, d) in [(2, 1), (3, 1), (2, 2), (3, 2)] {
        let b = DetailBasis::new(r, d).unwrap();
        for _ in 0..50 {
            let f = smooth(&mut rng, d);
            let p1 = apply_p_l(&b.op, &f, 1).unwrap();
            let p0 = apply_p_l(&b.op, &f, 0).unwrap();
            let direct = p1.add_scaled(&p0, -1.0).unwrap();
            let vals: Vec<f64> = b.nodes.iter().map(|t| f.eval(t)).collect();
            let rec = b.combine(&b.apply_rows(&vals));
            for s in random_points(&mut rng, d, 40) {
                assert!((direct.eval(&s) - rec.eval(&s)).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn telescoping() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (r, d) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2)] {
        let b = DetailBasis::new(r, d).unwrap();
        for l in 0..=3 {
            let f = smooth(&mut rng, d);
            let lhs = apply_p_l(&b.op, &f, l + 1)
                .unwrap()
                .add_scaled(&apply_p_l(&b.op, &f, l).unwrap(), -1.0)
                .unwrap();
            let rhs = reconstruct_v_l(&b, &coeffs_u_l(&b, &f, l).unwrap()).unwrap();
            assert!(lhs.max_coeff_diff(&rhs).unwrap() < 1e-9);
            for s in random_points(&mut rng, d, 100) {
                assert!((lhs.eval(&s) - rhs.eval(&s)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn u_l_annihilates_polynomials_and_charges() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = DetailBasis::new(3, 2).unwrap();
    let tf = random_tensor_poly(&mut rng, 3, 2);
    let counter = EvalCounter::default();
    let f = tf.to_evalfn().with_counter(counter.clone());
    let u = coeffs_u_l(&b, &f, 2).unwrap();
    assert_eq!(u.len(), b.kappa_prime * 16);
    assert!(u.values.to_dense().iter().all(|v| v.abs() < 1e-10));
    assert_eq!(counter.get(), (u.len() * b.kappa_dprime) as u64);
}

#[test]
fn gamma_gap_and_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let b = DetailBasis::new(2, 2).unwrap();
    for _ in 0..10 {
        let f = smooth(&mut rng, 2);
        let u = coeffs_u_l(&b, &f, 3).unwrap().values.to_dense();
        let mut prev_gap = None;
        for m in [8u32, 28] {
            let qc = QuantConfig {
                m_star: m,
                c_emb: 1.0,
            };
            let g = quantized_coeffs_gamma_l(&b, &f, 3, &qc)
                .unwrap()
                .values
                .to_dense();
            let gap = u
                .iter()
                .zip(&g)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            for (idx, (x, y)) in u.iter().zip(&g).enumerate() {
                let j = idx % b.kappa_prime;
                let bound: f64 = (0..b.kappa_dprime)
                    .map(|k| b.coeff(j, k).abs())
                    .sum::<f64>()
                    * qc.step();
                assert!((x - y).abs() <= bound + 1e-15);
            }
            if let Some(pg) = prev_gap {
                assert!(gap <= pg * 2f64.powi(-10) + b.abs_row_sum() * 2f64.powi(-14));
            }
            prev_gap = Some(gap);
        }
    }
    let bad = QuantConfig {
        m_star: 4,
        c_emb: 100.0,
    };
    assert!(quantized_coeffs_gamma_l(&b, &EvalFn::new(2, |_: &[f64]| 0.0), 1, &bad).is_err());
    assert_eq!(quantize(0.0, 8), 0.0);
}

#[test]
fn v_l_edge_cases() {
    let b = DetailBasis::new(2, 1).unwrap();
    let zero = LevelCoeffs {
        l: 2,
        kappa_prime: 1,
        values: SeqVec::zeros(4),
    };
    assert_eq!(reconstruct_v_l(&b, &zero).unwrap().stored_cells(), 0);
    let bad = LevelCoeffs {
        l: 2,
        kappa_prime: 1,
        values: SeqVec::zeros(5),
    };
    assert!(reconstruct_v_l(&b, &bad).is_err());
}

#[test]
fn support_skipping_matches_full_evaluation() {
    let b = DetailBasis::new(2, 1).unwrap();
    let tf = TestFunction::bump(1, 3, 5, 1.0).unwrap();
    let with = level_coeffs_uncharged(&b, &tf.to_evalfn(), 5, None).unwrap();
    let t2 = tf.clone();
    let without =
        level_coeffs_uncharged(&b, &EvalFn::new(1, move |s: &[f64]| t2.eval(s)), 5, None).unwrap();
    assert_eq!(with.values, without.values);
    let _ = CubeIndex::root(1);
    let _ = PiecewisePoly::zero(0, 1, 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn reproduction_invariant(seed in 0u64..u64::MAX, r in 1usize..=3, d in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = build_interp(r, d).unwrap();
        let tf = random_tensor_poly(&mut rng, r, d);
        let pf = op.apply(&tf.to_evalfn());
        for s in random_points(&mut rng, d, 1000) {
            prop_assert!((pf.eval(&s) - tf.eval(&s)).abs() < 1e-9);
        }
    }
}
