use proptest::prelude::*;
use qapprox::calib::{contract_bound, percentile, Calibration, DESIGN_BUDGET, DESIGN_N};
use qapprox::hardgen::min_code_width;
use qapprox::qsim::*;
use qapprox::rng::stream;
use qapprox::seqspace::{embed_error, SeqVec};
use rand::Rng as _;

/// Phase-estimation outcome probabilities by direct summation of the
/// amplitudes `M^{-1} Σ_j e^{2πi j (±φ − y/M)}`, `φ = asin√a / π`.
fn ae_oracle(a: f64, m: usize) -> Vec<f64> {
    let phi = a.sqrt().asin() / std::f64::consts::PI;
    (0..m)
        .map(|y| {
            let mut total = 0.0;
            for sgn in [1.0, -1.0] {
                let (mut re, mut im) = (0.0, 0.0);
                for j in 0..m {
                    let t =
                        2.0 * std::f64::consts::PI * j as f64 * (sgn * phi - y as f64 / m as f64);
                    re += t.cos();
                    im += t.sin();
                }
                total += 0.5 * (re * re + im * im) / (m * m) as f64;
            }
            total
        })
        .collect()
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn beta_gamma_examples() {
    assert_eq!(beta(0.0, 4), 8);
    assert_eq!(beta(-100.0, 4), 0);
    assert_eq!(beta(2.5, 4), 15);
    assert_eq!(gamma(8, 4).unwrap(), 0.0);
    assert_eq!(gamma(0, 4).unwrap(), -2.0);
    assert!(gamma(16, 4).is_err());
}

#[test]
fn sandwich_exhaustive() {
    // Grid of spacing 2^{-m/2-3} over [-2^{m/2-1}, 2^{m/2-1}); every grid
    // point and every γ value is a dyadic rational, so the f64 checks are exact.
    for m in [4u32, 8, 12] {
        let half = (m / 2) as i32;
        let step = 2f64.powi(-half - 3);
        let lo = -2f64.powi(half - 1);
        let count = (2.0 * -lo / step) as u64;
        for k in 0..count {
            let z = lo + k as f64 * step;
            let g = gamma(beta(z, m), m).unwrap();
            assert!(g <= z && z - g < 2f64.powi(-half), "m={m} z={z} g={g}");
            // the residual is itself a grid multiple: no rounding happened
            assert_eq!(((z - g) / step).fract(), 0.0);
        }
    }
}

#[test]
fn gated_codes_do_not_clamp_ball_vectors() {
    // With m*/2 − 1 ≥ dk/p every |a_i| ≤ N^{1/p} stays inside the code range,
    // so the sandwich holds coordinatewise (no clamping loss).
    let mut rng = stream(5, 70, 0);
    let mut checked = 0;
    for t in 0..10_000u32 {
        let (d, k, p) =
            [(1usize, 4u32, 1.0), (1, 6, 2.0), (2, 3, 1.0), (2, 2, 2.0)][(t % 4) as usize];
        let n = 1usize << (d as u32 * k);
        let m = min_code_width(d, k, p);
        let h = 2f64.powi(-((m / 2) as i32));
        let a = if t % 2 == 0 {
            random_ball_vector(n, p, &mut rng)
        } else {
            random_spikes(n, 1 + rng.gen_range(0..n), p, &mut rng)
        };
        for (_, z) in a.nonzeros() {
            let g = gamma(beta(z, m), m).unwrap();
            assert!(g <= z && z <= g + h, "t={t} z={z}");
            checked += 1;
        }
    }
    assert!(checked > 10_000);
}

#[test]
fn quant_config_constraints() {
    let qc = QuantConfig::for_run(8, 2, 1.3).unwrap();
    assert_eq!(qc.m_star % 2, 0);
    assert!(qc.range() >= 1.3);
    let res = 2f64.powi(-((qc.m_star / 2) as i32));
    assert!(res <= 2f64.powi(-16) / 9.0);
    // smallest admissible
    assert!(QuantConfig::new(qc.m_star - 2, 1.3)
        .and_then(|c| c.validate(8, 2))
        .is_err());
    assert!(QuantConfig::new(5, 1.0).is_err());
}

#[test]
fn grover_examples() {
    let mut lg = QueryLedger::default();
    let mut rng = stream(1, 71, 0);
    assert!((grover_success_prob(4, 1, 1) - 1.0).abs() < 1e-15);
    assert!((grover_success_prob(64, 5, 0) - 5.0 / 64.0).abs() < 1e-15);
    for _ in 0..100 {
        assert!(grover_trial(4, 1, 1, &mut rng, &mut lg));
        assert!(!grover_trial(64, 0, 3, &mut rng, &mut lg));
    }
    assert_eq!(lg.q_queries, 100 * 2 + 100 * 4);
    assert_eq!(lg.measurements, 200);
}

#[test]
fn grover_frequencies() {
    let trials = 10_000u32;
    for (i, (n, m, k)) in [(64u64, 1u64, 3u64), (256, 4, 2), (1024, 10, 5), (16, 3, 1)]
        .into_iter()
        .enumerate()
    {
        let p = grover_success_prob(n, m, k);
        let mut rng = stream(2, 72, i as u32);
        let mut lg = QueryLedger::default();
        let hits = (0..trials)
            .filter(|_| grover_trial(n, m, k, &mut rng, &mut lg))
            .count() as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(
            (hits / trials as f64 - p).abs() <= 3.0 * sigma + 1e-12,
            "({n},{m},{k})"
        );
    }
}

#[test]
fn ae_matches_direct_summation() {
    for (a, m) in [(0.3, 32usize), (0.05, 16), (0.77, 64)] {
        let closed = ae_distribution(a, m);
        let oracle = ae_oracle(a, m);
        assert!(tv(&closed, &oracle) < 1e-10);
        let mut rng = stream(3, 73, m as u32);
        let mut lg = QueryLedger::default();
        let samples = 100_000;
        let mut hist = vec![0.0; m];
        for _ in 0..samples {
            let ah = ae_sample(a, m, &mut rng, &mut lg);
            // â = sin²(πy/M) determines y up to y ↔ M − y; fold onto the oracle
            let y = ((ah.sqrt().asin() / std::f64::consts::PI) * m as f64).round() as usize;
            hist[y] += 1.0 / samples as f64;
        }
        let mut folded = vec![0.0; m];
        for (y, p) in oracle.iter().enumerate() {
            folded[y.min(m - y) % m] += p;
        }
        assert!(tv(&hist, &folded) < 0.02, "a={a} M={m}");
        assert_eq!(lg.q_queries, samples as u64 * (m as u64 - 1));
    }
}

#[test]
fn ae_on_grid_is_exact() {
    let mut rng = stream(4, 74, 0);
    let mut lg = QueryLedger::default();
    for _ in 0..20 {
        assert_eq!(ae_sample(0.0, 16, &mut rng, &mut lg), 0.0);
    }
    let m = 32;
    let a = (std::f64::consts::PI * 7.0 / m as f64).sin().powi(2);
    for _ in 0..20 {
        assert!((ae_sample(a, m, &mut rng, &mut lg) - a).abs() < 1e-12);
    }
}

#[test]
fn samplers_are_deterministic() {
    let run = |seed| {
        let mut rng = stream(seed, 75, 0);
        let mut lg = QueryLedger::default();
        let g: Vec<bool> = (0..50)
            .map(|_| grover_trial(100, 7, 2, &mut rng, &mut lg))
            .collect();
        let a: Vec<f64> = (0..50)
            .map(|_| ae_sample(0.3, 8, &mut rng, &mut lg))
            .collect();
        (g, a, lg)
    };
    assert_eq!(run(9), run(9));
    assert_ne!(run(9).1, run(10).1);
}

#[test]
fn backend_examples() {
    let mut rng = stream(6, 76, 0);
    let x = random_ball_vector(256, 1.0, &mut rng);
    let mut lg = QueryLedger::default();
    let out = approx_embedding(
        &x,
        1.0,
        2.0,
        1.0,
        32,
        &BackendKind::Exact,
        &mut rng,
        &mut lg,
    )
    .unwrap();
    assert_eq!(out.xhat, x);
    assert_eq!(lg.coord_reads, 256);
    let z = SeqVec::zeros(256);
    for b in [
        BackendKind::Exact,
        BackendKind::ClassicalSample,
        BackendKind::quantum(),
    ] {
        let out = approx_embedding(&z, 1.0, 2.0, 1.0, 32, &b, &mut rng, &mut lg).unwrap();
        assert_eq!(out.xhat.nnz(), 0, "{}", b.name());
    }
    assert!(approx_embedding(
        &z,
        1.0,
        2.0,
        1.0,
        0,
        &BackendKind::quantum(),
        &mut rng,
        &mut lg
    )
    .is_err());
    let mut lg = QueryLedger::default();
    let out = approx_embedding(
        &x,
        1.0,
        2.0,
        1.0,
        40,
        &BackendKind::ClassicalSample,
        &mut rng,
        &mut lg,
    )
    .unwrap();
    assert_eq!(lg.coord_reads, 40);
    assert!(out.xhat.nnz() <= 40);
}

#[test]
fn quantum_contract_at_design_point() {
    // Fresh inputs (not the calibration stream) against the frozen constant.
    let calib = Calibration::frozen();
    let (p, q) = (1.0, 2.0);
    let c = calib.backend_c(p, q);
    let bound = contract_bound(c, 1.0, DESIGN_N, DESIGN_BUDGET, p, q);
    let mut errs = Vec::new();
    for t in 0..400u32 {
        let mut rng = stream(2024, 77, t);
        let x = random_ball_vector(DESIGN_N as usize, p, &mut rng);
        let mut lg = QueryLedger::default();
        let out = approx_embedding(
            &x,
            p,
            q,
            1.0,
            DESIGN_BUDGET,
            &BackendKind::quantum(),
            &mut rng,
            &mut lg,
        )
        .unwrap();
        // ledger conservation against the independent shadow count
        assert_eq!(out.shadow_queries, lg.q_queries);
        assert_eq!(out.used, lg.findim_queries());
        assert!(out.used <= DESIGN_BUDGET);
        errs.push(embed_error(&x, &out.xhat, q).unwrap());
    }
    assert!(percentile(&errs[..200], 0.75) <= bound);
    let rate = errs.iter().filter(|&&e| e <= bound).count() as f64 / errs.len() as f64;
    assert!(rate >= 0.70, "success rate {rate}");
}

#[test]
fn median_examples() {
    let s = |v: f64| SeqVec::dense(vec![v]);
    let same = vec![s(2.0); 5];
    assert_eq!(median_combine(&same, 2.0).unwrap(), s(2.0));
    let c = vec![s(0.9), s(1.0), s(1.05), s(5.0)];
    assert_eq!(median_combine(&c, 1.0).unwrap(), s(1.0));
    assert!(median_combine(&[], 1.0).is_err());
}

#[test]
fn median_majority_property() {
    // More than half the candidates within ε of the truth → output within 3ε,
    // against adversaries that cluster or scatter.
    let mut rng = stream(8, 78, 0);
    let n = 16;
    for t in 0..500 {
        let q = [1.0, 2.0, f64::INFINITY][t % 3];
        let nu = rng.gen_range(1..=17usize);
        let good = nu / 2 + 1;
        let eps = 0.1;
        let truth: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let centre: Vec<f64> = truth.iter().map(|v| v + rng.gen_range(2.0..4.0)).collect();
        let mut cands = Vec::new();
        for _ in 0..good {
            // shift every coordinate by at most ε: within ε in every L_q^N
            cands.push(SeqVec::dense(
                truth.iter().map(|v| v + rng.gen_range(-eps..eps)).collect(),
            ));
        }
        for _ in good..nu {
            let v = if t % 2 == 0 {
                centre
                    .iter()
                    .map(|c| c + rng.gen_range(-0.01..0.01))
                    .collect()
            } else {
                (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect()
            };
            cands.push(SeqVec::dense(v));
        }
        // adversarial order: bad candidates first
        cands.rotate_left(good % nu.max(1));
        let out = median_combine(&cands, q).unwrap();
        let e = embed_error(&out, &SeqVec::dense(truth.clone()), q).unwrap();
        assert!(e <= 3.0 * eps + 1e-12, "trial {t}: {e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn beta_is_monotone_and_total(z1 in -100.0..100.0f64, z2 in -100.0..100.0f64, mi in 1u32..20) {
        let m = 2 * mi;
        let (a, b) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        prop_assert!(beta(a, m) <= beta(b, m));
        prop_assert!(beta(b, m) < 1u128 << m);
    }

    #[test]
    fn ledger_merge_is_additive(a in 0u64..1000, b in 0u64..1000, c in 0u64..1000, d in 0u64..1000) {
        let x = QueryLedger { fn_evals: a, q_queries: b, ..Default::default() };
        let y = QueryLedger { fn_evals: c, coord_reads: d, ..Default::default() };
        let mut m = x;
        m.merge(&y);
        prop_assert_eq!(m.fn_evals, a + c);
        prop_assert_eq!(m.findim_queries(), b + d);
    }
}
