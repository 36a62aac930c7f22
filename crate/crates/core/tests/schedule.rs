use proptest::prelude::*;
use qapprox::schedule::*;

const INF: f64 = f64::INFINITY;

/// One parameter set per non-classical regime.
const REGIMES: &[(f64, f64, usize, usize, Regime)] = &[
    (1.0, 2.0, 2, 1, Regime::High),
    (2.0, INF, 3, 2, Regime::High),
    (1.0, INF, 2, 1, Regime::Critical),
    (1.0, 4.0, 3, 2, Regime::Critical),
    (1.0, INF, 3, 2, Regime::Low),
    (1.0, INF, 4, 3, Regime::Low),
];

fn schedule(p: f64, q: f64, r: usize, d: usize, n: u64) -> Schedule {
    let b = qapprox::pipeline::detail_basis(r, d).unwrap();
    Schedule::build(p, q, r, d, n, b.kappa_prime, b.kappa_dprime, false).unwrap()
}

#[test]
fn classify_examples() {
    assert_eq!(classify_regime(1.0, 2.0, 2, 1).unwrap(), Regime::High);
    assert_eq!(classify_regime(1.0, INF, 3, 2).unwrap(), Regime::Low);
    assert_eq!(classify_regime(1.0, 4.0, 3, 2).unwrap(), Regime::Critical);
    assert_eq!(classify_regime(2.0, 2.0, 2, 1).unwrap(), Regime::Classical);
    assert_eq!(classify_regime(INF, 1.0, 1, 3).unwrap(), Regime::Classical);
    assert!(classify_regime(1.0, 2.0, 1, 1).is_err());
    assert!(classify_regime(2.0, 4.0, 1, 2).is_err());
    for &(p, q, r, d, want) in REGIMES {
        assert_eq!(classify_regime(p, q, r, d).unwrap(), want);
    }
}

#[test]
fn base_level_examples() {
    assert_eq!(base_levels(64, 4, 2.0, 2.0, 1).unwrap(), (4, 4));
    assert_eq!(base_levels(64, 4, 1.0, 2.0, 1).unwrap(), (4, 8));
    assert_eq!(base_levels(1 << 10, 4, 1.0, INF, 2).unwrap(), (4, 8));
    assert!(base_levels(4, 4, 1.0, 2.0, 1).is_err());
    assert!(base_levels(8, 9, 1.0, 2.0, 2).is_err());
    let s = schedule(2.0, 1.0, 2, 1, 100);
    assert_eq!(s.l_star, s.l0);
    assert_eq!(s.ntilde, 100);
    assert!(s.rows.is_empty());
}

#[test]
fn budget_examples() {
    let (p, q, r, d) = (1.0, 2.0, 2, 1);
    assert_eq!(delta(Regime::High, p, q, r, d), 0.5);
    let (dl, rows) = level_budgets(Regime::High, 4, 8, p, q, r, d, 1).unwrap();
    assert_eq!(dl, 0.5);
    assert_eq!(rows[0].l, 4);
    assert_eq!(rows[0].nu_l, 17);
    assert_eq!(rows[0].n_l, 16);
    assert_eq!(rows[1].n_l, 12);
    assert_eq!(rows.len(), 4);
    assert!(level_budgets(Regime::Classical, 4, 4, 2.0, 2.0, 2, 1, 1).is_err());
    // low regime: the last level has ln(l* − l) = 0
    let (_, rows) = level_budgets(Regime::Low, 3, 6, 1.0, INF, 3, 2, 7).unwrap();
    assert_eq!(rows.last().unwrap().nu_l, 17);
    assert_eq!(
        rows.last().unwrap().n_l,
        (64f64 * 2f64.powf(-0.25)).ceil() as u64
    );
}

#[test]
fn total_query_examples() {
    assert_eq!(total_queries(64, 3, &[]), 64);
    let row = LevelRow {
        l: 5,
        big_n: 32,
        n_l: 12,
        nu_l: 17,
    };
    assert_eq!(total_queries(64, 3, &[row]), 1288);
}

#[test]
fn failure_budget_over_full_sweep() {
    for &(p, q, r, d, _) in REGIMES {
        for k in 6..=20 {
            let s = schedule(p, q, r, d, 1 << k);
            // each term against its analytic bound, then the sum with rounding slack
            for row in &s.rows {
                let term = (-(row.nu_l as f64) / 8.0).exp();
                let bound = match s.regime {
                    Regime::High => 0.125 / ((row.l - s.l0 + 1) as f64).powi(2),
                    Regime::Low => 0.125 / ((s.l_star - row.l) as f64).powi(2),
                    _ => 0.25 / (s.l0 + 2) as f64,
                };
                assert!(term <= bound * (1.0 + 1e-12));
            }
            assert!(
                s.failure_sum + 1e-12 <= 0.25,
                "({p},{q},{r},{d}) n=2^{k}: {}",
                s.failure_sum
            );
        }
    }
}

#[test]
fn delta_keeps_margin() {
    for &(p, q, r, d, regime) in REGIMES {
        let g = gap(p, q);
        let dl = delta(regime, p, q, r, d);
        match regime {
            Regime::High => {
                let slack = r as f64 / g - d as f64;
                assert!(dl > 0.0 && slack - dl >= 0.1 * slack);
                assert!(r as f64 - g * (d as f64 + dl) > 0.0);
            }
            Regime::Low => {
                let slack = d as f64 - r as f64 / g;
                assert!(dl > 0.0 && slack - dl >= 0.1 * slack);
                assert!(r as f64 - g * (d as f64 - dl) < 0.0);
            }
            _ => assert_eq!(dl, 0.0),
        }
    }
}

#[test]
fn ntilde_grows_linearly() {
    // Frozen maxima of ñ/n over n = 2^6..2^20 (geometric-series limits at desk scale).
    for &(p, q, r, d, _) in REGIMES {
        let ratios: Vec<f64> = (8..=16)
            .map(|k| schedule(p, q, r, d, 1 << k).ntilde as f64 / (1u64 << k) as f64)
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max < 2000.0, "({p},{q},{r},{d}): {ratios:?}");
    }
    let hi: Vec<f64> = (6..=20)
        .map(|k| schedule(1.0, 2.0, 2, 1, 1 << k).ntilde as f64 / (1u64 << k) as f64)
        .collect();
    let mut sorted = hi.clone();
    sorted.sort_by(f64::total_cmp);
    let med = sorted[sorted.len() / 2];
    assert!(hi.iter().all(|&v| v <= 2.0 * med), "{hi:?}");
}

#[test]
fn schedule_json_roundtrip() {
    let s = schedule(1.0, INF, 3, 2, 4096);
    let back: Schedule = serde_json::from_str(&s.to_json().unwrap()).unwrap();
    assert_eq!(back, s);
    assert!(s.to_json().unwrap().contains("\"q\": \"inf\""));
}

#[test]
fn exponent_table() {
    let e = theory_exponents(1.0, 2.0, 2, 1).unwrap();
    assert_eq!((e.deterministic, e.random, e.quantum), (-1.5, -1.5, -2.0));
    let e = theory_exponents(2.0, 2.0, 2, 1).unwrap();
    assert_eq!((e.deterministic, e.random, e.quantum), (-2.0, -2.0, -2.0));
    let e = theory_exponents(1.0, INF, 3, 2).unwrap();
    assert!((e.quantum + 1.0).abs() < 1e-12);
    assert!((e.deterministic + 0.5).abs() < 1e-12);
    let e = theory_exponents(1.0, 4.0, 3, 2).unwrap();
    assert!((e.quantum + 1.5).abs() < 1e-12);
}

proptest! {
    #[test]
    fn schedules_are_consistent(idx in 0usize..6, k in 6u32..=20) {
        let (p, q, r, d, _) = REGIMES[idx];
        let n = 1u64 << k;
        let s = schedule(p, q, r, d, n);
        prop_assert_eq!(s.l_star, 2 * s.l0);
        prop_assert!(s.kappa as u64 * (1u64 << (d as u32 * s.l0)) <= n);
        prop_assert!(s.kappa as u64 * (1u64 << (d as u32 * (s.l0 + 1))) > n);
        prop_assert_eq!(s.rows.len() as u32, s.l_star - s.l0);
        prop_assert_eq!(s.ntilde, total_queries(n, s.kappa_dprime, &s.rows));
        prop_assert!(s.rows.iter().all(|r| r.n_l >= 1 && r.big_n == s.kappa_prime as u64 * (1u64 << (d as u32 * r.l))));
    }
}
