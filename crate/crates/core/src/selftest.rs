//! Quick invariant suite behind `qapprox selftest`. Each check runs in well
//! under a second; the full-tolerance versions live in the test suites.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::calib::Calibration;
use crate::funcspace::{EvalFn, TestFunction};
use crate::hardgen::{contraction_audit, embed_hard, min_code_width, project_phi};
use crate::interp::{apply_p_l, build_interp, coeffs_u_l, reconstruct_v_l, DetailBasis};
use crate::pipeline::{approximate, RunParams};
use crate::qsim::{
    beta, gamma, grover_success_prob, grover_trial, random_spikes, BackendKind, QueryLedger,
};
use crate::rng::{stream, task, Rng};
use crate::schedule::Schedule;
use crate::seqspace::lpn_norm;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, r: Result<(bool, String)>) -> Check {
    match r {
        Ok((passed, detail)) => Check {
            name: name.into(),
            passed,
            detail,
        },
        Err(e) => Check {
            name: name.into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn points(rng: &mut Rng, d: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

fn reproduction(rng: &mut Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (r, d) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2)] {
        let op = build_interp(r, d)?;
        for _ in 0..10 {
            let coeffs = (0..r.pow(d as u32))
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect();
            let f = TestFunction::polynomial(d, r, coeffs)?;
            let pf = op.apply(&f.to_evalfn());
            for s in points(rng, d, 50) {
                worst = worst.max((pf.eval(&s) - f.eval(&s)).abs());
            }
        }
    }
    Ok((worst < 1e-9, format!("max |Pf - f| = {worst:.3e}")))
}

fn telescoping(rng: &mut Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (r, d) in [(2, 1), (3, 1), (2, 2)] {
        let b = DetailBasis::new(r, d)?;
        for l in 0..=2 {
            let w: f64 = rng.gen_range(0.5..3.0);
            let f = EvalFn::new(d, move |s: &[f64]| (w * s.iter().sum::<f64>()).sin());
            let lhs = apply_p_l(&b.op, &f, l + 1)?.add_scaled(&apply_p_l(&b.op, &f, l)?, -1.0)?;
            let rhs = reconstruct_v_l(&b, &coeffs_u_l(&b, &f, l)?)?;
            for s in points(rng, d, 50) {
                worst = worst.max((lhs.eval(&s) - rhs.eval(&s)).abs());
            }
        }
    }
    Ok((
        worst < 1e-9,
        format!("max |(P_(l+1) - P_l)f - V_l U_l f| = {worst:.3e}"),
    ))
}

fn sandwich(rng: &mut Rng) -> Result<(bool, String)> {
    let mut bad = 0usize;
    for m in [4u32, 8, 12] {
        let h = 2f64.powi(-((m / 2) as i32));
        let range = 2f64.powi((m / 2) as i32 - 1);
        for _ in 0..2000 {
            let z = rng.gen_range(-range..range);
            let g = gamma(beta(z, m), m)?;
            if !(g <= z && z < g + h) {
                bad += 1;
            }
        }
    }
    Ok((
        bad == 0,
        format!("{bad} violations of γ(β(z)) <= z < γ(β(z)) + 2^(-m*/2)"),
    ))
}

fn schedules() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (p, q, r, d) in [
        (1.0, 2.0, 2, 1),
        (1.0, f64::INFINITY, 2, 1),
        (1.0, f64::INFINITY, 3, 2),
    ] {
        let b = DetailBasis::new(r, d)?;
        for k in 6..=16 {
            let s = Schedule::build(p, q, r, d, 1 << k, b.kappa_prime, b.kappa_dprime, false)?;
            worst = worst.max(s.failure_sum);
        }
    }
    Ok((worst <= 0.25, format!("max Σ e^(-ν/8) = {worst:.4}")))
}

fn grover(rng: &mut Rng) -> Result<(bool, String)> {
    let trials = 4000u32;
    let mut worst = 0.0f64;
    for (n, m, k) in [(64u64, 1u64, 3u64), (256, 4, 2), (1024, 10, 5)] {
        let prob = grover_success_prob(n, m, k);
        let mut lg = QueryLedger::default();
        let hits = (0..trials)
            .filter(|_| grover_trial(n, m, k, rng, &mut lg))
            .count() as f64;
        let sigma = (prob * (1.0 - prob) / trials as f64).sqrt().max(1e-12);
        worst = worst.max((hits / trials as f64 - prob).abs() / sigma);
    }
    Ok((worst <= 4.0, format!("max deviation {worst:.2}σ")))
}

fn roundtrip(rng: &mut Rng) -> Result<(bool, String)> {
    let (p, r, d, k) = (2.0, 2, 1, 3);
    let mut worst = 0.0f64;
    for s in [1usize, 3, 8] {
        let a = random_spikes(8, s, p, rng);
        let h = embed_hard(&a, p, r, d, k, min_code_width(d, k, p))?;
        let phi = project_phi(&h.evalfn(), k)?;
        worst = worst.max(lpn_norm(
            &phi.sub(&h.coeffs.scaled(h.sigma1))?,
            f64::INFINITY,
        )?);
        let norm = h.sobolev_norm()?;
        if norm > h.certificate {
            return Ok((
                false,
                format!("certificate violated: {norm} > {}", h.certificate),
            ));
        }
    }
    Ok((
        worst < 1e-8,
        format!("max |Φ(Γa) - σ1 γβ(a)| = {worst:.3e}; certificates hold"),
    ))
}

fn contraction(seed: u64) -> Result<(bool, String)> {
    let a = contraction_audit(1, 3, 2.0, 10, seed)?;
    Ok((
        a.max_excess <= 1e-9,
        format!("max ratio {:.4}", a.max_ratio),
    ))
}

fn accounting(seed: u64, calib: &Calibration) -> Result<(bool, String)> {
    let f = crate::funcspace::sweep_bump(1.0, 2, 1, 8, 77)?.to_evalfn();
    let params = RunParams::new(1.0, 2.0, 2, 1, 128, BackendKind::quantum(), seed, calib)?;
    let res = approximate(&f, &params)?;
    Ok((
        res.ledger.fn_evals == res.schedule.ntilde,
        format!(
            "fn_evals {} vs ñ {}",
            res.ledger.fn_evals, res.schedule.ntilde
        ),
    ))
}

/// Runs every check.
pub fn run(seed: u64, calib: &Calibration) -> Vec<Check> {
    let mut rng = stream(seed, task::SELFTEST, 0);
    vec![
        check("polynomial reproduction", reproduction(&mut rng)),
        check("telescoping", telescoping(&mut rng)),
        check("quantization sandwich", sandwich(&mut rng)),
        check("schedule failure budget", schedules()),
        check("grover frequencies", grover(&mut rng)),
        check("hard-instance roundtrip", roundtrip(&mut rng)),
        check("averaging contraction", contraction(seed)),
        check("query accounting", accounting(seed, calib)),
    ]
}
