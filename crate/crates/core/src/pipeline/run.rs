use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::contract_bound;
use crate::funcspace::{EvalCounter, EvalFn, PiecewisePoly, PolyDump};
use crate::interp::{apply_p_l, level_coeffs_uncharged, reconstruct_v_l, DetailBasis, LevelCoeffs};
use crate::qsim::{approx_embedding, median_index, BackendKind, QuantConfig, QueryLedger};
use crate::rng::{stream, task};
use crate::schedule::{classify_regime, Schedule};
use crate::seqspace::embed_error;
use crate::{Error, Result};

/// Inputs of one run besides the function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    #[serde(with = "crate::serde_norm")]
    pub p: f64,
    #[serde(with = "crate::serde_norm")]
    pub q: f64,
    pub r: usize,
    pub d: usize,
    pub n: u64,
    pub backend: BackendKind,
    /// Explicit code width; by default the smallest admissible `m*`.
    pub quant: Option<QuantConfig>,
    pub seed: u64,
    /// Skip all corrections (`l* = l0`), the deterministic baseline.
    pub force_classical: bool,
    /// Embedding constant `c` with `‖f‖_∞ ≤ c‖f‖_{W_p^r}`.
    pub c_emb: f64,
    /// Ball constant: `Γ_l` maps the unit Sobolev ball into `C_ball 2^{−rl}` balls.
    pub c_ball: f64,
    /// Backend contract constant, used for the per-run success flags.
    pub c_backend: f64,
}

impl RunParams {
    /// Parameters with constants from `calib`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: f64,
        q: f64,
        r: usize,
        d: usize,
        n: u64,
        backend: BackendKind,
        seed: u64,
        calib: &crate::calib::Calibration,
    ) -> Result<Self> {
        Ok(Self {
            p,
            q,
            r,
            d,
            n,
            backend,
            quant: None,
            seed,
            force_classical: false,
            c_emb: calib.c_emb(p, r, d)?,
            c_ball: calib.c_ball(p, r, d)?,
            c_backend: calib.backend_c(p, q),
        })
    }
}

/// Outcome of one backend run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackendRun {
    pub used: u64,
    pub error: f64,
    pub bound: f64,
    pub success: bool,
}

/// Per-level diagnostics of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDiag {
    pub l: u32,
    pub big_n: u64,
    pub n_l: u64,
    pub nu_l: u32,
    pub radius: f64,
    /// Coefficient-space norm `‖Γ_l f‖_{L_p^{N_l}}`.
    pub input_norm: f64,
    pub runs: Vec<BackendRun>,
    /// `‖Γ_l f − combined‖_{L_q^{N_l}}`.
    pub combined_error: f64,
    pub combined_success: bool,
    /// `Σ_k |a_{jk}| 2^{−m*/2}` bound on each `|U_l f − Γ_l f|` entry.
    pub quantization_gap: f64,
}

/// The algorithm's output: a sum of piecewise polynomials.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub params: RunParams,
    /// `P_{l0} f` followed by one correction per level `l0 ≤ l < l*`.
    pub output: Vec<PiecewisePoly>,
    pub ledger: QueryLedger,
    pub schedule: Schedule,
    pub quant: Option<QuantConfig>,
    /// Evaluations actually used by the base interpolant, `κ 2^{d l0}`.
    pub base_evals: u64,
    pub diagnostics: Vec<LevelDiag>,
}

impl RunResult {
    /// `Σ summands(s)`.
    pub fn eval(&self, s: &[f64]) -> f64 {
        self.output.iter().map(|g| g.eval(s)).sum()
    }

    pub fn report(&self) -> RunReport {
        RunReport {
            params: self.params,
            schedule: self.schedule.clone(),
            ledger: self.ledger,
            quant: self.quant,
            base_evals: self.base_evals,
            diagnostics: self.diagnostics.clone(),
            cost: super::cost_report(self),
            summands: self.output.iter().map(|g| g.stored_cells()).collect(),
        }
    }

    pub fn dumps(&self) -> Vec<PolyDump> {
        self.output.iter().map(|g| g.to_dump()).collect()
    }
}

/// Serializable summary of a [`RunResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub params: RunParams,
    pub schedule: Schedule,
    pub ledger: QueryLedger,
    pub quant: Option<QuantConfig>,
    pub base_evals: u64,
    pub diagnostics: Vec<LevelDiag>,
    pub cost: super::CostReport,
    /// Stored cell count of each summand.
    pub summands: Vec<usize>,
}

/// Shared detail bases, built once per `(r, d)`.
pub fn detail_basis(r: usize, d: usize) -> Result<Arc<DetailBasis>> {
    type Cache = Mutex<HashMap<(usize, usize), Arc<DetailBasis>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("basis cache").get(&(r, d)) {
        return Ok(b.clone());
    }
    let b = Arc::new(DetailBasis::new(r, d)?);
    cache.lock().expect("basis cache").insert((r, d), b.clone());
    Ok(b)
}

/// Runs the multilevel algorithm on `f`.
///
/// The base interpolant `P_{l0} f` is computed classically. Each level
/// `l0 ≤ l < l*` runs the backend `ν_l` times on the coordinates of `Γ_l f`
/// with budget `n_l`, keeps the vector median and maps it back with `V_l`.
/// Every backend query is charged as `2κ″` evaluations of `f`, and each run
/// is charged its full budget, so the ledger's `fn_evals` equals `ñ` (the
/// exact backend, which ignores budgets, is charged what it reads).
pub fn approximate(f: &EvalFn, params: &RunParams) -> Result<RunResult> {
    let RunParams { p, q, r, d, n, .. } = *params;
    if f.d() != d {
        return Err(Error::Parameter(format!(
            "function dimension {} differs from d = {d}",
            f.d()
        )));
    }
    classify_regime(p, q, r, d)?;
    let basis = detail_basis(r, d)?;
    let schedule = Schedule::build(
        p,
        q,
        r,
        d,
        n,
        basis.kappa_prime,
        basis.kappa_dprime,
        params.force_classical,
    )?;

    let counter = EvalCounter::default();
    let fc = f.clone().with_counter(counter.clone());
    let base = apply_p_l(&basis.op, &fc, schedule.l0)?;
    let base_evals = counter.get();
    debug_assert!(base_evals <= n);
    let mut ledger = QueryLedger {
        fn_evals: n,
        ..Default::default()
    };
    let mut output = vec![base];
    let mut diagnostics = Vec::new();

    let quant = if schedule.is_classical() {
        None
    } else {
        let qc = match params.quant {
            Some(qc) => qc,
            None => QuantConfig::for_run(schedule.l_star, r, params.c_emb)?,
        };
        qc.validate(schedule.l_star, r)?;
        Some(qc)
    };

    for row in &schedule.rows {
        let qc = quant.expect("set for non-classical schedules");
        let x: LevelCoeffs = level_coeffs_uncharged(&basis, f, row.l, Some(&qc))?;
        let radius = params.c_ball * (-(r as f64) * row.l as f64).exp2();
        let bound = contract_bound(params.c_backend, radius, row.big_n, row.n_l, p, q);
        let outcomes: Vec<Result<(crate::seqspace::SeqVec, QueryLedger, BackendRun)>> = (0..row
            .nu_l)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(params.seed, task::LEVEL_BASE + row.l, t);
                let mut lg = QueryLedger::default();
                let out = approx_embedding(
                    &x.values,
                    p,
                    q,
                    radius,
                    row.n_l,
                    &params.backend,
                    &mut rng,
                    &mut lg,
                )?;
                if out.shadow_queries != lg.q_queries {
                    return Err(Error::Contract(
                        "backend ledger disagrees with its shadow count".into(),
                    ));
                }
                let error = embed_error(&x.values, &out.xhat, q)?;
                let charged = out.used.max(row.n_l);
                lg.fn_evals += 2 * basis.kappa_dprime as u64 * charged;
                Ok((
                    out.xhat,
                    lg,
                    BackendRun {
                        used: out.used,
                        error,
                        bound,
                        success: error <= bound,
                    },
                ))
            })
            .collect();
        let mut candidates = Vec::with_capacity(outcomes.len());
        let mut runs = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            let (xhat, lg, run) = o?;
            ledger.merge(&lg);
            candidates.push(xhat);
            runs.push(run);
        }
        let pick = median_index(&candidates, q)?;
        let combined = candidates.swap_remove(pick);
        let combined_error = embed_error(&x.values, &combined, q)?;
        let input_norm = crate::seqspace::lpn_norm(&x.values, p)?;
        let g = LevelCoeffs {
            l: row.l,
            kappa_prime: basis.kappa_prime,
            values: combined,
        };
        output.push(reconstruct_v_l(&basis, &g)?);
        diagnostics.push(LevelDiag {
            l: row.l,
            big_n: row.big_n,
            n_l: row.n_l,
            nu_l: row.nu_l,
            radius,
            input_norm,
            runs,
            combined_error,
            combined_success: combined_error <= bound,
            quantization_gap: basis.abs_row_sum() * qc.step(),
        });
    }

    let mut result = RunResult {
        params: *params,
        output,
        ledger,
        schedule,
        quant,
        base_evals,
        diagnostics,
    };
    let cost = super::cost_report(&result);
    result.ledger.gate_estimate = cost.gate_estimate;
    result.ledger.qubit_estimate = cost.qubit_estimate;
    Ok(result)
}
