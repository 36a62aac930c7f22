use super::RunResult;
use crate::funcspace::{integrate, EvalFn, PiecewisePoly, Quadrature};
use crate::{check_norm_index, Result};

/// `‖f − Σ summands‖_{L_q}`, integrating only over cells where `f` or a
/// summand can be nonzero. Leaves are refined to `quad.level` and at least
/// `quad.sub_levels` below the finest piece. Evaluations are not charged.
pub fn measure_error(f: &EvalFn, result: &RunResult, q: f64, quad: &Quadrature) -> Result<f64> {
    error_of_sum(f, &result.output, q, quad)
}

/// As [`measure_error`] for an arbitrary list of summands.
pub fn error_of_sum(
    f: &EvalFn,
    summands: &[PiecewisePoly],
    q: f64,
    quad: &Quadrature,
) -> Result<f64> {
    check_norm_index(q)?;
    let mut active = f.active_set();
    let mut finest = f.support().map(|s| s.level).unwrap_or(0);
    for g in summands {
        g.mark_active(&mut active);
        if g.stored_cells() > 0 {
            finest = finest.max(g.level());
        }
    }
    let leaf = quad.level.max(finest + quad.sub_levels);
    let e = |s: &[f64]| f.eval_uncharged(s) - summands.iter().map(|g| g.eval(s)).sum::<f64>();
    Ok(integrate(
        f.d(),
        &e,
        &active,
        leaf,
        quad.order,
        quad.sup_points,
        q,
    ))
}
