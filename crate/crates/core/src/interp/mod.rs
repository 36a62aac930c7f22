//! Interpolation `P`, its dyadic scalings `P_l`, the detail basis of
//! `P′ = P_1 − P_0` and the coefficient maps `U_l`, `Γ_l`, `V_l` with
//! `P_{l+1} − P_l = V_l U_l`.

mod detail;
mod lagrange;
mod levels;

pub use detail::{build_detail_basis, DetailBasis, PIVOT_TOL};
pub use lagrange::{apply_p_l, build_interp, nodes_1d, InterpOperator, MAX_KAPPA};
pub use levels::{
    coeffs_u_l, level_coeffs_uncharged, quantized_coeffs_gamma_l, reconstruct_v_l, LevelCoeffs,
};
