//! Regime classification and level/budget arithmetic of the multilevel
//! algorithm. Level logarithms are base 2; the `ν_l` formulas use natural
//! logarithms.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The case split of the error rates in `(p, q, r, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p ≥ q`: the classical interpolant is already optimal.
    Classical,
    /// `r/d > 2/p − 2/q`.
    High,
    /// `r/d = 2/p − 2/q`.
    Critical,
    /// `r/d < 2/p − 2/q`.
    Low,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Classical => "classical",
            Regime::High => "high",
            Regime::Critical => "critical",
            Regime::Low => "low",
        }
    }
}

/// `2/p − 2/q` (with `1/∞ = 0`).
pub fn gap(p: f64, q: f64) -> f64 {
    2.0 * (inv(p) - inv(q))
}

pub(crate) fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

const TIE: f64 = 1e-12;

pub fn classify_regime(p: f64, q: f64, r: usize, d: usize) -> Result<Regime> {
    crate::check_norm_index(p)?;
    crate::check_norm_index(q)?;
    if r == 0 || d == 0 {
        return Err(Error::Parameter("r and d must be positive".into()));
    }
    let s = r as f64 / d as f64;
    if s <= inv(p) + TIE {
        return Err(Error::Domain(format!(
            "r/d = {s} must exceed 1/p = {}",
            inv(p)
        )));
    }
    if p >= q {
        return Ok(Regime::Classical);
    }
    let g = gap(p, q);
    Ok(if (s - g).abs() <= TIE {
        Regime::Critical
    } else if s > g {
        Regime::High
    } else {
        Regime::Low
    })
}

/// `(l0, l*)` with `l0 = ⌊log2(n/κ)/d⌋` and `l* = l0` (`p ≥ q`) or `2 l0`.
pub fn base_levels(n: u64, kappa: usize, p: f64, q: f64, d: usize) -> Result<(u32, u32)> {
    let floor = (kappa as u64).max(5);
    if n < floor {
        return Err(Error::Domain(format!(
            "n = {n} below max(kappa, 5) = {floor}"
        )));
    }
    // integer floor of log2(n/κ)/d: largest l0 with κ·2^{d l0} ≤ n
    let mut l0 = 0u32;
    while (kappa as u128) << (d as u32 * (l0 + 1)) <= n as u128 {
        l0 += 1;
    }
    let l_star = if p >= q { l0 } else { 2 * l0 };
    Ok((l0, l_star))
}

/// One correction level: `N_l = κ′ 2^{dl}` coordinates, backend budget
/// `n_l`, `ν_l` repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub l: u32,
    pub big_n: u64,
    pub n_l: u64,
    pub nu_l: u32,
}

/// Slack exponent: `min(1, slack/2)` with slack `r/(2/p−2/q) − d` (high) or
/// `d − r/(2/p−2/q)` (low); zero otherwise.
pub fn delta(regime: Regime, p: f64, q: f64, r: usize, d: usize) -> f64 {
    let g = gap(p, q);
    match regime {
        Regime::High => (0.5 * (r as f64 / g - d as f64)).min(1.0),
        Regime::Low => (0.5 * (d as f64 - r as f64 / g)).min(1.0),
        _ => 0.0,
    }
}

/// `(δ, rows)` for levels `l0 ≤ l < l*`.
#[allow(clippy::too_many_arguments)]
pub fn level_budgets(
    regime: Regime,
    l0: u32,
    l_star: u32,
    p: f64,
    q: f64,
    r: usize,
    d: usize,
    kappa_prime: usize,
) -> Result<(f64, Vec<LevelRow>)> {
    if regime == Regime::Classical {
        return Err(Error::Contract(
            "no level budgets in the classical regime".into(),
        ));
    }
    let dl: f64 = (d as u32 * l0) as f64;
    let dlt = delta(regime, p, q, r, d);
    let mut rows = Vec::new();
    for l in l0..l_star {
        let (n_l, nu) = match regime {
            Regime::High => (
                (dl - dlt * (l - l0) as f64).exp2().ceil(),
                (8.0 * (2.0 * ((l - l0 + 1) as f64).ln() + 8f64.ln())).ceil(),
            ),
            Regime::Low => (
                (dl - dlt * (l_star - l) as f64).exp2().ceil(),
                (8.0 * (2.0 * ((l_star - l) as f64).ln() + 8f64.ln())).ceil(),
            ),
            Regime::Critical => {
                let lf = l0 as f64;
                (
                    (dl.exp2() / ((lf + 1.0) * (lf + 2.0).ln())).ceil(),
                    (8.0 * ((lf + 2.0).ln() + 4f64.ln())).ceil(),
                )
            }
            Regime::Classical => unreachable!(),
        };
        let cells = crate::dyadic::cell_count(l, d)?;
        let big_n = cells
            .checked_mul(kappa_prime as u64)
            .ok_or_else(|| Error::Capability(format!("N_l overflows at level {l}")))?;
        rows.push(LevelRow {
            l,
            big_n,
            n_l: n_l as u64,
            nu_l: nu as u32,
        });
    }
    Ok((dlt, rows))
}

/// `ñ = n + 2κ″ Σ ν_l n_l`.
pub fn total_queries(n: u64, kappa_dprime: usize, rows: &[LevelRow]) -> u64 {
    n + 2 * kappa_dprime as u64 * rows.iter().map(|r| r.nu_l as u64 * r.n_l).sum::<u64>()
}

/// `Σ e^{−ν_l/8}`, the failure-probability budget that must stay `≤ 1/4`.
pub fn failure_sum(rows: &[LevelRow]) -> f64 {
    rows.iter().map(|r| (-(r.nu_l as f64) / 8.0).exp()).sum()
}

/// The full level plan of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub regime: Regime,
    #[serde(with = "crate::serde_norm")]
    pub p: f64,
    #[serde(with = "crate::serde_norm")]
    pub q: f64,
    pub r: usize,
    pub d: usize,
    pub n: u64,
    pub kappa: usize,
    pub kappa_prime: usize,
    pub kappa_dprime: usize,
    pub l0: u32,
    pub l_star: u32,
    pub delta: f64,
    pub rows: Vec<LevelRow>,
    pub ntilde: u64,
    pub failure_sum: f64,
}

impl Schedule {
    /// Plans a run. With `force_classical` the corrections are dropped
    /// (`l* = l0`, `ñ = n`) whatever the regime.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        p: f64,
        q: f64,
        r: usize,
        d: usize,
        n: u64,
        kappa_prime: usize,
        kappa_dprime: usize,
        force_classical: bool,
    ) -> Result<Self> {
        let regime = classify_regime(p, q, r, d)?;
        let kappa = (r as u64)
            .checked_pow(d as u32)
            .ok_or_else(|| Error::Capability("kappa overflow".into()))?
            as usize;
        let (l0, mut l_star) = base_levels(n, kappa, p, q, d)?;
        let (delta, rows) = if regime == Regime::Classical || force_classical {
            l_star = l0;
            (0.0, Vec::new())
        } else {
            level_budgets(regime, l0, l_star, p, q, r, d, kappa_prime)?
        };
        let ntilde = total_queries(n, kappa_dprime, &rows);
        let failure_sum = failure_sum(&rows);
        Ok(Self {
            regime,
            p,
            q,
            r,
            d,
            n,
            kappa,
            kappa_prime,
            kappa_dprime,
            l0,
            l_star,
            delta,
            rows,
            ntilde,
            failure_sum,
        })
    }

    pub fn is_classical(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Error exponents (in `n`) of the deterministic, randomized and quantum
/// settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub deterministic: f64,
    pub random: f64,
    pub quantum: f64,
}

pub fn theory_exponents(p: f64, q: f64, r: usize, d: usize) -> Result<Exponents> {
    classify_regime(p, q, r, d)?;
    let s = r as f64 / d as f64;
    let classical = -(s - (inv(p) - inv(q)).max(0.0));
    let g = gap(p, q);
    let quantum = if p >= q || s >= g - TIE {
        -s
    } else {
        -2.0 * s + g
    };
    Ok(Exponents {
        deterministic: classical,
        random: classical,
        quantum,
    })
}
