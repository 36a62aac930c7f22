use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported code width; codes live in `u128`.
pub const MAX_BITS: u32 = 126;

/// Fixed-point code width `m*` plus the embedding constant it must dominate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantConfig {
    pub m_star: u32,
    pub c_emb: f64,
}

impl QuantConfig {
    pub fn new(m_star: u32, c_emb: f64) -> Result<Self> {
        if m_star < 2 || !m_star.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "m* = {m_star} must be even and >= 2"
            )));
        }
        if m_star > MAX_BITS {
            return Err(Error::Capability(format!(
                "m* = {m_star} exceeds {MAX_BITS} bits"
            )));
        }
        Ok(Self { m_star, c_emb })
    }

    /// Smallest even `m*` with `2^{−m*/2} ≤ 2^{−r l*}/(l*+1)` and
    /// `2^{m*/2−1} ≥ c_emb`.
    pub fn for_run(l_star: u32, r: usize, c_emb: f64) -> Result<Self> {
        let mut half = 1u32;
        loop {
            let m = 2 * half;
            if m > MAX_BITS {
                return Err(Error::Capability(format!(
                    "no m* <= {MAX_BITS} satisfies the quantization constraints for l* = {l_star}, r = {r}"
                )));
            }
            let qc = Self { m_star: m, c_emb };
            if qc.check_resolution(l_star, r).is_ok() && qc.check_range().is_ok() {
                return Ok(qc);
            }
            half += 1;
        }
    }

    pub fn half(&self) -> i32 {
        (self.m_star / 2) as i32
    }

    /// Quantization step `2^{−m*/2}`.
    pub fn step(&self) -> f64 {
        (-(self.half() as f64)).exp2()
    }

    /// Representable range bound `2^{m*/2−1}`.
    pub fn range(&self) -> f64 {
        ((self.half() - 1) as f64).exp2()
    }

    pub fn check_range(&self) -> Result<()> {
        if self.range() < self.c_emb {
            return Err(Error::Config(format!(
                "m* = {}: range 2^(m*/2-1) = {} below embedding constant {}",
                self.m_star,
                self.range(),
                self.c_emb
            )));
        }
        Ok(())
    }

    pub fn check_resolution(&self, l_star: u32, r: usize) -> Result<()> {
        let need = (-(r as f64) * l_star as f64).exp2() / (l_star as f64 + 1.0);
        if self.step() > need {
            return Err(Error::Config(format!(
                "m* = {}: step {} exceeds 2^(-r l*)/(l*+1) = {need}",
                self.m_star,
                self.step()
            )));
        }
        Ok(())
    }

    pub fn validate(&self, l_star: u32, r: usize) -> Result<()> {
        self.check_range()?;
        self.check_resolution(l_star, r)
    }
}

/// `β(z)`: clamped fixed-point code `⌊2^{m/2}(z + 2^{m/2−1})⌋ ∈ [0, 2^m)`.
///
/// Computed as `⌊2^{m/2} z⌋ + 2^{m−1}` in integer arithmetic; scaling by a
/// power of two is exact in floating point, so only the floor rounds.
pub fn beta(z: f64, m_star: u32) -> u128 {
    assert!(m_star >= 2 && m_star.is_multiple_of(2) && m_star <= MAX_BITS);
    let half = (m_star / 2) as i32;
    let top: u128 = (1u128 << m_star) - 1;
    let bound = ((half - 1) as f64).exp2();
    if z.is_nan() || z < -bound {
        return 0;
    }
    if z >= bound {
        return top;
    }
    let scaled = (z * (half as f64).exp2()).floor();
    let y = scaled as i128 + (1i128 << (m_star - 1));
    y.clamp(0, top as i128) as u128
}

/// `γ(y) = 2^{−m/2} y − 2^{m/2−1}`.
pub fn gamma(y: u128, m_star: u32) -> Result<f64> {
    if !(2..=MAX_BITS).contains(&m_star) || y >> m_star != 0 {
        return Err(Error::Parameter(format!(
            "code {y} out of range for m* = {m_star}"
        )));
    }
    let half = (m_star / 2) as i32;
    let centered = y as i128 - (1i128 << (m_star - 1));
    Ok(centered as f64 * (-(half as f64)).exp2())
}

/// `γ(β(z))`.
pub fn quantize(z: f64, m_star: u32) -> f64 {
    gamma(beta(z, m_star), m_star).expect("beta output is in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(beta(0.0, 4), 8);
        assert_eq!(beta(-100.0, 4), 0);
        assert_eq!(beta(2.5, 4), 15);
        assert_eq!(beta(2.0, 4), 15);
        assert_eq!(beta(-2.0, 4), 0);
        assert_eq!(gamma(8, 4).unwrap(), 0.0);
        assert_eq!(gamma(0, 4).unwrap(), -2.0);
        assert!(gamma(16, 4).is_err());
    }

    #[test]
    fn sandwich_grid() {
        for k in 0..10_000 {
            let z = -2.0 + 4.0 * k as f64 / 10_000.0;
            let g = quantize(z, 4);
            assert!(g <= z && z <= g + 0.25);
        }
    }

    #[test]
    fn wide_codes() {
        let m = 120;
        let z = 0.123456789;
        let g = quantize(z, m);
        assert!(g <= z && z - g <= 2f64.powi(-60));
    }

    #[test]
    fn config_selection() {
        let qc = QuantConfig::for_run(4, 2, 3.0).unwrap();
        assert!(qc.validate(4, 2).is_ok());
        let smaller = QuantConfig {
            m_star: qc.m_star - 2,
            ..qc
        };
        assert!(smaller.validate(4, 2).is_err());
        assert!(QuantConfig::for_run(60, 3, 1.0).is_err());
        assert!(QuantConfig::new(5, 1.0).is_err());
    }
}
