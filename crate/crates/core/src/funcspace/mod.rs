//! Functions on the unit cube `D = [0,1]^d`: black-box evaluators with query
//! counting, piecewise polynomials on dyadic grids, `L_q` and Sobolev norms.
//!
//! All norms use the Lebesgue (probability) measure on `D`.

mod bump;
mod poly;
mod quad;
mod testfn;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use bump::{bump, bump1, bump1_jet, bump1_norm, bump_deriv, multi_indices, sigma1, sigma2};
pub use poly::{eval_tensor, substitute, PiecewisePoly, PolyDump};
pub use quad::{gauss_legendre, integrate, ActiveSet, Quadrature, MAX_LEAVES};
pub use testfn::{sweep_bump, TestFunction, TestKind};

use crate::Result;

/// Shared evaluation counter; clones observe the same count.
#[derive(Debug, Clone, Default)]
pub struct EvalCounter(Arc<AtomicU64>);

impl EvalCounter {
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }
}

/// Dyadic cells of one level outside of which a function vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub level: u32,
    pub cells: Vec<u64>,
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A black-box real function on `D`.
///
/// [`eval`](EvalFn::eval) charges one unit to the attached counter, if any;
/// [`eval_uncharged`](EvalFn::eval_uncharged) is for reference computations
/// that must not show up in a query count.
#[derive(Clone)]
pub struct EvalFn {
    d: usize,
    f: Evaluator,
    counter: Option<EvalCounter>,
    support: Option<Arc<Support>>,
    descriptor: Option<Arc<TestFunction>>,
}

impl fmt::Debug for EvalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvalFn")
            .field("d", &self.d)
            .field("counted", &self.counter.is_some())
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl EvalFn {
    pub fn new(d: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        assert!(d >= 1, "dimension must be positive");
        Self {
            d,
            f: Arc::new(f),
            counter: None,
            support: None,
            descriptor: None,
        }
    }

    pub fn with_counter(mut self, c: EvalCounter) -> Self {
        self.counter = Some(c);
        self
    }

    pub fn with_optional_counter(mut self, c: Option<EvalCounter>) -> Self {
        self.counter = c;
        self
    }

    pub fn with_support(mut self, s: Support) -> Self {
        self.support = Some(Arc::new(s));
        self
    }

    pub fn with_descriptor(mut self, t: Arc<TestFunction>) -> Self {
        self.descriptor = Some(t);
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn counter(&self) -> Option<&EvalCounter> {
        self.counter.as_ref()
    }
    pub fn support(&self) -> Option<&Support> {
        self.support.as_deref()
    }
    pub fn descriptor(&self) -> Option<&TestFunction> {
        self.descriptor.as_deref()
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        if let Some(c) = &self.counter {
            c.add(1);
        }
        (self.f)(s)
    }

    pub fn eval_uncharged(&self, s: &[f64]) -> f64 {
        (self.f)(s)
    }

    /// Active set from the declared support, or all of `D`.
    pub fn active_set(&self) -> ActiveSet {
        match &self.support {
            Some(s) => {
                let mut a = ActiveSet::new(self.d);
                for &i in &s.cells {
                    a.insert(s.level, i);
                }
                a
            }
            None => ActiveSet::full(self.d),
        }
    }
}

/// Objects with an `L_q(D)` norm.
pub trait LqNorm {
    fn lq_norm_with(&self, q: f64, quad: &Quadrature) -> Result<f64>;
}

impl LqNorm for EvalFn {
    /// Uncharged; integrates over the declared support refined to `quad.level`
    /// (or `quad.sub_levels` below the support level, whichever is finer).
    fn lq_norm_with(&self, q: f64, quad: &Quadrature) -> Result<f64> {
        crate::check_norm_index(q)?;
        let leaf = match &self.support {
            Some(s) => quad.level.max(s.level + quad.sub_levels),
            None => quad.level,
        };
        let f = |s: &[f64]| self.eval_uncharged(s);
        Ok(integrate(
            self.d,
            &f,
            &self.active_set(),
            leaf,
            quad.order,
            quad.sup_points,
            q,
        ))
    }
}

impl LqNorm for PiecewisePoly {
    fn lq_norm_with(&self, q: f64, quad: &Quadrature) -> Result<f64> {
        self.lq_norm(q, quad)
    }
}

/// `‖f‖_{L_q(D)}`; `q` outside `[1, ∞]` is a parameter error.
pub fn lq_norm<F: LqNorm + ?Sized>(f: &F, q: f64, quad: &Quadrature) -> Result<f64> {
    f.lq_norm_with(q, quad)
}

/// Value of `g` at `s`; faces belong to the cell with the larger anchor.
pub fn pw_eval(g: &PiecewisePoly, s: &[f64]) -> f64 {
    g.eval(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lq_examples() {
        let quad = Quadrature::with_level(4, 4);
        let one = EvalFn::new(2, |_: &[f64]| 1.0);
        assert!((lq_norm(&one, 2.0, &quad).unwrap() - 1.0).abs() < 1e-12);
        let t = EvalFn::new(1, |s: &[f64]| s[0]);
        assert!((lq_norm(&t, 2.0, &quad).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(lq_norm(&t, 0.9, &quad).is_err());
        assert!(lq_norm(&t, f64::NAN, &quad).is_err());
    }

    #[test]
    fn norms_do_not_charge() {
        let c = EvalCounter::default();
        let f = EvalFn::new(1, |s: &[f64]| s[0]).with_counter(c.clone());
        lq_norm(&f, 1.0, &Quadrature::with_level(3, 2)).unwrap();
        assert_eq!(c.get(), 0);
        f.eval(&[0.1]);
        assert_eq!(c.get(), 1);
    }

    #[test]
    fn pw_eval_tie_rule() {
        let mut g = PiecewisePoly::zero(1, 1, 2);
        g.set_cell(0, vec![0.0, 0.5]);
        assert_eq!(pw_eval(&g, &[0.25]), 0.25);
        assert_eq!(pw_eval(&g, &[0.5]), 0.0);
    }
}
