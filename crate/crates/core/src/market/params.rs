use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Relative minimum separation between two advertised privacy risks, as a
/// fraction of the maximum tolerance.
pub const GAP_MIN_FRACTION: f64 = 1e-6;

/// Linear cost/revenue market constants shared by every SP.
///
/// Cost of SP `i` is `c * v + c * lambda * eps`, revenue is `r * eps + p[i]`,
/// and consumers trade QoS against privacy mismatch at rate `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams<T> {
    /// Cost per unit of QoS.
    pub c: T,
    /// QoS-equivalent cost per unit of privacy risk.
    pub lambda: T,
    /// Revenue per unit of privacy risk.
    pub r: T,
    /// Consumer QoS gain per unit of privacy risk.
    pub t: T,
    /// Largest privacy risk any consumer tolerates.
    pub eps_bar: T,
    /// Privacy-independent revenue of each SP; its length is the SP count.
    pub p: Vec<T>,
}

impl<T: Scalar> MarketParams<T> {
    pub fn new(c: T, lambda: T, r: T, t: T, eps_bar: T, p: Vec<T>) -> Result<Self> {
        let params = Self {
            c,
            lambda,
            r,
            t,
            eps_bar,
            p,
        };
        params.validate()?;
        Ok(params)
    }

    /// The reference duopoly `c = 0.5, lambda = 0.75, r = 0.7, p = (0.4, 0.8)`
    /// at the given `t` and `eps_bar`.
    pub fn baseline(t: T, eps_bar: T) -> Result<Self> {
        Self::new(
            T::lit(0.5),
            T::lit(0.75),
            T::lit(0.7),
            t,
            eps_bar,
            vec![T::lit(0.4), T::lit(0.8)],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite_positive = |name, x: T| {
            if x.is_finite() && x > T::zero() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {x}")))
            }
        };
        let finite_nonneg = |name, x: T| {
            if x.is_finite() && x >= T::zero() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and >= 0, got {x}")))
            }
        };
        finite_positive("c", self.c)?;
        finite_positive("t", self.t)?;
        finite_positive("eps_bar", self.eps_bar)?;
        finite_nonneg("lambda", self.lambda)?;
        finite_nonneg("r", self.r)?;
        if self.p.len() < 2 {
            return Err(invalid(
                "p",
                format!("need at least 2 SPs, got {}", self.p.len()),
            ));
        }
        for &pi in &self.p {
            finite_nonneg("p", pi)?;
        }
        Ok(())
    }

    /// Number of SPs in the market.
    pub fn count(&self) -> usize {
        self.p.len()
    }

    /// Net profit per unit privacy risk relative to the unit QoS cost, `r/c - lambda`.
    pub fn alpha(&self) -> T {
        self.r / self.c - self.lambda
    }

    /// Cost of compensating the maximal privacy mismatch, `c * t * eps_bar`.
    pub fn c_tilde(&self) -> T {
        self.c * self.t * self.eps_bar
    }

    /// Smallest admissible distance between two advertised risks.
    pub fn gap_min(&self) -> T {
        T::lit(GAP_MIN_FRACTION) * self.eps_bar
    }

    /// Upper end of the QoS range a rational SP could ever offer: beyond it the
    /// margin is non-positive whatever the risk.
    pub fn v_max(&self) -> T {
        let p_max = self.p.iter().copied().fold(T::zero(), T::max);
        (self.r * self.eps_bar + p_max) / self.c
    }

    /// Copy with a different SP revenue vector.
    pub fn with_p(&self, p: Vec<T>) -> Result<Self> {
        Self::new(self.c, self.lambda, self.r, self.t, self.eps_bar, p)
    }
}
