use serde::{Deserialize, Serialize};

use crate::error::{invalid, MarketError, Result};
use crate::market::params::MarketParams;
use crate::scalar::Scalar;

/// The `(privacy risk, QoS)` pair an SP advertises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpStrategy<T> {
    pub eps: T,
    pub v: T,
}

impl<T: Scalar> SpStrategy<T> {
    pub fn new(eps: T, v: T) -> Self {
        Self { eps, v }
    }

    /// Checks `0 <= eps <= eps_bar` and `v >= 0`.
    pub fn validate(&self, eps_bar: T) -> Result<()> {
        if !(self.eps >= T::zero() && self.eps <= eps_bar) {
            return Err(invalid("eps", format!("{} outside [0, {eps_bar}]", self.eps)));
        }
        if !(self.v >= T::zero() && self.v.is_finite()) {
            return Err(invalid("v", format!("QoS must be finite and >= 0, got {}", self.v)));
        }
        Ok(())
    }
}

/// One strategy per SP, indexed by SP identity (not by risk rank).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile<T> {
    pub strategies: Vec<SpStrategy<T>>,
}

impl<T: Scalar> StrategyProfile<T> {
    pub fn new(strategies: Vec<SpStrategy<T>>) -> Self {
        Self { strategies }
    }

    pub fn from_parts(eps: &[T], v: &[T]) -> Self {
        assert_eq!(eps.len(), v.len(), "eps and v must have equal length");
        Self::new(eps.iter().zip(v).map(|(&e, &q)| SpStrategy::new(e, q)).collect())
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn eps(&self) -> Vec<T> {
        self.strategies.iter().map(|s| s.eps).collect()
    }

    pub fn qos(&self) -> Vec<T> {
        self.strategies.iter().map(|s| s.v).collect()
    }

    /// SP identities in ascending order of risk; equal risks keep identity order.
    pub fn risk_order(&self) -> Vec<usize> {
        risk_order(&self.eps())
    }

    /// Checks every member strategy and that the profile matches the market size.
    pub fn validate(&self, params: &MarketParams<T>) -> Result<()> {
        if self.len() != params.count() {
            return Err(invalid(
                "profile",
                format!("{} strategies for {} SPs", self.len(), params.count()),
            ));
        }
        for s in &self.strategies {
            s.validate(params.eps_bar)?;
        }
        Ok(())
    }

    /// Errors unless every pair of risks is at least `gap_min` apart.
    pub fn check_separated(&self, gap_min: T) -> Result<()> {
        check_separated(&self.eps(), gap_min)
    }
}

/// Stable ascending sort of risks, returning identities.
pub fn risk_order<T: Scalar>(eps: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[a].partial_cmp(&eps[b]).unwrap_or(std::cmp::Ordering::Equal));
    order
}

pub(crate) fn check_separated<T: Scalar>(eps: &[T], gap_min: T) -> Result<()> {
    let order = risk_order(eps);
    for w in order.windows(2) {
        let (low, high) = (eps[w[0]], eps[w[1]]);
        if !(high - low >= gap_min) {
            return Err(MarketError::DegenerateDifferentiation {
                low: low.as_f64(),
                high: high.as_f64(),
                gap_min: gap_min.as_f64(),
            });
        }
    }
    Ok(())
}
