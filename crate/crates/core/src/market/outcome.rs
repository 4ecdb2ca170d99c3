use serde::{Deserialize, Serialize};

use crate::market::strategy::StrategyProfile;

/// Which solver produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedForm,
    Numeric,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMethod::ClosedForm => "closed_form",
            SolveMethod::Numeric => "numeric",
        })
    }
}

/// A solved market: strategies with the shares and profits they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome<T> {
    pub profile: StrategyProfile<T>,
    /// Share of each SP by identity; sums to 1.
    pub shares: Vec<T>,
    pub profits: Vec<T>,
    /// Indifference points in ascending risk order.
    pub thresholds: Vec<T>,
    pub method: SolveMethod,
    pub converged: bool,
    pub iterations: usize,
}

/// A two-sided band check `lower <= value <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCheck<T> {
    pub ok: bool,
    pub value: T,
    pub lower: T,
    pub upper: T,
    /// `value - lower`; negative when the lower bound is violated.
    pub lower_margin: T,
    /// `upper - value`; negative when the upper bound is violated.
    pub upper_margin: T,
}

/// A one-sided check `lhs >= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck<T> {
    pub ok: bool,
    pub lhs: T,
    pub rhs: T,
    /// `lhs - rhs`.
    pub margin: T,
}

/// Sufficient conditions for the closed-form duopoly equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport<T> {
    /// Both SPs keep a share in `[0, 1]`.
    pub cond_share: BandCheck<T>,
    /// Both equilibrium risks stay in `[0, eps_bar]`.
    pub cond_eps: BandCheck<T>,
    /// The lowest-risk SP still gives the least tolerant consumer non-negative utility.
    pub cond_coverage: InequalityCheck<T>,
    pub all_feasible: bool,
}

impl<T> FeasibilityReport<T> {
    /// Names of the violated conditions.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.cond_share.ok {
            out.push("share band");
        }
        if !self.cond_eps.ok {
            out.push("risk band");
        }
        if !self.cond_coverage.ok {
            out.push("market coverage");
        }
        out
    }
}
