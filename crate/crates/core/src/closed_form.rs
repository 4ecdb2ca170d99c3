//! Exact subgame perfect equilibrium of the two-SP market under a uniform
//! tolerance law, together with the intermediate stage-2 and stage-1
//! expressions it is built from.
//!
//! All functions take SP 2 to be the second entry of `params.p`; nothing is
//! reordered. With `dp = p2 - p1`, the equilibrium places SP 2 exactly
//! `3/4 * eps_bar` above SP 1 in risk.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, MarketError, Result};
use crate::market::{
    BandCheck, EquilibriumOutcome, FeasibilityReport, InequalityCheck, MarketParams, SolveMethod, StrategyProfile,
};
use crate::scalar::Scalar;

/// Closed-form equilibrium and the feasibility of the parameters producing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSolution<T> {
    pub eps1: T,
    pub eps2: T,
    pub v1: T,
    pub v2: T,
    /// Share of SP 1 (the low-risk SP).
    pub x_tau: T,
    pub pi1: T,
    pub pi2: T,
    pub alpha: T,
    pub c_tilde: T,
    pub feasibility: FeasibilityReport<T>,
}

impl<T: Scalar> ClosedFormSolution<T> {
    pub fn profile(&self) -> StrategyProfile<T> {
        StrategyProfile::from_parts(&[self.eps1, self.eps2], &[self.v1, self.v2])
    }

    pub fn to_outcome(&self) -> EquilibriumOutcome<T> {
        EquilibriumOutcome {
            profile: self.profile(),
            shares: vec![self.x_tau, T::one() - self.x_tau],
            profits: vec![self.pi1, self.pi2],
            thresholds: vec![self.x_tau],
            method: SolveMethod::ClosedForm,
            converged: true,
            iterations: 0,
        }
    }
}

fn duopoly<T: Scalar>(params: &MarketParams<T>) -> Result<(T, T)> {
    params.validate()?;
    match params.p.as_slice() {
        [p1, p2] => Ok((*p1, *p2)),
        other => Err(invalid(
            "p",
            format!("closed form needs exactly 2 SPs, got {}", other.len()),
        )),
    }
}

fn ordered_pair<T: Scalar>(params: &MarketParams<T>, eps1: T, eps2: T) -> Result<()> {
    let gap_min = params.gap_min();
    if !(eps2 - eps1 >= gap_min) {
        return Err(MarketError::DegenerateDifferentiation {
            low: eps1.as_f64(),
            high: eps2.as_f64(),
            gap_min: gap_min.as_f64(),
        });
    }
    Ok(())
}

/// `(alpha, c_tilde) = (r/c - lambda, c * t * eps_bar)`.
pub fn derived_constants<T: Scalar>(params: &MarketParams<T>) -> (T, T) {
    (params.alpha(), params.c_tilde())
}

/// Ratio `16 (p2 - p1) / (9 c t eps_bar)` that both band conditions test.
fn revenue_gap_ratio<T: Scalar>(params: &MarketParams<T>, dp: T) -> T {
    T::lit(16.0) * dp / (T::lit(9.0) * params.c_tilde())
}

/// Evaluates the three sufficient conditions for the closed-form equilibrium.
pub fn check_feasibility<T: Scalar>(params: &MarketParams<T>) -> Result<FeasibilityReport<T>> {
    let (p1, p2) = duopoly(params)?;
    let dp = p2 - p1;
    let (alpha, c_tilde) = derived_constants(params);
    let t = params.t;
    let ratio = revenue_gap_ratio(params, dp);

    let band = |lower: T, upper: T| BandCheck {
        ok: ratio >= lower && ratio <= upper,
        value: ratio,
        lower,
        upper,
        lower_margin: ratio - lower,
        upper_margin: upper - ratio,
    };
    let cond_share = band(-T::one(), T::one());
    let three_t = T::lit(3.0) * t;
    let four_alpha = T::lit(4.0) * alpha;
    let cond_eps = band((four_alpha - three_t) / three_t, (four_alpha - t) / three_t);

    let a = T::lit(12.0) * params.c * alpha * params.eps_bar;
    let b = T::lit(15.0) * c_tilde;
    let lhs = a * a - b * b + T::lit(288.0) * c_tilde * (p2 + p1);
    let rhs = (T::lit(16.0) * dp).powi(2);
    let cond_coverage = InequalityCheck {
        ok: lhs >= rhs,
        lhs,
        rhs,
        margin: lhs - rhs,
    };

    Ok(FeasibilityReport {
        all_feasible: cond_share.ok && cond_eps.ok && cond_coverage.ok,
        cond_share,
        cond_eps,
        cond_coverage,
    })
}

/// The closed-form duopoly equilibrium. Infeasible parameters still get the
/// algebraic solution, with `feasibility.all_feasible == false`.
pub fn solve_duopoly<T: Scalar>(params: &MarketParams<T>) -> Result<ClosedFormSolution<T>> {
    let (p1, p2) = duopoly(params)?;
    let feasibility = check_feasibility(params)?;
    let (alpha, c_tilde) = derived_constants(params);
    let (c, t, eb) = (params.c, params.t, params.eps_bar);
    let dp = p2 - p1;
    let lit = T::lit;

    let eps2 = (lit(12.0) * eb * c * alpha + lit(15.0) * c * t * eb - lit(16.0) * dp) / (lit(24.0) * t * c);
    let v2 = ((lit(2.0) * alpha + t) * c * alpha * lit(6.0) * eb
        + (alpha - t) * lit(9.0) * c * t * eb
        + (t - lit(2.0) * alpha) * lit(8.0) * p2
        + (alpha + t) * lit(16.0) * p1)
        / (lit(24.0) * c * t);
    let eps1 = eps2 - lit(0.75) * eb;
    let v1 = v2 - lit(0.75) * eb * alpha + dp / (lit(3.0) * c);
    let x_tau = lit(0.5) - lit(8.0) * dp / (lit(9.0) * c_tilde);

    let scale = lit(4.0) * c / (lit(27.0) * t * eb);
    let base = lit(9.0) * t * eb / lit(8.0);
    let shift = lit(2.0) * dp / c;
    let pi1 = scale * (base - shift).powi(2);
    let pi2 = scale * (base + shift).powi(2);

    Ok(ClosedFormSolution {
        eps1,
        eps2,
        v1,
        v2,
        x_tau,
        pi1,
        pi2,
        alpha,
        c_tilde,
        feasibility,
    })
}

/// Equilibrium profits written through `c_tilde` alone:
/// `(1/3) (3/4 sqrt(C) -/+ 4 dp / (3 sqrt(C)))^2`, returned as `(pi1, pi2)`.
pub fn profits_from_c_tilde<T: Scalar>(c_tilde: T, dp: T) -> (T, T) {
    let root = c_tilde.sqrt();
    let head = T::lit(0.75) * root;
    let tail = T::lit(4.0) * dp / (T::lit(3.0) * root);
    let third = T::one() / T::lit(3.0);
    (third * (head - tail).powi(2), third * (head + tail).powi(2))
}

/// Stage-2 QoS equilibrium for fixed risks `eps1 < eps2` under the uniform
/// law, as `(v1, v2)`.
pub fn stage2_qos<T: Scalar>(params: &MarketParams<T>, eps1: T, eps2: T) -> Result<(T, T)> {
    let (p1, p2) = duopoly(params)?;
    ordered_pair(params, eps1, eps2)?;
    let (c, t, r, lambda) = (params.c, params.t, params.r, params.lambda);
    let x1 = eps1 / params.eps_bar;
    let x2 = eps2 / params.eps_bar;
    let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
    let rev1 = r * eps1 + p1;
    let rev2 = r * eps2 + p2;

    let v1 = (two * rev1 + rev2) / (three * c)
        + (t * (one + x1) * eps1 - lambda * (eps2 + two * eps1) - t * (one + x2) * eps2) / three;
    let v2 = (two * rev2 + rev1) / (three * c)
        + (t * (two - x1) * eps1 - lambda * (two * eps2 + eps1) - t * (two - x2) * eps2) / three;
    Ok((v1, v2))
}

/// Best response of each SP's QoS to the other's, for fixed risks. The stage-2
/// equilibrium is the fixed point of this map.
pub fn stage2_best_responses<T: Scalar>(params: &MarketParams<T>, eps1: T, eps2: T, v1: T, v2: T) -> Result<(T, T)> {
    let (p1, p2) = duopoly(params)?;
    ordered_pair(params, eps1, eps2)?;
    let (c, t, r, lambda) = (params.c, params.t, params.r, params.lambda);
    let x1 = eps1 / params.eps_bar;
    let x2 = eps2 / params.eps_bar;
    let two = T::lit(2.0);
    let br1 = (r * eps1 + p1) / (two * c) + (v2 - lambda * eps1 - t * x2 * eps2 + t * x1 * eps1) / two;
    let br2 = (r * eps2 + p2) / (two * c)
        + (v1 - lambda * eps2 - t * (T::one() - x2) * eps2 + t * (T::one() - x1) * eps1) / two;
    Ok((br1, br2))
}

/// Squared-bracket terms of the reduced profits: `pi_i = c * b_i^2 / (9 t (eps2 - eps1))`.
fn reduced_brackets<T: Scalar>(params: &MarketParams<T>, eps1: T, eps2: T, dp: T) -> (T, T) {
    let (alpha, t, eb, c) = (params.alpha(), params.t, params.eps_bar, params.c);
    let gap = eps2 - eps1;
    let b1 = -dp / c + (-alpha + t * (eb + eps2 + eps1) / eb) * gap;
    let b2 = dp / c + (alpha + t * (T::lit(2.0) * eb - eps2 - eps1) / eb) * gap;
    (b1, b2)
}

/// Stage-1 profits after substituting the stage-2 QoS equilibrium, as `(pi1, pi2)`.
pub fn stage1_reduced_profits<T: Scalar>(params: &MarketParams<T>, eps1: T, eps2: T) -> Result<(T, T)> {
    let (p1, p2) = duopoly(params)?;
    ordered_pair(params, eps1, eps2)?;
    let (b1, b2) = reduced_brackets(params, eps1, eps2, p2 - p1);
    let denom = T::lit(9.0) * params.t * (eps2 - eps1);
    Ok((params.c * b1 * b1 / denom, params.c * b2 * b2 / denom))
}

/// Left-hand sides of the two non-dominated stage-1 first-order conditions,
/// `(res1, res2)`. Both vanish at the closed-form equilibrium risks.
///
/// `d pi1 / d eps1 = c * b1 * res1 / (9 t gap^2)` and likewise for SP 2,
/// where `b_i` is the positive bracket of the reduced profit.
pub fn stage1_foc_residuals<T: Scalar>(params: &MarketParams<T>, eps1: T, eps2: T) -> Result<(T, T)> {
    let (p1, p2) = duopoly(params)?;
    ordered_pair(params, eps1, eps2)?;
    let (alpha, t, eb, c) = (params.alpha(), params.t, params.eps_bar, params.c);
    let dp = p2 - p1;
    let gap = eps2 - eps1;
    let three = T::lit(3.0);
    let res1 = (alpha - t * (eb - eps2 + three * eps1) / eb) * gap - dp / c;
    let res2 = (alpha + t * (T::lit(2.0) * eb - three * eps2 + eps1) / eb) * gap - dp / c;
    Ok((res1, res2))
}

/// The other factors of the stage-1 derivatives, `(b1, b2)`. Their roots zero
/// the corresponding profit, so those roots are strictly dominated.
pub fn stage1_dominated_factors<T: Scalar>(params: &MarketParams<T>, eps1: T, eps2: T) -> Result<(T, T)> {
    let (p1, p2) = duopoly(params)?;
    ordered_pair(params, eps1, eps2)?;
    Ok(reduced_brackets(params, eps1, eps2, p2 - p1))
}
