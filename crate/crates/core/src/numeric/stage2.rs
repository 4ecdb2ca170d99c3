//! Stage 2: the QoS Nash equilibrium for fixed privacy risks.
//!
//! Each SP's profit is concave in its own QoS, so the equilibrium is the
//! solution of the stacked first-order conditions. In risk order, SP `k`
//! only meets its neighbours, which makes the system tridiagonal:
//!
//! ```text
//! first:    2c v_1 - c v_2                                   = y_1
//! interior: 2c (d_k + d_{k-1}) v_k - c d_k v_{k+1} - c d_{k-1} v_{k-1} = y_k
//! last:     2c v_m - c v_{m-1}                               = y_m
//! ```
//!
//! with `d_k = 1 / (t (eps_{k+1} - eps_k))`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::market::strategy::{check_separated, risk_order};
use crate::market::{MarketParams, RiskDistribution};
use crate::numeric::tridiagonal::{solve_tridiagonal, tridiagonal_apply};
use crate::scalar::Scalar;

/// Assembled first-order conditions for one risk profile, in ascending risk order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2System<T> {
    /// Identities in ascending risk order.
    pub order: Vec<usize>,
    /// Sorted risks.
    pub eps: Vec<T>,
    /// Normalized locations `F(eps)` of the sorted risks.
    pub x: Vec<T>,
    /// `1 / (t * gap)` for each adjacent pair; length `m - 1`.
    pub delta: Vec<T>,
    /// Right-hand side.
    pub y: Vec<T>,
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> Stage2System<T> {
    /// Builds the system for risks given by SP identity.
    pub fn assemble(params: &MarketParams<T>, dist: &RiskDistribution<T>, eps_by_id: &[T]) -> Result<Self> {
        let m = eps_by_id.len();
        if m < 2 || m != params.count() {
            return Err(invalid(
                "eps",
                format!("expected {} risks, got {m}", params.count()),
            ));
        }
        check_separated(eps_by_id, params.gap_min())?;
        let order = risk_order(eps_by_id);
        let eps: Vec<T> = order.iter().map(|&i| eps_by_id[i]).collect();
        let p: Vec<T> = order.iter().map(|&i| params.p[i]).collect();
        let x: Vec<T> = eps.iter().map(|&e| dist.cdf(e)).collect();
        Ok(Self::assemble_sorted(params, order, eps, x, &p))
    }

    pub(crate) fn assemble_sorted(params: &MarketParams<T>, order: Vec<usize>, eps: Vec<T>, x: Vec<T>, p: &[T]) -> Self {
        let m = eps.len();
        let (c, t) = (params.c, params.t);
        let ct = c * t;
        let two_c = c + c;
        let delta: Vec<T> = eps.windows(2).map(|w| T::one() / (t * (w[1] - w[0]))).collect();
        // privacy-adjusted base revenue r*eps + p - c*lambda*eps
        let base: Vec<T> = (0..m)
            .map(|k| params.r * eps[k] + p[k] - c * params.lambda * eps[k])
            .collect();
        let xe: Vec<T> = (0..m).map(|k| x[k] * eps[k]).collect();

        let mut y = vec![T::zero(); m];
        let mut lower = vec![T::zero(); m - 1];
        let mut diag = vec![T::zero(); m];
        let mut upper = vec![T::zero(); m - 1];

        y[0] = base[0] - ct * xe[1] + ct * xe[0];
        diag[0] = two_c;
        upper[0] = -c;

        let last = m - 1;
        y[last] = base[last] - ct * (eps[last] - xe[last]) + ct * (eps[last - 1] - xe[last - 1]);
        diag[last] = two_c;
        lower[last - 1] = -c;

        for k in 1..last {
            let (right, left) = (delta[k], delta[k - 1]);
            y[k] = right * (base[k] + ct * xe[k] - ct * xe[k + 1]) + left * (base[k] - ct * xe[k - 1] + ct * xe[k]);
            diag[k] = two_c * (right + left);
            upper[k] = -c * right;
            lower[k - 1] = -c * left;
        }

        Self {
            order,
            eps,
            x,
            delta,
            y,
            lower,
            diag,
            upper,
        }
    }

    /// Equilibrium QoS in ascending risk order.
    pub fn solve_sorted(&self) -> Result<Vec<T>> {
        solve_tridiagonal(&self.lower, &self.diag, &self.upper, &self.y)
    }

    /// `max |A v - y| / max |y|`.
    pub fn relative_residual(&self, v_sorted: &[T]) -> T {
        let av = tridiagonal_apply(&self.lower, &self.diag, &self.upper, v_sorted);
        let scale = self.y.iter().fold(T::zero(), |a, &b| a.max(b.abs())).max(T::min_positive_value());
        av.iter()
            .zip(&self.y)
            .fold(T::zero(), |a, (&l, &r)| a.max((l - r).abs()))
            / scale
    }
}

/// Stage-2 equilibrium QoS for a risk profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2Solution<T> {
    /// QoS by SP identity.
    pub v: Vec<T>,
    /// Some SP would need negative QoS; the profile violates non-negative QoS.
    pub infeasible: bool,
}

/// Solves the stage-2 QoS game exactly for risks given by SP identity.
pub fn stage2_solve<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    eps_by_id: &[T],
) -> Result<Stage2Solution<T>> {
    let system = Stage2System::assemble(params, dist, eps_by_id)?;
    let sorted = system.solve_sorted()?;
    let mut v = vec![T::zero(); sorted.len()];
    for (rank, &id) in system.order.iter().enumerate() {
        v[id] = sorted[rank];
    }
    let infeasible = v.iter().any(|&q| q < T::zero());
    Ok(Stage2Solution { v, infeasible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::MarketError;

    #[test]
    fn two_sp_rows_are_half_neighbour_plus_own_term() {
        let m = MarketParams::<f64>::baseline(0.7, 5.0).unwrap();
        let d = RiskDistribution::uniform(5.0).unwrap();
        let sys = Stage2System::assemble(&m, &d, &[1.0, 4.0]).unwrap();
        assert_eq!(sys.diag, vec![1.0, 1.0]);
        assert_eq!(sys.upper, vec![-0.5]);
        assert_eq!(sys.lower, vec![-0.5]);
        assert!((sys.delta[0] - 1.0 / 2.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_coincident_risks() {
        let m = MarketParams::<f64>::baseline(0.7, 5.0).unwrap();
        let d = RiskDistribution::uniform(5.0).unwrap();
        assert!(matches!(
            stage2_solve(&m, &d, &[2.0, 2.0]),
            Err(MarketError::DegenerateDifferentiation { .. })
        ));
        assert!(stage2_solve(&m, &d, &[2.0]).is_err());
    }

    #[test]
    fn identities_are_restored() {
        let m = MarketParams::<f64>::baseline(0.7, 5.0).unwrap();
        let d = RiskDistribution::uniform(5.0).unwrap();
        let a = stage2_solve(&m, &d, &[1.0, 4.0]).unwrap();
        let flipped = m.with_p(vec![0.8, 0.4]).unwrap();
        let b = stage2_solve(&flipped, &d, &[4.0, 1.0]).unwrap();
        assert!((a.v[0] - b.v[1]).abs() < 1e-14 && (a.v[1] - b.v[0]).abs() < 1e-14);
    }
}
