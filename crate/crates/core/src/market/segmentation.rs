//! Stage 3: consumer choice, indifference thresholds, market shares and
//! per-SP profit for a fixed strategy profile.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::distribution::RiskDistribution;
use crate::market::params::MarketParams;
use crate::market::strategy::{check_separated, risk_order, SpStrategy, StrategyProfile};
use crate::scalar::Scalar;

/// Utility of a consumer at normalized location `x` for the service `s`:
/// `v + t * (x - F(eps)) * eps`. Negative values mean the advertised risk
/// exceeds what the consumer would accept for that QoS.
pub fn consumer_utility<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    s: &SpStrategy<T>,
    x: T,
) -> T {
    s.v + params.t * (x - dist.cdf(s.eps)) * s.eps
}

/// Location of the consumer indifferent between two adjacent SPs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold<T> {
    /// Unclamped solution of `u_low(x) = u_high(x)`.
    pub raw: T,
    /// `raw` clamped into `[0, 1]`.
    pub value: T,
    /// Whether clamping changed the value, i.e. one SP takes the whole pair.
    pub clamped: bool,
}

impl<T: Scalar> Threshold<T> {
    fn from_raw(raw: T) -> Self {
        let value = raw.max(T::zero()).min(T::one());
        Self {
            raw,
            value,
            clamped: value != raw,
        }
    }
}

fn raw_threshold<T: Scalar>(t: T, x_low: T, eps_low: T, v_low: T, x_high: T, eps_high: T, v_high: T) -> T {
    (v_low - v_high + t * (x_high * eps_high - x_low * eps_low)) / (t * (eps_high - eps_low))
}

/// Indifference threshold between `low` and `high`, where `low` advertises
/// the smaller risk. Consumers left of it prefer `low`.
pub fn indifference_threshold<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    low: &SpStrategy<T>,
    high: &SpStrategy<T>,
) -> Result<Threshold<T>> {
    let gap_min = params.gap_min();
    if !(high.eps - low.eps >= gap_min) {
        return Err(MarketError::DegenerateDifferentiation {
            low: low.eps.as_f64(),
            high: high.eps.as_f64(),
            gap_min: gap_min.as_f64(),
        });
    }
    let raw = raw_threshold(
        params.t,
        dist.cdf(low.eps),
        low.eps,
        low.v,
        dist.cdf(high.eps),
        high.eps,
        high.v,
    );
    Ok(Threshold::from_raw(raw))
}

/// Market partition induced by a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSplit<T> {
    /// Share of each SP, by identity.
    pub shares: Vec<T>,
    /// `m - 1` boundaries in risk order, clamped to `[0, 1]` and made nondecreasing.
    pub thresholds: Vec<T>,
    /// Identities in ascending risk order.
    pub order: Vec<usize>,
    /// True when any boundary had to be clamped or reordered.
    pub corner: bool,
}

/// Shares for risks and QoS already sorted by ascending risk, with the
/// normalized locations `x` precomputed. Returns `(shares, thresholds, corner)`
/// in sorted order. Separation must be checked by the caller.
pub(crate) fn sorted_shares<T: Scalar>(t: T, x: &[T], eps: &[T], v: &[T]) -> (Vec<T>, Vec<T>, bool) {
    let m = eps.len();
    let mut thresholds = Vec::with_capacity(m.saturating_sub(1));
    let mut corner = false;
    let mut floor = T::zero();
    for k in 0..m - 1 {
        let th = Threshold::from_raw(raw_threshold(t, x[k], eps[k], v[k], x[k + 1], eps[k + 1], v[k + 1]));
        corner |= th.clamped;
        let value = if th.value < floor {
            corner = true;
            floor
        } else {
            th.value
        };
        floor = value;
        thresholds.push(value);
    }
    let mut shares = Vec::with_capacity(m);
    let mut left = T::zero();
    for &b in &thresholds {
        shares.push(b - left);
        left = b;
    }
    shares.push(T::one() - left);
    (shares, thresholds, corner)
}

/// Share of the SP at `rank` in the sorted arrays; same clamping as
/// [`sorted_shares`] without allocating.
pub(crate) fn rank_share<T: Scalar>(t: T, x: &[T], eps: &[T], v: &[T], rank: usize) -> T {
    let m = eps.len();
    let mut floor = T::zero();
    let mut left = T::zero();
    for k in 0..m - 1 {
        let raw = raw_threshold(t, x[k], eps[k], v[k], x[k + 1], eps[k + 1], v[k + 1]);
        let b = raw.max(T::zero()).min(T::one()).max(floor);
        floor = b;
        if k + 1 == rank {
            left = b;
        }
        if k == rank {
            return b - left;
        }
    }
    T::one() - left
}

/// Splits the unit mass of consumers among the SPs.
///
/// SPs are ranked by risk; each competes with its neighbours through the
/// consecutive indifference thresholds. Because `x = F(eps)` is uniform on
/// `[0, 1]` for any tolerance law, a share is just the distance between two
/// thresholds.
pub fn market_shares<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    profile: &StrategyProfile<T>,
) -> Result<MarketSplit<T>> {
    let eps_by_id = profile.eps();
    if eps_by_id.len() < 2 {
        return Err(crate::error::invalid("profile", "need at least 2 SPs"));
    }
    check_separated(&eps_by_id, params.gap_min())?;
    let order = risk_order(&eps_by_id);
    let eps: Vec<T> = order.iter().map(|&i| eps_by_id[i]).collect();
    let v: Vec<T> = order.iter().map(|&i| profile.strategies[i].v).collect();
    let x: Vec<T> = eps.iter().map(|&e| dist.cdf(e)).collect();
    let (sorted, thresholds, corner) = sorted_shares(params.t, &x, &eps, &v);
    let mut shares = vec![T::zero(); order.len()];
    for (rank, &id) in order.iter().enumerate() {
        shares[id] = sorted[rank];
    }
    Ok(MarketSplit {
        shares,
        thresholds,
        order,
        corner,
    })
}

/// A profile's risks frozen in ascending order, for evaluating many QoS
/// vectors against the same risks without re-sorting.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedMarket<T> {
    /// Identities in ascending risk order.
    pub order: Vec<usize>,
    /// Rank of each identity.
    pub rank_of: Vec<usize>,
    pub eps: Vec<T>,
    pub x: Vec<T>,
    pub p: Vec<T>,
}

impl<T: Scalar> SortedMarket<T> {
    pub fn new(params: &MarketParams<T>, dist: &RiskDistribution<T>, eps_by_id: &[T]) -> Result<Self> {
        if eps_by_id.len() != params.count() {
            return Err(crate::error::invalid(
                "eps",
                format!("expected {} risks, got {}", params.count(), eps_by_id.len()),
            ));
        }
        check_separated(eps_by_id, params.gap_min())?;
        let order = risk_order(eps_by_id);
        let mut rank_of = vec![0; order.len()];
        for (rank, &id) in order.iter().enumerate() {
            rank_of[id] = rank;
        }
        let eps: Vec<T> = order.iter().map(|&i| eps_by_id[i]).collect();
        let x = eps.iter().map(|&e| dist.cdf(e)).collect();
        let p = order.iter().map(|&i| params.p[i]).collect();
        Ok(Self {
            order,
            rank_of,
            eps,
            x,
            p,
        })
    }

    /// Reorders a by-identity vector into risk order.
    pub fn to_sorted(&self, by_id: &[T]) -> Vec<T> {
        self.order.iter().map(|&i| by_id[i]).collect()
    }

    /// Reorders a risk-ordered vector back to identities.
    pub fn to_identity(&self, sorted: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); sorted.len()];
        for (rank, &id) in self.order.iter().enumerate() {
            out[id] = sorted[rank];
        }
        out
    }

    /// Share of the SP at `rank` given risk-ordered QoS.
    pub fn share_at(&self, params: &MarketParams<T>, v_sorted: &[T], rank: usize) -> T {
        rank_share(params.t, &self.x, &self.eps, v_sorted, rank)
    }

    /// QoS at which the SP at `rank` stops earning anything per consumer.
    pub fn zero_margin_qos(&self, params: &MarketParams<T>, rank: usize) -> T {
        margin(params, self.p[rank], self.eps[rank], T::zero()) / params.c
    }

    /// Profit of the SP at `rank` given risk-ordered QoS.
    pub fn profit_at(&self, params: &MarketParams<T>, v_sorted: &[T], rank: usize) -> T {
        margin(params, self.p[rank], self.eps[rank], v_sorted[rank]) * self.share_at(params, v_sorted, rank)
    }
}

/// Per-consumer profit `r*eps + p_i - c*v - c*lambda*eps`; may be negative.
pub fn sp_margin<T: Scalar>(params: &MarketParams<T>, i: usize, s: &SpStrategy<T>) -> Result<T> {
    let p = *params.p.get(i).ok_or(MarketError::IndexOutOfRange {
        index: i,
        count: params.count(),
    })?;
    Ok(margin(params, p, s.eps, s.v))
}

#[inline]
pub(crate) fn margin<T: Scalar>(params: &MarketParams<T>, p: T, eps: T, v: T) -> T {
    params.r * eps + p - params.c * v - params.c * params.lambda * eps
}

/// Total profit of SP `i`: margin times market share.
pub fn sp_profit<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    profile: &StrategyProfile<T>,
    i: usize,
) -> Result<T> {
    let s = profile.strategies.get(i).ok_or(MarketError::IndexOutOfRange {
        index: i,
        count: profile.len(),
    })?;
    let m = sp_margin(params, i, s)?;
    let split = market_shares(params, dist, profile)?;
    Ok(m * split.shares[i])
}

/// Profits of every SP, sharing one market split.
pub fn all_profits<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    profile: &StrategyProfile<T>,
) -> Result<(MarketSplit<T>, Vec<T>)> {
    let split = market_shares(params, dist, profile)?;
    let profits = profile
        .strategies
        .iter()
        .enumerate()
        .map(|(i, s)| margin(params, params.p[i], s.eps, s.v) * split.shares[i])
        .collect();
    Ok((split, profits))
}
