//! Brute-force equilibrium checks.
//!
//! Everything here is built from the consumer-choice primitives in
//! [`crate::market`] alone: stage-2 equilibria are found by iterating grid
//! best responses in QoS (each polished inside its grid cell), and stage-1
//! deviations replay that subgame for every candidate risk on the grid.
//! Nothing from the closed-form or linear-system solvers is reused, so the
//! oracle can arbitrate between them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, MarketError, Result};
use crate::market::{sp_profit, MarketParams, RiskDistribution, SortedMarket, SpStrategy, StrategyProfile};
use crate::scalar::Scalar;
use crate::search::golden_section_max;

/// Resolution of the oracle grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleGrid {
    /// Candidate risks, evenly spaced on `[0, eps_bar]`.
    pub eps_points: usize,
    /// Candidate QoS values, evenly spaced on `[0, v_max]`.
    pub v_points: usize,
    /// Cap on rounds of the brute-force stage-2 iteration.
    pub max_rounds: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            eps_points: 400,
            v_points: 400,
            max_rounds: 5000,
        }
    }
}

impl OracleGrid {
    pub fn new(eps_points: usize, v_points: usize) -> Self {
        Self {
            eps_points,
            v_points,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.eps_points == 0 || self.v_points == 0 {
            return Err(invalid("grid", "needs at least one point per axis"));
        }
        Ok(())
    }
}

/// Default tolerance on a profitable deviation, in profit units.
pub const DEFAULT_CERT_TOL: f64 = 1e-3;

/// Bracket width, relative to `v_max`, at which a QoS polish stops.
const POLISH_TOL: f64 = 1e-10;
/// A QoS move below this fraction of `v_max` counts as standing still.
const SETTLE_TOL: f64 = 1e-7;

fn linspace<T: Scalar>(hi: T, n: usize) -> impl Iterator<Item = T> + Clone {
    let step = if n > 1 { hi / T::from_count(n - 1) } else { T::zero() };
    (0..n).map(move |k| if n > 1 && k + 1 == n { hi } else { step * T::from_count(k) })
}

/// Best QoS for the SP at `rank` against the others in `v_sorted`: a scan
/// of the grid, then golden-section polish inside the winning cell's
/// neighbours. Keeps the current value unless a candidate is strictly better.
fn grid_qos_response<T: Scalar>(
    params: &MarketParams<T>,
    market: &SortedMarket<T>,
    v_sorted: &mut [T],
    rank: usize,
    v_max: T,
    v_points: usize,
) -> (T, T) {
    let current = v_sorted[rank];
    let mut best = (current, market.profit_at(params, v_sorted, rank));
    let mut scan = (current, T::neg_infinity());
    for v in linspace(v_max, v_points) {
        v_sorted[rank] = v;
        let f = market.profit_at(params, v_sorted, rank);
        if f > scan.1 {
            scan = (v, f);
        }
    }
    if v_points > 1 {
        let step = v_max / T::from_count(v_points - 1);
        let lo = (scan.0 - step).max(T::zero());
        let hi = (scan.0 + step).min(v_max);
        let polished = golden_section_max(
            |v| {
                v_sorted[rank] = v;
                market.profit_at(params, v_sorted, rank)
            },
            lo,
            hi,
            T::lit(POLISH_TOL) * v_max,
        );
        if polished.1 > scan.1 {
            scan = polished;
        }
    }
    // With the others fixed, profit is zero up to the QoS at which the SP
    // first wins consumers, then log-concave up to the zero-margin QoS
    // `v_zero`. That first stretch can be narrower than a grid cell (an
    // opponent pricing the SP out), so search `[0, v_zero]` as well, measured
    // down from `v_zero` so that ties on the flat stretch move toward the hump.
    let v_zero = market.zero_margin_qos(params, rank).min(v_max);
    if v_points > 1 && v_zero > T::zero() {
        let structured = golden_section_max(
            |u| {
                v_sorted[rank] = v_zero - u;
                market.profit_at(params, v_sorted, rank)
            },
            T::zero(),
            v_zero,
            T::lit(POLISH_TOL) * v_max,
        );
        if structured.1 > scan.1 {
            scan = (v_zero - structured.0, structured.1);
        }
    }
    if scan.1 > best.1 {
        best = scan;
    }
    v_sorted[rank] = best.0;
    best
}

/// Brute-force stage-2 result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceStage2<T> {
    /// QoS by SP identity.
    pub v: Vec<T>,
    /// Rounds run, including the final round that changed nothing.
    pub rounds: usize,
}

fn brute_force_stage2_sorted<T: Scalar>(
    params: &MarketParams<T>,
    market: &SortedMarket<T>,
    v_sorted: &mut [T],
    grid: &OracleGrid,
) -> Result<usize> {
    let v_max = params.v_max();
    let settle = T::lit(SETTLE_TOL) * v_max;
    for round in 1..=grid.max_rounds {
        let mut moved = false;
        for rank in 0..v_sorted.len() {
            let before = v_sorted[rank];
            let (after, _) = grid_qos_response(params, market, v_sorted, rank, v_max, grid.v_points);
            moved |= (after - before).abs() > settle;
        }
        if !moved {
            return Ok(round);
        }
    }
    Err(MarketError::NonConvergence {
        iterations: grid.max_rounds,
    })
}

/// Stage-2 QoS equilibrium for fixed risks by iterated grid best responses,
/// starting from `start` (QoS by identity).
pub fn brute_force_stage2<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    eps: &[T],
    start: &[T],
    grid: &OracleGrid,
) -> Result<BruteForceStage2<T>> {
    grid.validate()?;
    if start.len() != eps.len() {
        return Err(invalid("start", "length differs from eps"));
    }
    let market = SortedMarket::new(params, dist, eps)?;
    let mut v_sorted = market.to_sorted(start);
    let rounds = brute_force_stage2_sorted(params, &market, &mut v_sorted, grid)?;
    Ok(BruteForceStage2 {
        v: market.to_identity(&v_sorted),
        rounds,
    })
}

/// Profit of SP `i` at risk `eps_i`, others' risks fixed, once the QoS
/// subgame has been replayed by brute force. `None` when the candidate risk
/// collides with an opponent. `warm` carries the QoS guess between calls.
fn subgame_profit<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    i: usize,
    eps: &mut [T],
    eps_i: T,
    warm: &mut [T],
    grid: &OracleGrid,
) -> Result<Option<(T, T)>> {
    let saved = eps[i];
    eps[i] = eps_i;
    let market = SortedMarket::new(params, dist, eps);
    eps[i] = saved;
    let market = match market {
        Ok(m) => m,
        Err(MarketError::DegenerateDifferentiation { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut v_sorted = market.to_sorted(warm);
    brute_force_stage2_sorted(params, &market, &mut v_sorted, grid)?;
    let rank = market.rank_of[i];
    let profit = market.profit_at(params, &v_sorted, rank);
    warm.copy_from_slice(&market.to_identity(&v_sorted));
    Ok(Some((v_sorted[rank], profit)))
}

/// Best stage-1 deviation of SP `i`: every risk on the grid, each followed by
/// a brute-force replay of the QoS subgame. Returns the best `(eps, v)` and
/// its profit.
pub fn grid_best_response<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    i: usize,
    profile: &StrategyProfile<T>,
    grid: &OracleGrid,
) -> Result<(SpStrategy<T>, T)> {
    grid.validate()?;
    profile.validate(params)?;
    let m = params.count();
    if i >= m {
        return Err(MarketError::IndexOutOfRange { index: i, count: m });
    }
    let mut eps = profile.eps();
    let mut warm = profile.qos();
    let mut best: Option<(SpStrategy<T>, T)> = None;
    for e in linspace(params.eps_bar, grid.eps_points) {
        if let Some((v, f)) = subgame_profit(params, dist, i, &mut eps, e, &mut warm, grid)? {
            if best.is_none_or(|(_, bf)| f > bf) {
                best = Some((SpStrategy::new(e, v), f));
            }
        }
    }
    best.ok_or(MarketError::EmptyDomain { index: i })
}

/// Largest gains one SP can find by deviating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationGain<T> {
    /// Best QoS change with every risk and every other QoS fixed.
    pub qos: T,
    /// Best risk change, measured against the same brute-force replay at the
    /// claimed risk.
    pub risk: T,
}

impl<T: Scalar> DeviationGain<T> {
    pub fn max(&self) -> T {
        self.qos.max(self.risk)
    }
}

/// Outcome of checking a profile for profitable unilateral deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate<T> {
    pub profile: StrategyProfile<T>,
    pub eps_points: usize,
    pub v_points: usize,
    pub cert_tol: T,
    /// Per SP.
    pub gains: Vec<DeviationGain<T>>,
    pub certified: bool,
}

impl<T: Scalar> Certificate<T> {
    /// Largest gain over SPs and deviation kinds.
    pub fn max_gain(&self) -> T {
        self.gains.iter().fold(T::neg_infinity(), |a, g| a.max(g.max()))
    }

    /// The SP with the largest gain and that gain.
    pub fn worst(&self) -> (usize, T) {
        self.gains
            .iter()
            .enumerate()
            .map(|(i, g)| (i, g.max()))
            .fold((0, T::neg_infinity()), |a, b| if b.1 > a.1 { b } else { a })
    }
}

/// Checks that no SP gains more than `cert_tol` by unilaterally deviating
/// in QoS alone or in risk (with the QoS subgame replayed).
pub fn certify<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    profile: &StrategyProfile<T>,
    grid: &OracleGrid,
    cert_tol: T,
) -> Result<Certificate<T>> {
    grid.validate()?;
    profile.validate(params)?;
    let market = SortedMarket::new(params, dist, &profile.eps())?;
    let v_max = params.v_max();
    let claimed_v = market.to_sorted(&profile.qos());
    let m = params.count();
    let mut gains = Vec::with_capacity(m);

    for i in 0..m {
        let claimed = sp_profit(params, dist, profile, i)?;
        let rank = market.rank_of[i];
        let mut v_sorted = claimed_v.clone();
        let (_, qos_best) = grid_qos_response(params, &market, &mut v_sorted, rank, v_max, grid.v_points);
        let qos_gain = qos_best - claimed;

        let mut eps = profile.eps();
        let mut warm = profile.qos();
        let reference = subgame_profit(params, dist, i, &mut eps, profile.strategies[i].eps, &mut warm, grid)?
            .map(|(_, f)| f)
            .unwrap_or(claimed);
        let (_, risk_best) = grid_best_response(params, dist, i, profile, grid)?;
        gains.push(DeviationGain {
            qos: qos_gain,
            risk: risk_best - reference,
        });
    }

    let certified = gains.iter().all(|g| g.max() <= cert_tol);
    Ok(Certificate {
        profile: profile.clone(),
        eps_points: grid.eps_points,
        v_points: grid.v_points,
        cert_tol,
        gains,
        certified,
    })
}
