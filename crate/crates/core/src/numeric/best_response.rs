//! Stage 1: privacy risks by iterated best response.
//!
//! Each candidate risk for the moving SP is scored by re-solving stage 2
//! exactly and reading its profit off the induced market split. The moving
//! SP may pass its neighbours; the profile is re-sorted for every candidate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, MarketError, Result};
use crate::market::segmentation::{margin, sorted_shares};
use crate::market::strategy::{check_separated, risk_order};
use crate::market::{EquilibriumOutcome, MarketParams, RiskDistribution, SolveMethod, StrategyProfile};
use crate::search::golden_section_max;
use crate::numeric::stage2::{stage2_solve, Stage2System};
use crate::scalar::Scalar;

/// Starting risks for the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialRisks<T> {
    /// SP `i` (0-based) starts at `(2i + 1) / (2m) * eps_bar`: evenly spread cell midpoints.
    Spread,
    /// SP `i` (0-based) starts at `(i + 1) / (i + 2) * eps_bar`.
    Staggered,
    /// Explicit risks by SP identity.
    Explicit(Vec<T>),
}

impl<T: Scalar> InitialRisks<T> {
    pub fn resolve(&self, m: usize, eps_bar: T) -> Result<Vec<T>> {
        let out = match self {
            InitialRisks::Spread => (0..m)
                .map(|i| T::from_count(2 * i + 1) / T::from_count(2 * m) * eps_bar)
                .collect(),
            InitialRisks::Staggered => (0..m)
                .map(|i| T::from_count(i + 1) / T::from_count(i + 2) * eps_bar)
                .collect(),
            InitialRisks::Explicit(eps) => {
                if eps.len() != m {
                    return Err(invalid(
                        "initial_eps",
                        format!("{} risks for {m} SPs", eps.len()),
                    ));
                }
                if eps.iter().any(|&e| !(e >= T::zero() && e <= eps_bar)) {
                    return Err(invalid("initial_eps", "risks must lie in [0, eps_bar]"));
                }
                eps.clone()
            }
        };
        Ok(out)
    }
}

/// Knobs of the iterated best-response solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    /// Convergence threshold on `max |d eps|`; `None` means `1e-6 * eps_bar`.
    pub eps_tol: Option<T>,
    pub max_iters: usize,
    /// Coarse grid points for each one-dimensional search.
    pub br_grid: usize,
    /// Width at which golden-section refinement stops.
    pub br_refine_tol: T,
    /// How many past profiles are compared against to detect cycles.
    pub cycle_window: usize,
    /// End the run at the first detected cycle. When off, the run continues
    /// to `max_iters` and still reports the first cycle it saw.
    pub stop_on_cycle: bool,
    /// Weight kept on the previous risk, in `[0, 1)`. Zero disables damping.
    pub damping: T,
    pub initial: InitialRisks<T>,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            eps_tol: None,
            max_iters: 200,
            br_grid: 512,
            br_refine_tol: T::lit(1e-8),
            cycle_window: 50,
            stop_on_cycle: true,
            damping: T::zero(),
            initial: InitialRisks::Spread,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn eps_tol(&self, params: &MarketParams<T>) -> T {
        self.eps_tol.unwrap_or_else(|| T::lit(1e-6) * params.eps_bar)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be positive"));
        }
        if self.br_grid < 8 {
            return Err(invalid("br_grid", format!("must be at least 8, got {}", self.br_grid)));
        }
        if !(self.br_refine_tol > T::zero()) {
            return Err(invalid("br_refine_tol", "must be positive"));
        }
        if self.cycle_window == 0 {
            return Err(invalid("cycle_window", "must be positive"));
        }
        if let Some(tol) = self.eps_tol {
            if !(tol > T::zero()) {
                return Err(invalid("eps_tol", "must be positive"));
            }
        }
        if !(self.damping >= T::zero() && self.damping < T::one()) {
            return Err(invalid("damping", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// How an iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Termination {
    Converged,
    /// The profile came back within tolerance of one seen `cycle_length` rounds earlier.
    Oscillating { cycle_length: usize },
    MaxIters,
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::Oscillating { .. } => "oscillating",
            Termination::MaxIters => "max_iters",
        }
    }
}

/// State after one full round of best responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRound<T> {
    pub eps: Vec<T>,
    pub v: Vec<T>,
    pub profits: Vec<T>,
}

/// Every round of an iterated best-response run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseTrace<T> {
    pub initial_eps: Vec<T>,
    pub rounds: Vec<TraceRound<T>>,
    pub termination: Termination,
}

impl<T: Scalar> BestResponseTrace<T> {
    pub fn cycle_length(&self) -> Option<usize> {
        match self.termination {
            Termination::Oscillating { cycle_length } => Some(cycle_length),
            _ => None,
        }
    }
}

/// The risk an SP settles on and the profit it expects there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse<T> {
    pub eps: T,
    pub profit: T,
}

/// Profit of SP `i` when risks are `eps_by_id` and stage 2 plays its exact
/// equilibrium; `-inf` when the profile is not separated or stage 2 would
/// need a negative QoS.
pub fn stage1_profit<T: Scalar>(params: &MarketParams<T>, dist: &RiskDistribution<T>, i: usize, eps_by_id: &[T]) -> T {
    let gap_min = params.gap_min();
    let order = risk_order(eps_by_id);
    let eps: Vec<T> = order.iter().map(|&k| eps_by_id[k]).collect();
    if eps.windows(2).any(|w| !(w[1] - w[0] >= gap_min)) {
        return T::neg_infinity();
    }
    let p: Vec<T> = order.iter().map(|&k| params.p[k]).collect();
    let x: Vec<T> = eps.iter().map(|&e| dist.cdf(e)).collect();
    let rank = order.iter().position(|&k| k == i).expect("index present");
    let system = Stage2System::assemble_sorted(params, order, eps, x, &p);
    let v = match system.solve_sorted() {
        Ok(v) => v,
        Err(_) => return T::neg_infinity(),
    };
    if v.iter().any(|&q| q < T::zero() || !q.is_finite()) {
        return T::neg_infinity();
    }
    let (shares, _, _) = sorted_shares(params.t, &system.x, &system.eps, &v);
    margin(params, p[rank], system.eps[rank], v[rank]) * shares[rank]
}

/// Best privacy risk for SP `i` with every other risk in `eps` held fixed.
///
/// Scans `cfg.br_grid` evenly spaced candidates on `[0, eps_bar]` (skipping
/// any within `gap_min` of an opponent), refines the winner by golden-section
/// search on its neighbouring cells, and keeps the current risk `eps[i]`
/// unless the search strictly beats it.
pub fn best_response_eps<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    i: usize,
    eps: &[T],
    cfg: &SolverConfig<T>,
) -> Result<BestResponse<T>> {
    let m = params.count();
    if i >= m {
        return Err(MarketError::IndexOutOfRange { index: i, count: m });
    }
    if eps.len() != m {
        return Err(invalid("eps", format!("expected {m} risks, got {}", eps.len())));
    }
    let gap_min = params.gap_min();
    let eps_bar = params.eps_bar;
    let mut work = eps.to_vec();
    let mut eval = |e: T| {
        work[i] = e;
        stage1_profit(params, dist, i, &work)
    };
    let admissible = |e: T| {
        eps.iter()
            .enumerate()
            .all(|(k, &o)| k == i || (e - o).abs() >= gap_min)
    };

    let n = cfg.br_grid.max(2);
    let step = eps_bar / T::from_count(n - 1);
    let grid_point = |k: usize| if k + 1 == n { eps_bar } else { step * T::from_count(k) };

    let mut best: Option<(usize, T)> = None;
    let mut any_admissible = false;
    for k in 0..n {
        let e = grid_point(k);
        if !admissible(e) {
            continue;
        }
        any_admissible = true;
        let f = eval(e);
        if best.is_none_or(|(_, bf)| f > bf) {
            best = Some((k, f));
        }
    }
    if !any_admissible {
        return Err(MarketError::EmptyDomain { index: i });
    }
    let (k, grid_best) = best.expect("admissible candidate");
    let mut candidate = BestResponse {
        eps: grid_point(k),
        profit: grid_best,
    };
    if grid_best.is_finite() {
        let lo = if k == 0 { T::zero() } else { grid_point(k - 1) };
        let hi = if k + 1 == n { eps_bar } else { grid_point(k + 1) };
        let (e, f) = golden_section_max(&mut eval, lo, hi, cfg.br_refine_tol);
        if f > candidate.profit && admissible(e) {
            candidate = BestResponse { eps: e, profit: f };
        }
    }

    let incumbent = BestResponse {
        eps: eps[i],
        profit: if admissible(eps[i]) { eval(eps[i]) } else { T::neg_infinity() },
    };
    let slack = T::lit(16.0) * T::epsilon() * (T::one() + incumbent.profit.abs());
    if incumbent.profit.is_finite() && candidate.profit <= incumbent.profit + slack {
        Ok(incumbent)
    } else {
        Ok(candidate)
    }
}

fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}

/// Round-robin best responses from `cfg.initial` until the risk profile stops
/// moving, revisits a recent profile, or `cfg.max_iters` rounds elapse.
pub fn iterate_best_response<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    cfg: &SolverConfig<T>,
) -> Result<(EquilibriumOutcome<T>, BestResponseTrace<T>)> {
    params.validate()?;
    cfg.validate()?;
    let m = params.count();
    let tol = cfg.eps_tol(params);
    let initial_eps = cfg.initial.resolve(m, params.eps_bar)?;
    let mut eps = initial_eps.clone();
    let mut history: Vec<Vec<T>> = vec![eps.clone()];
    let mut rounds = Vec::new();
    let mut converged = false;
    let mut first_cycle: Option<usize> = None;

    for _ in 0..cfg.max_iters {
        for i in 0..m {
            let br = best_response_eps(params, dist, i, &eps, cfg)?;
            let next = if cfg.damping > T::zero() {
                cfg.damping * eps[i] + (T::one() - cfg.damping) * br.eps
            } else {
                br.eps
            };
            eps[i] = next;
        }
        check_separated(&eps, params.gap_min())?;
        let stage2 = stage2_solve(params, dist, &eps)?;
        let profile = StrategyProfile::from_parts(&eps, &stage2.v);
        let (_, profits) = crate::market::all_profits(params, dist, &profile)?;
        rounds.push(TraceRound {
            eps: eps.clone(),
            v: stage2.v,
            profits,
        });

        let previous = history.last().expect("history starts non-empty");
        if max_abs_diff(&eps, previous) < tol {
            converged = true;
            break;
        }
        let window_start = history.len().saturating_sub(cfg.cycle_window);
        let cycle = history[window_start..]
            .iter()
            .rev()
            .position(|old| max_abs_diff(&eps, old) < tol)
            .map(|back| back + 1);
        history.push(eps.clone());
        if cycle.is_some() && first_cycle.is_none() {
            first_cycle = cycle;
            if cfg.stop_on_cycle {
                break;
            }
        }
    }

    let termination = match (converged, first_cycle) {
        (true, _) => Termination::Converged,
        (false, Some(cycle_length)) => Termination::Oscillating { cycle_length },
        (false, None) => Termination::MaxIters,
    };

    let last = rounds.last().expect("at least one round");
    let profile = StrategyProfile::from_parts(&last.eps, &last.v);
    let split = crate::market::market_shares(params, dist, &profile)?;
    let outcome = EquilibriumOutcome {
        profile,
        shares: split.shares,
        profits: last.profits.clone(),
        thresholds: split.thresholds,
        method: SolveMethod::Numeric,
        converged,
        iterations: rounds.len(),
    };
    Ok((
        outcome,
        BestResponseTrace {
            initial_eps,
            rounds,
            termination,
        },
    ))
}
