//! Equilibrium solvers for markets of free online services that compete on
//! privacy risk and quality of service.
//!
//! Consumers sit on `[0, 1]` by their privacy tolerance and pick the SP with
//! the highest utility; SPs first choose a privacy risk, then a QoS. The crate
//! solves that game by backward induction:
//!
//! - [`market`]: parameters, tolerance laws, and the consumer-choice stage.
//! - [`closed_form`]: the exact two-SP equilibrium under a uniform law.
//! - [`numeric`]: exact stage-2 QoS and iterated best response in risk, for
//!   any law and any number of SPs.
//! - [`oracle`]: brute-force grid checks for unilateral deviations.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix it to `f64`.
//!
//! ```
//! use privmkt::{solve_duopoly, Params};
//!
//! let params = Params::baseline(0.7, 5.0).unwrap();
//! let eq = solve_duopoly(&params).unwrap();
//! assert!((eq.eps2 - eq.eps1 - 3.75).abs() < 1e-12);
//! ```

pub mod closed_form;
pub mod error;
pub mod market;
pub mod numeric;
pub mod oracle;
pub mod scalar;
pub mod search;

pub use closed_form::{check_feasibility, derived_constants, solve_duopoly, ClosedFormSolution};
pub use error::{MarketError, Result};
pub use market::{
    all_profits, consumer_utility, indifference_threshold, market_shares, risk_order, sp_margin, sp_profit,
    DistributionKind, EquilibriumOutcome, FeasibilityReport, MarketParams, MarketSplit, RiskDistribution,
    SolveMethod, SpStrategy, StrategyProfile,
};
pub use numeric::{
    best_response_eps, iterate_best_response, solve_spne, stage2_solve, BestResponseTrace, CertifyRequest,
    InitialRisks, SolverConfig, SpneReport, Termination,
};
pub use oracle::{brute_force_stage2, certify, grid_best_response, Certificate, OracleGrid};
pub use scalar::Scalar;

pub type Params = MarketParams<f64>;
pub type Distribution = RiskDistribution<f64>;
pub type Strategy = SpStrategy<f64>;
pub type Profile = StrategyProfile<f64>;
pub type Outcome = EquilibriumOutcome<f64>;
pub type Feasibility = FeasibilityReport<f64>;
pub type Solution = ClosedFormSolution<f64>;
pub type Config = SolverConfig<f64>;
pub type Trace = BestResponseTrace<f64>;
pub type Report = SpneReport<f64>;
pub type Cert = Certificate<f64>;
