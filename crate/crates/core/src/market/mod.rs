//! Domain types and the consumer-choice stage shared by every solver.

pub mod distribution;
pub mod normal;
pub mod outcome;
pub mod params;
pub mod segmentation;
pub mod strategy;

pub use distribution::{DistributionKind, RiskDistribution};
pub use outcome::{BandCheck, EquilibriumOutcome, FeasibilityReport, InequalityCheck, SolveMethod};
pub use params::{MarketParams, GAP_MIN_FRACTION};
pub use segmentation::{
    all_profits, consumer_utility, indifference_threshold, market_shares, sp_margin, sp_profit, MarketSplit,
    SortedMarket, Threshold,
};
pub use strategy::{risk_order, SpStrategy, StrategyProfile};
