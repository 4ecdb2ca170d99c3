//! Equilibria for any tolerance law and any number of SPs.

pub mod best_response;
pub mod stage2;
pub mod tridiagonal;

use serde::{Deserialize, Serialize};

pub use best_response::{
    best_response_eps, iterate_best_response, stage1_profit, BestResponse, BestResponseTrace, InitialRisks,
    SolverConfig, Termination, TraceRound,
};
pub use stage2::{stage2_solve, Stage2Solution, Stage2System};
pub use tridiagonal::{solve_tridiagonal, tridiagonal_apply};

use crate::closed_form::{check_feasibility, solve_duopoly};
use crate::error::{MarketError, Result};
use crate::market::{EquilibriumOutcome, FeasibilityReport, MarketParams, RiskDistribution};
use crate::oracle::{certify, Certificate, OracleGrid};
use crate::scalar::Scalar;

/// Oracle check to run on the solver's answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyRequest<T> {
    pub grid: OracleGrid,
    pub cert_tol: T,
}

impl<T: Scalar> Default for CertifyRequest<T> {
    fn default() -> Self {
        Self {
            grid: OracleGrid::default(),
            cert_tol: T::lit(crate::oracle::DEFAULT_CERT_TOL),
        }
    }
}

/// Everything [`solve_spne`] learned about an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpneReport<T> {
    pub outcome: EquilibriumOutcome<T>,
    /// Closed-form feasibility, for two SPs under a uniform law only.
    pub feasibility: Option<FeasibilityReport<T>>,
    /// Present whenever the numeric solver ran.
    pub trace: Option<BestResponseTrace<T>>,
    pub certificate: Option<Certificate<T>>,
}

impl<T: Scalar> SpneReport<T> {
    /// The closed form was applicable in shape but its conditions failed.
    pub fn infeasible(&self) -> bool {
        self.feasibility.is_some_and(|f| !f.all_feasible)
    }
}

/// Solves the market: the closed form for a feasible uniform duopoly, the
/// iterated best-response solver for everything else.
///
/// With `check` set, the answer is run through the oracle and
/// [`MarketError::NotAnEquilibrium`] is returned if it fails.
pub fn solve_spne<T: Scalar>(
    params: &MarketParams<T>,
    dist: &RiskDistribution<T>,
    cfg: &SolverConfig<T>,
    check: Option<&CertifyRequest<T>>,
) -> Result<SpneReport<T>> {
    params.validate()?;
    if (dist.eps_bar() - params.eps_bar).abs() > T::epsilon() * params.eps_bar {
        return Err(crate::error::invalid("eps_bar", "distribution and market disagree on eps_bar"));
    }
    let feasibility = if params.count() == 2 && dist.is_uniform() {
        Some(check_feasibility(params)?)
    } else {
        None
    };

    let mut report = match feasibility {
        Some(f) if f.all_feasible => SpneReport {
            outcome: solve_duopoly(params)?.to_outcome(),
            feasibility,
            trace: None,
            certificate: None,
        },
        _ => {
            let (outcome, trace) = iterate_best_response(params, dist, cfg)?;
            SpneReport {
                outcome,
                feasibility,
                trace: Some(trace),
                certificate: None,
            }
        }
    };

    if let Some(req) = check {
        let cert = certify(params, dist, &report.outcome.profile, &req.grid, req.cert_tol)?;
        if !cert.certified {
            let (index, gain) = cert.worst();
            return Err(MarketError::NotAnEquilibrium {
                index,
                gain: gain.as_f64(),
            });
        }
        report.certificate = Some(cert);
    }
    Ok(report)
}
