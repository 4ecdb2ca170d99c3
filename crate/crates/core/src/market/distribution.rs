use serde::{Deserialize, Serialize};

use crate::error::{invalid, MarketError, Result};
use crate::market::normal::std_normal_cdf;
use crate::scalar::Scalar;

/// Shape of the consumer privacy-tolerance law.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    #[default]
    Uniform,
    TruncatedNormal,
}

/// Consumer privacy-risk tolerance on `[0, eps_bar]`.
///
/// The truncated normal is centred at `eps_bar / 2`. Its normalising
/// constants are computed once at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskDistribution<T> {
    eps_bar: T,
    law: Law<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law<T> {
    Uniform,
    TruncatedNormal { sigma: T, phi_low: T, mass: T },
}

impl<T: Scalar> RiskDistribution<T> {
    pub fn uniform(eps_bar: T) -> Result<Self> {
        check_eps_bar(eps_bar)?;
        Ok(Self {
            eps_bar,
            law: Law::Uniform,
        })
    }

    pub fn truncated_normal(eps_bar: T, sigma: T) -> Result<Self> {
        check_eps_bar(eps_bar)?;
        if !(sigma.is_finite() && sigma > T::zero()) {
            return Err(invalid("sigma", format!("must be finite and > 0, got {sigma}")));
        }
        let half_width = eps_bar / (sigma + sigma);
        let phi_low = std_normal_cdf(-half_width);
        let mass = std_normal_cdf(half_width) - phi_low;
        if !(mass > T::zero()) {
            return Err(invalid("sigma", "truncation window carries no probability mass"));
        }
        Ok(Self {
            eps_bar,
            law: Law::TruncatedNormal {
                sigma,
                phi_low,
                mass,
            },
        })
    }

    /// Builds a distribution from its kind; `sigma` is ignored for `Uniform`.
    pub fn from_kind(kind: DistributionKind, eps_bar: T, sigma: Option<T>) -> Result<Self> {
        match kind {
            DistributionKind::Uniform => Self::uniform(eps_bar),
            DistributionKind::TruncatedNormal => {
                let sigma = sigma.ok_or_else(|| invalid("sigma", "required for truncated normal"))?;
                Self::truncated_normal(eps_bar, sigma)
            }
        }
    }

    pub fn kind(&self) -> DistributionKind {
        match self.law {
            Law::Uniform => DistributionKind::Uniform,
            Law::TruncatedNormal { .. } => DistributionKind::TruncatedNormal,
        }
    }

    pub fn eps_bar(&self) -> T {
        self.eps_bar
    }

    pub fn sigma(&self) -> Option<T> {
        match self.law {
            Law::Uniform => None,
            Law::TruncatedNormal { sigma, .. } => Some(sigma),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.law, Law::Uniform)
    }

    /// Fraction of consumers whose tolerance is at most `eps`; this is the
    /// normalized location of an SP advertising `eps`.
    pub fn cdf(&self, eps: T) -> T {
        if eps.is_nan() {
            return eps;
        }
        if eps <= T::zero() {
            return T::zero();
        }
        if eps >= self.eps_bar {
            return T::one();
        }
        let raw = match self.law {
            Law::Uniform => eps / self.eps_bar,
            Law::TruncatedNormal {
                sigma,
                phi_low,
                mass,
            } => {
                let z = (eps - self.eps_bar * T::lit(0.5)) / sigma;
                (std_normal_cdf(z) - phi_low) / mass
            }
        };
        raw.max(T::zero()).min(T::one())
    }

    /// Tolerance level below which a fraction `q` of consumers lie.
    pub fn inverse_cdf(&self, q: T) -> Result<T> {
        if !(q >= T::zero() && q <= T::one()) {
            return Err(MarketError::QuantileOutOfRange(q.as_f64()));
        }
        match self.law {
            Law::Uniform => Ok(q * self.eps_bar),
            Law::TruncatedNormal { .. } => Ok(self.bisect_quantile(q)),
        }
    }

    // F is continuous and nondecreasing, so bisection on [0, eps_bar] always
    // brackets the quantile; stop once the bracket stops shrinking.
    fn bisect_quantile(&self, q: T) -> T {
        if q <= T::zero() {
            return T::zero();
        }
        if q >= T::one() {
            return self.eps_bar;
        }
        let mut lo = T::zero();
        let mut hi = self.eps_bar;
        for _ in 0..200 {
            let mid = lo + (hi - lo) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (self.cdf(lo) - q).abs() <= (self.cdf(hi) - q).abs() {
            lo
        } else {
            hi
        }
    }
}

fn check_eps_bar<T: Scalar>(eps_bar: T) -> Result<()> {
    if eps_bar.is_finite() && eps_bar > T::zero() {
        Ok(())
    } else {
        Err(invalid("eps_bar", format!("must be finite and > 0, got {eps_bar}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tn() -> RiskDistribution<f64> {
        RiskDistribution::truncated_normal(5.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_cdf_examples() {
        let u = RiskDistribution::<f64>::uniform(5.0).unwrap();
        assert_eq!(u.cdf(2.5), 0.5);
        assert_eq!(u.cdf(-1.0), 0.0);
        assert_eq!(u.cdf(7.0), 1.0);
        assert_eq!(u.inverse_cdf(0.2).unwrap(), 1.0);
        let q = u.cdf(3.7);
        assert!((u.inverse_cdf(q).unwrap() - 3.7).abs() < 1e-9);
    }

    #[test]
    fn truncated_normal_cdf_examples() {
        let d = tn();
        assert!((d.cdf(2.5) - 0.5).abs() < 1e-15);
        assert_eq!(d.cdf(0.0), 0.0);
        assert_eq!(d.cdf(5.0), 1.0);
        assert!((d.inverse_cdf(0.5).unwrap() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn inverse_rejects_out_of_range() {
        assert!(matches!(
            tn().inverse_cdf(1.5),
            Err(MarketError::QuantileOutOfRange(_))
        ));
        assert!(tn().inverse_cdf(-0.1).is_err());
        assert!(tn().inverse_cdf(f64::NAN).is_err());
    }

    #[test]
    fn truncated_normal_needs_sigma() {
        assert!(RiskDistribution::<f64>::from_kind(DistributionKind::TruncatedNormal, 5.0, None).is_err());
        assert!(RiskDistribution::truncated_normal(5.0, 0.0).is_err());
        assert!(RiskDistribution::uniform(0.0_f64).is_err());
    }
}
