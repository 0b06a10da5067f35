use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{EahmError, Result};
use crate::numerics::root_find_monotone;

/// Distribution of the covariate `Z` (always on `[0, inf)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CovariateDistribution {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Finite atoms `(z, probability)`.
    Discrete { atoms: Vec<(f64, f64)> },
}

const QUANTILE_TOL: f64 = 1e-15;

impl CovariateDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = CovariateDistribution::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        let d = CovariateDistribution::Gamma { shape, rate };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = CovariateDistribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    /// Atoms are sorted by location; duplicate locations are rejected.
    pub fn discrete(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let d = CovariateDistribution::Discrete { atoms };
        d.validate()?;
        Ok(d)
    }

    /// Point mass at `z0`.
    pub fn degenerate(z0: f64) -> Result<Self> {
        Self::discrete(vec![(z0, 1.0)])
    }

    pub fn family(&self) -> &'static str {
        match self {
            CovariateDistribution::Exponential { .. } => "exponential",
            CovariateDistribution::Gamma { .. } => "gamma",
            CovariateDistribution::Uniform { .. } => "uniform",
            CovariateDistribution::Discrete { .. } => "discrete",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(EahmError::invalid(
                    format!("covariate.{name}"),
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        match self {
            CovariateDistribution::Exponential { rate } => positive("rate", *rate),
            CovariateDistribution::Gamma { shape, rate } => {
                positive("shape", *shape)?;
                positive("rate", *rate)
            }
            CovariateDistribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && *lo >= 0.0) {
                    return Err(EahmError::invalid("covariate.lo", format!("must be nonnegative, got {lo}")));
                }
                if !(hi.is_finite() && hi > lo) {
                    return Err(EahmError::invalid("covariate.hi", format!("must exceed lo, got {hi}")));
                }
                Ok(())
            }
            CovariateDistribution::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(EahmError::invalid("covariate.atoms", "needs at least one atom"));
                }
                for &(z, p) in atoms {
                    if !(z.is_finite() && z >= 0.0) {
                        return Err(EahmError::invalid("covariate.atoms", format!("location {z} must be nonnegative")));
                    }
                    if !(p > 0.0 && p.is_finite()) {
                        return Err(EahmError::invalid("covariate.atoms", format!("probability {p} must be positive")));
                    }
                }
                if atoms.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(EahmError::invalid(
                        "covariate.atoms",
                        "locations must be distinct and sorted",
                    ));
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(EahmError::invalid(
                        "covariate.atoms",
                        format!("probabilities must sum to 1, got {total}"),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn atoms(&self) -> Option<&[(f64, f64)]> {
        match self {
            CovariateDistribution::Discrete { atoms } => Some(atoms),
            _ => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.atoms().is_some()
    }

    /// Closed support interval `[lo, hi]`; `hi` may be infinite.
    /// For discrete families this is the hull of the atoms.
    pub fn support(&self) -> (f64, f64) {
        match self {
            CovariateDistribution::Exponential { .. } | CovariateDistribution::Gamma { .. } => (0.0, f64::INFINITY),
            CovariateDistribution::Uniform { lo, hi } => (*lo, *hi),
            CovariateDistribution::Discrete { atoms } => (atoms[0].0, atoms[atoms.len() - 1].0),
        }
    }

    pub fn in_support(&self, z: f64) -> bool {
        let (lo, hi) = self.support();
        z.is_finite() && z >= lo && z <= hi
    }

    /// Finite range used for quadrature: the support, cut at the `tail` quantile when unbounded.
    pub fn integration_range(&self, tail: f64) -> (f64, f64) {
        let (lo, hi) = self.support();
        if hi.is_finite() {
            (lo, hi)
        } else {
            (lo, self.quantile(tail))
        }
    }

    /// Density (or, for discrete families, the atom probability; zero off the atoms).
    pub fn density(&self, z: f64) -> f64 {
        match self {
            CovariateDistribution::Exponential { rate } => {
                if z < 0.0 {
                    0.0
                } else {
                    rate * (-rate * z).exp()
                }
            }
            CovariateDistribution::Gamma { shape, rate } => {
                if z < 0.0 {
                    0.0
                } else if z == 0.0 {
                    if *shape < 1.0 {
                        f64::INFINITY
                    } else if *shape == 1.0 {
                        *rate
                    } else {
                        0.0
                    }
                } else {
                    ((shape - 1.0) * z.ln() - rate * z + shape * rate.ln() - ln_gamma(*shape)).exp()
                }
            }
            CovariateDistribution::Uniform { lo, hi } => {
                if z < *lo || z > *hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
            CovariateDistribution::Discrete { atoms } => atoms
                .iter()
                .find(|a| a.0 == z)
                .map(|a| a.1)
                .unwrap_or(0.0),
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match self {
            CovariateDistribution::Exponential { rate } => {
                if z <= 0.0 {
                    0.0
                } else {
                    -(-rate * z).exp_m1()
                }
            }
            CovariateDistribution::Gamma { shape, rate } => {
                if z <= 0.0 {
                    0.0
                } else {
                    gamma_lr(*shape, rate * z)
                }
            }
            CovariateDistribution::Uniform { lo, hi } => ((z - lo) / (hi - lo)).clamp(0.0, 1.0),
            CovariateDistribution::Discrete { atoms } => atoms.iter().filter(|a| a.0 <= z).map(|a| a.1).sum(),
        }
    }

    /// `P(Z > z)`
    pub fn survival(&self, z: f64) -> f64 {
        match self {
            CovariateDistribution::Exponential { rate } => {
                if z <= 0.0 {
                    1.0
                } else {
                    (-rate * z).exp()
                }
            }
            CovariateDistribution::Discrete { atoms } => atoms.iter().filter(|a| a.0 > z).map(|a| a.1).sum(),
            _ => 1.0 - self.cdf(z),
        }
    }

    /// Smallest `z` with `cdf(z) >= p`. Gamma quantiles are found by root finding on the cdf.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            CovariateDistribution::Exponential { rate } => -(-p).ln_1p() / rate,
            CovariateDistribution::Uniform { lo, hi } => lo + p * (hi - lo),
            CovariateDistribution::Discrete { atoms } => {
                let mut acc = 0.0;
                for &(z, w) in atoms {
                    acc += w;
                    if acc >= p - 1e-15 {
                        return z;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            CovariateDistribution::Gamma { shape, rate } => {
                if p == 0.0 {
                    return 0.0;
                }
                if p == 1.0 {
                    return f64::INFINITY;
                }
                let mut hi = (shape / rate).max(1.0 / rate);
                while self.cdf(hi) < p {
                    hi *= 2.0;
                }
                root_find_monotone(|z| self.cdf(z) - p, 0.0, hi, QUANTILE_TOL)
                    .unwrap_or(hi)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            CovariateDistribution::Exponential { rate } => 1.0 / rate,
            CovariateDistribution::Gamma { shape, rate } => shape / rate,
            CovariateDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            CovariateDistribution::Discrete { atoms } => atoms.iter().map(|a| a.0 * a.1).sum(),
        }
    }

    /// One draw; consumes exactly the randomness the family's sampler needs.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CovariateDistribution::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            CovariateDistribution::Gamma { shape, rate } => Gamma::new(*shape, 1.0 / rate)
                .expect("validated parameters")
                .sample(rng),
            CovariateDistribution::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            CovariateDistribution::Discrete { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(z, p) in atoms {
                    acc += p;
                    if u < acc {
                        return z;
                    }
                }
                atoms[atoms.len() - 1].0
            }
        }
    }
}
