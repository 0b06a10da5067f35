use serde::{Deserialize, Serialize};

use crate::error::{EahmError, Result};

/// Baseline lifetime `X`, described by its hazard rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaselineModel {
    /// `h(x) = rate`.
    Exponential { rate: f64 },
    /// `h(x) = (shape / scale) (x / scale)^(shape - 1)`.
    Weibull { shape: f64, scale: f64 },
    /// `h(x) = a exp(b x)`; `b < 0` gives a decreasing hazard.
    Gompertz { a: f64, b: f64 },
    /// `h(x) = intercept + slope x`.
    LinearHazard { intercept: f64, slope: f64 },
    /// Rate `rates[i]` on `[breakpoints[i-1], breakpoints[i])`, right-continuous.
    PiecewiseConstant { breakpoints: Vec<f64>, rates: Vec<f64> },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(EahmError::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(EahmError::invalid(name, format!("must be nonnegative and finite, got {v}")))
    }
}

impl BaselineModel {
    pub fn exponential(rate: f64) -> Result<Self> {
        let m = BaselineModel::Exponential { rate };
        m.validate()?;
        Ok(m)
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        let m = BaselineModel::Weibull { shape, scale };
        m.validate()?;
        Ok(m)
    }

    pub fn gompertz(a: f64, b: f64) -> Result<Self> {
        let m = BaselineModel::Gompertz { a, b };
        m.validate()?;
        Ok(m)
    }

    pub fn linear_hazard(intercept: f64, slope: f64) -> Result<Self> {
        let m = BaselineModel::LinearHazard { intercept, slope };
        m.validate()?;
        Ok(m)
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let m = BaselineModel::PiecewiseConstant { breakpoints, rates };
        m.validate()?;
        Ok(m)
    }

    pub fn family(&self) -> &'static str {
        match self {
            BaselineModel::Exponential { .. } => "exponential",
            BaselineModel::Weibull { .. } => "weibull",
            BaselineModel::Gompertz { .. } => "gompertz",
            BaselineModel::LinearHazard { .. } => "linear-hazard",
            BaselineModel::PiecewiseConstant { .. } => "piecewise-constant",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaselineModel::Exponential { rate } => positive("baseline.rate", *rate),
            BaselineModel::Weibull { shape, scale } => {
                positive("baseline.shape", *shape)?;
                positive("baseline.scale", *scale)
            }
            BaselineModel::Gompertz { a, b } => {
                positive("baseline.a", *a)?;
                if b.is_finite() {
                    Ok(())
                } else {
                    Err(EahmError::invalid("baseline.b", "must be finite"))
                }
            }
            BaselineModel::LinearHazard { intercept, slope } => {
                nonnegative("baseline.intercept", *intercept)?;
                nonnegative("baseline.slope", *slope)?;
                if *intercept + *slope > 0.0 {
                    Ok(())
                } else {
                    Err(EahmError::invalid(
                        "baseline.slope",
                        "intercept and slope cannot both be zero",
                    ))
                }
            }
            BaselineModel::PiecewiseConstant { breakpoints, rates } => {
                if rates.len() != breakpoints.len() + 1 {
                    return Err(EahmError::invalid(
                        "baseline.rates",
                        format!(
                            "needs one more entry than breakpoints ({} rates, {} breakpoints)",
                            rates.len(),
                            breakpoints.len()
                        ),
                    ));
                }
                for &r in rates {
                    nonnegative("baseline.rates", r)?;
                }
                for &t in breakpoints {
                    positive("baseline.breakpoints", t)?;
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(EahmError::invalid(
                        "baseline.breakpoints",
                        "must be strictly increasing",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Hazard rate `h(x)`.
    /// Points where the hazard jumps.
    pub fn kinks(&self) -> &[f64] {
        match self {
            BaselineModel::PiecewiseConstant { breakpoints, .. } => breakpoints,
            _ => &[],
        }
    }

    pub fn hazard(&self, x: f64) -> f64 {
        match self {
            BaselineModel::Exponential { rate } => *rate,
            BaselineModel::Weibull { shape, scale } => {
                if x == 0.0 {
                    return if *shape < 1.0 {
                        f64::INFINITY
                    } else if *shape == 1.0 {
                        1.0 / scale
                    } else {
                        0.0
                    };
                }
                (shape / scale) * (x / scale).powf(shape - 1.0)
            }
            BaselineModel::Gompertz { a, b } => a * (b * x).exp(),
            BaselineModel::LinearHazard { intercept, slope } => intercept + slope * x,
            BaselineModel::PiecewiseConstant { breakpoints, rates } => {
                let idx = breakpoints.partition_point(|&t| t <= x);
                rates[idx]
            }
        }
    }

    /// Cumulative hazard `H(x)`.
    pub fn cumulative_hazard(&self, x: f64) -> f64 {
        match self {
            BaselineModel::Exponential { rate } => rate * x,
            BaselineModel::Weibull { shape, scale } => (x / scale).powf(*shape),
            BaselineModel::Gompertz { a, b } => {
                if *b == 0.0 {
                    a * x
                } else {
                    a * (b * x).exp_m1() / b
                }
            }
            BaselineModel::LinearHazard { intercept, slope } => intercept * x + 0.5 * slope * x * x,
            BaselineModel::PiecewiseConstant { breakpoints, rates } => {
                let mut acc = 0.0;
                let mut left = 0.0;
                for (i, &t) in breakpoints.iter().enumerate() {
                    if x <= t {
                        return acc + rates[i] * (x - left);
                    }
                    acc += rates[i] * (t - left);
                    left = t;
                }
                acc + rates[rates.len() - 1] * (x - left)
            }
        }
    }

    pub fn log_survival(&self, x: f64) -> f64 {
        -self.cumulative_hazard(x)
    }

    pub fn survival(&self, x: f64) -> f64 {
        self.log_survival(x).exp()
    }

    /// Density `f(x) = h(x) S(x)`.
    pub fn density(&self, x: f64) -> f64 {
        let h = self.hazard(x);
        if h == 0.0 {
            0.0
        } else {
            (h.ln() - self.cumulative_hazard(x)).exp()
        }
    }
}
