use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{EahmError, Result};
use crate::numerics::{integrate_1d, QuadratureSpec};

/// Time profile `psi(x)` of a separable effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeProfile {
    /// `psi(x) = 1`
    One,
    /// `psi(x) = exp(-beta x)`
    ExpDecay { beta: f64 },
    /// `psi(x) = 1 / (1 + x)`
    Hyperbolic,
    /// `psi(x) = x`
    Linear,
}

impl TimeProfile {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            TimeProfile::One => 1.0,
            TimeProfile::ExpDecay { beta } => (-beta * x).exp(),
            TimeProfile::Hyperbolic => 1.0 / (1.0 + x),
            TimeProfile::Linear => x,
        }
    }

    /// `∫_0^x psi(t) dt`
    pub fn integral(&self, x: f64) -> f64 {
        match self {
            TimeProfile::One => x,
            TimeProfile::ExpDecay { beta } => -(-beta * x).exp_m1() / beta,
            TimeProfile::Hyperbolic => x.ln_1p(),
            TimeProfile::Linear => 0.5 * x * x,
        }
    }

    fn validate(&self, prefix: &str) -> Result<()> {
        if let TimeProfile::ExpDecay { beta } = self {
            if !(*beta > 0.0 && beta.is_finite()) {
                return Err(EahmError::invalid(
                    format!("{prefix}.psi.beta"),
                    format!("must be positive and finite, got {beta}"),
                ));
            }
        }
        Ok(())
    }
}

/// Built-in covariate effect families, all with closed-form `w(x, z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EffectFamily {
    /// `a(x, z) = 0`
    Zero,
    /// `a(x, z) = coefficient * z^power`, constant in time.
    ConstantInTime { coefficient: f64, power: f64 },
    /// `a(x, z) = z psi(x)`
    Separable { psi: TimeProfile },
    /// `a(x, z) = intercept + slope z psi(x)`
    Affine { intercept: f64, slope: f64, psi: TimeProfile },
}

impl EffectFamily {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(EahmError::invalid(
                    format!("effect.{name}"),
                    format!("must be nonnegative and finite, got {v}"),
                ))
            }
        };
        match self {
            EffectFamily::Zero => Ok(()),
            EffectFamily::ConstantInTime { coefficient, power } => {
                nonneg("coefficient", *coefficient)?;
                nonneg("power", *power)
            }
            EffectFamily::Separable { psi } => psi.validate("effect"),
            EffectFamily::Affine { intercept, slope, psi } => {
                nonneg("intercept", *intercept)?;
                nonneg("slope", *slope)?;
                psi.validate("effect")
            }
        }
    }

    fn rate(&self, x: f64, z: f64) -> f64 {
        match self {
            EffectFamily::Zero => 0.0,
            EffectFamily::ConstantInTime { coefficient, power } => coefficient * z.powf(*power),
            EffectFamily::Separable { psi } => z * psi.value(x),
            EffectFamily::Affine { intercept, slope, psi } => intercept + slope * z * psi.value(x),
        }
    }

    fn cumulative(&self, x: f64, z: f64) -> f64 {
        match self {
            EffectFamily::Zero => 0.0,
            EffectFamily::ConstantInTime { coefficient, power } => x * coefficient * z.powf(*power),
            EffectFamily::Separable { psi } => z * psi.integral(x),
            EffectFamily::Affine { intercept, slope, psi } => intercept * x + slope * z * psi.integral(x),
        }
    }
}

type RateFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// User-supplied effect without a closed-form cumulative.
#[derive(Clone)]
pub struct CustomEffect {
    name: String,
    rate: Arc<RateFn>,
}

impl fmt::Debug for CustomEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomEffect").field("name", &self.name).finish()
    }
}

/// Covariate effect `a(x, z)` and its cumulative `w(x, z) = ∫_0^x a(t, z) dt`.
#[derive(Debug, Clone)]
pub enum CovariateEffect {
    Family(EffectFamily),
    Custom(CustomEffect),
}

impl From<EffectFamily> for CovariateEffect {
    fn from(f: EffectFamily) -> Self {
        CovariateEffect::Family(f)
    }
}

impl CovariateEffect {
    pub fn zero() -> Self {
        EffectFamily::Zero.into()
    }

    pub fn constant_in_time(coefficient: f64, power: f64) -> Result<Self> {
        Self::family(EffectFamily::ConstantInTime { coefficient, power })
    }

    pub fn separable(psi: TimeProfile) -> Result<Self> {
        Self::family(EffectFamily::Separable { psi })
    }

    pub fn affine(intercept: f64, slope: f64, psi: TimeProfile) -> Result<Self> {
        Self::family(EffectFamily::Affine { intercept, slope, psi })
    }

    pub fn family(f: EffectFamily) -> Result<Self> {
        f.validate()?;
        Ok(CovariateEffect::Family(f))
    }

    /// Wraps an arbitrary nonnegative rate function; `w` is then computed numerically.
    pub fn custom<F>(name: impl Into<String>, rate: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        CovariateEffect::Custom(CustomEffect {
            name: name.into(),
            rate: Arc::new(rate),
        })
    }

    pub fn name(&self) -> String {
        match self {
            CovariateEffect::Family(f) => match f {
                EffectFamily::Zero => "zero".into(),
                EffectFamily::ConstantInTime { .. } => "constant-in-time".into(),
                EffectFamily::Separable { .. } => "separable".into(),
                EffectFamily::Affine { .. } => "affine".into(),
            },
            CovariateEffect::Custom(c) => c.name.clone(),
        }
    }

    pub fn as_family(&self) -> Option<&EffectFamily> {
        match self {
            CovariateEffect::Family(f) => Some(f),
            CovariateEffect::Custom(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, CovariateEffect::Family(EffectFamily::Zero))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CovariateEffect::Family(f) => f.validate(),
            CovariateEffect::Custom(_) => Ok(()),
        }
    }

    /// `a(x, z)`
    pub fn rate(&self, x: f64, z: f64) -> f64 {
        match self {
            CovariateEffect::Family(f) => f.rate(x, z),
            CovariateEffect::Custom(c) => (c.rate)(x, z),
        }
    }

    /// Closed-form `w(x, z)`, if the family has one.
    pub fn closed_form_cumulative(&self, x: f64, z: f64) -> Option<f64> {
        match self {
            CovariateEffect::Family(f) => Some(f.cumulative(x, z)),
            CovariateEffect::Custom(_) => None,
        }
    }

    /// `w(x, z)` by adaptive quadrature of the rate, regardless of family.
    pub fn numeric_cumulative(&self, x: f64, z: f64, spec: &QuadratureSpec) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        integrate_1d(|t| self.rate(t, z), 0.0, x, spec).require(0.0, x)
    }

    /// `w(x, z)`: closed form when available, otherwise quadrature at default tolerance.
    pub fn cumulative(&self, x: f64, z: f64) -> Result<f64> {
        match self.closed_form_cumulative(x, z) {
            Some(w) => Ok(w),
            None => self.numeric_cumulative(x, z, &QuadratureSpec::default()),
        }
    }
}
