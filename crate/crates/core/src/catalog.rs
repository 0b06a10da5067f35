//! Serializable model descriptions and the built-in scenarios.

use serde::{Deserialize, Serialize};

use crate::error::{EahmError, Result};
use crate::model::{BaselineModel, CovariateDistribution, CovariateEffect, EahmModel, EffectFamily, Grid, TimeProfile};

/// A model built only from families with closed forms, so it can be written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub baseline: BaselineModel,
    pub effect: EffectFamily,
    pub covariate: CovariateDistribution,
}

impl ModelSpec {
    pub fn build(&self) -> Result<EahmModel> {
        EahmModel::new(
            self.baseline.clone(),
            CovariateEffect::family(self.effect.clone())?,
            self.covariate.clone(),
        )
    }

    /// Dotted path into the serialized form, e.g. `baseline.shape` or `effect.psi.beta`.
    pub fn get_parameter(&self, path: &str) -> Result<f64> {
        let value = serde_json::to_value(self).map_err(|e| EahmError::invalid(path, e.to_string()))?;
        value
            .pointer(&pointer(path))
            .and_then(|v| v.as_f64())
            .ok_or_else(|| EahmError::invalid(path, "no numeric parameter at this path"))
    }

    /// Returns a copy with one numeric parameter replaced. The copy is not validated.
    pub fn with_parameter(&self, path: &str, x: f64) -> Result<ModelSpec> {
        let mut value = serde_json::to_value(self).map_err(|e| EahmError::invalid(path, e.to_string()))?;
        let slot = value
            .pointer_mut(&pointer(path))
            .filter(|v| v.is_number())
            .ok_or_else(|| EahmError::invalid(path, "no numeric parameter at this path"))?;
        *slot = serde_json::Number::from_f64(x)
            .map(serde_json::Value::Number)
            .ok_or_else(|| EahmError::invalid(path, format!("{x} is not finite")))?;
        serde_json::from_value(value).map_err(|e| EahmError::invalid(path, e.to_string()))
    }
}

fn pointer(path: &str) -> String {
    path.split('.').fold(String::new(), |mut acc, part| {
        acc.push('/');
        acc.push_str(part);
        acc
    })
}

/// Default x-grid: 101 evenly spaced points on `[0, 10]`.
pub fn default_x_grid() -> Grid {
    Grid::linspace(0.0, 10.0, 101).expect("static grid")
}

/// Covariate grid: the atoms of a discrete law, otherwise `points` evenly spaced
/// values from the lower end of the support to its 0.999 quantile.
pub fn default_z_grid(covariate: &CovariateDistribution, points: usize) -> Result<Grid> {
    if let Some(atoms) = covariate.atoms() {
        return Grid::new(atoms.iter().map(|a| a.0).collect());
    }
    let (lo, hi) = covariate.support();
    let top = hi.min(covariate.quantile(0.999));
    Grid::linspace(lo, top, points)
}

/// One of the shipped scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinScenario {
    pub name: &'static str,
    pub summary: &'static str,
    pub spec: ModelSpec,
}

fn exp1() -> CovariateDistribution {
    CovariateDistribution::Exponential { rate: 1.0 }
}

fn sep(psi: TimeProfile) -> EffectFamily {
    EffectFamily::Separable { psi }
}

/// Every shipped scenario, in a fixed order.
pub fn builtin_scenarios() -> Vec<BuiltinScenario> {
    let s = |name, summary, baseline, effect, covariate| BuiltinScenario {
        name,
        summary,
        spec: ModelSpec {
            baseline,
            effect,
            covariate,
        },
    };
    vec![
        s(
            "ahm-exponential",
            "exponential(1) baseline, a = z, Z ~ exponential(1); closed forms available",
            BaselineModel::Exponential { rate: 1.0 },
            sep(TimeProfile::One),
            exp1(),
        ),
        s(
            "eahm-hyperbolic",
            "exponential(1) baseline, a = z/(1+x), Z ~ exponential(1)",
            BaselineModel::Exponential { rate: 1.0 },
            sep(TimeProfile::Hyperbolic),
            exp1(),
        ),
        s(
            "weibull-control",
            "Weibull shape 2 (IFR) baseline, a = z, Z ~ exponential(1)",
            BaselineModel::Weibull { shape: 2.0, scale: 1.0 },
            sep(TimeProfile::One),
            exp1(),
        ),
        s(
            "zero-effect",
            "Weibull shape 0.8 baseline without covariate effect",
            BaselineModel::Weibull { shape: 0.8, scale: 1.0 },
            EffectFamily::Zero,
            exp1(),
        ),
        s(
            "discrete-expdecay",
            "exponential(0.5) baseline, a = z exp(-x), three-point covariate",
            BaselineModel::Exponential { rate: 0.5 },
            sep(TimeProfile::ExpDecay { beta: 1.0 }),
            CovariateDistribution::Discrete {
                atoms: vec![(0.5, 0.3), (1.0, 0.4), (2.0, 0.3)],
            },
        ),
        s(
            "uniform-affine",
            "exponential(1) baseline, a = 0.2 + z/(1+x), Z ~ uniform(0, 2)",
            BaselineModel::Exponential { rate: 1.0 },
            EffectFamily::Affine {
                intercept: 0.2,
                slope: 1.0,
                psi: TimeProfile::Hyperbolic,
            },
            CovariateDistribution::Uniform { lo: 0.0, hi: 2.0 },
        ),
        s(
            "gompertz-gamma",
            "Gompertz(1, -0.2) baseline, a = 0.2 + z/(1+x), Z ~ gamma(2, 2)",
            BaselineModel::Gompertz { a: 1.0, b: -0.2 },
            EffectFamily::Affine {
                intercept: 0.2,
                slope: 1.0,
                psi: TimeProfile::Hyperbolic,
            },
            CovariateDistribution::Gamma { shape: 2.0, rate: 2.0 },
        ),
        s(
            "piecewise-dfr",
            "piecewise-constant decreasing hazard 2, 1, 0.5 with a = z, Z ~ gamma(3, 3)",
            BaselineModel::PiecewiseConstant {
                breakpoints: vec![1.0, 3.0],
                rates: vec![2.0, 1.0, 0.5],
            },
            sep(TimeProfile::One),
            CovariateDistribution::Gamma { shape: 3.0, rate: 3.0 },
        ),
        s(
            "linear-ifr",
            "linear hazard 0.5 + 0.5x (IFR) with a = z, Z ~ exponential(2)",
            BaselineModel::LinearHazard {
                intercept: 0.5,
                slope: 0.5,
            },
            sep(TimeProfile::One),
            CovariateDistribution::Exponential { rate: 2.0 },
        ),
        s(
            "degenerate-covariate",
            "exponential(1) baseline, a = z/(1+x), Z = 0.5 almost surely",
            BaselineModel::Exponential { rate: 1.0 },
            sep(TimeProfile::Hyperbolic),
            CovariateDistribution::Discrete { atoms: vec![(0.5, 1.0)] },
        ),
    ]
}

pub fn builtin(name: &str) -> Option<BuiltinScenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}
