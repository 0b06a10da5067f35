//! Scenario files: one TOML document describing one model plus run settings.

use std::path::{Path, PathBuf};

use eahm_core::analyzers::ToleranceProfile;
use eahm_core::catalog::{default_z_grid, ModelSpec};
use eahm_core::theorem::{Knob, SearchSpec, SearchTarget};
use eahm_core::{BaselineModel, CovariateDistribution, EahmModel, EffectFamily, Grid, QuadratureSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XGridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Default for XGridSpec {
    fn default() -> Self {
        XGridSpec {
            start: 0.0,
            stop: 10.0,
            points: 101,
            spacing: Spacing::Linear,
        }
    }
}

impl XGridSpec {
    pub fn build(&self) -> Result<Grid> {
        let g = match self.spacing {
            Spacing::Linear => Grid::linspace(self.start, self.stop, self.points),
            Spacing::Log => Grid::logspace(self.start, self.stop, self.points),
        };
        g.map_err(|e| CliError::Config(format!("x_grid: {e}")))
    }
}

/// Covariate grid. Without `start`/`stop` it runs from the bottom of the
/// support to the 0.999 quantile, or over the atoms of a discrete law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZGridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Default for ZGridSpec {
    fn default() -> Self {
        ZGridSpec {
            start: None,
            stop: None,
            points: 21,
            spacing: Spacing::Linear,
        }
    }
}

impl ZGridSpec {
    pub fn build(&self, covariate: &CovariateDistribution) -> Result<Grid> {
        let g = match (self.start, self.stop) {
            (None, None) => default_z_grid(covariate, self.points),
            (start, stop) => {
                let (lo, hi) = covariate.support();
                let start = start.unwrap_or(lo);
                let stop = stop.unwrap_or_else(|| hi.min(covariate.quantile(0.999)));
                match self.spacing {
                    Spacing::Linear => Grid::linspace(start, stop, self.points),
                    Spacing::Log => Grid::logspace(start, stop, self.points),
                }
            }
        };
        g.map_err(|e| CliError::Config(format!("z_grid: {e}")))
    }
}

/// Classifier slack and quadrature settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub sign_slack: f64,
    pub min_grid_points: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub tail_quantile: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let t = ToleranceProfile::default();
        let q = QuadratureSpec::default();
        Tolerances {
            sign_slack: t.sign_slack,
            min_grid_points: t.min_grid_points,
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
            max_subdivisions: q.max_subdivisions,
            tail_quantile: q.tail_quantile,
        }
    }
}

impl Tolerances {
    pub fn profile(&self) -> ToleranceProfile {
        ToleranceProfile {
            sign_slack: self.sign_slack,
            min_grid_points: self.min_grid_points,
        }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
            tail_quantile: self.tail_quantile,
        }
    }

    fn validate(&self) -> Result<()> {
        self.profile()
            .validate()
            .and_then(|_| self.quadrature().validate())
            .map_err(|e| CliError::Config(format!("tolerances: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub n: usize,
    pub alpha: f64,
}

impl Default for SampleSection {
    fn default() -> Self {
        SampleSection { n: 10_000, alpha: 0.001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub budget: usize,
    pub target: SearchTarget,
    #[serde(default)]
    pub knobs: Vec<Knob>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// A parsed scenario with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub baseline: BaselineModel,
    pub effect: EffectFamily,
    pub covariate: CovariateDistribution,
    #[serde(default)]
    pub x_grid: XGridSpec,
    #[serde(default)]
    pub z_grid: ZGridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Scenario::from_toml(&text).map_err(|e| match e {
            CliError::Parse { message, .. } => CliError::Parse {
                path: path.to_path_buf(),
                message,
            },
            e => e,
        })
    }

    /// Strict parse followed by validation of the model and settings.
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| CliError::Parse {
            path: PathBuf::from("<input>"),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot encode scenario: {e}")))
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            baseline: self.baseline.clone(),
            effect: self.effect.clone(),
            covariate: self.covariate.clone(),
        }
    }

    pub fn with_model(&self, spec: ModelSpec) -> Scenario {
        Scenario {
            baseline: spec.baseline,
            effect: spec.effect,
            covariate: spec.covariate,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.build_model()?;
        self.tolerances.validate()?;
        self.x_grid.build()?;
        self.z_grid.build(&self.covariate)?;
        if let Some(s) = &self.search {
            self.search_spec(s)?.validate()?;
        }
        if !(self.sample.alpha > 0.0 && self.sample.alpha < 1.0) {
            return Err(CliError::Config(format!("sample.alpha must lie in (0, 1), got {}", self.sample.alpha)));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<EahmModel> {
        Ok(self.model_spec().build()?)
    }

    pub fn search_spec(&self, s: &SearchSection) -> Result<SearchSpec> {
        Ok(SearchSpec {
            template: self.model_spec(),
            knobs: s.knobs.clone(),
            seed: self.seed,
            budget: s.budget,
            target: s.target.clone(),
            x_grid: self.x_grid.build()?,
            z_points: self.z_grid.points,
        })
    }
}
