use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{verify_theorem_4_1, TheoremReport};
use crate::analyzers::ToleranceProfile;
use crate::catalog::{default_x_grid, default_z_grid, ModelSpec};
use crate::error::{EahmError, Result};
use crate::model::Grid;
use crate::numerics::QuadratureSpec;

/// One sampled parameter: dotted path into the model spec and its range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Knob {
    pub path: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SearchTarget {
    ConclusionFails,
    /// A hypothesis fails; `which` restricts to one id (`H1`) or name.
    HypothesisFails {
        #[serde(default)]
        which: Option<String>,
    },
    HypothesisFailsAndConclusionFails {
        #[serde(default)]
        which: Option<String>,
    },
}

impl SearchTarget {
    fn hypothesis_failed(which: &Option<String>, report: &TheoremReport) -> bool {
        match which {
            None => !report.failed.is_empty(),
            Some(w) => report.hypothesis(w).is_some_and(|h| !h.holds),
        }
    }

    pub fn matches(&self, report: &TheoremReport) -> bool {
        match self {
            SearchTarget::ConclusionFails => !report.conclusion.holds,
            SearchTarget::HypothesisFails { which } => Self::hypothesis_failed(which, report),
            SearchTarget::HypothesisFailsAndConclusionFails { which } => {
                !report.conclusion.holds && Self::hypothesis_failed(which, report)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub template: ModelSpec,
    pub knobs: Vec<Knob>,
    pub seed: u64,
    pub budget: usize,
    pub target: SearchTarget,
    #[serde(default = "default_x_grid")]
    pub x_grid: Grid,
    #[serde(default = "default_z_points")]
    pub z_points: usize,
}

fn default_z_points() -> usize {
    21
}

impl SearchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(EahmError::invalid("search.budget", "must be at least 1"));
        }
        if self.z_points < 2 {
            return Err(EahmError::invalid("search.z_points", "must be at least 2"));
        }
        for k in &self.knobs {
            if !(k.lo.is_finite() && k.hi.is_finite() && k.lo <= k.hi) {
                return Err(EahmError::invalid(
                    format!("search.knobs.{}", k.path),
                    format!("range [{}, {}] is empty or not finite", k.lo, k.hi),
                ));
            }
            self.template.get_parameter(&k.path)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum SearchOutcome {
    Found {
        /// Zero-based sample index of the match.
        index: usize,
        spec: ModelSpec,
        report: TheoremReport,
        evaluated: usize,
    },
    Exhausted {
        evaluated: usize,
        /// Samples whose parameters built no valid model.
        rejected: usize,
    },
}

/// Draws parameter vectors from the seed and returns the first model whose
/// report matches the target.
pub fn search_counterexample(spec: &SearchSpec, tol: &ToleranceProfile, quad: &QuadratureSpec) -> Result<SearchOutcome> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rejected = 0;
    for index in 0..spec.budget {
        let mut candidate = spec.template.clone();
        for k in &spec.knobs {
            let u: f64 = rng.random();
            candidate = candidate.with_parameter(&k.path, k.lo + u * (k.hi - k.lo))?;
        }
        let model = match candidate.build() {
            Ok(m) => m,
            Err(e) if e.is_numeric() => return Err(e),
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        let z_grid = default_z_grid(&candidate.covariate, spec.z_points)?;
        let report = verify_theorem_4_1(&model, &spec.x_grid, &z_grid, tol, quad)?;
        if spec.target.matches(&report) {
            return Ok(SearchOutcome::Found {
                index,
                spec: candidate,
                report,
                evaluated: index + 1,
            });
        }
    }
    Ok(SearchOutcome::Exhausted {
        evaluated: spec.budget,
        rejected,
    })
}
