//! Verification that a DFR baseline yields a DLR mixture under the effect
//! hypotheses, plus the intermediate identities, a Monte Carlo check and a
//! counterexample search.
//!
//! Hypotheses, in order:
//!
//! * H1: the baseline `X` is DFR.
//! * H2: `a(x, z)` is decreasing in `x` for every `z`.
//! * H3: `a(x, z)` is monotone in `z` for every `x`.
//! * H4: `h*(x | z)` is TP2 when `a` decreases in `z`, RR2 when it increases.
//! * H5: `h*(x | z)` is log-convex in `x` for every `z`.
//!
//! Conclusion: `X*` is DLR (log-convex density).

mod identities;
mod lemma;
mod search;

use serde::{Deserialize, Serialize};

pub use identities::{
    verify_density_identity, verify_ratio_dlr_equivalence, verify_sampling_consistency, verify_w_identity,
    w_identity_samples, DensityIdentityReport, RatioReport, RatioSlice, SamplingReport, WIdentityReport,
    DENSITY_ALGEBRAIC_TOL, DENSITY_DERIVATIVE_TOL, FACTORIZATION_TOL, W_IDENTITY_TOL,
};
pub use lemma::{verify_lemma_4_1, LemmaCase, LemmaReport};
pub use search::{search_counterexample, Knob, SearchOutcome, SearchSpec, SearchTarget};

use crate::analyzers::{
    check_effect_monotonicity, check_ifr_dfr, check_log_convex_slice, check_log_shape, check_tp2_rr2_values, Direction,
    MonotonicityVerdict, ToleranceProfile, Tp2Class, Witness,
};
use crate::error::{AtPoint, EahmError, Result};
use crate::model::{EahmModel, Grid};
use crate::numerics::QuadratureSpec;

/// One hypothesis or the conclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    /// `H1` to `H5`, or `conclusion`.
    pub id: String,
    pub name: String,
    pub holds: bool,
    /// Classification found on the grid, e.g. `dfr`, `rr2`, `log-convex`.
    pub verdict: String,
    /// Distance of the decisive value from the rejection threshold; negative
    /// when rejected, absent when the property is undefined on the grid.
    pub margin: Option<f64>,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremStatus {
    HypothesesHoldConclusionHolds,
    /// A counterexample to the implication on the grid. Never expected.
    HypothesesHoldConclusionFails,
    HypothesisFails,
    /// The conclusion failed but some hypothesis held only within a few slacks.
    Inconclusive,
}

impl TheoremStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TheoremStatus::HypothesesHoldConclusionHolds => "hypotheses-hold-conclusion-holds",
            TheoremStatus::HypothesesHoldConclusionFails => "hypotheses-hold-conclusion-fails",
            TheoremStatus::HypothesisFails => "hypothesis-fails",
            TheoremStatus::Inconclusive => "inconclusive",
        }
    }

    pub fn is_anomaly(self) -> bool {
        self == TheoremStatus::HypothesesHoldConclusionFails
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub status: TheoremStatus,
    pub hypotheses: Vec<CheckEntry>,
    pub conclusion: CheckEntry,
    /// Ids of the failed hypotheses.
    pub failed: Vec<String>,
    /// Direction of `a` in `z` found for H3, which fixes the reading of H4.
    pub z_direction: Direction,
    pub x_points: usize,
    pub z_points: usize,
    /// Grid points dropped because the baseline hazard is infinite there.
    pub excluded_x: Vec<f64>,
    /// Set when the report comes from the doubled grids after a failed conclusion.
    pub refined: bool,
    pub slack: f64,
}

impl TheoremReport {
    pub fn hypothesis(&self, id: &str) -> Option<&CheckEntry> {
        self.hypotheses.iter().find(|h| h.id == id || h.name == id)
    }
}

/// Overall status from the entries alone. A failed conclusion under holding
/// hypotheses counts as an anomaly only if every hypothesis margin exceeds `10 slack`.
pub fn overall_status(hypotheses: &[CheckEntry], conclusion: &CheckEntry, slack: f64) -> TheoremStatus {
    if hypotheses.iter().any(|h| !h.holds) {
        return TheoremStatus::HypothesisFails;
    }
    if conclusion.holds {
        return TheoremStatus::HypothesesHoldConclusionHolds;
    }
    if hypotheses.iter().all(|h| h.margin.is_some_and(|m| m > 10.0 * slack)) {
        TheoremStatus::HypothesesHoldConclusionFails
    } else {
        TheoremStatus::Inconclusive
    }
}

fn monotone_label(d: Direction, inc: &str, dec: &str, constant: &str, mixed: &str) -> String {
    match d {
        Direction::Increasing => inc,
        Direction::Decreasing => dec,
        Direction::Constant => constant,
        Direction::Mixed => mixed,
    }
    .to_string()
}

fn entry(id: &str, name: &str, holds: bool, verdict: String, margin: f64, witnesses: Vec<Witness>) -> CheckEntry {
    CheckEntry {
        id: id.into(),
        name: name.into(),
        holds,
        verdict,
        margin: Some(margin),
        witnesses,
        note: None,
    }
}

/// Hypothesis entry for a value that could not be evaluated as positive.
fn nonpositive_entry(id: &str, name: &str, x: f64, slice: Option<f64>, index: usize, value: f64) -> CheckEntry {
    CheckEntry {
        margin: None,
        note: Some(format!("nonpositive value {value:e}; logarithms are undefined")),
        ..entry(
            id,
            name,
            false,
            "undefined".into(),
            0.0,
            vec![Witness {
                indices: vec![index],
                points: vec![x],
                value,
                slice,
            }],
        )
    }
}

/// Runs H1 to H5 and the conclusion on the given grids, re-running on
/// doubled grids before reporting a counterexample.
pub fn verify_theorem_4_1(
    model: &EahmModel,
    x_grid: &Grid,
    z_grid: &Grid,
    tol: &ToleranceProfile,
    quad: &QuadratureSpec,
) -> Result<TheoremReport> {
    tol.validate()?;
    quad.validate()?;
    let report = verify_once(model, x_grid, z_grid, tol, quad)?;
    if report.status.is_anomaly() {
        let z_fine = if model.covariate.is_discrete() { z_grid.clone() } else { z_grid.refined() };
        let mut fine = verify_once(model, &x_grid.refined(), &z_fine, tol, quad)?;
        fine.refined = true;
        return Ok(fine);
    }
    Ok(report)
}

fn verify_once(
    model: &EahmModel,
    x_grid: &Grid,
    z_grid: &Grid,
    tol: &ToleranceProfile,
    quad: &QuadratureSpec,
) -> Result<TheoremReport> {
    let eps = tol.sign_slack;
    for &z in z_grid.points() {
        if !model.covariate.in_support(z) {
            let (lo, hi) = model.covariate.support();
            return Err(EahmError::InvalidGrid(format!("covariate grid point {z} lies outside the support [{lo}, {hi}]")));
        }
    }
    let excluded_x: Vec<f64> = x_grid.points().iter().copied().filter(|&x| !model.baseline.hazard(x).is_finite()).collect();
    let xg = x_grid
        .filtered(|x| model.baseline.hazard(x).is_finite())
        .ok_or_else(|| EahmError::InvalidGrid("the baseline hazard is infinite on every grid point".into()))?;
    xg.require_len(tol.min_grid_points.max(3))?;
    let xs = xg.points();
    let zs = z_grid.points();

    // H1
    let hazard: Vec<f64> = xs.iter().map(|&x| model.baseline.hazard(x)).collect();
    let v = check_ifr_dfr(&xg, &hazard, tol)?;
    let h1 = entry(
        "H1",
        "baseline-dfr",
        v.direction.is_weakly_decreasing(),
        monotone_label(v.direction, "ifr", "dfr", "constant", "non-monotone"),
        v.decreasing_slack(),
        v.witnesses.iter().filter(|w| w.value > 0.0).cloned().collect(),
    );

    // H2, H3
    let m = check_effect_monotonicity(&model.effect, &xg, z_grid, tol)?;
    let h2 = entry(
        "H2",
        "effect-decreasing-in-x",
        m.in_x.direction.is_weakly_decreasing(),
        monotone_label(m.in_x.direction, "increasing", "decreasing", "constant", "non-monotone"),
        m.in_x.decreasing_slack(),
        m.in_x.witnesses.iter().filter(|w| w.value > 0.0).cloned().collect(),
    );
    let z_direction = m.in_z.direction;
    let h3 = entry(
        "H3",
        "effect-monotone-in-z",
        z_direction != Direction::Mixed,
        monotone_label(z_direction, "increasing", "decreasing", "constant", "non-monotone"),
        m.in_z.increasing_slack().max(m.in_z.decreasing_slack()),
        m.in_z.witnesses.clone(),
    );

    // H4
    let mut kernel = Vec::with_capacity(xs.len());
    for &x in xs {
        let row: Result<Vec<f64>> = zs.iter().map(|&z| model.conditional_hazard(x, z)).collect();
        kernel.push(row?);
    }
    let h4 = if zs.len() < 2 {
        CheckEntry {
            note: Some("single covariate value; no 2x2 minors".into()),
            ..entry("H4", "kernel-tp2-rr2", true, "both".into(), eps, vec![])
        }
    } else {
        let k = check_tp2_rr2_values(&xg, z_grid, &kernel, tol)?;
        let (holds, margin, required) = match z_direction {
            Direction::Decreasing => (k.classification.is_tp2(), k.tp2_slack(), "tp2"),
            Direction::Increasing => (k.classification.is_rr2(), k.rr2_slack(), "rr2"),
            _ => (
                k.classification != Tp2Class::Neither,
                k.tp2_slack().max(k.rr2_slack()),
                "tp2 or rr2",
            ),
        };
        let witnesses = match required {
            "tp2" => k.witnesses.iter().filter(|w| w.value < 0.0).cloned().collect(),
            "rr2" => k.witnesses.iter().filter(|w| w.value > 0.0).cloned().collect(),
            _ => k.witnesses.clone(),
        };
        let label = match k.classification {
            Tp2Class::Tp2 => "tp2",
            Tp2Class::Rr2 => "rr2",
            Tp2Class::Both => "both",
            Tp2Class::Neither => "neither",
        };
        CheckEntry {
            note: Some(format!("required: {required}")),
            ..entry("H4", "kernel-tp2-rr2", holds, label.into(), margin, witnesses)
        }
    };

    // H5
    let h5 = {
        let name = "kernel-log-convex-in-x";
        let beta = |x: f64, z: f64| model.conditional_hazard(x, z).unwrap_or(f64::NAN);
        match check_log_convex_slice(beta, &xg, zs, tol) {
            Ok(slices) => slice_entry(name, &slices),
            Err(EahmError::NonPositive { index, value }) => {
                // Find the slice that failed.
                let (z, i, v) = zs
                    .iter()
                    .find_map(|&z| {
                        xs.iter()
                            .enumerate()
                            .map(|(i, &x)| (i, beta(x, z)))
                            .find(|(_, v)| !(*v > 0.0 && v.is_finite()))
                            .map(|(i, v)| (z, i, v))
                    })
                    .unwrap_or((f64::NAN, index, value));
                nonpositive_entry("H5", name, xs[i], Some(z), i, v)
            }
            Err(e) => return Err(e),
        }
    };

    // Conclusion
    let mut log_density = Vec::with_capacity(xs.len());
    for &x in xs {
        log_density.push(model.log_overall_density(x, quad).at("overall density", x)?);
    }
    let conclusion = match check_log_shape(&xg, &log_density, tol) {
        Ok(v) => entry(
            "conclusion",
            "mixture-dlr",
            v.direction.is_weakly_increasing(),
            monotone_label(v.direction, "dlr", "ilr", "log-linear", "neither"),
            v.increasing_slack(),
            v.witnesses.iter().filter(|w| w.value < 0.0).cloned().collect(),
        ),
        Err(EahmError::NonPositive { index, value }) => {
            nonpositive_entry("conclusion", "mixture-dlr", xs[index], None, index, value)
        }
        Err(e) => return Err(e),
    };

    let hypotheses = vec![h1, h2, h3, h4, h5];
    let failed = hypotheses.iter().filter(|h| !h.holds).map(|h| h.id.clone()).collect();
    Ok(TheoremReport {
        status: overall_status(&hypotheses, &conclusion, eps),
        hypotheses,
        conclusion,
        failed,
        z_direction,
        x_points: xs.len(),
        z_points: zs.len(),
        excluded_x,
        refined: false,
        slack: eps,
    })
}

fn slice_entry(name: &str, slices: &[(f64, MonotonicityVerdict)]) -> CheckEntry {
    let holds = slices.iter().all(|(_, v)| v.direction.is_weakly_increasing());
    let margin = slices.iter().map(|(_, v)| v.increasing_slack()).fold(f64::INFINITY, f64::min);
    let worst = slices
        .iter()
        .filter_map(|(_, v)| v.fall_witness())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .cloned();
    let all_constant = slices.iter().all(|(_, v)| v.direction == Direction::Constant);
    let verdict = if all_constant {
        "log-linear"
    } else if holds {
        "log-convex"
    } else {
        "not-log-convex"
    };
    entry("H5", name, holds, verdict.into(), margin, worst.into_iter().collect())
}

#[cfg(test)]
mod tests;
