use serde::{Deserialize, Serialize};

use crate::error::{EahmError, Result};
use crate::model::Grid;

/// Sign slack and grid-size requirements shared by all classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceProfile {
    /// Differences with `|d| <= sign_slack` count as zero.
    pub sign_slack: f64,
    pub min_grid_points: usize,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        ToleranceProfile {
            sign_slack: 1e-9,
            min_grid_points: 3,
        }
    }
}

impl ToleranceProfile {
    pub fn with_slack(sign_slack: f64) -> Self {
        ToleranceProfile {
            sign_slack,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sign_slack > 0.0 && self.sign_slack.is_finite()) {
            return Err(EahmError::invalid("sign_slack", "must be positive and finite"));
        }
        if self.min_grid_points < 2 {
            return Err(EahmError::invalid("min_grid_points", "must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

impl Direction {
    /// Weak reading: constant counts as both increasing and decreasing.
    pub fn is_weakly_increasing(self) -> bool {
        matches!(self, Direction::Increasing | Direction::Constant)
    }

    pub fn is_weakly_decreasing(self) -> bool {
        matches!(self, Direction::Decreasing | Direction::Constant)
    }
}

/// Evidence for a rejected class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Grid indices of the points involved.
    pub indices: Vec<usize>,
    /// Coordinates of those points (grid positions, or `x1, x2, z1, z2` for kernels).
    pub points: Vec<f64>,
    /// The signed difference or determinant that decided the verdict.
    pub value: f64,
    /// Fixed coordinate of the slice for bivariate checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<f64>,
}

/// Classification of a sequence of differences. Verdicts are only claims
/// about the evaluated grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityVerdict {
    pub direction: Direction,
    /// Witnesses for each rejected direction: the largest rise rejects
    /// "decreasing", the largest fall rejects "increasing".
    pub witnesses: Vec<Witness>,
    /// Smallest decisive difference: the minimum step for increasing, the
    /// minimum drop for decreasing, the smaller violation for mixed, and
    /// `slack - max |step|` for constant.
    pub margin: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub slack: f64,
}

impl MonotonicityVerdict {
    /// Verdict for a sequence with nothing to compare.
    pub fn trivially_constant(slack: f64) -> Self {
        MonotonicityVerdict {
            direction: Direction::Constant,
            witnesses: vec![],
            margin: slack,
            min_step: 0.0,
            max_step: 0.0,
            slack,
        }
    }

    /// How far the weakly-increasing reading is from being rejected (negative if rejected).
    pub fn increasing_slack(&self) -> f64 {
        self.min_step + self.slack
    }

    /// How far the weakly-decreasing reading is from being rejected (negative if rejected).
    pub fn decreasing_slack(&self) -> f64 {
        self.slack - self.max_step
    }

    pub fn rise_witness(&self) -> Option<&Witness> {
        self.witnesses.iter().find(|w| w.value > 0.0)
    }

    pub fn fall_witness(&self) -> Option<&Witness> {
        self.witnesses.iter().find(|w| w.value < 0.0)
    }
}

/// Classifies a difference sequence. `window(i)` gives the point indices behind difference `i`.
pub(crate) fn classify_steps(
    steps: &[f64],
    slack: f64,
    points: &[f64],
    window: impl Fn(usize) -> Vec<usize>,
) -> MonotonicityVerdict {
    debug_assert!(!steps.is_empty());
    let (mut imin, mut imax) = (0usize, 0usize);
    for (i, &d) in steps.iter().enumerate() {
        if d < steps[imin] {
            imin = i;
        }
        if d > steps[imax] {
            imax = i;
        }
    }
    let min_step = steps[imin];
    let max_step = steps[imax];

    let make = |i: usize| {
        let idx = window(i);
        Witness {
            points: idx.iter().map(|&k| points[k]).collect(),
            indices: idx,
            value: steps[i],
            slice: None,
        }
    };

    let rises = max_step > slack;
    let falls = min_step < -slack;
    let (direction, margin, witnesses) = match (rises, falls) {
        (false, false) => (Direction::Constant, slack - max_step.abs().max(min_step.abs()), vec![]),
        (true, false) => (Direction::Increasing, min_step, vec![make(imax)]),
        (false, true) => (Direction::Decreasing, -max_step, vec![make(imin)]),
        (true, true) => (Direction::Mixed, max_step.min(-min_step), vec![make(imax), make(imin)]),
    };
    MonotonicityVerdict {
        direction,
        witnesses,
        margin,
        min_step,
        max_step,
        slack,
    }
}

/// Rescales positive values to peak 1 when they span more than six decades.
pub(crate) fn normalize_if_wide(values: &[f64]) -> Vec<f64> {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if max > 0.0 && (min == 0.0 || max / min > 1e6) {
        values.iter().map(|v| v / max).collect()
    } else {
        values.to_vec()
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(EahmError::Shape(format!("value at index {i} is not finite: {}", values[i]))),
        None => Ok(()),
    }
}

/// Monotonicity of `values` by the signs of consecutive differences.
/// Witness points are the positions (indices) in the sequence.
pub fn check_monotone_1d(values: &[f64], tol: &ToleranceProfile) -> Result<MonotonicityVerdict> {
    let positions: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
    monotone_on(&positions, values, tol)
}

/// As [`check_monotone_1d`], with witnesses reported at grid coordinates.
pub fn check_monotone_on(grid: &Grid, values: &[f64], tol: &ToleranceProfile) -> Result<MonotonicityVerdict> {
    if grid.len() != values.len() {
        return Err(EahmError::Shape(format!(
            "{} values for a grid of {} points",
            values.len(),
            grid.len()
        )));
    }
    monotone_on(grid.points(), values, tol)
}

fn monotone_on(points: &[f64], values: &[f64], tol: &ToleranceProfile) -> Result<MonotonicityVerdict> {
    if values.len() < 2 {
        return Err(EahmError::GridSize {
            required: 2,
            actual: values.len(),
        });
    }
    check_finite(values)?;
    let v = normalize_if_wide(values);
    let steps: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(classify_steps(&steps, tol.sign_slack, points, |i| vec![i, i + 1]))
}

/// IFR/DFR from hazard values: increasing is IFR, decreasing DFR, constant both.
pub fn check_ifr_dfr(grid: &Grid, hazard: &[f64], tol: &ToleranceProfile) -> Result<MonotonicityVerdict> {
    if let Some(i) = hazard.iter().position(|h| *h < 0.0) {
        return Err(EahmError::Shape(format!("negative hazard {} at index {i}", hazard[i])));
    }
    check_monotone_on(grid, hazard, tol)
}

/// Convexity of `log_values` over a possibly non-uniform grid.
///
/// The deciding quantities are second divided differences
/// `2 (s_{i+1} - s_i) / (x_{i+2} - x_i)` of the log values, `s_i` the slopes.
/// `Increasing` slopes mean log-convex, `Decreasing` log-concave.
pub fn check_log_shape(grid: &Grid, log_values: &[f64], tol: &ToleranceProfile) -> Result<MonotonicityVerdict> {
    if grid.len() != log_values.len() {
        return Err(EahmError::Shape(format!(
            "{} values for a grid of {} points",
            log_values.len(),
            grid.len()
        )));
    }
    let need = tol.min_grid_points.max(3);
    grid.require_len(need)?;
    if let Some(i) = log_values.iter().position(|v| !v.is_finite()) {
        return Err(EahmError::NonPositive {
            index: i,
            value: log_values[i].exp(),
        });
    }
    let x = grid.points();
    let slopes: Vec<f64> = (0..x.len() - 1)
        .map(|i| (log_values[i + 1] - log_values[i]) / (x[i + 1] - x[i]))
        .collect();
    let second: Vec<f64> = (0..slopes.len() - 1)
        .map(|i| 2.0 * (slopes[i + 1] - slopes[i]) / (x[i + 2] - x[i]))
        .collect();
    Ok(classify_steps(&second, tol.sign_slack, x, |i| vec![i, i + 1, i + 2]))
}

/// ILR/DLR from density values on a grid. Slopes of `log f` increasing
/// (log-convex) is DLR, decreasing (log-concave) ILR, constant both.
pub fn check_ilr_dlr(grid: &Grid, density: &[f64], tol: &ToleranceProfile) -> Result<MonotonicityVerdict> {
    if let Some(i) = density.iter().position(|f| !(*f > 0.0)) {
        return Err(EahmError::NonPositive {
            index: i,
            value: density[i],
        });
    }
    let logs: Vec<f64> = density.iter().map(|f| f.ln()).collect();
    check_log_shape(grid, &logs, tol)
}
