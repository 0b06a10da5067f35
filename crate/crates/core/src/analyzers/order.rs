use serde::{Deserialize, Serialize};

use super::monotone::{check_monotone_on, Direction, ToleranceProfile, Witness};
use crate::error::{EahmError, Result};
use crate::model::Grid;

/// Outcome of an order comparison `X <= Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderHolds {
    Yes,
    /// `Y <= X` instead.
    Reversed,
    /// Both directions hold (equal up to slack).
    Equal,
    No,
}

impl OrderHolds {
    pub fn holds(self) -> bool {
        matches!(self, OrderHolds::Yes | OrderHolds::Equal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub holds: OrderHolds,
    /// Violations of the rejected direction(s).
    pub witnesses: Vec<Witness>,
    pub margin: f64,
}

fn same_len(grid: &Grid, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(EahmError::Shape(format!(
            "curves of length {} and {} on a grid of {} points",
            a.len(),
            b.len(),
            grid.len()
        )));
    }
    grid.require_len(2)
}

fn check_survival_shape(name: &str, s: &[f64], slack: f64) -> Result<()> {
    for (i, &v) in s.iter().enumerate() {
        if !(v >= -slack && v <= 1.0 + slack) {
            return Err(EahmError::Shape(format!("{name} survival {v} at index {i} is outside [0, 1]")));
        }
    }
    if let Some(i) = s.windows(2).position(|w| w[1] > w[0] + slack) {
        return Err(EahmError::Shape(format!(
            "{name} survival increases from {} to {} at index {i}",
            s[i],
            s[i + 1]
        )));
    }
    Ok(())
}

/// Usual stochastic order: `X <=_st Y` iff `S_X(x) <= S_Y(x)` for every grid point.
pub fn check_st_order(grid: &Grid, survival_x: &[f64], survival_y: &[f64], tol: &ToleranceProfile) -> Result<OrderVerdict> {
    same_len(grid, survival_x, survival_y)?;
    let eps = tol.sign_slack;
    check_survival_shape("X", survival_x, eps)?;
    check_survival_shape("Y", survival_y, eps)?;

    // gap > 0 where Y dominates.
    let gaps: Vec<f64> = survival_y.iter().zip(survival_x).map(|(y, x)| y - x).collect();
    let (mut imin, mut imax) = (0, 0);
    for (i, &g) in gaps.iter().enumerate() {
        if g < gaps[imin] {
            imin = i;
        }
        if g > gaps[imax] {
            imax = i;
        }
    }
    let pts = grid.points();
    let witness = |i: usize| Witness {
        indices: vec![i],
        points: vec![pts[i]],
        value: gaps[i],
        slice: None,
    };
    let yes = gaps[imin] >= -eps;
    let reversed = gaps[imax] <= eps;
    let verdict = match (yes, reversed) {
        (true, true) => OrderVerdict {
            holds: OrderHolds::Equal,
            witnesses: vec![],
            margin: eps - gaps[imin].abs().max(gaps[imax].abs()),
        },
        (true, false) => OrderVerdict {
            holds: OrderHolds::Yes,
            witnesses: vec![witness(imax)],
            margin: gaps[imin],
        },
        (false, true) => OrderVerdict {
            holds: OrderHolds::Reversed,
            witnesses: vec![witness(imin)],
            margin: -gaps[imax],
        },
        (false, false) => OrderVerdict {
            holds: OrderHolds::No,
            witnesses: vec![witness(imin), witness(imax)],
            margin: gaps[imax].min(-gaps[imin]),
        },
    };
    Ok(verdict)
}

/// Likelihood ratio order: `X <=_lr Y` iff `f_Y / f_X` is increasing on the grid.
pub fn check_lr_order(grid: &Grid, density_x: &[f64], density_y: &[f64], tol: &ToleranceProfile) -> Result<OrderVerdict> {
    same_len(grid, density_x, density_y)?;
    for (i, (&fx, &fy)) in density_x.iter().zip(density_y).enumerate() {
        if !(fx > 0.0) {
            return Err(EahmError::NonPositive { index: i, value: fx });
        }
        if !(fy > 0.0) {
            return Err(EahmError::NonPositive { index: i, value: fy });
        }
    }
    let ratio: Vec<f64> = density_y.iter().zip(density_x).map(|(y, x)| y / x).collect();
    let v = check_monotone_on(grid, &ratio, tol)?;
    let holds = match v.direction {
        Direction::Increasing => OrderHolds::Yes,
        Direction::Decreasing => OrderHolds::Reversed,
        Direction::Constant => OrderHolds::Equal,
        Direction::Mixed => OrderHolds::No,
    };
    Ok(OrderVerdict {
        holds,
        witnesses: v.witnesses,
        margin: v.margin,
    })
}
