use serde::{Deserialize, Serialize};

use super::monotone::{check_log_shape, classify_steps, Direction, MonotonicityVerdict, ToleranceProfile, Witness};
use crate::error::{EahmError, Result};
use crate::model::{CovariateEffect, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tp2Class {
    Tp2,
    Rr2,
    Both,
    Neither,
}

impl Tp2Class {
    pub fn is_tp2(self) -> bool {
        matches!(self, Tp2Class::Tp2 | Tp2Class::Both)
    }

    pub fn is_rr2(self) -> bool {
        matches!(self, Tp2Class::Rr2 | Tp2Class::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tp2Verdict {
    pub classification: Tp2Class,
    /// Most negative determinant (rejects TP2) and/or most positive (rejects RR2).
    /// Points are `[x1, x2, z1, z2]`.
    pub witnesses: Vec<Witness>,
    pub min_det: f64,
    pub max_det: f64,
    pub margin: f64,
    pub slack: f64,
    /// Peak value the kernel was divided by before taking determinants (1 if unscaled).
    pub scale: f64,
}

impl Tp2Verdict {
    /// Distance of the TP2 reading from rejection.
    pub fn tp2_slack(&self) -> f64 {
        self.min_det + self.slack
    }

    pub fn rr2_slack(&self) -> f64 {
        self.slack - self.max_det
    }
}

/// `b11 b22 - b12 b21` for nonnegative entries, via log-sums when all are positive.
pub fn minor_determinant(b11: f64, b12: f64, b21: f64, b22: f64) -> f64 {
    if b11 > 0.0 && b12 > 0.0 && b21 > 0.0 && b22 > 0.0 {
        let l1 = b11.ln() + b22.ln();
        let l2 = b12.ln() + b21.ln();
        if l1 >= l2 {
            -l1.exp() * (l2 - l1).exp_m1()
        } else {
            l2.exp() * (l1 - l2).exp_m1()
        }
    } else {
        b11 * b22 - b12 * b21
    }
}

/// Kernel values `values[i][j] = β(x_i, z_j)`; rows follow the x-grid.
pub fn check_tp2_rr2_values(x_grid: &Grid, z_grid: &Grid, values: &[Vec<f64>], tol: &ToleranceProfile) -> Result<Tp2Verdict> {
    x_grid.require_len(2)?;
    z_grid.require_len(2)?;
    if values.len() != x_grid.len() || values.iter().any(|r| r.len() != z_grid.len()) {
        return Err(EahmError::Shape("kernel values do not match the grid product".into()));
    }
    let (nx, nz) = (x_grid.len(), z_grid.len());
    let mut max = 0.0f64;
    let mut min = f64::INFINITY;
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(EahmError::NonPositive { index: i * nz + j, value: v });
            }
            max = max.max(v);
            min = min.min(v);
        }
    }
    let scale = if max > 0.0 && (min == 0.0 || max / min > 1e6) { max } else { 1.0 };

    let xs = x_grid.points();
    let zs = z_grid.points();
    // Adjacent minors decide TP2/RR2 only for strictly positive kernels.
    let pairs = |n: usize| -> Vec<(usize, usize)> {
        if min > 0.0 {
            (0..n - 1).map(|i| (i, i + 1)).collect()
        } else {
            (0..n).flat_map(|i| (i + 1..n).map(move |k| (i, k))).collect()
        }
    };
    let (rows, cols) = (pairs(nx), pairs(nz));
    let b = |a: usize, c: usize| values[a][c] / scale;
    let mut dets = Vec::with_capacity(rows.len() * cols.len());
    let mut index = Vec::with_capacity(dets.capacity());
    for &(i, k) in &rows {
        for &(j, l) in &cols {
            dets.push(minor_determinant(b(i, j), b(i, l), b(k, j), b(k, l)));
            index.push((i, k, j, l));
        }
    }

    // Same sign logic as the monotone classifier: positive determinants reject RR2.
    let slots: Vec<f64> = (0..dets.len()).map(|k| k as f64).collect();
    let v = classify_steps(&dets, tol.sign_slack, &slots, |k| vec![k]);
    let witnesses = v
        .witnesses
        .iter()
        .map(|w| {
            let (i, k, j, l) = index[w.indices[0]];
            Witness {
                indices: vec![i, k, j, l],
                points: vec![xs[i], xs[k], zs[j], zs[l]],
                value: w.value,
                slice: None,
            }
        })
        .collect();
    let classification = match v.direction {
        Direction::Constant => Tp2Class::Both,
        Direction::Increasing => Tp2Class::Tp2,
        Direction::Decreasing => Tp2Class::Rr2,
        Direction::Mixed => Tp2Class::Neither,
    };
    Ok(Tp2Verdict {
        classification,
        witnesses,
        min_det: v.min_step,
        max_det: v.max_step,
        margin: v.margin,
        slack: tol.sign_slack,
        scale,
    })
}

/// TP2/RR2 classification of `β` over adjacent 2×2 minors of the grid product.
pub fn check_tp2_rr2<F>(beta: F, x_grid: &Grid, z_grid: &Grid, tol: &ToleranceProfile) -> Result<Tp2Verdict>
where
    F: Fn(f64, f64) -> f64,
{
    let values: Vec<Vec<f64>> = x_grid
        .points()
        .iter()
        .map(|&x| z_grid.points().iter().map(|&z| beta(x, z)).collect())
        .collect();
    check_tp2_rr2_values(x_grid, z_grid, &values, tol)
}

/// Log-convexity of `x ↦ β(x, z)` for each `z`; `Increasing` means log-convex.
pub fn check_log_convex_slice<F>(beta: F, x_grid: &Grid, z_values: &[f64], tol: &ToleranceProfile) -> Result<Vec<(f64, MonotonicityVerdict)>>
where
    F: Fn(f64, f64) -> f64,
{
    z_values
        .iter()
        .map(|&z| {
            let mut logs = Vec::with_capacity(x_grid.len());
            for (i, &x) in x_grid.points().iter().enumerate() {
                let v = beta(x, z);
                if !(v > 0.0 && v.is_finite()) {
                    return Err(EahmError::NonPositive { index: i, value: v });
                }
                logs.push(v.ln());
            }
            let mut verdict = check_log_shape(x_grid, &logs, tol)?;
            for w in &mut verdict.witnesses {
                w.slice = Some(z);
            }
            Ok((z, verdict))
        })
        .collect()
}

/// Combines per-slice step sequences into one verdict; the classes are
/// decided by the global extreme steps, witnesses carry their slice.
pub(crate) fn aggregate_slices(slices: &[(f64, Vec<f64>)], axis: &[f64], slack: f64) -> MonotonicityVerdict {
    let mut steps = Vec::new();
    let mut origin = Vec::new();
    for (s, values) in slices {
        for i in 0..values.len() - 1 {
            steps.push(values[i + 1] - values[i]);
            origin.push((*s, i));
        }
    }
    let slots: Vec<f64> = (0..steps.len()).map(|k| k as f64).collect();
    let mut v = classify_steps(&steps, slack, &slots, |k| vec![k]);
    for w in &mut v.witnesses {
        let (s, i) = origin[w.indices[0]];
        w.indices = vec![i, i + 1];
        w.points = vec![axis[i], axis[i + 1]];
        w.slice = Some(s);
    }
    v
}

/// Monotonicity of `a(x, z)` along each axis, aggregated over the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectMonotonicity {
    /// `x ↦ a(x, z)` for every z on the grid.
    pub in_x: MonotonicityVerdict,
    /// `z ↦ a(x, z)` for every x on the grid.
    pub in_z: MonotonicityVerdict,
}

pub fn check_effect_monotonicity(effect: &CovariateEffect, x_grid: &Grid, z_grid: &Grid, tol: &ToleranceProfile) -> Result<EffectMonotonicity> {
    x_grid.require_len(2)?;
    z_grid.require_len(1)?;
    let xs = x_grid.points();
    let zs = z_grid.points();
    let x_slices: Vec<(f64, Vec<f64>)> = zs
        .iter()
        .map(|&z| (z, xs.iter().map(|&x| effect.rate(x, z)).collect()))
        .collect();
    let z_slices: Vec<(f64, Vec<f64>)> = xs
        .iter()
        .map(|&x| (x, zs.iter().map(|&z| effect.rate(x, z)).collect()))
        .collect();
    for (_, vals) in x_slices.iter() {
        if let Some(i) = vals.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(EahmError::Shape(format!("effect value {} at x index {i} is not a nonnegative rate", vals[i])));
        }
    }
    Ok(EffectMonotonicity {
        in_x: aggregate_slices(&x_slices, xs, tol.sign_slack),
        in_z: if zs.len() > 1 {
            aggregate_slices(&z_slices, zs, tol.sign_slack)
        } else {
            MonotonicityVerdict::trivially_constant(tol.sign_slack)
        },
    })
}
