use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analyzers::{check_log_shape, check_monotone_1d, MonotonicityVerdict, ToleranceProfile};
use crate::error::{AtPoint, EahmError, Result};
use crate::model::{CovariateDistribution, CovariateEffect, EahmModel, Grid, WeightVariant, SURVIVAL_FLOOR};
use crate::numerics::{integrate_1d, QuadratureSpec};

pub const DENSITY_ALGEBRAIC_TOL: f64 = 1e-8;
pub const DENSITY_DERIVATIVE_TOL: f64 = 1e-4;
pub const W_IDENTITY_TOL: f64 = 1e-8;
pub const FACTORIZATION_TOL: f64 = 1e-6;

const DIFF_STEP: f64 = 1e-4;

/// Agreement of the two density representations with each other and with `-dS*/dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityIdentityReport {
    pub max_algebraic: f64,
    pub worst_algebraic_x: f64,
    /// Largest `|f* + dS*/dx|`, the slope by second-order finite differences.
    pub max_derivative: f64,
    pub worst_derivative_x: f64,
    pub points: usize,
    pub passes: bool,
}

fn finer(quad: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: quad.abs_tol.min(1e-14),
        rel_tol: quad.rel_tol.min(1e-12),
        ..*quad
    }
}

/// `-dS*/dx` by second-order differences that never straddle a jump of the baseline hazard.
fn survival_slope(model: &EahmModel, x: f64, quad: &QuadratureSpec) -> Result<f64> {
    let h = DIFF_STEP;
    let s = |t: f64| model.overall_survival(t, quad);
    let kinks = model.baseline.kinks();
    let crosses = |a: f64, b: f64| kinks.iter().any(|&k| k > a && k <= b);
    if x >= h && !crosses(x - h, x + h) {
        Ok((s(x - h)? - s(x + h)?) / (2.0 * h))
    } else if !crosses(x, x + 2.0 * h) {
        Ok((3.0 * s(x)? - 4.0 * s(x + h)? + s(x + 2.0 * h)?) / (2.0 * h))
    } else {
        Ok(-(3.0 * s(x)? - 4.0 * s(x - h)? + s(x - 2.0 * h)?) / (2.0 * h))
    }
}

/// Compares `f(x)E[e^{-w}] + S(x)E[a e^{-w}]`, `S(x)E[h* e^{-w}]` and `-dS*/dx`.
/// Points where the baseline hazard is infinite are skipped.
pub fn verify_density_identity(model: &EahmModel, x_grid: &Grid, quad: &QuadratureSpec) -> Result<DensityIdentityReport> {
    let fine = finer(quad);
    let mut report = DensityIdentityReport {
        max_algebraic: 0.0,
        worst_algebraic_x: 0.0,
        max_derivative: 0.0,
        worst_derivative_x: 0.0,
        points: 0,
        passes: false,
    };
    for &x in x_grid.points() {
        if !model.baseline.hazard(x).is_finite() {
            continue;
        }
        report.points += 1;
        let r = model.overall_density_representations(x, quad).at("density representations", x)?;
        let d = (r.combined - r.split).abs();
        if report.points == 1 || d > report.max_algebraic {
            report.max_algebraic = d;
            report.worst_algebraic_x = x;
        }
        let slope = survival_slope(model, x, &fine).at("survival slope", x)?;
        let d = (r.combined - slope).abs();
        if report.points == 1 || d > report.max_derivative {
            report.max_derivative = d;
            report.worst_derivative_x = x;
        }
    }
    if report.points == 0 {
        return Err(EahmError::InvalidGrid("no grid point with a finite baseline hazard".into()));
    }
    report.passes = report.max_algebraic < DENSITY_ALGEBRAIC_TOL && report.max_derivative < DENSITY_DERIVATIVE_TOL;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WIdentityReport {
    pub max_deviation: f64,
    /// `(x, theta, z)` of the largest deviation.
    pub worst: Option<(f64, f64, f64)>,
    pub samples: usize,
    pub passes: bool,
}

/// `w(θ, z) - w(x + θ, z)` against `-∫_0^x a(t + θ, z) dt` by quadrature.
pub fn verify_w_identity(effect: &CovariateEffect, samples: &[(f64, f64, f64)], quad: &QuadratureSpec) -> Result<WIdentityReport> {
    let fine = finer(quad);
    let mut report = WIdentityReport {
        max_deviation: 0.0,
        worst: None,
        samples: samples.len(),
        passes: false,
    };
    for &(x, theta, z) in samples {
        if !(x >= 0.0 && theta >= 0.0 && z >= 0.0) || !(x + theta).is_finite() || !z.is_finite() {
            return Err(EahmError::Domain(format!("sample (x, theta, z) = ({x}, {theta}, {z}) is outside the domain")));
        }
        let left = effect.cumulative(theta, z)? - effect.cumulative(x + theta, z)?;
        let right = if x == 0.0 {
            0.0
        } else {
            -integrate_1d(|t| effect.rate(t + theta, z), 0.0, x, &fine).require(0.0, x)?
        };
        let d = (left - right).abs();
        if report.worst.is_none() || d > report.max_deviation {
            report.max_deviation = d;
            report.worst = Some((x, theta, z));
        }
    }
    report.passes = report.max_deviation < W_IDENTITY_TOL;
    Ok(report)
}

/// `n` seeded samples: `x, θ ~ U(0, 5)` and `z` drawn from the covariate law.
pub fn w_identity_samples(covariate: &CovariateDistribution, seed: u64, n: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = rng.random_range(0.0..5.0);
            let theta = rng.random_range(0.0..5.0);
            (x, theta, covariate.sample(&mut rng))
        })
        .collect()
}

/// Ratio `θ ↦ f*(x + θ)/f*(θ)` at one `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSlice {
    pub x: f64,
    pub thetas: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Witness positions index into `thetas`.
    pub verdict: MonotonicityVerdict,
    /// Largest `|lhs - rhs| / max(1, |lhs|)` of the factorization over `thetas`.
    pub max_factorization_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub slices: Vec<RatioSlice>,
    /// Log-shape of `f*` on the retained θ-grid.
    pub dlr: MonotonicityVerdict,
    pub ratios_increasing: bool,
    pub dlr_holds: bool,
    /// Whether "every ratio is increasing" and "f* is DLR" agree.
    pub consistent: bool,
    pub max_factorization_deviation: f64,
    pub factorization_passes: bool,
    pub variant: WeightVariant,
    /// θ values where `f*(θ)` or `f*(x + θ)` fell below this are dropped.
    pub exclusion_threshold: f64,
    pub excluded: usize,
}

/// For each `x`, classifies `θ ↦ f*(x+θ)/f*(θ)` and checks the factorization
/// `f*(x+θ)/f*(θ) = [S(x+θ)/S(θ)] E_θ[φ(θ, V)]` under the chosen covariate weight.
pub fn verify_ratio_dlr_equivalence(
    model: &EahmModel,
    x_values: &[f64],
    theta_grid: &Grid,
    tol: &ToleranceProfile,
    quad: &QuadratureSpec,
    variant: WeightVariant,
) -> Result<RatioReport> {
    let floor = SURVIVAL_FLOOR.ln();
    let log_f = |t: f64| model.log_overall_density(t, quad).at("overall density", t);

    let mut keep: Vec<bool> = Vec::with_capacity(theta_grid.len());
    let mut log_theta = Vec::with_capacity(theta_grid.len());
    for &t in theta_grid.points() {
        let ok = model.baseline.hazard(t).is_finite();
        let l = if ok { log_f(t)? } else { f64::NEG_INFINITY };
        keep.push(l >= floor);
        log_theta.push(l);
    }
    let mut excluded = 0usize;
    let mut slices = Vec::with_capacity(x_values.len());
    let mut max_dev = 0.0f64;
    for &x in x_values {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(EahmError::Domain(format!("ratio offset x = {x} must be finite and nonnegative")));
        }
        let mut thetas = Vec::new();
        let mut ratios = Vec::new();
        let mut worst = 0.0f64;
        for (k, &t) in theta_grid.points().iter().enumerate() {
            if !keep[k] {
                excluded += 1;
                continue;
            }
            let lx = log_f(x + t)?;
            if lx < floor {
                excluded += 1;
                continue;
            }
            let lhs = (lx - log_theta[k]).exp();
            let rhs = factorized_ratio(model, x, t, quad, variant).at("factorized ratio", t)?;
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
            thetas.push(t);
            ratios.push(lhs);
        }
        if ratios.len() < 2 {
            return Err(EahmError::Underflow {
                quantity: "overall density",
                x,
                value: 0.0,
                floor: SURVIVAL_FLOOR,
            });
        }
        let verdict = check_monotone_1d(&ratios, tol)?;
        max_dev = max_dev.max(worst);
        slices.push(RatioSlice {
            x,
            thetas,
            ratios,
            verdict,
            max_factorization_deviation: worst,
        });
    }
    let kept = theta_grid
        .filtered(|t| theta_grid.points().iter().position(|&p| p == t).is_some_and(|k| keep[k]))
        .ok_or(EahmError::Underflow {
            quantity: "overall density",
            x: theta_grid.points()[0],
            value: 0.0,
            floor: SURVIVAL_FLOOR,
        })?;
    let logs: Vec<f64> = log_theta.iter().zip(&keep).filter(|(_, k)| **k).map(|(l, _)| *l).collect();
    let dlr = check_log_shape(&kept, &logs, tol)?;
    let ratios_increasing = slices.iter().all(|s| s.verdict.direction.is_weakly_increasing());
    let dlr_holds = dlr.direction.is_weakly_increasing();
    Ok(RatioReport {
        slices,
        ratios_increasing,
        dlr_holds,
        consistent: ratios_increasing == dlr_holds,
        dlr,
        max_factorization_deviation: max_dev,
        factorization_passes: max_dev < FACTORIZATION_TOL,
        variant,
        exclusion_threshold: SURVIVAL_FLOOR,
        excluded,
    })
}

/// `[S(x+θ)/S(θ)] E_θ[φ(θ, V)]` with `E_θ` under the covariate weight at θ.
fn factorized_ratio(model: &EahmModel, x: f64, theta: f64, quad: &QuadratureSpec, variant: WeightVariant) -> Result<f64> {
    let weight = model.posterior_weight(theta, quad, variant)?;
    let failure: RefCell<Option<EahmError>> = RefCell::new(None);
    let e = weight.expect(|v| match model.phi_ratio(x, theta, v) {
        Ok(p) => p,
        Err(err) => {
            failure.borrow_mut().get_or_insert(err);
            0.0
        }
    })?;
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    let s = (model.baseline.log_survival(x + theta) - model.baseline.log_survival(theta)).exp();
    Ok(s * e)
}

/// Empirical against quadrature survival of `X*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub n: usize,
    pub seed: u64,
    pub alpha: f64,
    pub sup_distance: f64,
    pub worst_x: f64,
    pub dkw_bound: f64,
    /// Upper end of the comparison grid, the empirical 0.999 quantile.
    pub grid_top: f64,
    pub passes: bool,
}

pub const MIN_SAMPLES: usize = 1000;

/// Half-width `sqrt(ln(2/α) / (2n))` of the DKW band.
pub fn dkw_bound(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Draws `n` lifetimes and compares their empirical survival to `S*` on
/// 100 points over `[0, q]`, `q` the empirical 0.999 quantile.
pub fn verify_sampling_consistency(
    model: &EahmModel,
    seed: u64,
    n: usize,
    alpha: f64,
    quad: &QuadratureSpec,
) -> Result<(SamplingReport, Vec<f64>)> {
    if n < MIN_SAMPLES {
        return Err(EahmError::Precondition(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EahmError::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let samples = model.sample_lifetime(seed, n)?;
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let q = sorted[((0.999 * n as f64).ceil() as usize).clamp(1, n) - 1];
    let grid = if q > 0.0 { Grid::linspace(0.0, q, 100)? } else { Grid::new(vec![0.0])? };
    let mut sup = 0.0f64;
    let mut worst_x = 0.0;
    for &x in grid.points() {
        let above = n - sorted.partition_point(|&s| s <= x);
        let empirical = above as f64 / n as f64;
        let d = (empirical - model.overall_survival(x, quad).at("overall survival", x)?).abs();
        if d > sup {
            sup = d;
            worst_x = x;
        }
    }
    let bound = dkw_bound(n, alpha);
    Ok((
        SamplingReport {
            n,
            seed,
            alpha,
            sup_distance: sup,
            worst_x,
            dkw_bound: bound,
            grid_top: q,
            passes: sup < bound,
        },
        samples,
    ))
}
