//! Adaptive Gauss–Kronrod (G10/K21) quadrature.
//!
//! The rule is fixed: every integral in the crate goes through the 21-point
//! Kronrod extension of the 10-point Gauss rule, with global adaptive
//! bisection of the interval carrying the largest error estimate. Error
//! estimates follow the QUADPACK rescaling of `|K21 - G10|`.
//!
//! Semi-infinite ranges `[lo, inf)` are mapped onto `[0, 1)` with
//! `x = lo + t / (1 - t)`. Expectations over a covariate distribution do not
//! use that map; they truncate at the distribution's own tail quantile (see
//! [`super::expect_over_covariate`]).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{EahmError, Result};

/// Kronrod abscissae on [0, 1]; odd indices are the Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], ..., XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Tolerance-and-budget contract for numeric integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Upper quantile at which infinite covariate supports are truncated.
    pub tail_quantile: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 1 << 15,
            tail_quantile: 1.0 - 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(EahmError::invalid("abs_tol", "must be positive and finite"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(EahmError::invalid("rel_tol", "must be positive and finite"));
        }
        if self.max_subdivisions < 4 {
            return Err(EahmError::invalid("max_subdivisions", "must be at least 4"));
        }
        if !(self.tail_quantile > 0.5 && self.tail_quantile < 1.0) {
            return Err(EahmError::invalid(
                "tail_quantile",
                "must lie strictly between 0.5 and 1",
            ));
        }
        Ok(())
    }

    /// Error target for an integral of the given magnitude.
    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Outcome of one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl IntegrationResult {
    pub fn exact(value: f64) -> Self {
        IntegrationResult {
            value,
            error: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    /// Turns a non-converged result into an error naming the range.
    pub fn require(self, lo: f64, hi: f64) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(EahmError::Quadrature {
                lo,
                hi,
                error: self.error,
                evaluations: self.evaluations,
            })
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    seq: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // Largest error first; earlier panels win ties so the order is reproducible.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

/// One G10/K21 panel: (kronrod value, error estimate).
fn gk21<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_center = f(center);

    let mut res_k = WGK[10] * f_center;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let err = rescale_error((res_k - res_g) * half, res_abs, res_asc);
    (value, err)
}

const EVALS_PER_PANEL: usize = 21;

fn adaptive<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, spec: &QuadratureSpec) -> IntegrationResult {
    let (value, error) = gk21(f, lo, hi);
    let mut evaluations = EVALS_PER_PANEL;
    let mut seq = 0usize;

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    heap.push(Panel {
        lo,
        hi,
        value,
        error,
        seq,
    });

    let mut total = value;
    let mut total_err = error;
    let mut panels = 1usize;

    while total_err > spec.target(total) || !total_err.is_finite() {
        if panels >= spec.max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) || (worst.hi - worst.lo) <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
            // Cannot be split further in floating point.
            frozen.push(worst);
            continue;
        }
        let (v1, e1) = gk21(f, worst.lo, mid);
        let (v2, e2) = gk21(f, mid, worst.hi);
        evaluations += 2 * EVALS_PER_PANEL;
        panels += 1;

        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;

        seq += 1;
        heap.push(Panel {
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
            seq,
        });
        seq += 1;
        heap.push(Panel {
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
            seq,
        });
    }

    // Re-sum in left-to-right order so the running-sum drift does not leak out.
    let mut all: Vec<Panel> = heap.into_vec();
    all.extend(frozen);
    all.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let value: f64 = all.iter().map(|p| p.value).sum();
    let error: f64 = all.iter().map(|p| p.error).sum();

    IntegrationResult {
        value,
        error,
        evaluations,
        converged: error.is_finite() && value.is_finite() && error <= spec.target(value),
    }
}

/// Integrates `integrand` over `[lo, hi]`; `hi` may be `f64::INFINITY`.
///
/// Non-convergence is reported through `converged == false`, never as an error.
pub fn integrate_1d<F>(integrand: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> IntegrationResult
where
    F: Fn(f64) -> f64,
{
    assert!(lo.is_finite(), "lower limit must be finite");
    assert!(lo <= hi, "integration limits must satisfy lo <= hi");
    if lo == hi {
        return IntegrationResult::exact(0.0);
    }
    if hi.is_infinite() {
        let mapped = |t: f64| {
            let one_minus = 1.0 - t;
            let x = lo + t / one_minus;
            let jac = 1.0 / (one_minus * one_minus);
            let v = integrand(x);
            if v == 0.0 {
                0.0
            } else {
                v * jac
            }
        };
        adaptive(&mapped, 0.0, 1.0, spec)
    } else {
        adaptive(&integrand, lo, hi, spec)
    }
}

/// Values of `∫_0^{g_i} integrand` at every grid point.
///
/// Each panel between consecutive points is integrated once and the
/// results are accumulated.
pub fn cumulative_integral_grid<F>(integrand: F, grid: &[f64], spec: &QuadratureSpec) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &g in grid {
        if g < prev {
            return Err(EahmError::InvalidGrid(format!(
                "cumulative integration needs nonnegative increasing points, got {g} after {prev}"
            )));
        }
        if g > prev {
            acc += integrate_1d(&integrand, prev, g, spec).require(prev, g)?;
        }
        out.push(acc);
        prev = g;
    }
    Ok(out)
}
