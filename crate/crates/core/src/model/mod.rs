//! The extended additive hazard model `h*(x | z) = a(x, z) + h(x)`.
//!
//! Given the baseline `X` (hazard `h`, survival `S`), the covariate effect
//! `a` with cumulative `w(x, z) = ∫_0^x a(t, z) dt`, and the covariate
//! distribution `G`, the model induces `X*` with
//!
//! ```text
//! S*(x) = S(x) E[exp(-w(x, Z))]
//! f*(x) = S(x) E[h*(x | Z) exp(-w(x, Z))]
//!       = f(x) E[exp(-w(x, Z))] + S(x) E[a(x, Z) exp(-w(x, Z))]
//! ```
//!
//! Every mixture is evaluated as `exp(-H(x) - shift) * E[... exp(-(w - shift))]`
//! where `shift` is the smallest `w(x, .)` over a few probe covariate values,
//! so large cumulative hazards never underflow before the final exponential.

mod baseline;
mod covariate;
mod effect;
mod grid;

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use baseline::BaselineModel;
pub use covariate::CovariateDistribution;
pub use effect::{CovariateEffect, CustomEffect, EffectFamily, TimeProfile};
pub use grid::Grid;

use crate::error::{EahmError, Result};
use crate::numerics::{expect_over_covariate, integrate_1d, root_find_monotone, QuadratureSpec};

/// Smallest overall survival `overall_hazard` will divide by.
pub const SURVIVAL_FLOOR: f64 = 1e-300;

/// Largest time the lifetime sampler will search for a root.
pub const SAMPLING_HORIZON: f64 = 1e6;

const SAMPLING_ROOT_TOL: f64 = 1e-12;

/// Normalization of the covariate weight `g_theta` used in the ratio factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightVariant {
    /// `h*(θ|v) e^{-w(θ,v)} g(v)`, normalized. The factorization holds exactly.
    #[default]
    Corrected,
    /// `h*(θ|v) g(v)`, normalized, without the survival factor.
    HazardOnly,
}

/// Baseline, effect and covariate distribution of one model.
#[derive(Debug, Clone)]
pub struct EahmModel {
    pub baseline: BaselineModel,
    pub effect: CovariateEffect,
    pub covariate: CovariateDistribution,
}

/// The two routes to `f*(x)`, kept separate for consistency checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRepresentations {
    /// `S(x) E[h*(x|Z) e^{-w(x,Z)}]`
    pub combined: f64,
    /// `f(x) E[e^{-w}] + S(x) E[a e^{-w}]`
    pub split: f64,
}

impl EahmModel {
    pub fn new(
        baseline: BaselineModel,
        effect: impl Into<CovariateEffect>,
        covariate: CovariateDistribution,
    ) -> Result<Self> {
        let model = EahmModel {
            baseline,
            effect: effect.into(),
            covariate,
        };
        model.baseline.validate()?;
        model.effect.validate()?;
        model.covariate.validate()?;
        model.check_properness()?;
        Ok(model)
    }

    /// Heuristic check that `H(x) + w(x, z)` keeps growing for sampled `z`,
    /// so every conditional lifetime is a proper distribution.
    /// Skipped for custom effects, whose `w` would need quadrature out to the horizon.
    fn check_properness(&self) -> Result<()> {
        if self.effect.closed_form_cumulative(0.0, 0.0).is_none() {
            return Ok(());
        }
        for z in self.probe_covariates(0.999) {
            let total = |x: f64| self.baseline.cumulative_hazard(x) + self.effect.closed_form_cumulative(x, z).unwrap_or(0.0);
            let far = total(SAMPLING_HORIZON);
            let near = total(SAMPLING_HORIZON / 10.0);
            if !(far >= 40.0 || far - near >= 1e-3) {
                return Err(EahmError::Domain(format!(
                    "conditional lifetime at z = {z} looks improper: H(x) + w(x, z) levels off at {far:e}"
                )));
            }
        }
        Ok(())
    }

    fn probe_covariates(&self, upper: f64) -> Vec<f64> {
        match self.covariate.atoms() {
            Some(atoms) => atoms.iter().map(|a| a.0).collect(),
            None => {
                let (lo, _) = self.covariate.support();
                let mut v = vec![lo, self.covariate.quantile(0.5), self.covariate.quantile(upper)];
                v.dedup();
                v
            }
        }
    }

    fn check_time(x: f64, name: &str) -> Result<()> {
        if x.is_finite() && x >= 0.0 {
            Ok(())
        } else {
            Err(EahmError::Domain(format!("{name} must be finite and nonnegative, got {x}")))
        }
    }

    fn check_covariate(&self, z: f64) -> Result<()> {
        if self.covariate.in_support(z) {
            Ok(())
        } else {
            let (lo, hi) = self.covariate.support();
            Err(EahmError::Domain(format!("covariate value {z} lies outside the support [{lo}, {hi}]")))
        }
    }

    /// `h*(x | z) = a(x, z) + h(x)`
    pub fn conditional_hazard(&self, x: f64, z: f64) -> Result<f64> {
        Self::check_time(x, "x")?;
        self.check_covariate(z)?;
        Ok(self.effect.rate(x, z) + self.baseline.hazard(x))
    }

    /// `w(x, z)`
    pub fn cumulative_effect(&self, x: f64, z: f64) -> Result<f64> {
        Self::check_time(x, "x")?;
        self.check_covariate(z)?;
        self.effect.cumulative(x, z)
    }

    /// `ln S(x | z) = -H(x) - w(x, z)`
    pub fn log_conditional_survival(&self, x: f64, z: f64) -> Result<f64> {
        let w = self.cumulative_effect(x, z)?;
        Ok(-self.baseline.cumulative_hazard(x) - w)
    }

    /// `S(x | z) = S(x) exp(-w(x, z))`
    pub fn conditional_survival(&self, x: f64, z: f64) -> Result<f64> {
        Ok(self.log_conditional_survival(x, z)?.exp())
    }

    fn shift_at(&self, x: f64, quad: &QuadratureSpec) -> Result<f64> {
        let mut shift = f64::INFINITY;
        for z in self.probe_covariates(quad.tail_quantile) {
            shift = shift.min(self.effect.cumulative(x, z)?);
        }
        Ok(if shift.is_finite() { shift } else { 0.0 })
    }

    /// `E[weight(z) exp(-(w(x, Z) - shift))]` with the given shift.
    fn shifted_mixture<F>(&self, x: f64, shift: f64, quad: &QuadratureSpec, weight: F) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        if self.effect.is_zero() {
            // Every weight used here reduces to a constant when a = 0.
            return Ok(weight(self.covariate.support().0) * shift.exp());
        }
        let failure: RefCell<Option<EahmError>> = RefCell::new(None);
        let r = expect_over_covariate(
            &self.covariate,
            |z| {
                let w = match self.effect.cumulative(x, z) {
                    Ok(w) => w,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        return 0.0;
                    }
                };
                let m = weight(z);
                if m == 0.0 {
                    0.0
                } else {
                    m * (shift - w).exp()
                }
            },
            quad,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let (lo, hi) = self.covariate.integration_range(quad.tail_quantile);
        r.require(lo, hi)
    }

    /// `ln S*(x)`
    pub fn log_overall_survival(&self, x: f64, quad: &QuadratureSpec) -> Result<f64> {
        Self::check_time(x, "x")?;
        if x == 0.0 {
            return Ok(0.0);
        }
        let shift = self.shift_at(x, quad)?;
        let m = self.shifted_mixture(x, shift, quad, |_| 1.0)?;
        Ok((-self.baseline.cumulative_hazard(x) - shift + m.ln()).min(0.0))
    }

    /// `S*(x) = S(x) E[exp(-w(x, Z))]`
    pub fn overall_survival(&self, x: f64, quad: &QuadratureSpec) -> Result<f64> {
        Ok(self.log_overall_survival(x, quad)?.exp())
    }

    /// `ln f*(x)`; `-inf` where the density vanishes.
    pub fn log_overall_density(&self, x: f64, quad: &QuadratureSpec) -> Result<f64> {
        Self::check_time(x, "x")?;
        let shift = self.shift_at(x, quad)?;
        let h = self.baseline.hazard(x);
        let m = self.shifted_mixture(x, shift, quad, |z| h + self.effect.rate(x, z))?;
        Ok(-self.baseline.cumulative_hazard(x) - shift + m.ln())
    }

    /// `f*(x) = S(x) E[h*(x | Z) exp(-w(x, Z))]`
    pub fn overall_density(&self, x: f64, quad: &QuadratureSpec) -> Result<f64> {
        Ok(self.log_overall_density(x, quad)?.exp())
    }

    /// Both algebraic routes to `f*(x)`.
    pub fn overall_density_representations(&self, x: f64, quad: &QuadratureSpec) -> Result<DensityRepresentations> {
        Self::check_time(x, "x")?;
        let shift = self.shift_at(x, quad)?;
        let scale = (-self.baseline.cumulative_hazard(x) - shift).exp();
        let h = self.baseline.hazard(x);
        let combined = scale * self.shifted_mixture(x, shift, quad, |z| h + self.effect.rate(x, z))?;

        let survival_part = self.shifted_mixture(x, shift, quad, |_| 1.0)?;
        let effect_part = self.shifted_mixture(x, shift, quad, |z| self.effect.rate(x, z))?;
        let f = self.baseline.density(x);
        let s = self.baseline.survival(x);
        let split = f * (survival_part * (-shift).exp()) + s * (effect_part * (-shift).exp());
        Ok(DensityRepresentations { combined, split })
    }

    /// `h*(x) = f*(x) / S*(x)`
    pub fn overall_hazard(&self, x: f64, quad: &QuadratureSpec) -> Result<f64> {
        Self::check_time(x, "x")?;
        let shift = self.shift_at(x, quad)?;
        let log_s = -self.baseline.cumulative_hazard(x) - shift;
        let survival_part = self.shifted_mixture(x, shift, quad, |_| 1.0)?;
        let log_survival = log_s + survival_part.ln();
        if !(log_survival >= SURVIVAL_FLOOR.ln()) {
            return Err(EahmError::Underflow {
                quantity: "overall survival",
                x,
                value: log_survival.exp(),
                floor: SURVIVAL_FLOOR,
            });
        }
        let h = self.baseline.hazard(x);
        let density_part = self.shifted_mixture(x, shift, quad, |z| h + self.effect.rate(x, z))?;
        Ok(density_part / survival_part)
    }

    /// Covariate weight at time `theta`, normalized over the covariate distribution.
    pub fn posterior_weight(&self, theta: f64, quad: &QuadratureSpec, variant: WeightVariant) -> Result<PosteriorWeight<'_>> {
        Self::check_time(theta, "theta")?;
        let shift = match variant {
            WeightVariant::Corrected => self.shift_at(theta, quad)?,
            WeightVariant::HazardOnly => 0.0,
        };
        let w = PosteriorWeight {
            model: self,
            theta,
            shift,
            normalizer: 1.0,
            variant,
            quad: *quad,
        };
        let normalizer = expect_weighted(&w, |_| 1.0)?;
        if !(normalizer > 0.0 && normalizer.is_finite()) {
            return Err(EahmError::Domain(format!(
                "posterior weight at theta = {theta} has normalizer {normalizer:e}"
            )));
        }
        Ok(PosteriorWeight { normalizer, ..w })
    }

    /// Density of the covariate weight `g̃_θ(v)` (a probability for discrete covariates).
    pub fn posterior_weight_density(&self, theta: f64, v: f64, quad: &QuadratureSpec) -> Result<f64> {
        self.check_covariate(v)?;
        Ok(self.posterior_weight(theta, quad, WeightVariant::Corrected)?.density(v))
    }

    /// `φ(θ, v) = exp(w(θ, v) - w(x + θ, v)) h*(x + θ | v) / h*(θ | v)`
    pub fn phi_ratio(&self, x: f64, theta: f64, v: f64) -> Result<f64> {
        Self::check_time(x, "x")?;
        Self::check_time(theta, "theta")?;
        if x == 0.0 {
            self.check_covariate(v)?;
            return Ok(1.0);
        }
        let h0 = self.conditional_hazard(theta, v)?;
        let h1 = self.conditional_hazard(x + theta, v)?;
        if !(h0 > 0.0 && h0.is_finite()) {
            return Err(EahmError::Domain(format!(
                "phi ratio needs a positive finite h*(theta | v), got {h0} at theta = {theta}, v = {v}"
            )));
        }
        let dw = self.effect.cumulative(theta, v)? - self.effect.cumulative(x + theta, v)?;
        Ok(dw.exp() * h1 / h0)
    }

    /// Lifetime with conditional survival `S(x) e^{-w(x, z)} = u`.
    pub fn invert_conditional_survival(&self, z: f64, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(EahmError::Domain(format!("uniform draw {u} must lie in (0, 1]")));
        }
        let target = -u.ln();
        if target == 0.0 {
            return Ok(0.0);
        }
        let excess = |x: f64| {
            self.baseline.cumulative_hazard(x) + self.effect.cumulative(x, z).unwrap_or(f64::NAN) - target
        };
        let mut hi = 1.0_f64;
        loop {
            let v = excess(hi);
            if v.is_nan() {
                // Surface the underlying quadrature failure.
                self.effect.cumulative(hi, z)?;
            }
            if v >= 0.0 {
                break;
            }
            if hi >= SAMPLING_HORIZON {
                return Err(EahmError::Sampling {
                    z,
                    u,
                    horizon: SAMPLING_HORIZON,
                });
            }
            hi = (2.0 * hi).min(SAMPLING_HORIZON);
        }
        root_find_monotone(excess, 0.0, hi, SAMPLING_ROOT_TOL)
    }

    /// `n` lifetimes of `X*`: `z ~ G`, `u ~ U(0, 1]`, then invert the conditional survival.
    pub fn sample_lifetime(&self, seed: u64, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(EahmError::Precondition("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let z = self.covariate.sample(&mut rng);
            let u = 1.0 - rng.random::<f64>();
            out.push(self.invert_conditional_survival(z, u)?);
        }
        Ok(out)
    }
}

/// Normalized covariate weight at a fixed time.
#[derive(Debug, Clone)]
pub struct PosteriorWeight<'a> {
    model: &'a EahmModel,
    theta: f64,
    shift: f64,
    normalizer: f64,
    variant: WeightVariant,
    quad: QuadratureSpec,
}

impl PosteriorWeight<'_> {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn variant(&self) -> WeightVariant {
        self.variant
    }

    /// Unnormalized weight relative to the covariate density.
    fn tilt(&self, v: f64) -> f64 {
        let m = self.model;
        let h = m.effect.rate(self.theta, v) + m.baseline.hazard(self.theta);
        match self.variant {
            WeightVariant::Corrected => {
                let w = m.effect.cumulative(self.theta, v).unwrap_or(f64::NAN);
                h * (self.shift - w).exp()
            }
            WeightVariant::HazardOnly => h,
        }
    }

    /// `g̃_θ(v)`
    pub fn density(&self, v: f64) -> f64 {
        let g = self.model.covariate.density(v);
        if g == 0.0 {
            0.0
        } else {
            self.tilt(v) * g / self.normalizer
        }
    }

    /// `E_{g̃_θ}[f(V)]`, integrating `f * density` directly.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let cov = &self.model.covariate;
        if let Some(atoms) = cov.atoms() {
            return Ok(atoms.iter().map(|&(z, _)| f(z) * self.density(z)).sum());
        }
        let (lo, hi) = cov.integration_range(self.quad.tail_quantile);
        integrate_1d(|v| {
            let d = self.density(v);
            if d == 0.0 { 0.0 } else { f(v) * d }
        }, lo, hi, &self.quad)
        .require(lo, hi)
    }
}

fn expect_weighted<F: Fn(f64) -> f64>(w: &PosteriorWeight<'_>, f: F) -> Result<f64> {
    let cov = &w.model.covariate;
    let r = expect_over_covariate(cov, |v| f(v) * w.tilt(v), &w.quad);
    let (lo, hi) = cov.integration_range(w.quad.tail_quantile);
    r.require(lo, hi)
}

#[cfg(test)]
mod tests;
