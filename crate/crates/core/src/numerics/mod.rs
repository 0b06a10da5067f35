//! Integration, expectation and root-finding services.

mod quadrature;
mod roots;

pub use quadrature::{cumulative_integral_grid, integrate_1d, IntegrationResult, QuadratureSpec};
pub use roots::root_find_monotone;

use crate::model::CovariateDistribution;

/// `E[integrand(Z)]` for the covariate distribution.
///
/// Discrete families are summed exactly (zero error estimate). Continuous
/// families integrate `integrand * density` over the support, truncated at
/// the distribution's `spec.tail_quantile` quantile when the support is
/// unbounded.
pub fn expect_over_covariate<F>(dist: &CovariateDistribution, integrand: F, spec: &QuadratureSpec) -> IntegrationResult
where
    F: Fn(f64) -> f64,
{
    if let Some(atoms) = dist.atoms() {
        let value = atoms.iter().map(|&(z, p)| p * integrand(z)).sum();
        return IntegrationResult {
            value,
            error: 0.0,
            evaluations: atoms.len(),
            converged: true,
        };
    }
    let (lo, hi) = dist.integration_range(spec.tail_quantile);
    integrate_1d(
        |z| {
            let g = dist.density(z);
            if g == 0.0 {
                0.0
            } else {
                integrand(z) * g
            }
        },
        lo,
        hi,
        spec,
    )
}
