use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::analyzers::{
    aggregate_slices, check_monotone_on, check_st_order, Direction, MonotonicityVerdict, OrderHolds, ToleranceProfile,
};
use crate::error::{AtPoint, EahmError, Result};
use crate::model::{CovariateDistribution, Grid};
use crate::numerics::{expect_over_covariate, QuadratureSpec};

/// The two monotonicity patterns of the expectation lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaCase {
    /// `φ` decreasing in θ, and decreasing (increasing) in v for an
    /// ST-increasing (ST-decreasing) family: the expectation decreases.
    I,
    /// `φ` increasing in θ, and increasing (decreasing) in v for an
    /// ST-increasing (ST-decreasing) family: the expectation increases.
    Ii,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub case: LemmaCase,
    pub thetas: Vec<f64>,
    pub expectations: Vec<f64>,
    /// `θ ↦ E_θ[φ(θ, V)]`.
    pub verdict: MonotonicityVerdict,
    /// ST direction of consecutive family members on the v-grid.
    pub family_order: Direction,
    pub phi_in_v: Direction,
    pub phi_in_theta: Direction,
    pub premises_hold: bool,
    pub conclusion_holds: bool,
    /// Premises hold on the grid but the expectation moves the wrong way.
    pub anomaly: bool,
}

fn family_direction(pairs: &[OrderHolds]) -> Direction {
    let inc = pairs.iter().all(|p| matches!(p, OrderHolds::Yes | OrderHolds::Equal));
    let dec = pairs.iter().all(|p| matches!(p, OrderHolds::Reversed | OrderHolds::Equal));
    match (inc, dec) {
        (true, true) => Direction::Constant,
        (true, false) => Direction::Increasing,
        (false, true) => Direction::Decreasing,
        (false, false) => Direction::Mixed,
    }
}

/// Classifies `θ ↦ E_θ[φ(θ, V)]` for the family `θ ↦ G_θ` and reports
/// whether the premises of the chosen case hold on the grids.
pub fn verify_lemma_4_1<Fam, Phi>(
    family: Fam,
    theta_grid: &Grid,
    v_grid: &Grid,
    phi: Phi,
    case: LemmaCase,
    tol: &ToleranceProfile,
    quad: &QuadratureSpec,
) -> Result<LemmaReport>
where
    Fam: Fn(f64) -> Result<CovariateDistribution>,
    Phi: Fn(f64, f64) -> f64,
{
    theta_grid.require_len(2)?;
    v_grid.require_len(2)?;
    let thetas = theta_grid.points();
    let vs = v_grid.points();
    let members: Vec<CovariateDistribution> = thetas.iter().map(|&t| family(t)).collect::<Result<_>>()?;

    let mut expectations = Vec::with_capacity(thetas.len());
    for (&t, g) in thetas.iter().zip(&members) {
        let (lo, hi) = g.integration_range(quad.tail_quantile);
        let bad: RefCell<Option<f64>> = RefCell::new(None);
        let e = expect_over_covariate(
            g,
            |v| {
                let p = phi(t, v);
                if !p.is_finite() {
                    bad.borrow_mut().get_or_insert(v);
                    return 0.0;
                }
                p
            },
            quad,
        )
        .require(lo, hi)
        .at("lemma expectation", t)?;
        if let Some(v) = bad.into_inner() {
            return Err(EahmError::Domain(format!("phi({t}, {v}) is not finite")));
        }
        expectations.push(e);
    }
    let verdict = check_monotone_on(theta_grid, &expectations, tol)?;

    let survival: Vec<Vec<f64>> = members.iter().map(|g| vs.iter().map(|&v| g.survival(v)).collect()).collect();
    let pairs: Vec<OrderHolds> = survival
        .windows(2)
        .map(|w| check_st_order(v_grid, &w[0], &w[1], tol).map(|o| o.holds))
        .collect::<Result<_>>()?;
    let family_order = family_direction(&pairs);

    let in_v: Vec<(f64, Vec<f64>)> = thetas.iter().map(|&t| (t, vs.iter().map(|&v| phi(t, v)).collect())).collect();
    let in_theta: Vec<(f64, Vec<f64>)> = vs.iter().map(|&v| (v, thetas.iter().map(|&t| phi(t, v)).collect())).collect();
    let phi_in_v = aggregate_slices(&in_v, vs, tol.sign_slack).direction;
    let phi_in_theta = aggregate_slices(&in_theta, thetas, tol.sign_slack).direction;

    let v_up = phi_in_v.is_weakly_increasing();
    let v_down = phi_in_v.is_weakly_decreasing();
    let fam_up = family_order.is_weakly_increasing();
    let fam_down = family_order.is_weakly_decreasing();
    let (premises_hold, conclusion_holds) = match case {
        LemmaCase::I => (
            phi_in_theta.is_weakly_decreasing() && ((fam_up && v_down) || (fam_down && v_up)),
            verdict.direction.is_weakly_decreasing(),
        ),
        LemmaCase::Ii => (
            phi_in_theta.is_weakly_increasing() && ((fam_up && v_up) || (fam_down && v_down)),
            verdict.direction.is_weakly_increasing(),
        ),
    };
    Ok(LemmaReport {
        case,
        thetas: thetas.to_vec(),
        expectations,
        verdict,
        family_order,
        phi_in_v,
        phi_in_theta,
        premises_hold,
        conclusion_holds,
        anomaly: premises_hold && !conclusion_holds,
    })
}
