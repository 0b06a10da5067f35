use super::*;
use proptest::prelude::*;
use rand::Rng;

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn exp_cov() -> CovariateDistribution {
    CovariateDistribution::exponential(1.0).unwrap()
}

fn linear_model() -> EahmModel {
    EahmModel::new(
        BaselineModel::exponential(1.0).unwrap(),
        CovariateEffect::separable(TimeProfile::One).unwrap(),
        exp_cov(),
    )
    .unwrap()
}

fn hyperbolic_model() -> EahmModel {
    EahmModel::new(
        BaselineModel::exponential(1.0).unwrap(),
        CovariateEffect::separable(TimeProfile::Hyperbolic).unwrap(),
        exp_cov(),
    )
    .unwrap()
}

// Closed forms for exponential(1) baseline, a = z, Z ~ exponential(1).
fn linear_survival(x: f64) -> f64 {
    (-x).exp() / (1.0 + x)
}
fn linear_density(x: f64) -> f64 {
    (-x).exp() * (x + 2.0) / ((1.0 + x) * (1.0 + x))
}
fn linear_hazard(x: f64) -> f64 {
    1.0 + 1.0 / (1.0 + x)
}

// a = z / (1 + x): E[(1 + x)^{-Z}] = 1 / (1 + ln(1 + x)).
fn hyperbolic_survival(x: f64) -> f64 {
    (-x).exp() / (1.0 + x.ln_1p())
}
fn hyperbolic_density(x: f64) -> f64 {
    let l = 1.0 + x.ln_1p();
    (-x).exp() / l + (-x).exp() / ((1.0 + x) * l * l)
}

#[test]
fn conditional_hazard_examples() {
    let m = linear_model();
    assert_eq!(m.conditional_hazard(1.0, 0.0).unwrap(), 1.0);
    for x in [0.0, 0.3, 7.0] {
        assert_eq!(m.conditional_hazard(x, 0.5).unwrap(), 1.5);
    }
    assert!((hyperbolic_model().conditional_hazard(1.0, 2.0).unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn conditional_hazard_domain_errors() {
    let m = linear_model();
    assert!(matches!(m.conditional_hazard(-1.0, 0.5), Err(EahmError::Domain(_))));
    assert!(matches!(m.conditional_hazard(1.0, -0.5), Err(EahmError::Domain(_))));
    let u = EahmModel::new(
        BaselineModel::exponential(1.0).unwrap(),
        CovariateEffect::separable(TimeProfile::One).unwrap(),
        CovariateDistribution::uniform(0.0, 2.0).unwrap(),
    )
    .unwrap();
    assert!(u.conditional_hazard(1.0, 2.5).is_err());
}

#[test]
fn cumulative_effect_examples() {
    let m = hyperbolic_model();
    assert_eq!(m.cumulative_effect(0.0, 3.0).unwrap(), 0.0);
    assert_eq!(linear_model().cumulative_effect(3.0, 2.0).unwrap(), 6.0);
    assert!((m.cumulative_effect(1.0, 2.0).unwrap() - 1.386294).abs() < 1e-6);
}

#[test]
fn conditional_survival_examples() {
    let zero = EahmModel::new(BaselineModel::exponential(1.0).unwrap(), CovariateEffect::zero(), exp_cov()).unwrap();
    assert!((zero.conditional_survival(2.0, 1.0).unwrap() - (-2f64).exp()).abs() < 1e-15);
    assert!((linear_model().conditional_survival(1.0, 2.0).unwrap() - (-3f64).exp()).abs() < 1e-15);
    let v = hyperbolic_model().conditional_survival(1.0, 1.0).unwrap();
    assert!((v - (-1f64).exp() / 2.0).abs() < 1e-15);
    assert!((v - 0.183940).abs() < 1e-6);
}

#[test]
fn conditional_survival_does_not_underflow_early() {
    let m = linear_model();
    let ls = m.log_conditional_survival(800.0, 2.0).unwrap();
    assert_eq!(ls, -2400.0);
}

#[test]
fn overall_survival_examples() {
    let m = linear_model();
    assert_eq!(m.overall_survival(0.0, &quad()).unwrap(), 1.0);
    assert!((m.overall_survival(1.0, &quad()).unwrap() - 0.183940).abs() < 1e-6);
    let h = hyperbolic_model();
    let s = h.overall_survival(1.0, &quad()).unwrap();
    assert!((s - (-1f64).exp() / (1.0 + 2f64.ln())).abs() < 1e-9);
    assert!((s - 0.217276).abs() < 1e-6);
}

#[test]
fn overall_survival_matches_closed_forms_on_fine_grid() {
    let lm = linear_model();
    let hm = hyperbolic_model();
    for x in Grid::linspace(0.0, 10.0, 200).unwrap().points() {
        let a = lm.overall_survival(*x, &quad()).unwrap();
        let b = hm.overall_survival(*x, &quad()).unwrap();
        assert!((a - linear_survival(*x)).abs() < 1e-6, "x = {x}");
        assert!((b - hyperbolic_survival(*x)).abs() < 1e-6, "x = {x}");
    }
}

#[test]
fn overall_density_examples() {
    let m = linear_model();
    assert!((m.overall_density(0.0, &quad()).unwrap() - 2.0).abs() < 1e-8);
    let v = m.overall_density(1.0, &quad()).unwrap();
    assert!((v - 3.0 * (-1f64).exp() / 4.0).abs() < 1e-9);
    assert!((v - 0.275910).abs() < 1e-6);
    for x in [0.0, 0.5, 3.0, 9.0] {
        let d = m.overall_density(x, &quad()).unwrap();
        assert!((d - linear_density(x)).abs() < 1e-8, "x = {x}: {}", d - linear_density(x));
        let h = hyperbolic_model().overall_density(x, &quad()).unwrap();
        assert!((h - hyperbolic_density(x)).abs() < 1e-8, "x = {x}: {}", h - hyperbolic_density(x));
    }
}

#[test]
fn zero_effect_density_is_baseline_density() {
    let b = BaselineModel::weibull(1.7, 2.0).unwrap();
    let m = EahmModel::new(b.clone(), CovariateEffect::zero(), CovariateDistribution::gamma(2.0, 1.0).unwrap()).unwrap();
    for x in [0.2, 1.0, 3.3] {
        assert!((m.overall_density(x, &quad()).unwrap() - b.density(x)).abs() < 1e-10);
        assert!((m.overall_hazard(x, &quad()).unwrap() - b.hazard(x)).abs() < 1e-10);
    }
}

#[test]
fn overall_density_integrates_to_one() {
    let m = hyperbolic_model();
    let r = integrate_1d(|x| m.overall_density(x, &quad()).unwrap(), 0.0, 60.0, &quad());
    assert!((r.value - 1.0).abs() < 1e-7);
}

#[test]
fn overall_hazard_examples() {
    let m = linear_model();
    assert!((m.overall_hazard(0.0, &quad()).unwrap() - 2.0).abs() < 1e-8);
    assert!((m.overall_hazard(1.0, &quad()).unwrap() - 1.5).abs() < 1e-8);
    for x in [0.5, 4.0, 10.0] {
        assert!((m.overall_hazard(x, &quad()).unwrap() - linear_hazard(x)).abs() < 1e-8);
    }
}

#[test]
fn overall_hazard_underflow_is_reported() {
    let m = EahmModel::new(BaselineModel::exponential(1.0).unwrap(), CovariateEffect::zero(), exp_cov()).unwrap();
    assert!(matches!(m.overall_hazard(800.0, &quad()), Err(EahmError::Underflow { .. })));
}

#[test]
fn overall_hazard_is_bounded_by_effect_sup() {
    let m = EahmModel::new(
        BaselineModel::exponential(0.5).unwrap(),
        CovariateEffect::separable(TimeProfile::ExpDecay { beta: 1.0 }).unwrap(),
        CovariateDistribution::uniform(0.0, 2.0).unwrap(),
    )
    .unwrap();
    for x in [0.0, 0.5, 2.0, 6.0] {
        let h = m.overall_hazard(x, &quad()).unwrap();
        assert!(h >= 0.5 - 1e-12);
        assert!(h <= 0.5 + 2.0 * (-x).exp() + 1e-12);
    }
}

#[test]
fn posterior_weight_examples() {
    let m = linear_model();
    let v0 = m.posterior_weight_density(0.0, 0.0, &quad()).unwrap();
    assert!((v0 - 0.5).abs() < 1e-9);
    for v in [0.5, 2.0, 6.0] {
        let d = m.posterior_weight_density(0.0, v, &quad()).unwrap();
        assert!((d - (1.0 + v) * (-v).exp() / 2.0).abs() < 1e-9);
    }
}

#[test]
fn posterior_weight_normalizes() {
    for m in [linear_model(), hyperbolic_model()] {
        for theta in [0.0, 1.0, 5.0] {
            for variant in [WeightVariant::Corrected, WeightVariant::HazardOnly] {
                let w = m.posterior_weight(theta, &quad(), variant).unwrap();
                assert!((w.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn posterior_weight_degenerate_is_point_mass() {
    let m = EahmModel::new(
        BaselineModel::exponential(1.0).unwrap(),
        CovariateEffect::separable(TimeProfile::Hyperbolic).unwrap(),
        CovariateDistribution::degenerate(0.7).unwrap(),
    )
    .unwrap();
    for theta in [0.0, 2.0, 9.0] {
        assert_eq!(m.posterior_weight_density(theta, 0.7, &quad()).unwrap(), 1.0);
    }
}

#[test]
fn phi_ratio_examples() {
    let m = linear_model();
    assert_eq!(m.phi_ratio(0.0, 2.0, 1.0).unwrap(), 1.0);
    for theta in [0.0, 1.0, 4.0] {
        assert!((m.phi_ratio(1.0, theta, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((m.phi_ratio(1.0, theta, 1.0).unwrap() - 0.367879).abs() < 1e-6);
    }
    let b = BaselineModel::weibull(0.7, 1.0).unwrap();
    let z = EahmModel::new(b.clone(), CovariateEffect::zero(), exp_cov()).unwrap();
    let (x, theta) = (1.5, 0.7);
    assert!((z.phi_ratio(x, theta, 0.4).unwrap() - b.hazard(x + theta) / b.hazard(theta)).abs() < 1e-14);
}

#[test]
fn ratio_identity_with_corrected_weight() {
    for m in [linear_model(), hyperbolic_model()] {
        let q = quad();
        for &(x, theta) in &[(1.0, 0.0), (0.5, 2.0), (3.0, 1.0)] {
            let lhs = m.overall_density(x + theta, &q).unwrap() / m.overall_density(theta, &q).unwrap();
            let w = m.posterior_weight(theta, &q, WeightVariant::Corrected).unwrap();
            let e = w.expect(|v| m.phi_ratio(x, theta, v).unwrap()).unwrap();
            let rhs = m.baseline.survival(x + theta) / m.baseline.survival(theta) * e;
            assert!((lhs - rhs).abs() < 1e-6, "x = {x}, theta = {theta}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn hazard_only_weight_breaks_the_identity_when_effect_is_present() {
    let m = linear_model();
    let q = quad();
    let (x, theta) = (1.0, 1.0);
    let lhs = m.overall_density(x + theta, &q).unwrap() / m.overall_density(theta, &q).unwrap();
    let w = m.posterior_weight(theta, &q, WeightVariant::HazardOnly).unwrap();
    let e = w.expect(|v| m.phi_ratio(x, theta, v).unwrap()).unwrap();
    let rhs = m.baseline.survival(x + theta) / m.baseline.survival(theta) * e;
    assert!((lhs - rhs).abs() > 1e-3);
}

#[test]
#[allow(clippy::approx_constant)]
fn inversion_of_plain_exponential() {
    let m = EahmModel::new(
        BaselineModel::exponential(1.0).unwrap(),
        CovariateEffect::separable(TimeProfile::One).unwrap(),
        CovariateDistribution::degenerate(0.0).unwrap(),
    )
    .unwrap();
    let x = m.invert_conditional_survival(0.0, 0.5).unwrap();
    assert!((x - 2f64.ln()).abs() < 1e-10);
    assert!((x - 0.693147).abs() < 1e-6);

    let s = m.sample_lifetime(17, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let _z = m.covariate.sample(&mut rng);
    let u = 1.0 - rng.random::<f64>();
    assert!((s[0] + u.ln()).abs() < 1e-10);
}

#[test]
fn sample_mean_matches_quadrature_of_survival() {
    let m = linear_model();
    // E[X*] = ∫ S*(x) dx = e E_1(1).
    let oracle = integrate_1d(linear_survival, 0.0, f64::INFINITY, &quad()).value;
    assert!((oracle - 0.596347).abs() < 1e-6);
    let s = m.sample_lifetime(20240611, 200_000).unwrap();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    assert!((mean - 0.596347).abs() < 0.01, "mean {mean}");
}

#[test]
fn zero_samples_is_an_error() {
    assert!(matches!(linear_model().sample_lifetime(1, 0), Err(EahmError::Precondition(_))));
}

#[test]
fn sampling_is_deterministic() {
    let m = hyperbolic_model();
    let a = m.sample_lifetime(5, 100).unwrap();
    let b = m.sample_lifetime(5, 100).unwrap();
    assert_eq!(a, b);
}

#[test]
fn improper_models_are_rejected() {
    let r = EahmModel::new(
        BaselineModel::piecewise_constant(vec![1.0], vec![1.0, 0.0]).unwrap(),
        CovariateEffect::separable(TimeProfile::ExpDecay { beta: 1.0 }).unwrap(),
        exp_cov(),
    );
    assert!(r.is_err());
}

#[test]
fn sampling_reports_bracketing_failure_for_custom_improper_effect() {
    let m = EahmModel::new(
        BaselineModel::gompertz(1.0, -1.0).unwrap(),
        CovariateEffect::custom("none", |_, _| 0.0),
        CovariateDistribution::degenerate(1.0).unwrap(),
    )
    .unwrap();
    // H(inf) = 1, so draws with u < e^{-1} have no root.
    let err = m.invert_conditional_survival(1.0, 0.1).unwrap_err();
    assert!(matches!(err, EahmError::Sampling { .. }));
}

#[test]
fn custom_effect_matches_family() {
    let fam = hyperbolic_model();
    let custom = EahmModel::new(
        BaselineModel::exponential(1.0).unwrap(),
        CovariateEffect::custom("z/(1+x)", |x, z| z / (1.0 + x)),
        exp_cov(),
    )
    .unwrap();
    for x in [0.5, 2.0] {
        let a = fam.overall_survival(x, &quad()).unwrap();
        let b = custom.overall_survival(x, &quad()).unwrap();
        assert!((a - b).abs() < 1e-8);
    }
}

fn arb_model() -> impl Strategy<Value = EahmModel> {
    let baseline = prop_oneof![
        (0.2f64..3.0).prop_map(|r| BaselineModel::exponential(r).unwrap()),
        (1.0f64..3.0, 0.5f64..2.0).prop_map(|(k, s)| BaselineModel::weibull(k, s).unwrap()),
        (0.2f64..2.0, -0.3f64..0.5).prop_map(|(a, b)| BaselineModel::gompertz(a, b).unwrap()),
    ];
    let psi = prop_oneof![
        Just(TimeProfile::One),
        Just(TimeProfile::Hyperbolic),
        (0.2f64..2.0).prop_map(|beta| TimeProfile::ExpDecay { beta }),
    ];
    let effect = (0.0f64..0.5, 0.0f64..2.0, psi).prop_map(|(c0, c1, psi)| CovariateEffect::affine(c0 + 0.1, c1, psi).unwrap());
    let cov = prop_oneof![
        (0.5f64..3.0).prop_map(|r| CovariateDistribution::exponential(r).unwrap()),
        (1.0f64..4.0, 0.5f64..3.0).prop_map(|(k, r)| CovariateDistribution::gamma(k, r).unwrap()),
        (0.0f64..1.0, 1.0f64..3.0).prop_map(|(lo, w)| CovariateDistribution::uniform(lo, lo + w).unwrap()),
    ];
    (baseline, effect, cov).prop_map(|(b, e, c)| EahmModel::new(b, e, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn survival_bounds_and_monotonicity(m in arb_model(), x in 0.0f64..6.0, dx in 0.01f64..2.0) {
        let q = quad();
        let s0 = m.overall_survival(x, &q).unwrap();
        let s1 = m.overall_survival(x + dx, &q).unwrap();
        prop_assert!(s0 > 0.0 && s0 <= 1.0);
        prop_assert!(s1 <= s0 + 1e-12);
        prop_assert!(s0 <= m.baseline.survival(x) * (1.0 + 1e-12));
    }

    #[test]
    fn two_density_representations_agree(m in arb_model(), x in 0.0f64..8.0) {
        let r = m.overall_density_representations(x, &quad()).unwrap();
        prop_assert!((r.combined - r.split).abs() < 1e-8, "{} vs {}", r.combined, r.split);
        prop_assert!(r.combined >= 0.0);
    }

    #[test]
    fn density_is_minus_survival_derivative(m in arb_model(), x in 0.01f64..6.0) {
        let q = quad();
        let h = 1e-4;
        let d = -(m.overall_survival(x + h, &q).unwrap() - m.overall_survival(x - h, &q).unwrap()) / (2.0 * h);
        prop_assert!((m.overall_density(x, &q).unwrap() - d).abs() < 1e-4);
    }

    #[test]
    fn conditional_survival_decreases_in_covariate(m in arb_model(), x in 0.0f64..5.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        // Affine effects with nonnegative slope are nondecreasing in z.
        let (lo, hi) = m.covariate.integration_range(0.999);
        let z1 = lo + (hi - lo) * u.min(v);
        let z2 = lo + (hi - lo) * u.max(v);
        let s1 = m.conditional_survival(x, z1).unwrap();
        let s2 = m.conditional_survival(x, z2).unwrap();
        prop_assert!(s2 <= s1 + 1e-15);
    }

    #[test]
    fn conditional_invariants(m in arb_model(), x in 0.0f64..5.0, u in 0.0f64..1.0) {
        let (lo, hi) = m.covariate.integration_range(0.999);
        let z = lo + (hi - lo) * u;
        let h = m.conditional_hazard(x, z).unwrap();
        prop_assert!(h >= m.baseline.hazard(x) && h >= m.effect.rate(x, z));
        prop_assert_eq!(m.phi_ratio(0.0, x, z).unwrap(), 1.0);
        prop_assert!(m.phi_ratio(1.0, x, z).unwrap() > 0.0);
    }
}
