use super::*;
use crate::catalog::{builtin, builtin_scenarios, default_x_grid, default_z_grid, ModelSpec};
use crate::model::{BaselineModel, CovariateDistribution, CovariateEffect, EffectFamily, TimeProfile, WeightVariant};

fn tol() -> ToleranceProfile {
    ToleranceProfile::default()
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn model_for(name: &str) -> EahmModel {
    builtin(name).unwrap().spec.build().unwrap()
}

fn report_for(name: &str) -> TheoremReport {
    let s = builtin(name).unwrap().spec;
    let m = s.build().unwrap();
    let z = default_z_grid(&s.covariate, 21).unwrap();
    verify_theorem_4_1(&m, &default_x_grid(), &z, &tol(), &quad()).unwrap()
}

#[test]
fn ahm_exponential_all_hold() {
    let r = report_for("ahm-exponential");
    assert_eq!(r.status, TheoremStatus::HypothesesHoldConclusionHolds);
    let verdicts: Vec<&str> = r.hypotheses.iter().map(|h| h.verdict.as_str()).collect();
    assert_eq!(verdicts, ["constant", "constant", "increasing", "both", "log-linear"]);
    assert_eq!(r.z_direction, Direction::Increasing);
    assert_eq!(r.conclusion.verdict, "dlr");
    assert!(r.failed.is_empty());
}

#[test]
fn eahm_hyperbolic_rr2_and_log_convex() {
    let r = report_for("eahm-hyperbolic");
    assert_eq!(r.status, TheoremStatus::HypothesesHoldConclusionHolds);
    let h4 = r.hypothesis("H4").unwrap();
    assert_eq!(h4.verdict, "rr2");
    // every adjacent determinant is at most the slack
    assert!(h4.margin.unwrap() >= 0.0);
    assert_eq!(r.hypothesis("H5").unwrap().verdict, "log-convex");
    assert_eq!(r.hypothesis("H2").unwrap().verdict, "decreasing");
    assert!(r.conclusion.holds);
}

#[test]
fn weibull_control_fails_h1_and_conclusion() {
    let r = report_for("weibull-control");
    assert_eq!(r.status, TheoremStatus::HypothesisFails);
    let h1 = r.hypothesis("H1").unwrap();
    assert_eq!(h1.verdict, "ifr");
    assert_eq!(h1.witnesses[0].indices.len(), 2);
    assert!(h1.witnesses[0].value > 0.0);
    assert!(!r.conclusion.holds);
    assert_eq!(r.conclusion.witnesses[0].indices.len(), 3);
    assert!(r.conclusion.witnesses[0].value < 0.0);
}

#[test]
fn no_builtin_scenario_is_an_anomaly() {
    for s in builtin_scenarios() {
        let m = s.spec.build().unwrap();
        let z = default_z_grid(&s.spec.covariate, 21).unwrap();
        let r = verify_theorem_4_1(&m, &default_x_grid(), &z, &tol(), &quad()).unwrap();
        assert!(!r.status.is_anomaly(), "{}", s.name);
        if r.failed.is_empty() {
            assert!(r.conclusion.holds, "{}", s.name);
        }
    }
}

#[test]
fn infinite_baseline_hazard_points_are_excluded() {
    let r = report_for("zero-effect");
    assert_eq!(r.excluded_x, vec![0.0]);
    assert_eq!(r.x_points, 100);
}

#[test]
fn status_is_a_function_of_entries() {
    let eps = 1e-9;
    let e = |holds: bool, margin: f64| CheckEntry {
        id: "H".into(),
        name: "h".into(),
        holds,
        verdict: String::new(),
        margin: Some(margin),
        witnesses: vec![],
        note: None,
    };
    let strong = vec![e(true, 1.0); 5];
    assert_eq!(overall_status(&strong, &e(true, 1.0), eps), TheoremStatus::HypothesesHoldConclusionHolds);
    assert_eq!(overall_status(&strong, &e(false, -1.0), eps), TheoremStatus::HypothesesHoldConclusionFails);
    let mut weak = strong.clone();
    weak[2].margin = Some(5.0 * eps);
    assert_eq!(overall_status(&weak, &e(false, -1.0), eps), TheoremStatus::Inconclusive);
    weak[2].margin = None;
    assert_eq!(overall_status(&weak, &e(false, -1.0), eps), TheoremStatus::Inconclusive);
    weak[0].holds = false;
    assert_eq!(overall_status(&weak, &e(false, -1.0), eps), TheoremStatus::HypothesisFails);
    assert_eq!(
        serde_json::to_string(&TheoremStatus::HypothesesHoldConclusionFails).unwrap(),
        "\"hypotheses-hold-conclusion-fails\""
    );
}

#[test]
fn report_is_deterministic() {
    assert_eq!(report_for("gompertz-gamma"), report_for("gompertz-gamma"));
}

#[test]
fn covariate_grid_outside_support_is_rejected() {
    let m = model_for("uniform-affine");
    let z = Grid::new(vec![0.0, 3.0]).unwrap();
    assert!(matches!(
        verify_theorem_4_1(&m, &default_x_grid(), &z, &tol(), &quad()),
        Err(EahmError::InvalidGrid(_))
    ));
}

// Mixture ordering

fn theta_grid() -> Grid {
    Grid::linspace(0.0, 4.0, 21).unwrap()
}

#[test]
fn lemma_degenerate_family() {
    let v = Grid::linspace(0.0, 5.0, 51).unwrap();
    let r = verify_lemma_4_1(CovariateDistribution::degenerate, &theta_grid(), &v, |t, v| t + v, LemmaCase::Ii, &tol(), &quad()).unwrap();
    for (t, e) in r.thetas.iter().zip(&r.expectations) {
        assert!((e - 2.0 * t).abs() < 1e-12);
    }
    assert_eq!(r.verdict.direction, Direction::Increasing);
    assert_eq!(r.family_order, Direction::Increasing);
    assert!(r.premises_hold && r.conclusion_holds && !r.anomaly);
}

#[test]
fn lemma_exponential_family_laplace_transform() {
    let v = Grid::linspace(0.0, 20.0, 81).unwrap();
    let fam = |t: f64| CovariateDistribution::exponential(1.0 / (1.0 + t));
    let r = verify_lemma_4_1(fam, &theta_grid(), &v, |_, v| (-v).exp(), LemmaCase::I, &tol(), &quad()).unwrap();
    for (t, e) in r.thetas.iter().zip(&r.expectations) {
        assert!((e - 1.0 / (2.0 + t)).abs() < 1e-8, "{t}: {e}");
    }
    assert_eq!(r.verdict.direction, Direction::Decreasing);
    assert_eq!(r.family_order, Direction::Increasing);
    assert_eq!(r.phi_in_v, Direction::Decreasing);
    assert_eq!(r.phi_in_theta, Direction::Constant);
    assert!(r.premises_hold && r.conclusion_holds);
}

#[test]
fn lemma_constant_phi_fits_both_cases() {
    let v = Grid::linspace(0.0, 10.0, 41).unwrap();
    let fam = |t: f64| CovariateDistribution::gamma(2.0, 1.0 / (1.0 + t));
    for case in [LemmaCase::I, LemmaCase::Ii] {
        let r = verify_lemma_4_1(fam, &theta_grid(), &v, |_, _| 1.0, case, &tol(), &quad()).unwrap();
        assert!(r.expectations.iter().all(|e| (e - 1.0).abs() < 1e-8));
        assert_eq!(r.verdict.direction, Direction::Constant);
        assert!(r.conclusion_holds && !r.anomaly);
    }
}

// Identities

#[test]
fn zero_effect_density_is_the_baseline_density() {
    let m = model_for("zero-effect");
    for &x in &[0.1, 0.5, 1.0, 3.0] {
        let r = m.overall_density_representations(x, &quad()).unwrap();
        let f = m.baseline.density(x);
        assert!((r.combined - f).abs() <= 1e-15 * f.max(1.0));
        assert!((r.split - f).abs() <= 1e-15 * f.max(1.0));
    }
    assert!(verify_density_identity(&m, &default_x_grid(), &quad()).unwrap().passes);
}

#[test]
fn ahm_exponential_density_identity() {
    let m = model_for("ahm-exponential");
    let g = Grid::linspace(0.0, 10.0, 11).unwrap();
    let r = verify_density_identity(&m, &g, &quad()).unwrap();
    assert!(r.max_algebraic < 1e-8);
    assert!(r.max_derivative < 1e-4);
    assert!(r.passes);
}

#[test]
fn degenerate_covariate_density_is_exact() {
    let m = model_for("degenerate-covariate");
    for &x in &[0.0, 0.7, 2.5, 9.0] {
        let z0 = 0.5;
        let expected = (m.baseline.hazard(x) + z0 / (1.0 + x)) * m.baseline.survival(x) * (-z0 * x.ln_1p()).exp();
        let got = m.overall_density(x, &quad()).unwrap();
        assert!((got - expected).abs() <= 1e-15, "{x}: {got} vs {expected}");
    }
}

#[test]
fn piecewise_kinks_use_one_sided_differences() {
    let m = model_for("piecewise-dfr");
    let g = Grid::new(vec![0.0, 0.99995, 1.0, 2.0, 3.0, 3.00005]).unwrap();
    let r = verify_density_identity(&m, &g, &quad()).unwrap();
    assert!(r.passes, "{r:?}");
}

#[test]
fn w_identity_examples() {
    let lin = CovariateEffect::separable(TimeProfile::One).unwrap();
    let r = verify_w_identity(&lin, &[(1.0, 2.0, 3.0), (0.5, 0.0, 1.0)], &quad()).unwrap();
    assert!(r.max_deviation < 1e-14);

    let hyp = CovariateEffect::separable(TimeProfile::Hyperbolic).unwrap();
    let left = hyp.cumulative(1.0, 2.0).unwrap() - hyp.cumulative(2.0, 2.0).unwrap();
    assert!((left - (2.0 * 2f64.ln() - 2.0 * 3f64.ln())).abs() < 1e-14);
    let r = verify_w_identity(&hyp, &[(1.0, 1.0, 2.0)], &quad()).unwrap();
    assert!(r.max_deviation < 1e-10);

    let custom = CovariateEffect::custom("bump", |x, z| z * (1.0 + (3.0 * x).sin().powi(2)));
    let r = verify_w_identity(&custom, &[(0.0, 1.3, 2.0), (0.0, 0.0, 0.0)], &quad()).unwrap();
    assert_eq!(r.max_deviation, 0.0);
}

#[test]
fn w_identity_on_builtins() {
    for s in builtin_scenarios() {
        let m = s.spec.build().unwrap();
        let samples = w_identity_samples(&m.covariate, 3, 100);
        let r = verify_w_identity(&m.effect, &samples, &quad()).unwrap();
        assert!(r.passes, "{}: {r:?}", s.name);
    }
}

fn closed_ratio(x: f64, t: f64) -> f64 {
    (-x).exp() * (x + t + 2.0) * (1.0 + t).powi(2) / ((t + 2.0) * (1.0 + x + t).powi(2))
}

#[test]
fn ratio_matches_closed_form_and_increases() {
    let m = model_for("ahm-exponential");
    let th = Grid::linspace(0.0, 8.0, 41).unwrap();
    let r = verify_ratio_dlr_equivalence(&m, &[1.0], &th, &tol(), &quad(), WeightVariant::Corrected).unwrap();
    let s = &r.slices[0];
    assert!((s.ratios[0] - (-1f64).exp() * 3.0 / 8.0).abs() < 1e-8);
    assert!((s.ratios[0] - 0.137955).abs() < 1e-6);
    for (t, v) in s.thetas.iter().zip(&s.ratios) {
        assert!((v - closed_ratio(1.0, *t)).abs() < 1e-8);
        assert!(*v < (-1f64).exp());
    }
    assert_eq!(s.verdict.direction, Direction::Increasing);
    assert!(r.ratios_increasing && r.dlr_holds && r.consistent && r.factorization_passes);
    assert_eq!(r.excluded, 0);
    assert_eq!(r.exclusion_threshold, 1e-300);
}

#[test]
fn zero_effect_exponential_ratio_is_constant() {
    let m = ModelSpec {
        baseline: BaselineModel::Exponential { rate: 1.0 },
        effect: EffectFamily::Zero,
        covariate: CovariateDistribution::Exponential { rate: 1.0 },
    }
    .build()
    .unwrap();
    let th = Grid::linspace(0.0, 5.0, 11).unwrap();
    let r = verify_ratio_dlr_equivalence(&m, &[0.5, 2.0], &th, &tol(), &quad(), WeightVariant::Corrected).unwrap();
    for s in &r.slices {
        assert!(s.ratios.iter().all(|v| (v - (-s.x).exp()).abs() < 1e-14));
        assert_eq!(s.verdict.direction, Direction::Constant);
    }
    assert!(r.consistent);
}

#[test]
fn hazard_only_weight_breaks_the_factorization() {
    let m = model_for("eahm-hyperbolic");
    let th = Grid::linspace(0.0, 4.0, 9).unwrap();
    let hazard_only = verify_ratio_dlr_equivalence(&m, &[1.0], &th, &tol(), &quad(), WeightVariant::HazardOnly).unwrap();
    assert!(hazard_only.max_factorization_deviation > 1e-3);
    assert!(!hazard_only.factorization_passes);
    let corrected = verify_ratio_dlr_equivalence(&m, &[1.0], &th, &tol(), &quad(), WeightVariant::Corrected).unwrap();
    assert!(corrected.factorization_passes);
}

#[test]
fn far_tail_is_excluded() {
    let m = ModelSpec {
        baseline: BaselineModel::Exponential { rate: 100.0 },
        effect: EffectFamily::Zero,
        covariate: CovariateDistribution::Exponential { rate: 1.0 },
    }
    .build()
    .unwrap();
    let th = Grid::linspace(0.0, 10.0, 11).unwrap();
    let r = verify_ratio_dlr_equivalence(&m, &[1.0], &th, &tol(), &quad(), WeightVariant::Corrected).unwrap();
    assert!(r.excluded > 0);
    assert!(r.slices[0].thetas.iter().all(|&t| t + 1.0 <= 7.0));
}

// Sampling

#[test]
fn sampling_precondition() {
    let m = model_for("ahm-exponential");
    assert!(matches!(
        verify_sampling_consistency(&m, 1, 10, 0.001, &quad()),
        Err(EahmError::Precondition(_))
    ));
}

#[test]
fn dkw_arithmetic() {
    assert!((identities::dkw_bound(200_000, 0.001) - 0.004360).abs() < 1e-6);
}

#[test]
fn sampling_ahm_exponential() {
    let m = model_for("ahm-exponential");
    let (r, samples) = verify_sampling_consistency(&m, 2024, 200_000, 0.001, &quad()).unwrap();
    assert_eq!(samples.len(), 200_000);
    assert!(r.sup_distance < 0.00436, "{r:?}");
    assert!(r.passes);
}

#[test]
fn sampling_plain_exponential() {
    let m = EahmModel::new(
        BaselineModel::exponential(1.0).unwrap(),
        CovariateEffect::zero(),
        CovariateDistribution::degenerate(1.0).unwrap(),
    )
    .unwrap();
    let (r, samples) = verify_sampling_consistency(&m, 5, 100_000, 0.001, &quad()).unwrap();
    assert!(r.passes);
    // The empirical survival also matches e^{-x} directly.
    let mut sorted = samples;
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let sup = (0..100)
        .map(|i| {
            let x = 0.08 * i as f64;
            let emp = (sorted.len() - sorted.partition_point(|&s| s <= x)) as f64 / n;
            (emp - (-x).exp()).abs()
        })
        .fold(0.0, f64::max);
    assert!(sup < identities::dkw_bound(100_000, 0.001));
}

// Search

fn weibull_search() -> SearchSpec {
    SearchSpec {
        template: builtin("weibull-control").unwrap().spec,
        knobs: vec![Knob {
            path: "baseline.shape".into(),
            lo: 1.5,
            hi: 3.0,
        }],
        seed: 7,
        budget: 50,
        target: SearchTarget::ConclusionFails,
        x_grid: default_x_grid(),
        z_points: 21,
    }
}

#[test]
fn search_finds_ifr_weibull() {
    let spec = weibull_search();
    match search_counterexample(&spec, &tol(), &quad()).unwrap() {
        SearchOutcome::Found { index, spec: found, report, .. } => {
            assert_eq!(index, 0);
            let k = found.get_parameter("baseline.shape").unwrap();
            assert!((1.5..=3.0).contains(&k));
            assert!(!report.hypothesis("H1").unwrap().holds);
            assert!(!report.conclusion.holds);
            // Soundness: re-verifying reproduces the report.
            let m = found.build().unwrap();
            let z = default_z_grid(&found.covariate, 21).unwrap();
            assert_eq!(verify_theorem_4_1(&m, &default_x_grid(), &z, &tol(), &quad()).unwrap(), report);
        }
        other => panic!("{other:?}"),
    }
    let again = search_counterexample(&spec, &tol(), &quad()).unwrap();
    assert_eq!(again, search_counterexample(&spec, &tol(), &quad()).unwrap());
}

#[test]
fn search_over_exponential_baselines_is_exhausted() {
    let spec = SearchSpec {
        template: builtin("ahm-exponential").unwrap().spec,
        knobs: vec![
            Knob {
                path: "baseline.rate".into(),
                lo: 0.2,
                hi: 5.0,
            },
            Knob {
                path: "covariate.rate".into(),
                lo: 0.5,
                hi: 4.0,
            },
        ],
        seed: 1,
        budget: 20,
        target: SearchTarget::HypothesisFails { which: None },
        x_grid: default_x_grid(),
        z_points: 21,
    };
    assert_eq!(
        search_counterexample(&spec, &tol(), &quad()).unwrap(),
        SearchOutcome::Exhausted { evaluated: 20, rejected: 0 }
    );
}

#[test]
fn search_targets_a_named_hypothesis() {
    let mut spec = weibull_search();
    spec.target = SearchTarget::HypothesisFailsAndConclusionFails { which: Some("H2".into()) };
    spec.budget = 3;
    assert!(matches!(
        search_counterexample(&spec, &tol(), &quad()).unwrap(),
        SearchOutcome::Exhausted { evaluated: 3, .. }
    ));
    spec.target = SearchTarget::HypothesisFailsAndConclusionFails { which: Some("baseline-dfr".into()) };
    assert!(matches!(search_counterexample(&spec, &tol(), &quad()).unwrap(), SearchOutcome::Found { .. }));
}

#[test]
fn search_rejects_bad_specs() {
    let mut spec = weibull_search();
    spec.budget = 0;
    assert!(matches!(search_counterexample(&spec, &tol(), &quad()), Err(EahmError::InvalidParameter { .. })));
    let mut spec = weibull_search();
    spec.knobs[0].lo = 4.0;
    assert!(search_counterexample(&spec, &tol(), &quad()).is_err());
    let mut spec = weibull_search();
    spec.knobs[0].path = "baseline.sahpe".into();
    assert!(search_counterexample(&spec, &tol(), &quad()).is_err());
}

#[test]
fn search_counts_rejected_candidates() {
    let mut spec = weibull_search();
    spec.knobs[0] = Knob {
        path: "baseline.scale".into(),
        lo: -2.0,
        hi: -1.0,
    };
    spec.budget = 4;
    assert_eq!(
        search_counterexample(&spec, &tol(), &quad()).unwrap(),
        SearchOutcome::Exhausted { evaluated: 4, rejected: 4 }
    );
}
