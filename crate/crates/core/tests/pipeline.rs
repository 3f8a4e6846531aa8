use mmlab::analysis::bound::effective_lipschitz;
use mmlab::analysis::experiments::theorem2_instance;
use mmlab::analysis::gap::case2_instance;
use mmlab::analysis::{
    bound_for_solution, excess_risk, heterogeneity_gap, representation_comparison,
    ComplexitySource, EvalMode, RiskMode,
};
use mmlab::erm::{
    fit_joint, fit_multimodal, fit_unimodal, MultimodalSolution, DEFAULT_JOINT_BUDGET,
};
use mmlab::hypotheses::{
    ConnectionClass, PredictorClass, ResidualNorm, UnimodalClass, UnimodalMember, DEFAULT_GRID,
};
use mmlab::instances::{
    draw_labeled, draw_unlabeled, make_boolean, make_sine, make_subspace, Instance, SineSupport,
};
use mmlab::loss::Loss;
use mmlab::report::{to_csv, Check, Summary};
use mmlab::theta::Theta;
use mmlab::SeedSpec;

#[test]
fn theorem2_law_has_zero_multimodal_excess_and_round_trips() {
    let seed = SeedSpec::new(11);
    let inst = theorem2_instance(4, &seed).unwrap();
    let s = draw_labeled(&inst, 1, 4, &seed).unwrap();
    let sp = draw_unlabeled(&inst, 1, 4, &seed).unwrap();
    let sol = fit_multimodal(
        &s,
        &sp,
        &ConnectionClass::Scaling,
        &PredictorClass::SingletonSine,
        &Loss::clipped(),
        ResidualNorm::Euclidean,
    )
    .unwrap();
    assert!(sol.stage1.exact);
    let r = excess_risk(&sol, &inst, &RiskMode::Exact).unwrap();
    assert_eq!(r.excess, 0.0);
    assert_eq!(r.mode, EvalMode::ExactFiniteSupport);

    let json = serde_json::to_string(&sol).unwrap();
    let back: MultimodalSolution = serde_json::from_str(&json).unwrap();
    assert_eq!(back, sol);
    let inst_back: Instance = serde_json::from_str(&serde_json::to_string(&inst).unwrap()).unwrap();
    assert_eq!(inst_back.sha256(), inst.sha256());
}

#[test]
fn boolean_bound_has_realizability_near_half() {
    let seed = SeedSpec::new(3);
    let inst = make_boolean(vec![[0, 1], [1, 0]]).unwrap();
    let s = draw_labeled(&inst, 2, 200, &seed).unwrap();
    let sp = draw_unlabeled(&inst, 2, 2000, &seed).unwrap();
    let sol = fit_multimodal(
        &s,
        &sp,
        &ConnectionClass::BooleanMaps,
        &PredictorClass::BooleanLookup,
        &Loss::clipped(),
        ResidualNorm::Euclidean,
    )
    .unwrap();
    let b = bound_for_solution(&sol, &s, &sp, 1.0, 0.05, &ComplexitySource::ClosedForm).unwrap();
    assert!((b.term3 - 0.5).abs() < 0.05, "{}", b.term3);
    assert!(!b.indicative);
    let r = excess_risk(&sol, &inst, &RiskMode::Exact).unwrap();
    assert_eq!(r.excess, 0.5);
    assert!(r.excess <= b.total);
}

#[test]
fn witness_complexities_mark_the_bound_indicative() {
    let seed = SeedSpec::new(4);
    let (k, n) = (4, 6);
    let inst = make_subspace(vec![0.5, 0.0, 0.0, 0.0], vec![0.0, 0.3, 0.0, 0.0], None).unwrap();
    let s = draw_labeled(&inst, 1, n, &seed).unwrap();
    let sp = draw_unlabeled(&inst, 1, 20, &seed).unwrap();
    let members = vec![mmlab::hypotheses::Connection::Polynomial {
        coeffs: vec![vec![0.0, 0.3, 0.0, 0.0], vec![0.5, 0.0, 0.0, 0.0]],
    }];
    let sol = fit_multimodal(
        &s,
        &sp,
        &ConnectionClass::Finite { members },
        &PredictorClass::SmoothedHyperplanes {
            eps: 0.1 / (k as f64).sqrt(),
        },
        &Loss::clipped(),
        ResidualNorm::Euclidean,
    )
    .unwrap();
    assert!(sol.stage1.objective < 1e-12);
    let src = ComplexitySource::MonteCarlo {
        draws: 200,
        seed: seed.child("g"),
    };
    let b = bound_for_solution(&sol, &s, &sp, 1.0, 0.1, &src).unwrap();
    assert!(b.indicative);
}

#[test]
fn unimodal_and_joint_fits_on_the_boolean_family() {
    let seed = SeedSpec::new(5);
    let inst = make_boolean(vec![[0, 1]]).unwrap();
    let s = draw_labeled(&inst, 1, 64, &seed).unwrap();
    let uni = fit_unimodal(
        &s,
        &UnimodalClass::BooleanMaps,
        &Loss::clipped(),
        DEFAULT_GRID,
    )
    .unwrap();
    assert!(uni.fit.objective > 0.2);
    let joint = fit_joint(
        &s,
        &ConnectionClass::BooleanMaps,
        &PredictorClass::BooleanLookup,
        &Loss::clipped(),
        DEFAULT_JOINT_BUDGET,
    )
    .unwrap();
    assert!(joint.objective >= uni.fit.objective - 1e-12);
}

#[test]
fn composed_sine_gap_is_large() {
    let inst = make_sine(
        Theta::Value(0.9),
        SineSupport::Lattice {
            indices: (1..=64).collect(),
        },
    )
    .unwrap();
    let r = heterogeneity_gap(
        &inst,
        &UnimodalClass::ComposedSine,
        &PredictorClass::SingletonSine,
        8,
        30,
        200,
        &SeedSpec::new(6),
        &Loss::clipped(),
        1000,
        &RiskMode::Exact,
    )
    .unwrap();
    assert!(r.lower_bound_inputs);
    assert_eq!(r.risk_g_star, 0.0);
    assert!(r.h >= 0.35, "{}", r.h);
    let terms = r.g_complexity.mean - r.f_complexity.mean;
    assert!((r.h - terms - r.intrinsic).abs() <= 1e-12);
}

#[test]
fn case2_scaling_gap() {
    let indices: Vec<u32> = (1..=6).collect();
    let case = case2_instance(&UnimodalClass::Scaling, &indices).unwrap();
    let r = heterogeneity_gap(
        &case.instance,
        &UnimodalClass::Scaling,
        &PredictorClass::SingletonSine,
        6,
        30,
        200,
        &SeedSpec::new(7),
        &Loss::clipped(),
        DEFAULT_GRID,
        &RiskMode::Exact,
    )
    .unwrap();
    assert!(r.risk_g_star >= 0.125);
    assert_eq!(r.risk_f_star, 0.0);
    assert!(r.intrinsic >= 0.125);
}

#[test]
fn sine_lipschitz_uses_the_support() {
    let inst = make_sine(
        Theta::Value(0.5),
        SineSupport::Lattice {
            indices: vec![1, 2],
        },
    )
    .unwrap();
    let l = effective_lipschitz(&inst, &PredictorClass::SingletonSine).unwrap();
    let y_min: f64 = 0.5 * 16.0 / 17.0;
    assert!((l - 1.0 / (y_min * y_min)).abs() < 1e-12);
    let open = make_sine(Theta::Value(0.5), SineSupport::Continuous { lower: 0.0 }).unwrap();
    assert!(effective_lipschitz(&open, &PredictorClass::SingletonSine).is_none());
}

#[test]
fn continuous_support_uses_monte_carlo() {
    let seed = SeedSpec::new(8);
    let inst = make_sine(Theta::Value(0.7), SineSupport::Continuous { lower: 0.2 }).unwrap();
    let s = draw_labeled(&inst, 1, 10, &seed).unwrap();
    let sp = draw_unlabeled(&inst, 1, 10, &seed).unwrap();
    let sol = fit_multimodal(
        &s,
        &sp,
        &ConnectionClass::Scaling,
        &PredictorClass::SingletonSine,
        &Loss::clipped(),
        ResidualNorm::Euclidean,
    )
    .unwrap();
    let r = excess_risk(&sol, &inst, &RiskMode::MonteCarlo { points: 5000, seed }).unwrap();
    assert!(matches!(r.mode, EvalMode::MonteCarlo { points: 5000, .. }));
    assert!(r.excess.abs() < 1e-6);
    assert!(excess_risk(&sol, &inst, &RiskMode::Exact).is_err());
}

#[test]
fn repr_ratio_grows() {
    let seed = SeedSpec::new(9);
    let small = representation_comparison(2, 8, None, 2000, &seed).unwrap();
    let large = representation_comparison(8, 8, None, 2000, &seed).unwrap();
    assert!(large.ratio > small.ratio);
    assert!(
        large.adversarial.value <= large.adversarial_reference + 4.0 * large.adversarial.stderr
    );
}

#[test]
fn summary_and_csv() {
    #[derive(serde::Serialize)]
    struct Row {
        n: usize,
        member: String,
    }
    let member = UnimodalMember::ComposedSine {
        theta: Theta::Value(0.5),
    };
    let csv = to_csv(&[Row {
        n: 1,
        member: serde_json::to_string(&member).unwrap(),
    }])
    .unwrap();
    assert!(csv.starts_with("n,member\n"));
    let s = Summary::new("demo", &member, vec![Check::within("x", 1.0, 1.05, 0.1)]).unwrap();
    assert!(s.pass);
}
