mod common;

use genealab_verify::{fk_exact_check, Verdict};

#[test]
fn small_branching_chain_matches_the_feynman_kac_dual_exactly() {
    for k in 1..=5 {
        let check = fk_exact_check(k, 1.0, 1.0, 0.5, 0.5).unwrap();
        println!("{}", check.summary());
        assert_eq!(check.verdict(), Verdict::Pass, "{}", check.summary());
    }
}

use common::assert_passed;
use genealab_core::{DistanceKernel, EvalOptions, Mark, MarkedSpace, PolynomialSpec};
use genealab_sim::{
    Assignment, BranchingConfig, DualConfig, DualMode, LocationFallback, MoranConfig,
};
use genealab_verify::oracle::pair_laplace;
use genealab_verify::{
    run_conditioned_duality, run_equilibrium_check, run_fk_duality, run_moment_duality,
    run_strong_duality_check, ConditionedExperiment, EquilibriumExperiment, FkExperiment,
    MomentExperiment, StrongExperiment, Tolerance, VerifyError,
};

fn exp_poly(n: usize, lambda: f64) -> PolynomialSpec<f64> {
    PolynomialSpec::new(n, DistanceKernel::exponential_uniform(n, lambda)).unwrap()
}

fn moment(n: usize, reps: usize, seed: u64) -> MomentExperiment {
    MomentExperiment {
        moran: MoranConfig::neutral(n, 1.0),
        dual: DualConfig::plain(2, 1.0, 1.0),
        polynomial: exp_poly(2, 0.5),
        evaluation: EvalOptions::exact(),
        fallback: LocationFallback::Error,
        forward_reps: reps,
        dual_reps: reps,
        checkpoints: vec![reps / 4],
        tolerance: Tolerance::finite_size(n),
        reference: Some(pair_laplace(1.0, 0.5, 1.0)),
        seed,
    }
}

#[test]
fn moran_pair_moment_agrees_with_dual_and_closed_form() {
    let out = run_moment_duality(&moment(100, 4_000, 1)).unwrap();
    assert_passed(&out.report);
    // Two checkpoints, three checks each.
    assert_eq!(out.report.checks.len(), 6);
    assert_eq!(out.series.len(), 2);
}

#[test]
fn reports_do_not_depend_on_the_thread_count() {
    let exp = moment(30, 500, 9);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_moment_duality(&exp).unwrap())
    };
    let (one, three) = (run(1), run(3));
    assert_eq!(one.report.to_json(), three.report.to_json());
    assert_eq!(one.csv(), three.csv());
}

#[test]
fn single_samples_are_trivial() {
    let mut exp = moment(20, 50, 2);
    exp.dual = DualConfig::plain(1, 1.0, 1.0);
    exp.polynomial = PolynomialSpec::constant(1, 0.25).unwrap();
    exp.reference = Some(0.25);
    let out = run_moment_duality(&exp).unwrap();
    assert_passed(&out.report);
    assert!(out
        .series
        .iter()
        .all(|s| s.values.iter().all(|v| *v == 0.25)));
}

#[test]
fn mismatched_orders_are_reported() {
    let mut exp = moment(20, 10, 2);
    exp.polynomial = exp_poly(3, 0.5);
    assert!(matches!(run_moment_duality(&exp), Err(VerifyError::Sim(_))));
    let mut fk_mode = moment(20, 10, 2);
    fk_mode.dual = fk_mode.dual.with_mode(DualMode::FeynmanKac);
    assert!(matches!(
        run_moment_duality(&fk_mode),
        Err(VerifyError::InvalidConfig(_))
    ));
}

fn fk(n: usize, reps: usize) -> FkExperiment {
    let k = 20;
    FkExperiment {
        branching: BranchingConfig::critical(1.0, k, 1.0).unwrap(),
        dual: DualConfig::plain(n, 1.0, 0.5).with_mode(DualMode::FeynmanKac),
        polynomial: if n == 1 {
            PolynomialSpec::constant(1, 1.0).unwrap()
        } else {
            exp_poly(n, 0.5)
        },
        evaluation: EvalOptions::exact(),
        forward_reps: reps,
        dual_reps: reps,
        checkpoints: vec![],
        tolerance: Tolerance::finite_size(k),
        reference: if n == 1 { Some(1.0) } else { None },
        seed: 4,
    }
}

#[test]
fn branching_mass_and_pair_moments_match_the_weighted_dual() {
    let out = run_fk_duality(&fk(1, 4_000)).unwrap();
    assert_passed(&out.report);
    let out = run_fk_duality(&fk(2, 4_000)).unwrap();
    assert_passed(&out.report);
}

#[test]
fn particle_caps_surface_with_a_partial_report() {
    let mut exp = fk(2, 200);
    exp.branching.particle_cap = 21;
    match run_fk_duality(&exp) {
        Err(VerifyError::Budget { partial, .. }) => {
            assert!(partial.notes.iter().any(|n| n.contains("particle cap")))
        }
        other => panic!("expected a budget error, got {:?}", other.map(|o| o.report)),
    }
}

#[test]
fn conditioned_dual_matches_replayed_pairs() {
    let exp = ConditionedExperiment {
        branching: BranchingConfig::critical(1.0, 2000, 1.0).unwrap(),
        horizon: 1.0,
        paths: 30,
        samples_per_path: 300,
        level: 0.01,
        seed: 5,
    };
    let out = run_conditioned_duality(&exp).unwrap();
    assert_passed(&out.report);
    assert_eq!(out.series[0].values.len(), 30);
    let mut two = exp.clone();
    let marks = [Mark::default(); 2];
    two.branching.initial = MarkedSpace::star(&[0.5, 0.5], &marks, 1.0).unwrap();
    two.branching.assignment = Assignment::Quota;
    assert!(matches!(
        run_conditioned_duality(&two),
        Err(VerifyError::InvalidConfig(_))
    ));
}

#[test]
fn long_runs_reach_the_stationary_pair_law() {
    let exp = EquilibriumExperiment {
        moran: MoranConfig::neutral(100, 1.0),
        horizon: 12.0,
        lambdas: vec![0.25, 0.5, 1.0],
        reps: 400,
        dual_reps: 20_000,
        triples: 20,
        tolerance: Tolerance::finite_size(100),
        seed: 6,
    };
    let out = run_equilibrium_check(&exp).unwrap();
    assert_passed(&out.report);
    assert_eq!(out.report.checks.len(), 5);
}

#[test]
fn grafted_entrance_law_matches_the_forward_sample() {
    let marks = [Mark::default(); 2];
    let initial = MarkedSpace::star(&[0.5, 0.5], &marks, 10.0).unwrap();
    let exp = StrongExperiment {
        moran: MoranConfig::neutral(100, 1.0).with_initial(initial, Assignment::Quota),
        horizon: 1.0,
        samples: 3_000,
        entrance_lines: 100,
        triple_samples: 300,
        permutations: 199,
        level: 0.01,
        seed: 7,
    };
    let out = run_strong_duality_check(&exp).unwrap();
    assert_passed(&out.report);
}
