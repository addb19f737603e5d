mod common;

use common::{assert_mean, assert_passed, rng};
use genealab_core::{from_distance_matrix_with, Mark};
use genealab_sim::{type_count_run, JumpKind, MoranConfig, StochasticMatrix, TypeJump, TypePath};
use genealab_verify::girsanov::{
    effective_sample_size, path_weight_from_events, reweighted_expectation, weight_csv,
};
use genealab_verify::{
    exact_small_population_check, path_weight, psi, run_girsanov_check, Compensator,
    GirsanovConfig, GirsanovExperiment, PairFitness, Tolerance, Verdict, VerifyError, WeightMethod,
};
use nalgebra::{DMatrix, DVector};

fn two_types(n: usize, d: f64, theta: f64, ones: usize) -> MoranConfig {
    let marks: Vec<Mark> = (0..n).map(|i| Mark::new(0, u32::from(i < ones))).collect();
    MoranConfig::neutral(n, d)
        .with_individuals(marks)
        .with_mutation(theta, StochasticMatrix::flip(0.5, 0.5).unwrap())
        .with_ancestry(false)
}

fn halves() -> genealab_core::MarkedSpace {
    let marks = [Mark::new(0, 0), Mark::new(0, 1)];
    from_distance_matrix_with(&[0.0, 2.0, 2.0, 0.0], &[0.5, 0.5], &marks, false).unwrap()
}

#[test]
fn psi_integrates_the_pair_fitness() {
    let cfg = GirsanovConfig::new(0.5, 2.0, vec![1.0, 0.0]);
    assert!((psi(&halves(), &cfg).unwrap() - 0.25 * 0.5).abs() < 1e-15);
    let differ = cfg
        .clone()
        .with_fitness(PairFitness::Pairwise(vec![vec![0.0, 1.0], vec![1.0, 0.0]]));
    assert!((psi(&halves(), &differ).unwrap() - 0.25 * 0.5).abs() < 1e-15);
    let single = genealab_core::MarkedSpace::single_leaf(1.0, Mark::new(0, 0)).unwrap();
    let flat = GirsanovConfig::new(0.5, 1.0, vec![0.3]);
    assert!((psi(&single, &flat).unwrap() - 0.15).abs() < 1e-15);
}

#[test]
fn zero_selection_and_constant_fitness_give_weight_one() {
    let moran = two_types(30, 1.0, 0.4, 10);
    for r in 0..20 {
        let path = type_count_run(&moran, 1.0, &mut rng(r)).unwrap();
        let off = path_weight(&path, &GirsanovConfig::new(0.0, 1.0, vec![1.0, 0.0])).unwrap();
        assert_eq!(off.weight, 1.0);
        let flat = path_weight(&path, &GirsanovConfig::new(0.7, 1.0, vec![0.6, 0.6])).unwrap();
        assert_eq!(flat.weight, 1.0);
        assert_eq!(flat.quadratic_variation, 0.0);
    }
}

/// Selective count chain of two types written out directly.
fn selective_oracle(
    n: usize,
    d: f64,
    theta: f64,
    alpha: f64,
    chi: [f64; 2],
    ones: usize,
    t: f64,
) -> f64 {
    // State k = number of type-1 individuals.
    let m = n + 1;
    let mut q = DMatrix::<f64>::zeros(m, m);
    for k in 0..=n {
        let (n1, n0) = (k as f64, (n - k) as f64);
        let up = (d / 2.0 + alpha * chi[1] / n as f64) * n1 * n0 + theta * 0.5 * n0;
        let down = (d / 2.0 + alpha * chi[0] / n as f64) * n1 * n0 + theta * 0.5 * n1;
        if k < n {
            q[(k, k + 1)] += up;
            q[(k, k)] -= up;
        }
        if k > 0 {
            q[(k, k - 1)] += down;
            q[(k, k)] -= down;
        }
    }
    let f = DVector::from_iterator(m, (0..=n).map(|k| k as f64 / n as f64));
    ((q * t).exp() * f)[ones]
}

#[test]
fn two_individual_tilted_chain_matches_selection_exactly() {
    let (alpha, chi) = (0.5, vec![0.0, 1.0]);
    let moran = two_types(2, 1.0, 0.3, 1).with_selection(alpha, chi.clone());
    let check = exact_small_population_check(&moran, &[1, 1], 1.0, 1).unwrap();
    println!("{}", check.summary());
    assert_eq!(check.verdict(), Verdict::Pass);
    let oracle = selective_oracle(2, 1.0, 0.3, alpha, [0.0, 1.0], 1, 1.0);
    let Some(rhs) = (match &check {
        genealab_verify::Check::Exact { target, .. } => Some(*target),
        _ => None,
    }) else {
        panic!("exact check expected")
    };
    assert!((rhs - oracle).abs() < 1e-9, "{rhs} vs {oracle}");
}

#[test]
fn exact_jump_weights_reproduce_the_selective_chain() {
    let (n, d, theta, alpha) = (4, 1.0, 0.3, 0.8);
    let chi = [0.2, 1.0];
    let neutral = two_types(n, d, theta, 1);
    let cfg = GirsanovConfig::new(alpha, d, chi.to_vec()).with_method(WeightMethod::ExactJump);
    let reps = 40_000;
    let mut weights = Vec::with_capacity(reps);
    let mut products = Vec::with_capacity(reps);
    for r in 0..reps as u64 {
        let path = type_count_run(&neutral, 1.0, &mut rng(r)).unwrap();
        let w = path_weight(&path, &cfg).unwrap().weight;
        weights.push(w);
        products.push(w * path.final_frequency(1));
    }
    assert_mean(&weights, 1.0, 0.0, "mean likelihood ratio");
    let oracle = selective_oracle(n, d, theta, alpha, chi, 1, 1.0);
    assert_mean(&products, oracle, 0.0, "reweighted frequency");
    let direct = selective_oracle(n, d, theta, 0.0, chi, 1, 1.0);
    assert!(
        (oracle - direct).abs() > 0.02,
        "selection should move the frequency"
    );
}

#[test]
fn small_population_reweighting_passes_with_one_compensator() {
    let moran = two_types(20, 1.0, 0.2, 10).with_selection(0.5, vec![0.0, 1.0]);
    let exp = GirsanovExperiment {
        moran,
        horizon: 1.0,
        gamma: None,
        fit_type: 1,
        neutral_reps: 20_000,
        selective_reps: 20_000,
        checkpoints: vec![5_000],
        tolerance: Tolerance::finite_size(20),
        ess_floor: 100.0,
        seed: 3,
    };
    let out = run_girsanov_check(&exp).unwrap();
    assert_passed(&out.report);
    assert!(out
        .report
        .notes
        .iter()
        .any(|n| n.starts_with("compensator: ")));
    for name in ["M_T", "QV", "weight"] {
        assert!(out.series.iter().any(|s| s.name == name));
    }
}

#[test]
fn weights_are_read_from_event_logs() {
    let moran = two_types(10, 1.0, 0.5, 5)
        .with_events(true)
        .with_ancestry(true);
    let state = genealab_sim::moran_run(&moran, 0.5, &mut rng(1)).unwrap();
    let cfg = GirsanovConfig::new(0.4, 1.0, vec![0.0, 1.0]);
    let log = state.events.as_deref().unwrap();
    let from_log = path_weight_from_events(log, &cfg).unwrap();
    let path = TypePath::from_events(log).unwrap();
    assert_eq!(from_log, path_weight(&path, &cfg).unwrap());
    let csv = weight_csv(&[from_log]);
    assert!(csv.starts_with("replicate,M_T,QV,weight\n0,"));
}

#[test]
fn malformed_paths_are_rejected() {
    let moran = two_types(10, 1.0, 0.5, 5);
    let cfg = GirsanovConfig::new(0.4, 1.0, vec![0.0, 1.0]);
    let path = type_count_run(&moran, 1.0, &mut rng(2)).unwrap();
    assert!(path.jumps.len() > 2);

    let mut shuffled = path.clone();
    shuffled.jumps.swap(0, 1);
    shuffled.jumps.swap(1, 2);
    if shuffled.jumps[0].t < shuffled.jumps[1].t {
        shuffled.jumps[0].t = shuffled.jumps[1].t + 1e-3;
    }
    assert!(matches!(
        path_weight(&shuffled, &cfg),
        Err(VerifyError::LogGap(_))
    ));

    let mut late = path.clone();
    late.jumps.push(TypeJump {
        t: 2.0,
        from: 0,
        to: 1,
        kind: JumpKind::Replace,
    });
    assert!(matches!(
        path_weight(&late, &cfg),
        Err(VerifyError::LogGap(_))
    ));

    let selective = type_count_run(
        &moran.clone().with_selection(0.3, vec![0.0, 1.0]),
        1.0,
        &mut rng(3),
    )
    .unwrap();
    assert!(matches!(
        path_weight(&selective, &cfg),
        Err(VerifyError::ParameterMismatch(_))
    ));
    let three = GirsanovConfig::new(0.4, 1.0, vec![0.0, 1.0, 0.5]);
    assert!(matches!(
        path_weight(&path, &three),
        Err(VerifyError::ParameterMismatch(_))
    ));
    let bad = GirsanovConfig::new(0.4, 1.0, vec![0.0, 1.5]);
    assert!(matches!(
        path_weight(&path, &bad),
        Err(VerifyError::InvalidConfig(_))
    ));
}

#[test]
fn degenerate_weights_fail_the_effective_sample_size_floor() {
    let mut weights = vec![1e-9; 1000];
    weights[0] = 1000.0;
    assert!(effective_sample_size(&weights) < 2.0);
    let values = vec![1.0; 1000];
    match reweighted_expectation(&values, &weights, 100.0) {
        Err(VerifyError::EffectiveSampleSizeTooLow { ess, floor }) => {
            assert!(ess < 2.0);
            assert_eq!(floor, 100.0);
        }
        other => panic!("expected an ESS error, got {other:?}"),
    }
    let even = vec![1.0; 1000];
    assert_eq!(effective_sample_size(&even), 1000.0);
    let e = reweighted_expectation(&values, &even, 100.0).unwrap();
    assert_eq!(e.mean, 1.0);
}

#[test]
fn compensator_names_serialize_in_snake_case() {
    let cfg =
        GirsanovConfig::new(0.5, 1.0, vec![0.0, 1.0]).with_compensator(Compensator::Selective);
    let text = serde_json::to_string(&cfg).unwrap();
    assert!(text.contains("\"selective\""));
    let back: GirsanovConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);
}
