mod common;

use std::collections::BTreeMap;

use common::*;
use genealab_core::{
    evaluate_polynomial, isomorphic, DistanceKernel, EvalMode, EvalOptions, GenealogyError, Mark,
    MarkFactor, MarkedSpace, PolynomialSpec, Space,
};
use proptest::prelude::*;
use rand::Rng;

fn exact(space: &Space, poly: &PolynomialSpec<f64>) -> f64 {
    evaluate_polynomial(space, poly, &EvalOptions::exact(), &mut rng(0))
        .unwrap()
        .value
}

#[test]
fn constant_polynomials() {
    let s = random_space(6, &mut rng(1));
    for order in 1..4 {
        let p = PolynomialSpec::constant(order, 0.3).unwrap();
        assert!((exact(&s, &p) - 0.3).abs() < 1e-12);
    }
    let raw = evaluate_polynomial(
        &s,
        &PolynomialSpec::constant(1, 1.0).unwrap(),
        &EvalOptions::exact().raw(),
        &mut rng(0),
    );
    assert_eq!(raw.unwrap().value, s.total_mass());
    let zero = evaluate_polynomial(
        &Space::zero(),
        &PolynomialSpec::constant(1, 1.0).unwrap(),
        &EvalOptions::exact().raw(),
        &mut rng(0),
    );
    assert_eq!(zero.unwrap().value, 0.0);
    let err = evaluate_polynomial(
        &Space::zero(),
        &PolynomialSpec::constant(1, 1.0).unwrap(),
        &EvalOptions::exact(),
        &mut rng(0),
    );
    assert_eq!(err.unwrap_err(), GenealogyError::EmptySpace);
}

#[test]
fn two_leaf_exponential_closed_form() {
    for &(m, d, lambda) in &[(0.3, 2.0, 0.5), (0.5, 6.0, 0.1), (0.9, 1.0, 2.0)] {
        let s = pair(m, 1.0 - m, d);
        let p = PolynomialSpec::new(2, DistanceKernel::exponential_uniform(2, lambda)).unwrap();
        let expect = m * m + (1.0 - m) * (1.0 - m) + 2.0 * m * (1.0 - m) * (-lambda * d).exp();
        assert!((exact(&s, &p) - expect).abs() < 1e-14);
        // The generic enumeration agrees with the tree fast path.
        let q = PolynomialSpec::new(
            2,
            DistanceKernel::custom(move |r: &[f64], _| (-lambda * r[1]).exp()),
        )
        .unwrap();
        let via_custom = evaluate_polynomial(
            &s,
            &q.with_marks(MarkFactor::custom(|_| 1.0)),
            &EvalOptions::exact(),
            &mut rng(0),
        );
        assert!(
            via_custom.is_err(),
            "unmarked space must reject a mark factor"
        );
    }
}

#[test]
fn monte_carlo_agrees_with_exact_enumeration() {
    let s = random_space(8, &mut rng(2));
    let rates = vec![0.2, 0.5, 0.9];
    let p = PolynomialSpec::new(3, DistanceKernel::Exponential(rates)).unwrap();
    let e = exact(&s, &p);
    let mc = evaluate_polynomial(&s, &p, &EvalOptions::monte_carlo(100_000), &mut rng(3)).unwrap();
    assert!(
        (mc.value - e).abs() <= 3.0 * mc.std_error,
        "{} vs {e} (se {})",
        mc.value,
        mc.std_error
    );
    assert_eq!(mc.samples, 100_000);
}

/// Oracle: sum over ordered tuples written out directly.
fn brute(space: &Space, n: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let k = space.leaf_count();
    let total = space.total_mass();
    let mut idx = vec![0usize; n];
    let mut sum = 0.0;
    loop {
        let mut w = 1.0;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            w *= space.leaf_mass(idx[i]) / total;
            for j in 0..n {
                d[i * n + j] = space.distance(idx[i], idx[j]);
            }
        }
        sum += w * f(&d);
        let mut pos = 0;
        loop {
            if pos == n {
                return sum;
            }
            idx[pos] += 1;
            if idx[pos] < k {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[test]
fn budget_and_auto_mode() {
    let s = random_space(30, &mut rng(4));
    let p = PolynomialSpec::new(3, DistanceKernel::threshold_uniform(3, 2.0)).unwrap();
    let tight = EvalOptions {
        budget: 1000,
        ..EvalOptions::exact()
    };
    assert!(matches!(
        evaluate_polynomial(&s, &p, &tight, &mut rng(0)),
        Err(GenealogyError::BudgetExceeded { .. })
    ));
    let auto = EvalOptions {
        mode: EvalMode::Auto(5000),
        ..tight
    };
    let est = evaluate_polynomial(&s, &p, &auto, &mut rng(0)).unwrap();
    assert_eq!(est.samples, 5000);
    let wide = EvalOptions {
        mode: EvalMode::Auto(5000),
        ..EvalOptions::exact()
    };
    assert_eq!(
        evaluate_polynomial(&s, &p, &wide, &mut rng(0))
            .unwrap()
            .samples,
        0
    );
}

#[test]
fn truncated_and_tent_kernels() {
    let s = pair(0.5, 0.5, 6.0);
    let p = PolynomialSpec::new(2, DistanceKernel::exponential_uniform(2, 0.5))
        .unwrap()
        .truncated(1.0);
    assert!((exact(&s, &p) - (0.5 + 0.5 * (-1.0f64).exp())).abs() < 1e-15);
    let tent = PolynomialSpec::new(2, DistanceKernel::Tent(4.0)).unwrap();
    assert!((exact(&s, &tent) - (0.5 + 0.5 * 0.25)).abs() < 1e-15);
}

#[test]
fn marked_polynomial_uses_types() {
    let s = MarkedSpace::star(&[0.25, 0.75], &[Mark::new(0, 1), Mark::new(0, 0)], 2.0).unwrap();
    let p = PolynomialSpec::constant(2, 1.0)
        .unwrap()
        .with_marks(MarkFactor::all_of_type(1));
    let v = evaluate_polynomial(&s, &p, &EvalOptions::exact(), &mut rng(0))
        .unwrap()
        .value;
    assert!((v - 0.0625).abs() < 1e-15);
}

#[test]
fn kernel_specs_are_validated() {
    assert!(PolynomialSpec::new(0, DistanceKernel::Constant(1.0)).is_err());
    assert!(PolynomialSpec::new(3, DistanceKernel::Exponential(vec![1.0])).is_err());
    assert!(PolynomialSpec::new(2, DistanceKernel::Exponential(vec![-1.0])).is_err());
    assert!(PolynomialSpec::new(2, DistanceKernel::Tent(0.0)).is_err());
}

/// Exact law of the sampled `n`-point matrix (upper triangle) under the
/// normalized measure.
fn matrix_law(space: &Space, n: usize) -> BTreeMap<Vec<u64>, f64> {
    let k = space.leaf_count();
    let total = space.total_mass();
    let mut law = BTreeMap::new();
    let mut idx = vec![0usize; n];
    loop {
        let mut w = 1.0;
        let mut key = Vec::new();
        for i in 0..n {
            w *= space.leaf_mass(idx[i]) / total;
            for j in i + 1..n {
                key.push(space.distance(idx[i], idx[j]).to_bits());
            }
        }
        *law.entry(key).or_insert(0.0) += w;
        let mut pos = 0;
        loop {
            if pos == n {
                return law;
            }
            idx[pos] += 1;
            if idx[pos] < k {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[test]
fn threshold_polynomials_separate_small_spaces() {
    // For non-isomorphic normalized spaces with at most four leaves, some
    // threshold polynomial of order at most four takes different values.
    // A separating threshold exists at a support point of either matrix
    // law (a minimal point of the difference measure), so the search below
    // is complete.
    let mut r = rng(5);
    let mut checked = 0;
    while checked < 60 {
        let (na, nb) = (r.random_range(1..=4), r.random_range(1..=4));
        let a = random_space(na, &mut r).reduced();
        let b = random_space(nb, &mut r).reduced();
        let (a, b) = (
            a.scale_masses(1.0 / a.total_mass()).unwrap(),
            b.scale_masses(1.0 / b.total_mass()).unwrap(),
        );
        if isomorphic(&a, &b) {
            continue;
        }
        checked += 1;
        let mut found = false;
        'orders: for n in 2..=4 {
            let (la, lb) = (matrix_law(&a, n), matrix_law(&b, n));
            for key in la.keys().chain(lb.keys()) {
                let caps: Vec<f64> = key.iter().map(|&x| f64::from_bits(x)).collect();
                let p = PolynomialSpec::new(n, DistanceKernel::Threshold(caps.clone())).unwrap();
                let (va, vb) = (exact(&a, &p), exact(&b, &p));
                let oracle = |s: &Space| {
                    brute(s, n, |d| {
                        let mut q = 0;
                        let mut ok = true;
                        for i in 0..n {
                            for j in i + 1..n {
                                ok &= d[i * n + j] <= caps[q];
                                q += 1;
                            }
                        }
                        if ok {
                            1.0
                        } else {
                            0.0
                        }
                    })
                };
                assert!((va - oracle(&a)).abs() < 1e-12);
                if (va - vb).abs() > 1e-9 {
                    found = true;
                    break 'orders;
                }
            }
        }
        assert!(
            found,
            "no separating polynomial for\n{}\n{}",
            genealab_core::to_json(&a),
            genealab_core::to_json(&b)
        );
    }
}

proptest! {
    #[test]
    fn normalized_values_stay_in_the_unit_interval(seed in any::<u64>(), n in 1usize..8, order in 1usize..4) {
        let mut r = rng(seed);
        let s = random_space(n, &mut r);
        for kernel in [
            DistanceKernel::exponential_uniform(order, 0.7),
            DistanceKernel::threshold_uniform(order, 1.5),
            DistanceKernel::Tent(2.0),
        ] {
            let p = PolynomialSpec::new(order, kernel).unwrap();
            let v = exact(&s, &p);
            prop_assert!((-1.0..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn exact_matches_direct_summation(seed in any::<u64>(), n in 1usize..6) {
        let s = random_space(n, &mut rng(seed));
        let p = PolynomialSpec::new(3, DistanceKernel::Exponential(vec![0.3, 0.1, 0.7])).unwrap();
        let o = brute(&s, 3, |d| (-(0.3 * d[1] + 0.1 * d[2] + 0.7 * d[5])).exp());
        prop_assert!((exact(&s, &p) - o).abs() < 1e-12);
        let p2 = PolynomialSpec::new(2, DistanceKernel::exponential_uniform(2, 0.4)).unwrap();
        let o2 = brute(&s, 2, |d| (-0.4 * d[1]).exp());
        prop_assert!((exact(&s, &p2) - o2).abs() < 1e-12);
    }
}
