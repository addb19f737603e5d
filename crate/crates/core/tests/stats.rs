mod common;

use common::rng;
use genealab_core::stats::{
    anderson_darling_uniform, energy_test, kolmogorov_q, ks_two_sample, ks_uniform, mean_and_se,
    normal_cdf, wasserstein1, NeumaierSum,
};
use rand::Rng;

#[test]
fn kolmogorov_tail_values() {
    // Tabulated: P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01.
    assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
    assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
    assert!((kolmogorov_q(0.5) - 0.9639).abs() < 1e-4);
    // Both branches agree where they meet.
    assert!((kolmogorov_q(1.1799) - kolmogorov_q(1.1801)).abs() < 1e-3);
}

#[test]
fn anderson_darling_critical_values() {
    // Asymptotic 5% and 1% points of A^2: 2.492 and 3.857.
    let cdf = |z: f64| 1.0 - genealab_core::stats::anderson_darling_cdf(z);
    assert!((cdf(2.492) - 0.05).abs() < 1e-3);
    assert!((cdf(3.857) - 0.01).abs() < 1e-3);
}

#[test]
fn uniform_samples_pass_and_shifted_fail() {
    let mut r = rng(1);
    let u: Vec<f64> = (0..5000).map(|_| r.random()).collect();
    assert!(ks_uniform(&u).p_value > 0.01);
    assert!(anderson_darling_uniform(&u).p_value > 0.01);
    let v: Vec<f64> = u.iter().map(|x| x * x).collect();
    assert!(ks_uniform(&v).p_value < 1e-6);
    assert!(anderson_darling_uniform(&v).p_value < 1e-6);
}

#[test]
fn two_sample_ks_with_atoms() {
    let mut r = rng(2);
    let coin = |r: &mut rand_chacha::ChaCha8Rng| if r.random_bool(0.5) { 2.0 } else { 12.0 };
    let mut ps = Vec::new();
    for _ in 0..200 {
        let a: Vec<f64> = (0..300).map(|_| coin(&mut r)).collect();
        let b: Vec<f64> = (0..300).map(|_| coin(&mut r)).collect();
        ps.push(ks_two_sample(&a, &b, &mut r).p_value);
    }
    // Randomized tie-breaking keeps p-values close to uniform under the null.
    assert!(anderson_darling_uniform(&ps).p_value > 0.001);
    let a: Vec<f64> = (0..300).map(|_| coin(&mut r)).collect();
    let b: Vec<f64> = (0..300)
        .map(|_| if r.random_bool(0.7) { 2.0 } else { 12.0 })
        .collect();
    assert!(ks_two_sample(&a, &b, &mut r).p_value < 1e-3);
}

#[test]
fn energy_test_detects_shift() {
    let mut r = rng(3);
    let a: Vec<Vec<f64>> = (0..150)
        .map(|_| vec![r.random(), r.random(), r.random()])
        .collect();
    let b: Vec<Vec<f64>> = (0..150)
        .map(|_| vec![r.random(), r.random(), r.random()])
        .collect();
    let c: Vec<Vec<f64>> = (0..150)
        .map(|_| vec![r.random::<f64>() + 0.4, r.random(), r.random()])
        .collect();
    assert!(energy_test(&a, &b, 199, &mut r).p_value > 0.01);
    assert!(energy_test(&a, &c, 199, &mut r).p_value <= 0.01);
}

#[test]
fn wasserstein_on_atoms() {
    assert!(
        (wasserstein1(&[(0.0, 0.5), (4.0, 0.5)], &[(0.0, 0.5), (6.0, 0.5)]) - 1.0).abs() < 1e-15
    );
    assert_eq!(wasserstein1(&[(1.0, 1.0)], &[(1.0, 2.0)]), 0.0);
    assert!((wasserstein1(&[(0.0, 1.0)], &[(3.0, 1.0)]) - 3.0).abs() < 1e-15);
}

#[test]
fn sums_and_moments() {
    let mut s = NeumaierSum::default();
    for v in [1e16, 1.0, -1e16] {
        s.add(v);
    }
    assert_eq!(s.value(), 1.0);
    let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    assert!((normal_cdf(1.959964) - 0.975).abs() < 1e-6);
}
