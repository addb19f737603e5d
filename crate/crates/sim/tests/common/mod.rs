#![allow(dead_code)]

use genealab_core::stats::{ks_uniform, mean_and_se, TestResult};
use genealab_sim::rng::{domain, stream, SimRng};
use rand::Rng;

pub fn rng(index: u64) -> SimRng {
    stream(20_240_611, domain::TEST, index)
}

/// Asserts `|mean - target| <= 3 se + bias`.
pub fn assert_mean(values: &[f64], target: f64, bias: f64, what: &str) {
    let (m, se) = mean_and_se(values);
    assert!(
        (m - target).abs() <= 3.0 * se + bias,
        "{what}: mean {m} +- {se} vs {target} (bias {bias})"
    );
}

/// KS test against a distribution function with possible atoms, through
/// the randomized probability integral transform. `cdf_left(x)` is `F(x-)`.
pub fn ks_against(
    values: &[f64],
    cdf: impl Fn(f64) -> f64,
    cdf_left: impl Fn(f64) -> f64,
    rng: &mut impl Rng,
) -> TestResult {
    let u: Vec<f64> = values
        .iter()
        .map(|&x| {
            let (lo, hi) = (cdf_left(x), cdf(x));
            lo + rng.random::<f64>() * (hi - lo)
        })
        .collect();
    ks_uniform(&u)
}

/// `exp(t A) v` for a small dense matrix, by scaling and squaring of the
/// Taylor series.
pub fn expm_apply(a: &[Vec<f64>], t: f64, v: &[f64]) -> Vec<f64> {
    let n = a.len();
    let norm: f64 = a
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let h = t / 2f64.powi(squarings);
    let mul = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum())
                    .collect()
            })
            .collect()
    };
    let mut term: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut sum = term.clone();
    let ah: Vec<Vec<f64>> = a
        .iter()
        .map(|r| r.iter().map(|x| x * h).collect())
        .collect();
    for k in 1..30 {
        term = mul(&term, &ah)
            .into_iter()
            .map(|r| r.into_iter().map(|x| x / k as f64).collect())
            .collect();
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    (0..n)
        .map(|i| (0..n).map(|j| sum[i][j] * v[j]).sum())
        .collect()
}

/// Runge-Kutta integration of `x' = A x` for large sparse-ish systems.
pub fn rk4(a: &dyn Fn(&[f64]) -> Vec<f64>, x0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let mut x = x0.to_vec();
    let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        x.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    for _ in 0..steps {
        let k1 = a(&x);
        let k2 = a(&axpy(&x, &k1, h / 2.0));
        let k3 = a(&axpy(&x, &k2, h / 2.0));
        let k4 = a(&axpy(&x, &k3, h));
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}
