//! Small statistics toolbox: compensated sums, mean and standard error,
//! Kolmogorov-Smirnov, Anderson-Darling and energy-distance tests, and the
//! Wasserstein-1 distance of atomic laws on the line.

use rand::seq::SliceRandom;
use rand::Rng;

/// Neumaier-compensated running sum. The result depends on the order of
/// the additions, which callers fix.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Sample mean and its standard error (`sd / sqrt(n)`), summing in order.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().copied().collect::<NeumaierSum>().value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<NeumaierSum>()
        .value();
    (mean, (ss / (n as f64 - 1.0) / n as f64).sqrt())
}

/// Outcome of a goodness-of-fit test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, accurate for small arguments.
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let s: f64 = (0..20).map(|k| y.powi((2 * k + 1) * (2 * k + 1))).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS test of values against the uniform law on `[0, 1]`.
/// Discrete laws can be tested after a randomized probability integral
/// transform `F(x-) + V (F(x) - F(x-))`.
pub fn ks_uniform(values: &[f64]) -> TestResult {
    let mut u: Vec<f64> = values.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in u.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / n - x).max(x - i as f64 / n);
    }
    let en = n.sqrt();
    TestResult {
        statistic: d,
        p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d),
    }
}

/// Two-sample KS test. Ties are broken by independent uniform keys, which
/// keeps the null distribution continuous for laws with atoms.
pub fn ks_two_sample<R: Rng + ?Sized>(a: &[f64], b: &[f64], rng: &mut R) -> TestResult {
    let mut pooled: Vec<(f64, f64, bool)> = Vec::with_capacity(a.len() + b.len());
    for &x in a {
        pooled.push((x, rng.random::<f64>(), true));
    }
    for &x in b {
        pooled.push((x, rng.random::<f64>(), false));
    }
    pooled.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ca, mut cb) = (0.0, 0.0);
    let mut d: f64 = 0.0;
    for (_, _, from_a) in pooled {
        if from_a {
            ca += 1.0;
        } else {
            cb += 1.0;
        }
        d = d.max((ca / na - cb / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    TestResult {
        statistic: d,
        p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d),
    }
}

/// Limiting distribution function of the Anderson-Darling statistic
/// (Marsaglia and Marsaglia, 2004).
pub fn anderson_darling_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < 2.0 {
        (-1.2337141 / z).exp() / z.sqrt()
            * (2.00012
                + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z)
                    * z)
    } else {
        (-(1.0776
            - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z)
            .exp())
        .exp()
    }
}

/// Anderson-Darling test of values against the uniform law on `[0, 1]`.
pub fn anderson_darling_uniform(values: &[f64]) -> TestResult {
    let mut u: Vec<f64> = values
        .iter()
        .map(|x| x.clamp(1e-300, 1.0 - 1e-16))
        .collect();
    u.sort_by(f64::total_cmp);
    let n = u.len();
    let nf = n as f64;
    let mut s = NeumaierSum::default();
    for i in 0..n {
        let k = (2 * i + 1) as f64;
        s.add(k * (u[i].ln() + (1.0 - u[n - 1 - i]).ln()));
    }
    let a2 = -nf - s.value() / nf;
    TestResult {
        statistic: a2,
        p_value: (1.0 - anderson_darling_cdf(a2)).clamp(0.0, 1.0),
    }
}

fn euclid(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Energy-distance two-sample permutation test on vectors of equal length.
/// Returns the statistic `2E|X-Y| - E|X-X'| - E|Y-Y'|` and the permutation
/// p-value `(1 + #{perm >= observed}) / (1 + permutations)`.
pub fn energy_test<R: Rng + ?Sized>(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    permutations: usize,
    rng: &mut R,
) -> TestResult {
    let pooled: Vec<&[f64]> = a.iter().chain(b).map(|v| v.as_slice()).collect();
    let m = pooled.len();
    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let d = euclid(pooled[i], pooled[j]);
            dist[i * m + j] = d;
            dist[j * m + i] = d;
        }
    }
    let na = a.len();
    let stat = |labels: &[usize]| -> f64 {
        let (x, y) = labels.split_at(na);
        let mean = |p: &[usize], q: &[usize]| -> f64 {
            let mut s = NeumaierSum::default();
            for &i in p {
                for &j in q {
                    s.add(dist[i * m + j]);
                }
            }
            s.value() / (p.len() * q.len()) as f64
        };
        2.0 * mean(x, y) - mean(x, x) - mean(y, y)
    };
    let mut labels: Vec<usize> = (0..m).collect();
    let observed = stat(&labels);
    let mut exceed = 0usize;
    for _ in 0..permutations {
        labels.shuffle(rng);
        if stat(&labels) >= observed - 1e-12 {
            exceed += 1;
        }
    }
    TestResult {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + permutations) as f64,
    }
}

/// Wasserstein-1 distance of two probability laws on the line given as
/// `(value, weight)` atoms (weights are normalized here).
pub fn wasserstein1(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let ta: f64 = a.iter().map(|x| x.1).sum();
    let tb: f64 = b.iter().map(|x| x.1).sum();
    let mut events: Vec<(f64, f64)> = a
        .iter()
        .map(|&(x, w)| (x, w / ta))
        .chain(b.iter().map(|&(x, w)| (x, -w / tb)))
        .collect();
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut diff = 0.0;
    let mut total = NeumaierSum::default();
    for w in events.windows(2) {
        diff += w[0].1;
        total.add(diff.abs() * (w[1].0 - w[0].0));
    }
    total.value()
}

/// Empirical version of [`wasserstein1`] for two samples.
pub fn wasserstein1_samples(a: &[f64], b: &[f64]) -> f64 {
    let wa: Vec<(f64, f64)> = a.iter().map(|&x| (x, 1.0)).collect();
    let wb: Vec<(f64, f64)> = b.iter().map(|&x| (x, 1.0)).collect();
    wasserstein1(&wa, &wb)
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes `erfcc`, relative error
/// below 1.2e-7).
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}
