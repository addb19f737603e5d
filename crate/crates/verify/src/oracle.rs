//! Closed forms and small exact chains used as reference values.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VerifyError};

/// `E[exp(-lambda r)]` for the pair distance `r` of a population started
/// from a single ancestor and resampling at pair rate `d` for time `t`:
/// `(d + 2 lambda exp(-(d + 2 lambda) t)) / (d + 2 lambda)`.
pub fn pair_laplace(d: f64, lambda: f64, t: f64) -> f64 {
    let s = d + 2.0 * lambda;
    (d + 2.0 * lambda * (-s * t).exp()) / s
}

/// Stationary `E[exp(-lambda r)] = d / (d + 2 lambda)`.
pub fn stationary_pair_laplace(d: f64, lambda: f64) -> f64 {
    d / (d + 2.0 * lambda)
}

/// Two dual lines on two sites: `E[exp(-lambda r)]` at backward time `t`
/// when the lines start together (`[0]`) or apart (`[1]`). Lines hop at
/// rate `migration * hop` each, merge at rate `d` when together, and the
/// ancestors sit at distance 0.
pub fn two_site_pair_laplace(d: f64, migration: f64, hop: f64, lambda: f64, t: f64) -> [f64; 2] {
    let m = 2.0 * migration * hop;
    let k = 2.0 * lambda;
    let q = DMatrix::from_row_slice(3, 3, &[-m - d - k, m, d, m, -m - k, 0.0, 0.0, 0.0, 0.0]);
    let v = (q * t).exp() * DVector::from_element(3, 1.0);
    [v[0], v[1]]
}

/// `E[sum over ordered distinct pairs of exp(-lambda r_ij)] / K^2` for
/// critical binary branching with `count` particles of mass `1/K` at time
/// 0, all at distance 0, each splitting or dying at rate `b K / 2`.
///
/// Solves the linear equations for `p_c = P(C_t = c)` and
/// `a_c = E[S_t; C_t = c]` on a count range widened until the value is
/// stable to 1e-13.
pub fn branching_pair_moment(
    granularity: usize,
    count: usize,
    b: f64,
    lambda: f64,
    t: f64,
) -> Result<f64> {
    if granularity == 0 || count == 0 {
        return Err(VerifyError::InvalidConfig(
            "need K >= 1 and at least one particle".into(),
        ));
    }
    let mut cap = 2 * count + 40;
    let mut last = moment_truncated(granularity, count, b, lambda, t, cap);
    loop {
        cap *= 2;
        let next = moment_truncated(granularity, count, b, lambda, t, cap);
        if (next - last).abs() < 1e-13 || cap > 800 {
            return Ok(next);
        }
        last = next;
    }
}

fn moment_truncated(
    granularity: usize,
    count: usize,
    b: f64,
    lambda: f64,
    t: f64,
    cap: usize,
) -> f64 {
    let k = granularity as f64;
    let half = b * k / 2.0;
    let m = cap + 1;
    // Unknowns: p_0..p_cap then a_0..a_cap.
    let mut g = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for c in 0..m {
        let cf = c as f64;
        let (p, a) = (c, m + c);
        let births = if c < cap { half * cf } else { 0.0 };
        let deaths = half * cf;
        g[(p, p)] -= births + deaths;
        g[(a, a)] -= births + deaths + 2.0 * lambda;
        if c < cap {
            // Split of one of c particles: c -> c + 1.
            g[(p + 1, p)] += births;
            g[(a + 1, a)] += half * (cf + 2.0);
            g[(a + 1, p)] += half * 2.0 * cf;
        }
        if c > 0 {
            g[(p - 1, p)] += deaths;
            g[(a - 1, a)] += half * (cf - 2.0);
        }
    }
    let mut x0 = DVector::<f64>::zeros(2 * m);
    x0[count.min(cap)] = 1.0;
    x0[m + count.min(cap)] = (count * (count - 1)) as f64;
    let x = (g * t).exp() * x0;
    (0..m).map(|c| x[m + c]).sum::<f64>() / (k * k)
}
