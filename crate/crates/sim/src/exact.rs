//! Exact expectations of the dual for small samples, by matrix exponential
//! over integer partitions.
//!
//! For a single-ancestor initial state and the exponential kernel
//! `phi = exp(-lambda * sum_{i<j} r_ij)`, the duality function depends on
//! the dual only through the block sizes: every pair of lines in distinct
//! blocks contributes `2 lambda` per unit time, and the terminal factor
//! depends on the number of blocks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SimError};

/// Factor applied to the `k` blocks left at the horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Terminal {
    /// `M_0^k`: `k` independent draws from a measure of mass `M_0`.
    Power(f64),
    /// `c (c - 1) ... (c - k + 1) / K^k`: `k` distinct particles out of
    /// `c` particles of mass `1/K`.
    FallingFactorial { count: usize, granularity: usize },
}

impl Terminal {
    pub fn value(&self, k: usize) -> f64 {
        match *self {
            Terminal::Power(m) => m.powi(k as i32),
            Terminal::FallingFactorial { count, granularity } => (0..k)
                .map(|i| (count as f64 - i as f64) / granularity as f64)
                .product(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactDual {
    pub n: usize,
    pub rate: f64,
    pub feynman_kac: bool,
    pub lambda: f64,
    pub horizon: f64,
    pub terminal: Terminal,
}

/// Integer partitions of `n`, parts in decreasing order.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=left.min(max)).rev() {
            cur.push(p);
            rec(left - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

fn choose2(k: usize) -> f64 {
    (k * k.saturating_sub(1)) as f64 / 2.0
}

/// `E[ terminal(k_T) exp(beta_T) exp(-lambda sum_{i<j} r_ij) ]` starting
/// from `n` singleton blocks, where `beta` is only accumulated in
/// Feynman-Kac mode.
pub fn exact_dual_expectation(spec: &ExactDual) -> Result<f64> {
    if spec.n == 0 || spec.n > 12 {
        return Err(SimError::InvalidConfig(
            "exact dual supports 1 <= n <= 12".into(),
        ));
    }
    let states = partitions(spec.n);
    let index = |p: &Vec<usize>| states.iter().position(|q| q == p).expect("partition");
    let m = states.len();
    let mut g = DMatrix::<f64>::zeros(m, m);
    let all = choose2(spec.n);
    for (s, p) in states.iter().enumerate() {
        let k = p.len();
        let cross = all - p.iter().map(|&b| choose2(b)).sum::<f64>();
        let mut diag = -spec.rate * choose2(k) - 2.0 * spec.lambda * cross;
        if spec.feynman_kac {
            diag += spec.rate * choose2(k);
        }
        g[(s, s)] = diag;
        for i in 0..k {
            for j in i + 1..k {
                let mut q: Vec<usize> = p
                    .iter()
                    .enumerate()
                    .filter(|&(x, _)| x != i && x != j)
                    .map(|(_, &b)| b)
                    .collect();
                q.push(p[i] + p[j]);
                q.sort_unstable_by(|a, b| b.cmp(a));
                g[(s, index(&q))] += spec.rate;
            }
        }
    }
    let h = DVector::from_iterator(m, states.iter().map(|p| spec.terminal.value(p.len())));
    let v = (g * spec.horizon).exp() * h;
    Ok(v[index(&vec![1; spec.n])])
}
