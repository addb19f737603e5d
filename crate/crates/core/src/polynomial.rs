//! Polynomials: expectations of a bounded function of the distance matrix
//! (and marks) of `n` points sampled from the space.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{GenealogyError, Result};
use crate::mark::{LeafMark, Mark};
use crate::matrix::DistanceMatrixSample;
use crate::sample::LeafSampler;
use crate::scalar::Scalar;
use crate::space::UltrametricSpace;
use crate::stats::{mean_and_se, NeumaierSum};

type MatrixFn<T> = Arc<dyn Fn(&[T], usize) -> T + Send + Sync>;
type MarkFn<T> = Arc<dyn Fn(&[Mark]) -> T + Send + Sync>;

/// The distance part `phi` of a polynomial. Pair parameters are listed for
/// `k < l` in row-major order of the upper triangle.
#[derive(Clone)]
pub enum DistanceKernel<T> {
    Constant(T),
    /// `exp(-sum_{k<l} lambda_kl r_kl)`.
    Exponential(Vec<T>),
    /// `prod_{k<l} 1[r_kl <= c_kl]`.
    Threshold(Vec<T>),
    /// `prod_{k<l} max(0, 1 - r_kl / 2h)`: vanishes as soon as one pair is
    /// at distance `2h`.
    Tent(T),
    /// Any bounded function of the row-major `n x n` matrix.
    Custom(MatrixFn<T>),
}

impl<T: Scalar> DistanceKernel<T> {
    pub fn exponential_uniform(order: usize, rate: T) -> Self {
        DistanceKernel::Exponential(vec![rate; pairs(order)])
    }

    pub fn threshold_uniform(order: usize, cap: T) -> Self {
        DistanceKernel::Threshold(vec![cap; pairs(order)])
    }

    pub fn custom(f: impl Fn(&[T], usize) -> T + Send + Sync + 'static) -> Self {
        DistanceKernel::Custom(Arc::new(f))
    }

    pub fn evaluate(&self, d: &[T], n: usize) -> T {
        match self {
            DistanceKernel::Constant(c) => *c,
            DistanceKernel::Exponential(rates) => {
                let mut s = T::zero();
                let mut p = 0;
                for k in 0..n {
                    for l in k + 1..n {
                        s = s + rates[p] * d[k * n + l];
                        p += 1;
                    }
                }
                (-s).exp()
            }
            DistanceKernel::Threshold(caps) => {
                let mut p = 0;
                for k in 0..n {
                    for l in k + 1..n {
                        if d[k * n + l] > caps[p] {
                            return T::zero();
                        }
                        p += 1;
                    }
                }
                T::one()
            }
            DistanceKernel::Tent(h) => {
                let scale = *h + *h;
                let mut v = T::one();
                for k in 0..n {
                    for l in k + 1..n {
                        v = v * (T::one() - d[k * n + l] / scale).max(T::zero());
                    }
                }
                v
            }
            DistanceKernel::Custom(f) => f(d, n),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for DistanceKernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKernel::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            DistanceKernel::Exponential(r) => f.debug_tuple("Exponential").field(r).finish(),
            DistanceKernel::Threshold(c) => f.debug_tuple("Threshold").field(c).finish(),
            DistanceKernel::Tent(h) => f.debug_tuple("Tent").field(h).finish(),
            DistanceKernel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// The mark part `xi` of a polynomial, a function of the sampled marks.
#[derive(Clone)]
pub enum MarkFactor<T> {
    None,
    Custom(MarkFn<T>),
}

impl<T: Scalar> MarkFactor<T> {
    pub fn custom(f: impl Fn(&[Mark]) -> T + Send + Sync + 'static) -> Self {
        MarkFactor::Custom(Arc::new(f))
    }

    /// `1` if every sampled individual carries `genotype`.
    pub fn all_of_type(genotype: u32) -> Self {
        Self::custom(move |marks| {
            if marks.iter().all(|m| m.genotype == genotype) {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    fn is_none(&self) -> bool {
        matches!(self, MarkFactor::None)
    }
}

impl<T> fmt::Debug for MarkFactor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkFactor::None => f.write_str("None"),
            MarkFactor::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

fn pairs(order: usize) -> usize {
    order * order.saturating_sub(1) / 2
}

/// `Phi(u) = integral of phi(truncated distances) * xi(marks) d nu^n`.
#[derive(Clone, Debug)]
pub struct PolynomialSpec<T> {
    order: usize,
    kernel: DistanceKernel<T>,
    marks: MarkFactor<T>,
    truncation: Option<T>,
}

impl<T: Scalar> PolynomialSpec<T> {
    pub fn new(order: usize, kernel: DistanceKernel<T>) -> Result<Self> {
        if order == 0 {
            return Err(GenealogyError::InvalidArgument(
                "polynomial order must be at least 1".into(),
            ));
        }
        let check = |v: &[T], what: &str| -> Result<()> {
            if v.len() != pairs(order) {
                return Err(GenealogyError::DimensionMismatch {
                    expected: pairs(order),
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite() || *x < T::zero()) {
                return Err(GenealogyError::InvalidArgument(format!(
                    "{what} must be finite and >= 0"
                )));
            }
            Ok(())
        };
        match &kernel {
            DistanceKernel::Exponential(r) => check(r, "exponential rates")?,
            DistanceKernel::Threshold(c) => check(c, "thresholds")?,
            DistanceKernel::Tent(h) if !(*h > T::zero()) => {
                return Err(GenealogyError::InvalidArgument(
                    "tent kernel needs h > 0".into(),
                ))
            }
            DistanceKernel::Constant(c) if !c.is_finite() => {
                return Err(GenealogyError::InvalidArgument(
                    "constant kernel must be finite".into(),
                ))
            }
            _ => {}
        }
        Ok(PolynomialSpec {
            order,
            kernel,
            marks: MarkFactor::None,
            truncation: None,
        })
    }

    pub fn constant(order: usize, c: T) -> Result<Self> {
        Self::new(order, DistanceKernel::Constant(c))
    }

    pub fn with_marks(mut self, marks: MarkFactor<T>) -> Self {
        self.marks = marks;
        self
    }

    /// Evaluates the kernel on `r ∧ 2h` instead of `r`.
    pub fn truncated(mut self, h: T) -> Self {
        self.truncation = Some(h);
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn kernel(&self) -> &DistanceKernel<T> {
        &self.kernel
    }

    pub fn truncation(&self) -> Option<T> {
        self.truncation
    }

    pub fn needs_marks(&self) -> bool {
        !self.marks.is_none()
    }

    /// The integrand at one sampled configuration. `d` is overwritten with
    /// its truncation when a level is set.
    pub fn integrand(&self, d: &mut [T], marks: Option<&[Mark]>) -> Result<T> {
        if let Some(h) = self.truncation {
            let cap = h + h;
            for x in d.iter_mut() {
                *x = x.min(cap);
            }
        }
        let phi = self.kernel.evaluate(d, self.order);
        match &self.marks {
            MarkFactor::None => Ok(phi),
            MarkFactor::Custom(f) => Ok(phi * f(marks.ok_or(GenealogyError::MarksRequired)?)),
        }
    }

    /// The integrand at a sampled distance matrix.
    pub fn evaluate_sample(&self, sample: &DistanceMatrixSample<T>) -> Result<T> {
        if sample.order != self.order {
            return Err(GenealogyError::DimensionMismatch {
                expected: self.order,
                found: sample.order,
            });
        }
        let mut d = sample.distances.clone();
        self.integrand(&mut d, sample.marks.as_deref())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Integrate against the normalized sampling measure.
    Probability,
    /// Integrate against the raw (finite) measure: `Phi^1` with `phi = 1`
    /// is the total mass.
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    MonteCarlo(usize),
    /// Exact when within budget, otherwise Monte Carlo with this many draws.
    Auto(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    pub mode: EvalMode,
    pub normalization: Normalization,
    /// Maximal number of tuples enumerated in exact mode.
    pub budget: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            mode: EvalMode::Exact,
            normalization: Normalization::Probability,
            budget: 10_000_000,
        }
    }
}

impl EvalOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn monte_carlo(reps: usize) -> Self {
        EvalOptions {
            mode: EvalMode::MonteCarlo(reps),
            ..Self::default()
        }
    }

    pub fn raw(mut self) -> Self {
        self.normalization = Normalization::Raw;
        self
    }
}

/// A value with its Monte Carlo standard error (0 when exact).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    /// Number of Monte Carlo draws, 0 for exact evaluation.
    pub samples: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
            samples: 0,
        }
    }
}

/// Evaluates `poly` on `space`. The random stream is used in Monte Carlo
/// mode only.
pub fn evaluate_polynomial<T: Scalar, M: LeafMark, R: Rng + ?Sized>(
    space: &UltrametricSpace<T, M>,
    poly: &PolynomialSpec<T>,
    options: &EvalOptions,
    rng: &mut R,
) -> Result<Estimate> {
    let total = space.total_mass().as_f64();
    if !(total > 0.0) {
        return match options.normalization {
            Normalization::Raw => Ok(Estimate::exact(0.0)),
            Normalization::Probability => Err(GenealogyError::EmptySpace),
        };
    }
    if poly.needs_marks() && space.mark(0).to_mark().is_none() {
        return Err(GenealogyError::MarksRequired);
    }
    let scale = match options.normalization {
        Normalization::Probability => 1.0,
        Normalization::Raw => total.powi(poly.order as i32),
    };
    let leaves: Vec<usize> = space
        .leaf_order()
        .iter()
        .copied()
        .filter(|&l| space.leaf_mass(l) > T::zero())
        .collect();
    let tuples = (leaves.len() as f64).powi(poly.order as i32);
    let fast = poly.order == 2 && !poly.needs_marks();
    let within = fast || tuples <= options.budget as f64;
    let reps = match options.mode {
        EvalMode::Exact if !within => {
            return Err(GenealogyError::BudgetExceeded {
                needed: tuples,
                budget: options.budget,
            })
        }
        EvalMode::Exact => None,
        EvalMode::Auto(_) if within => None,
        EvalMode::Auto(reps) | EvalMode::MonteCarlo(reps) => Some(reps),
    };
    match reps {
        None if fast => Ok(Estimate::exact(scale * order_two(space, poly, total))),
        None => Ok(Estimate::exact(
            scale * enumerate(space, poly, &leaves, total)?,
        )),
        Some(reps) => {
            if reps == 0 {
                return Err(GenealogyError::InvalidArgument(
                    "Monte Carlo needs at least one draw".into(),
                ));
            }
            let sampler = LeafSampler::new(space)?;
            let n = poly.order;
            let mut picks = vec![0usize; n];
            let mut d = vec![T::zero(); n * n];
            let mut marks = vec![Mark::default(); n];
            let mut values = Vec::with_capacity(reps);
            for _ in 0..reps {
                for p in picks.iter_mut() {
                    *p = sampler.sample(rng);
                }
                fill(space, &picks, &mut d, &mut marks);
                values.push(poly.integrand(&mut d, Some(&marks))?.as_f64() * scale);
            }
            let (value, std_error) = mean_and_se(&values);
            Ok(Estimate {
                value,
                std_error,
                samples: reps,
            })
        }
    }
}

fn fill<T: Scalar, M: LeafMark>(
    space: &UltrametricSpace<T, M>,
    picks: &[usize],
    d: &mut [T],
    marks: &mut [Mark],
) {
    let n = picks.len();
    for i in 0..n {
        d[i * n + i] = T::zero();
        marks[i] = space.mark(picks[i]).to_mark().unwrap_or_default();
        for j in i + 1..n {
            let r = space.distance(picks[i], picks[j]);
            d[i * n + j] = r;
            d[j * n + i] = r;
        }
    }
}

/// Order two without marks: the pair-distance law is read off the tree.
fn order_two<T: Scalar, M: LeafMark>(
    space: &UltrametricSpace<T, M>,
    poly: &PolynomialSpec<T>,
    total: f64,
) -> f64 {
    let at = |r: T| -> f64 {
        let mut d = [T::zero(), r, r, T::zero()];
        poly.integrand(&mut d, None)
            .expect("no marks needed")
            .as_f64()
    };
    let mut sum = NeumaierSum::default();
    let mut diag = NeumaierSum::default();
    for l in 0..space.leaf_count() {
        diag.add((space.leaf_mass(l).as_f64() / total).powi(2));
    }
    sum.add(diag.value() * at(T::zero()));
    for node in space.internal_nodes() {
        let m = space.node_mass(node).as_f64() / total;
        let mut inner = NeumaierSum::default();
        for c in space.children(node) {
            inner.add((space.node_mass(*c).as_f64() / total).powi(2));
        }
        let p = m * m - inner.value();
        if p > 0.0 {
            sum.add(p * at(space.merge_value(node)));
        }
    }
    sum.value()
}

fn enumerate<T: Scalar, M: LeafMark>(
    space: &UltrametricSpace<T, M>,
    poly: &PolynomialSpec<T>,
    leaves: &[usize],
    total: f64,
) -> Result<f64> {
    let n = poly.order;
    let k = leaves.len();
    let weights: Vec<f64> = leaves
        .iter()
        .map(|&l| space.leaf_mass(l).as_f64() / total)
        .collect();
    let mut table = vec![T::zero(); k * k];
    for a in 0..k {
        for b in a + 1..k {
            let r = space.distance(leaves[a], leaves[b]);
            table[a * k + b] = r;
            table[b * k + a] = r;
        }
    }
    let leaf_marks: Vec<Mark> = leaves
        .iter()
        .map(|&l| space.mark(l).to_mark().unwrap_or_default())
        .collect();
    let mut idx = vec![0usize; n];
    let mut d = vec![T::zero(); n * n];
    let mut marks = vec![Mark::default(); n];
    let mut sum = NeumaierSum::default();
    loop {
        let mut w = 1.0;
        for i in 0..n {
            w *= weights[idx[i]];
            marks[i] = leaf_marks[idx[i]];
            for j in 0..n {
                d[i * n + j] = table[idx[i] * k + idx[j]];
            }
        }
        sum.add(w * poly.integrand(&mut d, Some(&marks))?.as_f64());
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(sum.value());
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
