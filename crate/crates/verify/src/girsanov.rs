//! Radon-Nikodym reweighting of neutral Moran paths towards selection.
//!
//! With fitness `chi` per type, selection strength `alpha` and resampling
//! normalization `gamma`, the potential is
//! `Psi(x) = (alpha / gamma) sum_u x_u chi(u)` for type frequencies `x`.
//! Along a neutral path
//!
//! - `M_T = Psi(x_T) - Psi(x_0) - int_0^T (Omega Psi)(x_s) ds`, where the
//!   neutral generator gives
//!   `Omega_0 Psi = (alpha / gamma) theta sum_u x_u sum_w beta(u, w) (chi(w) - chi(u))`
//!   (resampling does not move the mean of `chi`), and the selective one
//!   adds `(alpha^2 / gamma) Var_x(chi)`;
//! - `[M]_T = (alpha^2 / gamma) int_0^T Var_{x_s}(chi) ds`;
//! - the weight is `exp(M_T - [M]_T / 2)`.
//!
//! The exact-jump weight is the likelihood ratio of the selective and the
//! neutral count chains: every replacement that turns an individual into
//! type `u` contributes `1 + 2 alpha chi(u) / (d N)`, and the extra jump
//! intensity `(alpha / N) sum_u chi(u) n_u (N - n_u)` is compensated.

use genealab_core::{evaluate_polynomial, EvalOptions, MarkFactor, MarkedSpace, PolynomialSpec};
use genealab_sim::rng::domain;
use genealab_sim::{
    stream, type_count_run, Event, JumpKind, MoranConfig, StochasticMatrix, TypePath,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Result, VerifyError};
use crate::harness::replicate;
use crate::report::{Check, Estimate, Outcome, Report, Series, Tolerance};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensator {
    #[default]
    Neutral,
    Selective,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMethod {
    #[default]
    Diffusion,
    ExactJump,
}

/// Fitness of a pair of sampled individuals by their types.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFitness {
    /// `chi'(u, v) = chi(u)`.
    Haploid(Vec<f64>),
    /// `chi'(u, v)` given as a matrix.
    Pairwise(Vec<Vec<f64>>),
}

impl PairFitness {
    fn value(&self, u: u32, v: u32) -> f64 {
        match self {
            PairFitness::Haploid(chi) => chi.get(u as usize).copied().unwrap_or(0.0),
            PairFitness::Pairwise(m) => m
                .get(u as usize)
                .and_then(|r| r.get(v as usize))
                .copied()
                .unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GirsanovConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub fitness: PairFitness,
    pub compensator: Compensator,
    pub method: WeightMethod,
    /// Smallest acceptable effective sample size.
    pub ess_floor: f64,
}

impl GirsanovConfig {
    pub fn new(alpha: f64, gamma: f64, chi: Vec<f64>) -> Self {
        GirsanovConfig {
            alpha,
            gamma,
            fitness: PairFitness::Haploid(chi),
            compensator: Compensator::Neutral,
            method: WeightMethod::Diffusion,
            ess_floor: 100.0,
        }
    }

    pub fn with_compensator(mut self, c: Compensator) -> Self {
        self.compensator = c;
        self
    }

    pub fn with_method(mut self, m: WeightMethod) -> Self {
        self.method = m;
        self
    }

    pub fn with_fitness(mut self, f: PairFitness) -> Self {
        self.fitness = f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(VerifyError::InvalidConfig(
                "alpha must be finite and >= 0".into(),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(VerifyError::InvalidConfig(
                "gamma must be finite and > 0".into(),
            ));
        }
        let ok = |x: &f64| (0.0..=1.0).contains(x);
        let bounded = match &self.fitness {
            PairFitness::Haploid(chi) => chi.iter().all(ok),
            PairFitness::Pairwise(m) => m.iter().flatten().all(ok),
        };
        if !bounded {
            return Err(VerifyError::InvalidConfig(
                "fitness values must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    fn chi(&self) -> Result<&[f64]> {
        match &self.fitness {
            PairFitness::Haploid(chi) => Ok(chi),
            PairFitness::Pairwise(_) => Err(VerifyError::InvalidConfig(
                "path weights are implemented for haploid fitness only".into(),
            )),
        }
    }
}

/// `Psi = (alpha / gamma) int chi'(u, v) nu(du) nu(dv)` over the
/// normalized sampling measure.
pub fn psi(space: &MarkedSpace, cfg: &GirsanovConfig) -> Result<f64> {
    cfg.validate()?;
    let fitness = cfg.fitness.clone();
    let poly = PolynomialSpec::constant(2, 1.0)?.with_marks(MarkFactor::custom(move |m| {
        fitness.value(m[0].genotype, m[1].genotype)
    }));
    let mut unused = stream(0, domain::TEST, 0);
    let value = evaluate_polynomial(space, &poly, &EvalOptions::exact(), &mut unused)?.value;
    Ok(cfg.alpha / cfg.gamma * value)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathWeight {
    /// `M_T`; for the exact-jump method the log likelihood ratio.
    pub martingale: f64,
    /// `[M]_T`; 0 for the exact-jump method.
    pub quadratic_variation: f64,
    pub log_weight: f64,
    pub weight: f64,
}

impl PathWeight {
    fn new(martingale: f64, quadratic_variation: f64) -> Self {
        let log_weight = martingale - 0.5 * quadratic_variation;
        PathWeight {
            martingale,
            quadratic_variation,
            log_weight,
            weight: log_weight.exp(),
        }
    }
}

/// `Var_x(chi)` as `sum_{u<v} n_u n_v (chi_u - chi_v)^2 / N^2`, which is
/// exactly 0 for constant `chi`.
fn variance(chi: &[f64], counts: &[usize], n: f64) -> f64 {
    let mut s = 0.0;
    for u in 0..counts.len() {
        for v in u + 1..counts.len() {
            let diff = chi[u] - chi[v];
            s += (counts[u] * counts[v]) as f64 * diff * diff;
        }
    }
    s / (n * n)
}

/// Neutral generator applied to `sum_u x_u chi(u)`: the mutation drift.
fn mutation_drift(
    chi: &[f64],
    kernel: &StochasticMatrix,
    theta: f64,
    counts: &[usize],
    n: f64,
) -> f64 {
    let mut s = 0.0;
    for (u, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let inner: f64 = (0..counts.len())
            .map(|w| kernel.get(u, w) * (chi[w] - chi[u]))
            .sum();
        s += c as f64 * inner;
    }
    theta * s / n
}

/// Per-jump factor of the exact likelihood ratio for a replacement that
/// produces type `to`.
pub fn replacement_factor(alpha: f64, chi_to: f64, d: f64, n: usize) -> f64 {
    1.0 + 2.0 * alpha * chi_to / (d * n as f64)
}

/// Extra jump intensity of the selective chain at the given counts.
pub fn selective_intensity(alpha: f64, chi: &[f64], counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let s: f64 = counts
        .iter()
        .enumerate()
        .map(|(u, &c)| chi[u] * (c * (n - c)) as f64)
        .sum();
    alpha * s / n as f64
}

fn check_path(path: &TypePath, chi: &[f64]) -> Result<()> {
    if path.selection != 0.0 {
        return Err(VerifyError::ParameterMismatch(format!(
            "the path was simulated with selection {}, not neutrally",
            path.selection
        )));
    }
    if chi.len() != path.types() {
        return Err(VerifyError::ParameterMismatch(format!(
            "{} fitness values for {} types",
            chi.len(),
            path.types()
        )));
    }
    if path.mutation_kernel.len() != path.types() {
        return Err(VerifyError::ParameterMismatch(
            "mutation kernel size differs from the type count".into(),
        ));
    }
    if path.initial_counts.iter().sum::<usize>() != path.n {
        return Err(VerifyError::LogGap(
            "initial counts do not add up to N".into(),
        ));
    }
    let mut last = 0.0;
    for j in &path.jumps {
        if !(j.t >= last && j.t <= path.end) {
            return Err(VerifyError::LogGap(format!(
                "jump at {} outside [{last}, {}]",
                j.t, path.end
            )));
        }
        last = j.t;
    }
    Ok(())
}

/// Girsanov weight of a neutral type-count path.
pub fn path_weight(path: &TypePath, cfg: &GirsanovConfig) -> Result<PathWeight> {
    cfg.validate()?;
    let chi = cfg.chi()?;
    check_path(path, chi)?;
    if cfg.alpha == 0.0 {
        return Ok(PathWeight::new(0.0, 0.0));
    }
    let n = path.n as f64;
    let mut counts = path.initial_counts.clone();
    let mut time = 0.0;
    let mut jumps = 0.0;
    let mut integral = 0.0;
    let mut qv = 0.0;
    let mut apply = |counts: &[usize], dt: f64| match cfg.method {
        WeightMethod::Diffusion => {
            let var = variance(chi, counts, n);
            let mut drift = cfg.alpha / cfg.gamma
                * mutation_drift(chi, &path.mutation_kernel, path.mutation_rate, counts, n);
            if cfg.compensator == Compensator::Selective {
                drift += cfg.alpha * cfg.alpha / cfg.gamma * var;
            }
            integral += drift * dt;
            qv += cfg.alpha * cfg.alpha / cfg.gamma * var * dt;
        }
        WeightMethod::ExactJump => integral += selective_intensity(cfg.alpha, chi, counts) * dt,
    };
    for j in &path.jumps {
        apply(&counts, j.t - time);
        time = j.t;
        let (from, to) = (j.from as usize, j.to as usize);
        if counts[from] == 0 {
            return Err(VerifyError::LogGap(format!(
                "jump at {} leaves type {from} with a negative count",
                j.t
            )));
        }
        counts[from] -= 1;
        counts[to] += 1;
        match cfg.method {
            WeightMethod::Diffusion => jumps += cfg.alpha / cfg.gamma * (chi[to] - chi[from]) / n,
            WeightMethod::ExactJump => {
                if j.kind == JumpKind::Replace {
                    jumps +=
                        replacement_factor(cfg.alpha, chi[to], path.resampling_rate, path.n).ln();
                }
            }
        }
    }
    apply(&counts, path.end - time);
    Ok(match cfg.method {
        WeightMethod::Diffusion => PathWeight::new(jumps - integral, qv),
        WeightMethod::ExactJump => PathWeight::new(jumps - integral, 0.0),
    })
}

/// [`path_weight`] for a single-site forward event log.
pub fn path_weight_from_events(log: &[Event], cfg: &GirsanovConfig) -> Result<PathWeight> {
    let path = TypePath::from_events(log).map_err(|e| VerifyError::LogGap(e.to_string()))?;
    path_weight(&path, cfg)
}

/// CSV `replicate,M_T,QV,weight`.
pub fn weight_csv(weights: &[PathWeight]) -> String {
    let mut out = String::from("replicate,M_T,QV,weight\n");
    for (r, w) in weights.iter().enumerate() {
        let _ = writeln!(
            out,
            "{r},{},{},{}",
            w.martingale, w.quadratic_variation, w.weight
        );
    }
    out
}

/// Effective sample size `(sum w)^2 / sum w^2`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    s * s / s2
}

/// `E_P[F W]` with the standard error of the replicate products.
pub fn reweighted_expectation(values: &[f64], weights: &[f64], ess_floor: f64) -> Result<Estimate> {
    if values.len() != weights.len() {
        return Err(VerifyError::InvalidConfig(
            "one weight per value is needed".into(),
        ));
    }
    let ess = effective_sample_size(weights);
    if !(ess >= ess_floor) {
        return Err(VerifyError::EffectiveSampleSizeTooLow {
            ess,
            floor: ess_floor,
        });
    }
    let products: Vec<f64> = values.iter().zip(weights).map(|(f, w)| f * w).collect();
    Ok(Estimate::from_values(&products))
}

/// Reweighted neutral simulation against direct selective simulation.
#[derive(Clone, Debug)]
pub struct GirsanovExperiment {
    /// Single-site model with the selection strength and fitness to reach.
    pub moran: MoranConfig,
    pub horizon: f64,
    /// `gamma`; the resampling rate when absent.
    pub gamma: Option<f64>,
    pub fit_type: u32,
    pub neutral_reps: usize,
    pub selective_reps: usize,
    /// Replicate prefixes for the mean-one checks.
    pub checkpoints: Vec<usize>,
    pub tolerance: Tolerance,
    pub ess_floor: f64,
    pub seed: u64,
}

pub fn run_girsanov_check(exp: &GirsanovExperiment) -> Result<Outcome> {
    let alpha = exp.moran.selection;
    let chi: Vec<f64> = (0..exp.moran.types() as u32)
        .map(|u| exp.moran.fitness_of(u))
        .collect();
    let gamma = exp.gamma.unwrap_or(exp.moran.resampling_rate);
    let base = GirsanovConfig::new(alpha, gamma, chi);
    base.validate()?;
    let neutral_cfg = exp
        .moran
        .clone()
        .with_selection(0.0, exp.moran.fitness.clone());
    let fit = exp.fit_type;
    let rows = replicate(exp.neutral_reps, |r| {
        let path = type_count_run(
            &neutral_cfg,
            exp.horizon,
            &mut stream(exp.seed, domain::FORWARD, r),
        )?;
        let neutral = path_weight(&path, &base)?;
        let selective = path_weight(
            &path,
            &base.clone().with_compensator(Compensator::Selective),
        )?;
        let exact = path_weight(&path, &base.clone().with_method(WeightMethod::ExactJump))?;
        Ok((
            neutral,
            selective.weight,
            exact.weight,
            path.final_frequency(fit),
        ))
    })?;
    let direct = replicate(exp.selective_reps, |r| {
        Ok(type_count_run(
            &exp.moran,
            exp.horizon,
            &mut stream(exp.seed, domain::SELECTIVE, r),
        )?
        .final_frequency(fit))
    })?;
    let w_neutral: Vec<f64> = rows.iter().map(|r| r.0.weight).collect();
    let w_selective: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let w_exact: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let statistic: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let mean_one = Tolerance::new(exp.tolerance.z, 0.0);
    let mut sizes: Vec<usize> = exp
        .checkpoints
        .iter()
        .copied()
        .filter(|&m| m > 0 && m < rows.len())
        .collect();
    sizes.push(rows.len());
    sizes.dedup();
    let passes = |w: &[f64]| {
        sizes.iter().all(|&m| {
            mean_one.accepts(
                Estimate::from_values(&w[..m]).mean - 1.0,
                Estimate::from_values(&w[..m]).std_error,
            )
        })
    };
    let choices = [
        (Compensator::Neutral, &w_neutral),
        (Compensator::Selective, &w_selective),
    ];
    let winners: Vec<Compensator> = choices
        .iter()
        .filter(|(_, w)| passes(w))
        .map(|(c, _)| *c)
        .collect();
    let winner = winners.first().copied().unwrap_or(Compensator::Neutral);
    let (chosen, other) = match winner {
        Compensator::Neutral => (&w_neutral, &w_selective),
        Compensator::Selective => (&w_selective, &w_neutral),
    };
    let mut checks = vec![Check::exact(
        "compensator choices consistent with mean one",
        winners.len() as f64,
        1.0,
        0.0,
    )];
    let labelled = sizes.len() > 1;
    for &m in &sizes {
        let suffix = if labelled {
            format!(" [{m} paths]")
        } else {
            String::new()
        };
        checks.push(Check::target(
            format!("mean weight, {winner:?} compensator{suffix}").to_lowercase(),
            Estimate::from_values(&chosen[..m]),
            1.0,
            mean_one,
        ));
    }
    checks.push(Check::target(
        "mean exact-jump likelihood ratio",
        Estimate::from_values(&w_exact),
        1.0,
        mean_one,
    ));
    let reweighted = reweighted_expectation(&statistic, chosen, exp.ess_floor)?;
    checks.push(Check::comparison(
        format!("reweighted vs direct selective frequency of type {fit}"),
        reweighted,
        Estimate::from_values(&direct),
        exp.tolerance,
    ));
    let loser = Estimate::from_values(other);
    let report = Report::new("girsanov-check", exp.seed, checks)
        .with_note(format!("compensator: {winner:?}").to_lowercase())
        .with_note(format!(
            "other compensator mean weight {:.6} +- {:.6}",
            loser.mean, loser.std_error
        ))
        .with_note(format!(
            "effective sample size {:.1}",
            effective_sample_size(chosen)
        ));
    let series = vec![
        Series::new("M_T", rows.iter().map(|r| r.0.martingale).collect()),
        Series::new("QV", rows.iter().map(|r| r.0.quadratic_variation).collect()),
        Series::new("weight", chosen.clone()),
        Series::new("frequency", statistic),
        Series::new("selective_frequency", direct),
    ];
    Ok(Outcome::new(report, series))
}

/// Count vectors of `n` individuals over `k` types.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in (0..=n).rev() {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Small-population exact check: `E_neutral[F(x_T) W_T]` through the
/// generator tilted by [`replacement_factor`] and
/// [`selective_intensity`], against `E_selective[F(x_T)]` from the
/// selective count chain, with `F` the frequency of `fit_type`.
pub fn exact_small_population_check(
    moran: &MoranConfig,
    initial_counts: &[usize],
    horizon: f64,
    fit_type: u32,
) -> Result<Check> {
    let n = moran.n;
    let k = moran.types();
    if n > 8 || k > 4 || initial_counts.len() != k || initial_counts.iter().sum::<usize>() != n {
        return Err(VerifyError::InvalidConfig(
            "exact check needs N <= 8, k <= 4 and matching counts".into(),
        ));
    }
    let d = moran.resampling_rate;
    if !(d > 0.0) {
        return Err(VerifyError::InvalidConfig("exact check needs d > 0".into()));
    }
    let alpha = moran.selection;
    let chi: Vec<f64> = (0..k as u32).map(|u| moran.fitness_of(u)).collect();
    let states = compositions(n, k);
    let index = |c: &[usize]| states.iter().position(|s| s == c).expect("composition");
    let m = states.len();
    let mut tilted = DMatrix::<f64>::zeros(m, m);
    let mut selective = DMatrix::<f64>::zeros(m, m);
    for (s, c) in states.iter().enumerate() {
        for to in 0..k {
            for from in 0..k {
                if to == from || c[from] == 0 {
                    continue;
                }
                let mut next = c.clone();
                next[from] -= 1;
                next[to] += 1;
                let t = index(&next);
                let pairs = (c[to] * c[from]) as f64;
                let neutral_replace = d / 2.0 * pairs;
                let mutation =
                    moran.mutation_rate * c[from] as f64 * moran.mutation_kernel.get(from, to);
                let select_replace = (d / 2.0 + alpha * chi[to] / n as f64) * pairs;
                tilted[(s, t)] +=
                    neutral_replace * replacement_factor(alpha, chi[to], d, n) + mutation;
                selective[(s, t)] += select_replace + mutation;
                tilted[(s, s)] -= neutral_replace + mutation;
                selective[(s, s)] -= select_replace + mutation;
            }
        }
        tilted[(s, s)] -= selective_intensity(alpha, &chi, c);
    }
    let f = DVector::from_iterator(
        m,
        states
            .iter()
            .map(|c| c[fit_type as usize] as f64 / n as f64),
    );
    let start = index(initial_counts);
    let lhs = ((tilted * horizon).exp() * &f)[start];
    let rhs = ((selective * horizon).exp() * &f)[start];
    Ok(Check::exact(
        format!("N = {n} reweighted neutral chain vs selective chain"),
        lhs,
        rhs,
        1e-6,
    ))
}
