//! Forward-versus-dual Monte Carlo experiments.
//!
//! Every replicate draws from its own stream `(seed, domain, index)`, and
//! replicate values are combined in index order, so results do not depend
//! on how the replicates are scheduled.

use std::sync::Arc;

use genealab_core::stats::{anderson_darling_uniform, energy_test, ks_two_sample, ks_uniform};
use genealab_core::{
    evaluate_polynomial, graft, pair_distance_law, EvalOptions, MarkedSpace, PolynomialSpec,
};
use genealab_sim::rng::domain;
use genealab_sim::{
    branching_run, coalescent_run, duality_value, entrance_law_tree, moran_run, stream,
    BranchingConfig, DualConfig, DualMode, ExactDual, LocationFallback, MoranConfig, PairReplay,
    SimError, Terminal,
};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Result, VerifyError};
use crate::oracle::{branching_pair_moment, stationary_pair_laplace};
use crate::report::{Check, Estimate, Outcome, Report, Series, Tolerance};

/// Runs `f` on replicate indices `0..count` in parallel, keeping order.
pub fn replicate<T: Send>(
    count: usize,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..count as u64).into_par_iter().map(f).collect()
}

/// Comparison (and optional closed-form) checks at every replicate
/// checkpoint and at the full sample.
fn mean_checks(
    forward: &[f64],
    dual: &[f64],
    checkpoints: &[usize],
    tolerance: Tolerance,
    reference: Option<f64>,
) -> Vec<Check> {
    let full = forward.len().max(dual.len());
    let mut sizes: Vec<usize> = checkpoints
        .iter()
        .copied()
        .filter(|&m| m > 0 && m < full)
        .collect();
    sizes.push(full);
    sizes.sort_unstable();
    sizes.dedup();
    let labelled = sizes.len() > 1;
    let mut checks = Vec::new();
    for m in sizes {
        let f = Estimate::from_values(&forward[..m.min(forward.len())]);
        let d = Estimate::from_values(&dual[..m.min(dual.len())]);
        let suffix = if labelled {
            format!(" [{m} replicates]")
        } else {
            String::new()
        };
        checks.push(Check::comparison(
            format!("forward vs dual{suffix}"),
            f,
            d,
            tolerance,
        ));
        if let Some(r) = reference {
            checks.push(Check::target(
                format!("forward vs closed form{suffix}"),
                f,
                r,
                tolerance,
            ));
            checks.push(Check::target(
                format!("dual vs closed form{suffix}"),
                d,
                r,
                tolerance,
            ));
        }
    }
    checks
}

fn distinct_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let p = sample_indices(rng, n, 2);
    (p.index(0), p.index(1))
}

/// Moment duality between a Moran model and its (plain or spatial) dual.
#[derive(Clone, Debug)]
pub struct MomentExperiment {
    pub moran: MoranConfig,
    /// Dual configuration; its horizon is the forward time as well.
    pub dual: DualConfig,
    pub polynomial: PolynomialSpec<f64>,
    pub evaluation: EvalOptions,
    pub fallback: LocationFallback,
    pub forward_reps: usize,
    pub dual_reps: usize,
    /// Replicate prefixes judged in addition to the full sample.
    pub checkpoints: Vec<usize>,
    pub tolerance: Tolerance,
    pub reference: Option<f64>,
    pub seed: u64,
}

pub fn run_moment_duality(exp: &MomentExperiment) -> Result<Outcome> {
    let poly = &exp.polynomial;
    if poly.order() != exp.dual.n {
        return Err(SimError::OrderMismatch {
            expected: exp.dual.n,
            found: poly.order(),
        }
        .into());
    }
    if !matches!(exp.dual.mode, DualMode::Plain) {
        return Err(VerifyError::InvalidConfig(
            "moment duality uses the plain dual".into(),
        ));
    }
    let initial = exp.moran.initial_space()?;
    let (forward, dual) = if poly.order() == 1 && !poly.needs_marks() {
        // A single sample sees distance 0 on both sides.
        let c = poly.integrand(&mut [0.0], None)?;
        (vec![c; exp.forward_reps], vec![c; exp.dual_reps])
    } else {
        let moran = exp.moran.clone().with_ancestry(true);
        let horizon = exp.dual.horizon;
        let forward = replicate(exp.forward_reps, |r| {
            let state = moran_run(&moran, horizon, &mut stream(exp.seed, domain::FORWARD, r))?;
            let g = state.genealogy()?;
            Ok(evaluate_polynomial(
                &g,
                poly,
                &exp.evaluation,
                &mut stream(exp.seed, domain::SAMPLE, r),
            )?
            .value)
        })?;
        let dual = replicate(exp.dual_reps, |r| {
            let state = coalescent_run(&exp.dual, &mut stream(exp.seed, domain::DUAL, r))?;
            Ok(duality_value(
                &initial,
                &state,
                poly,
                exp.fallback,
                &mut stream(exp.seed, domain::GRAFT, r),
            )?)
        })?;
        (forward, dual)
    };
    let checks = mean_checks(
        &forward,
        &dual,
        &exp.checkpoints,
        exp.tolerance,
        exp.reference,
    );
    Ok(Outcome::new(
        Report::new("duality-check", exp.seed, checks),
        vec![Series::new("forward", forward), Series::new("dual", dual)],
    ))
}

/// Feynman-Kac duality between critical branching and the weighted dual.
#[derive(Clone, Debug)]
pub struct FkExperiment {
    pub branching: BranchingConfig,
    /// Dual in Feynman-Kac mode at rate `b`.
    pub dual: DualConfig,
    pub polynomial: PolynomialSpec<f64>,
    /// Evaluated without normalization whatever is set here.
    pub evaluation: EvalOptions,
    pub forward_reps: usize,
    pub dual_reps: usize,
    pub checkpoints: Vec<usize>,
    pub tolerance: Tolerance,
    pub reference: Option<f64>,
    pub seed: u64,
}

pub fn run_fk_duality(exp: &FkExperiment) -> Result<Outcome> {
    let poly = &exp.polynomial;
    if poly.order() != exp.dual.n {
        return Err(SimError::OrderMismatch {
            expected: exp.dual.n,
            found: poly.order(),
        }
        .into());
    }
    if exp.dual.mode != DualMode::FeynmanKac {
        return Err(VerifyError::InvalidConfig(
            "the Feynman-Kac check needs the dual in feynman_kac mode".into(),
        ));
    }
    let horizon = exp.dual.horizon;
    let options = exp.evaluation.raw();
    let cfg = exp.branching.clone().with_ancestry(true);
    let forward: Vec<std::result::Result<f64, VerifyError>> = (0..exp.forward_reps as u64)
        .into_par_iter()
        .map(|r| {
            let state = branching_run(&cfg, horizon, &mut stream(exp.seed, domain::FORWARD, r))?;
            if state.is_extinct() {
                return Ok(0.0);
            }
            let g = state.genealogy()?;
            Ok(
                evaluate_polynomial(&g, poly, &options, &mut stream(exp.seed, domain::SAMPLE, r))?
                    .value,
            )
        })
        .collect();
    let dual = replicate(exp.dual_reps, |r| {
        let state = coalescent_run(&exp.dual, &mut stream(exp.seed, domain::DUAL, r))?;
        Ok(duality_value(
            &exp.branching.initial,
            &state,
            poly,
            LocationFallback::Error,
            &mut stream(exp.seed, domain::GRAFT, r),
        )?)
    })?;
    let mut values = Vec::with_capacity(forward.len());
    let mut budget = None;
    for v in forward {
        match v {
            Ok(x) => values.push(x),
            Err(VerifyError::Sim(e @ SimError::ParticleBudgetExceeded { .. })) => {
                budget.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    let checks = mean_checks(
        &values,
        &dual,
        &exp.checkpoints,
        exp.tolerance,
        exp.reference,
    );
    let report = Report::new("fk-duality", exp.seed, checks);
    if let Some(source) = budget {
        let skipped = exp.forward_reps - values.len();
        let partial =
            report.with_note(format!("{skipped} forward replicates hit the particle cap"));
        return Err(VerifyError::Budget {
            source,
            partial: Box::new(partial),
        });
    }
    Ok(Outcome::new(
        report,
        vec![Series::new("forward", values), Series::new("dual", dual)],
    ))
}

/// Exact comparison at small `K`: the forward pair moment over distinct
/// particles against the Feynman-Kac dual with falling-factorial terminal
/// values, both from linear equations.
pub fn fk_exact_check(granularity: usize, mass: f64, b: f64, lambda: f64, t: f64) -> Result<Check> {
    let count = (mass * granularity as f64).round() as usize;
    let forward = branching_pair_moment(granularity, count, b, lambda, t)?;
    let dual = genealab_sim::exact_dual_expectation(&ExactDual {
        n: 2,
        rate: b,
        feynman_kac: true,
        lambda,
        horizon: t,
        terminal: Terminal::FallingFactorial { count, granularity },
    })?;
    Ok(Check::exact(
        format!("exact forward chain vs Feynman-Kac dual (K = {granularity})"),
        forward,
        dual,
        1e-6,
    ))
}

/// Conditioned duality over shared branching mass paths.
#[derive(Clone, Debug)]
pub struct ConditionedExperiment {
    /// Critical branching from a single ancestor.
    pub branching: BranchingConfig,
    pub horizon: f64,
    pub paths: usize,
    pub samples_per_path: usize,
    pub level: f64,
    pub seed: u64,
}

struct PathResult {
    p_value: f64,
    rank: f64,
}

fn smallest_binomial_limit(trials: usize, p: f64, level: f64) -> usize {
    // Smallest L with P(Bin(trials, p) > L) <= level.
    let mut pmf = (1.0 - p).powi(trials as i32);
    let mut cdf = pmf;
    let mut l = 0;
    while 1.0 - cdf > level && l < trials {
        pmf *= (trials - l) as f64 / (l + 1) as f64 * p / (1.0 - p);
        cdf += pmf;
        l += 1;
    }
    l
}

pub fn run_conditioned_duality(exp: &ConditionedExperiment) -> Result<Outcome> {
    if exp.branching.initial.leaf_count() != 1 {
        return Err(VerifyError::InvalidConfig(
            "conditioned duality starts from a single ancestor".into(),
        ));
    }
    if exp.paths == 0 || exp.samples_per_path < 2 {
        return Err(VerifyError::InvalidConfig(
            "need paths and at least two samples per path".into(),
        ));
    }
    let cfg = exp.branching.clone().with_ancestry(true);
    let k = cfg.granularity;
    let m = exp.samples_per_path;
    let attempt = |r: u64| -> Result<Option<PathResult>> {
        let state = branching_run(&cfg, exp.horizon, &mut stream(exp.seed, domain::FORWARD, r))?;
        if state.count() < 2 {
            return Ok(None);
        }
        let mut rng = stream(exp.seed, domain::SAMPLE, r);
        let (i, j) = distinct_pair(state.count(), &mut rng);
        let observed = state.pair_distance(i, j)?;
        let replay = PairReplay::new(&state.mass_path, k)?;
        let replayed: Vec<f64> = (0..m).map(|_| replay.sample(&mut rng)).collect();
        let dual_cfg = DualConfig::plain(2, cfg.branching_rate, exp.horizon)
            .with_mode(DualMode::Conditioned(Arc::new(state.mass_path.clone())));
        let mut dual_rng = stream(exp.seed, domain::DUAL, r);
        let dual = (0..m)
            .map(|_| Ok(coalescent_run(&dual_cfg, &mut dual_rng)?.distance_matrix()[1]))
            .collect::<Result<Vec<f64>>>()?;
        let p_value = ks_two_sample(&replayed, &dual, &mut rng).p_value;
        // Randomized rank of the forward pair among the dual draws.
        let below = dual.iter().filter(|&&x| x < observed).count();
        let ties = dual.iter().filter(|&&x| x == observed).count();
        let position = below + (rng.random::<f64>() * (ties + 1) as f64).floor() as usize;
        let rank = (position.min(m) as f64 + rng.random::<f64>()) / (m + 1) as f64;
        Ok(Some(PathResult { p_value, rank }))
    };
    let mut results = Vec::with_capacity(exp.paths);
    let mut next = 0u64;
    let mut extinct = 0usize;
    while results.len() < exp.paths {
        let batch = (exp.paths - results.len()).max(8) as u64;
        let found = (next..next + batch)
            .into_par_iter()
            .map(attempt)
            .collect::<Result<Vec<_>>>()?;
        next += batch;
        for f in found {
            match f {
                Some(p) if results.len() < exp.paths => results.push(p),
                Some(_) => {}
                None => extinct += 1,
            }
        }
        if next > 100 * exp.paths as u64 + 1000 {
            return Err(VerifyError::InvalidConfig(
                "almost every path has fewer than two particles".into(),
            ));
        }
    }
    let p_values: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    let ranks: Vec<f64> = results.iter().map(|r| r.rank).collect();
    let rejected = p_values.iter().filter(|&&p| p < exp.level).count();
    let ad = anderson_darling_uniform(&p_values);
    let ks = ks_uniform(&ranks);
    let checks = vec![
        Check::count(
            "per-path two-sample KS rejections at the test level",
            rejected,
            smallest_binomial_limit(exp.paths, exp.level, exp.level),
            exp.paths,
        ),
        Check::distribution(
            "uniformity of per-path KS p-values",
            "anderson_darling",
            ad.statistic,
            ad.p_value,
            exp.level,
        ),
        Check::distribution(
            "forward pair distance ranked within its conditioned dual",
            "ks_uniform",
            ks.statistic,
            ks.p_value,
            exp.level,
        ),
    ];
    let report = Report::new("conditioned-duality", exp.seed, checks).with_note(format!(
        "{extinct} paths with fewer than two particles were skipped"
    ));
    Ok(Outcome::new(
        report,
        vec![
            Series::new("ks_p_value", p_values),
            Series::new("forward_rank", ranks),
        ],
    ))
}

/// Long-run neutral Moran statistics against the stationary laws.
#[derive(Clone, Debug)]
pub struct EquilibriumExperiment {
    /// Neutral single-site Moran model.
    pub moran: MoranConfig,
    pub horizon: f64,
    pub lambdas: Vec<f64>,
    pub reps: usize,
    /// Dual samples for the order-3 statistic.
    pub dual_reps: usize,
    /// Triples drawn per forward replicate for the order-3 statistic.
    pub triples: usize,
    pub tolerance: Tolerance,
    pub seed: u64,
}

fn median3(d: [f64; 3]) -> f64 {
    let [a, b, c] = d;
    a.max(b).min(a.min(b).max(c))
}

pub fn run_equilibrium_check(exp: &EquilibriumExperiment) -> Result<Outcome> {
    let d = exp.moran.resampling_rate;
    if exp.moran.selection != 0.0 || exp.moran.locations() != 1 || !(d > 0.0) {
        return Err(VerifyError::InvalidConfig(
            "equilibrium checks use a neutral single-site model with d > 0".into(),
        ));
    }
    let moran = exp.moran.clone().with_ancestry(true);
    let n = moran.n;
    let rows = replicate(exp.reps, |r| {
        let state = moran_run(
            &moran,
            exp.horizon,
            &mut stream(exp.seed, domain::FORWARD, r),
        )?;
        let law = pair_distance_law(&state.genealogy()?)?;
        let mut row = vec![law.iter().map(|(x, w)| w * x).sum::<f64>()];
        for &lambda in &exp.lambdas {
            row.push(law.iter().map(|(x, w)| w * (-lambda * x).exp()).sum());
        }
        let mut rng = stream(exp.seed, domain::SAMPLE, r);
        let mut total = 0.0;
        for _ in 0..exp.triples {
            let t = sample_indices(&mut rng, n, 3);
            let (a, b, c) = (t.index(0), t.index(1), t.index(2));
            total += median3([
                state.pair_distance(a, b)?,
                state.pair_distance(a, c)?,
                state.pair_distance(b, c)?,
            ]);
        }
        row.push(total / exp.triples as f64);
        Ok(row)
    })?;
    let dual = replicate(exp.dual_reps, |r| {
        let s = coalescent_run(
            &DualConfig::plain(3, d, exp.horizon),
            &mut stream(exp.seed, domain::DUAL, r),
        )?;
        let m = s.distance_matrix();
        Ok(median3([m[1], m[2], m[5]]))
    })?;
    let column = |k: usize| -> Vec<f64> { rows.iter().map(|row| row[k]).collect() };
    let mut checks = vec![Check::target(
        "mean pair distance vs 2/d",
        Estimate::from_values(&column(0)),
        2.0 / d,
        exp.tolerance,
    )];
    let mut series = vec![Series::new("mean_pair_distance", column(0))];
    for (k, &lambda) in exp.lambdas.iter().enumerate() {
        let values = column(k + 1);
        checks.push(Check::target(
            format!("E[exp(-{lambda} r)] vs d/(d + 2 lambda)"),
            Estimate::from_values(&values),
            stationary_pair_laplace(d, lambda),
            exp.tolerance,
        ));
        series.push(Series::new(format!("laplace_{lambda}"), values));
    }
    let medians = column(exp.lambdas.len() + 1);
    checks.push(Check::comparison(
        "median of three pair distances vs entrance-law dual",
        Estimate::from_values(&medians),
        Estimate::from_values(&dual),
        exp.tolerance,
    ));
    series.push(Series::new("median_triple_distance", medians));
    series.push(Series::new("dual_median_triple_distance", dual));
    Ok(Outcome::new(
        Report::new("equilibrium", exp.seed, checks),
        series,
    ))
}

/// Forward Moran sample distances against the initial state grafted with
/// an entrance-law tree.
#[derive(Clone, Debug)]
pub struct StrongExperiment {
    pub moran: MoranConfig,
    pub horizon: f64,
    /// Samples per side for the pair-distance law.
    pub samples: usize,
    /// Lines of the entrance-law tree.
    pub entrance_lines: usize,
    /// Samples per side for the three-point test.
    pub triple_samples: usize,
    pub permutations: usize,
    pub level: f64,
    pub seed: u64,
}

pub fn run_strong_duality_check(exp: &StrongExperiment) -> Result<Outcome> {
    let d = exp.moran.resampling_rate;
    if exp.moran.selection != 0.0 || exp.moran.locations() != 1 {
        return Err(VerifyError::InvalidConfig(
            "strong duality uses a neutral single-site model".into(),
        ));
    }
    if exp.moran.n < 3 || exp.entrance_lines < 3 {
        return Err(VerifyError::InvalidConfig(
            "need at least three individuals and three lines".into(),
        ));
    }
    let initial: MarkedSpace = exp.moran.initial_space()?;
    let moran = exp.moran.clone().with_ancestry(true);
    let count = exp.samples.max(exp.triple_samples);
    let triple = |space_distance: &dyn Fn(usize, usize) -> Result<f64>,
                  picks: &[usize]|
     -> Result<Vec<f64>> {
        let mut v = vec![
            space_distance(picks[0], picks[1])?,
            space_distance(picks[0], picks[2])?,
            space_distance(picks[1], picks[2])?,
        ];
        v.sort_by(f64::total_cmp);
        Ok(v)
    };
    let forward = replicate(count, |r| {
        let state = moran_run(
            &moran,
            exp.horizon,
            &mut stream(exp.seed, domain::FORWARD, r),
        )?;
        let mut rng = stream(exp.seed, domain::SAMPLE, r);
        let picks = sample_indices(&mut rng, moran.n, 3).into_vec();
        let dist = |i: usize, j: usize| -> Result<f64> { Ok(state.pair_distance(i, j)?) };
        Ok(triple(&dist, &picks)?
            .into_iter()
            .chain([dist(picks[0], picks[1])?])
            .collect::<Vec<f64>>())
    })?;
    let grafted = replicate(count, |r| {
        let mut rng = stream(exp.seed, domain::DUAL, r);
        let top = entrance_law_tree(exp.entrance_lines, exp.horizon, d, &mut rng)?;
        let space = graft(
            &initial,
            &top,
            exp.horizon,
            &mut stream(exp.seed, domain::GRAFT, r),
        )?;
        let picks = sample_indices(&mut rng, space.leaf_count(), 3).into_vec();
        let dist = |i: usize, j: usize| -> Result<f64> { Ok(space.distance(i, j)) };
        Ok(triple(&dist, &picks)?
            .into_iter()
            .chain([dist(picks[0], picks[1])?])
            .collect::<Vec<f64>>())
    })?;
    let pair =
        |rows: &[Vec<f64>]| -> Vec<f64> { rows[..exp.samples].iter().map(|v| v[3]).collect() };
    let (fp, gp) = (pair(&forward), pair(&grafted));
    let mut test_rng = stream(exp.seed, domain::TEST, 0);
    let ks = ks_two_sample(&fp, &gp, &mut test_rng);
    let trip = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows[..exp.triple_samples]
            .iter()
            .map(|v| v[..3].to_vec())
            .collect()
    };
    let energy = energy_test(
        &trip(&forward),
        &trip(&grafted),
        exp.permutations,
        &mut test_rng,
    );
    let checks = vec![
        Check::distribution(
            "pair distance: forward vs grafted entrance law",
            "ks_two_sample",
            ks.statistic,
            ks.p_value,
            exp.level,
        ),
        Check::distribution(
            "three-point distances: forward vs grafted entrance law",
            "energy",
            energy.statistic,
            energy.p_value,
            exp.level,
        ),
    ];
    Ok(Outcome::new(
        Report::new("strong-duality", exp.seed, checks),
        vec![
            Series::new("forward_pair_distance", fp),
            Series::new("grafted_pair_distance", gp),
        ],
    ))
}
