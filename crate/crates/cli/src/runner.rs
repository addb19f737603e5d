//! Turns a resolved experiment file into harness calls and artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use genealab_core::{diameter, to_json, tree_height, MarkedSpace, PolynomialSpec};
use genealab_sim::rng::domain;
use genealab_sim::{
    branching_run, moran_run, stream, write_jsonl, BranchingConfig, DualConfig, DualMode,
    MoranConfig, Spatial, StochasticMatrix,
};
use genealab_verify::oracle::pair_laplace;
use genealab_verify::{
    exact_small_population_check, fk_exact_check, laplace_check, replicate,
    run_conditioned_duality, run_diagnostics, run_equilibrium_check, run_fk_duality,
    run_girsanov_check, run_moment_duality, run_strong_duality_check, semigroup_laws, series_csv,
    split_check, truncation_check, ConditionedExperiment, EquilibriumExperiment, FkExperiment,
    GirsanovExperiment, LevyMeasureSpec, MomentExperiment, Outcome, Report, Series,
    SpatialExperiment, StrongExperiment, Tolerance,
};

use crate::config::{
    load, DriftConfig, ExperimentFile, Initial, KernelConfig, Kind, MoranModel, Overrides,
};
use crate::error::{CliError, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "GENEALAB_WORKERS";

/// A validated experiment, ready to run.
enum Plan {
    Simulate {
        moran: Option<MoranConfig>,
        branching: Option<BranchingConfig>,
        horizon: f64,
        replicates: usize,
    },
    Duality(Box<MomentExperiment>),
    Fk {
        cases: Vec<(usize, FkExperiment)>,
        exact: Vec<(usize, f64, f64, f64, f64)>,
    },
    Conditioned(ConditionedExperiment),
    Equilibrium(EquilibriumExperiment),
    Strong(StrongExperiment),
    Girsanov {
        experiment: Box<GirsanovExperiment>,
        exact: Option<(MoranConfig, Vec<usize>)>,
    },
    Infdiv {
        spec: LevyMeasureSpec,
        laplace: Vec<(PolynomialSpec<f64>, usize)>,
        split: Option<(usize, usize)>,
        truncation: Option<(f64, usize)>,
        semigroup: Option<(usize, usize)>,
        level: f64,
    },
    Diagnostics {
        instances: usize,
        max_points: usize,
        spatial: SpatialExperiment,
    },
}

fn require<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| CliError::Config(format!("missing section [{what}]")))
}

fn single_ancestor(model: &MoranModel) -> bool {
    matches!(model.initial, Initial::SingleAncestor)
}

fn plan(file: &ExperimentFile, base: &Path) -> Result<Plan> {
    let seed = file.seed;
    let tolerance = file.tolerance();
    let kind = file.experiment.expect("resolved file names its experiment");
    Ok(match kind {
        Kind::Simulate => {
            let s = require(file.simulate.as_ref(), "simulate")?;
            let (moran, branching) = match (&s.model, &s.branching) {
                (Some(m), None) => (Some(m.build(base)?.with_events(s.record_events)), None),
                (None, Some(b)) if !s.record_events => (None, Some(b.build()?)),
                (None, Some(_)) => {
                    return Err(CliError::Config(
                        "event logs are recorded for Moran models only".into(),
                    ));
                }
                _ => {
                    return Err(CliError::Config(
                        "[simulate] needs exactly one of [simulate.model] and [simulate.branching]"
                            .into(),
                    ));
                }
            };
            Plan::Simulate {
                moran,
                branching,
                horizon: s.horizon,
                replicates: s.replicates,
            }
        }
        Kind::DualityCheck => {
            let s = require(file.duality.as_ref(), "duality")?;
            let moran = s.model.build(base)?;
            let poly = s.polynomial.build()?;
            let mut dual =
                DualConfig::plain(s.polynomial.order, s.model.resampling_rate, s.horizon);
            if moran.locations() > 1 || s.model.migration_rate > 0.0 {
                dual = dual.with_spatial(Spatial {
                    migration_rate: s.model.migration_rate,
                    kernel: StochasticMatrix::new(s.model.migration_kernel.clone())?,
                    start: s.dual_start.clone(),
                });
            }
            dual.validate()?;
            let reference = if s.closed_form {
                let rate = match s.polynomial.kernel {
                    KernelConfig::Exponential { rate } => Some(rate),
                    _ => None,
                };
                match rate {
                    Some(rate)
                        if s.polynomial.order == 2
                            && s.polynomial.truncation.is_none()
                            && single_ancestor(&s.model)
                            && dual.spatial.is_none() =>
                    {
                        Some(pair_laplace(s.model.resampling_rate, rate, s.horizon))
                    }
                    _ => {
                        return Err(CliError::Config(
                            "closed_form needs a single ancestor, order 2, an exponential kernel and one site"
                                .into(),
                        ));
                    }
                }
            } else {
                None
            };
            Plan::Duality(Box::new(MomentExperiment {
                moran,
                dual,
                polynomial: poly,
                evaluation: s.evaluation.options(),
                fallback: s.fallback,
                forward_reps: s.forward_reps,
                dual_reps: s.dual_reps,
                checkpoints: s.checkpoints.clone(),
                tolerance,
                reference,
                seed,
            }))
        }
        Kind::FkDuality => {
            let s = require(file.fk.as_ref(), "fk")?;
            let branching = s.branching.build()?;
            if s.cases.is_empty() && s.exact.is_none() {
                return Err(CliError::Config(
                    "[fk] needs at least one case or an exact check".into(),
                ));
            }
            let mut cases = Vec::new();
            for case in &s.cases {
                let order = case.polynomial.order;
                let reference = if case.closed_form {
                    match case.polynomial.kernel {
                        KernelConfig::Constant { value }
                            if order == 1 && s.branching.drift == DriftConfig::Critical =>
                        {
                            Some(value * s.branching.initial_mass)
                        }
                        _ => {
                            return Err(CliError::Config(
                                "closed_form needs order 1, a constant kernel and critical drift"
                                    .into(),
                            ));
                        }
                    }
                } else {
                    None
                };
                let dual = DualConfig::plain(order, s.branching.branching_rate, s.horizon)
                    .with_mode(DualMode::FeynmanKac);
                dual.validate()?;
                cases.push((
                    order,
                    FkExperiment {
                        branching: branching.clone(),
                        dual,
                        polynomial: case.polynomial.build()?,
                        evaluation: s.evaluation.options(),
                        forward_reps: s.forward_reps,
                        dual_reps: s.dual_reps,
                        checkpoints: s.checkpoints.clone(),
                        tolerance,
                        reference,
                        seed,
                    },
                ));
            }
            let exact = s.exact.as_ref().map_or_else(Vec::new, |e| {
                e.granularities
                    .iter()
                    .map(|&k| (k, e.mass, s.branching.branching_rate, e.rate, e.horizon))
                    .collect()
            });
            Plan::Fk { cases, exact }
        }
        Kind::ConditionedDuality => {
            let s = require(file.conditioned.as_ref(), "conditioned")?;
            Plan::Conditioned(ConditionedExperiment {
                branching: s.branching.build()?,
                horizon: s.horizon,
                paths: s.paths,
                samples_per_path: s.samples_per_path,
                level: s.level,
                seed,
            })
        }
        Kind::Equilibrium => {
            let s = require(file.equilibrium.as_ref(), "equilibrium")?;
            Plan::Equilibrium(EquilibriumExperiment {
                moran: s.model.build(base)?,
                horizon: s.horizon,
                lambdas: s.lambdas.clone(),
                reps: s.reps,
                dual_reps: s.dual_reps,
                triples: s.triples,
                tolerance,
                seed,
            })
        }
        Kind::StrongDuality => {
            let s = require(file.strong.as_ref(), "strong")?;
            Plan::Strong(StrongExperiment {
                moran: s.model.build(base)?,
                horizon: s.horizon,
                samples: s.samples,
                entrance_lines: s.entrance_lines,
                triple_samples: s.triple_samples,
                permutations: s.permutations,
                level: s.level,
                seed,
            })
        }
        Kind::GirsanovCheck => {
            let s = require(file.girsanov.as_ref(), "girsanov")?;
            let moran = s.model.build(base)?.with_ancestry(false);
            let exact = s.exact.as_ref().map(|e| {
                let mut small = moran.clone();
                small.n = e.initial_counts.iter().sum();
                (small, e.initial_counts.clone())
            });
            Plan::Girsanov {
                experiment: Box::new(GirsanovExperiment {
                    moran,
                    horizon: s.horizon,
                    gamma: s.gamma,
                    fit_type: s.fit_type,
                    neutral_reps: s.neutral_reps,
                    selective_reps: s.selective_reps,
                    checkpoints: s.checkpoints.clone(),
                    tolerance,
                    ess_floor: s.ess_floor,
                    seed,
                }),
                exact,
            }
        }
        Kind::InfdivCheck => {
            let s = require(file.infdiv.as_ref(), "infdiv")?;
            let laplace = s
                .laplace
                .iter()
                .map(|c| Ok((c.polynomial.build()?, c.reps)))
                .collect::<Result<Vec<_>>>()?;
            if laplace.is_empty()
                && s.split.is_none()
                && s.truncation.is_none()
                && s.semigroup.is_none()
            {
                return Err(CliError::Config("[infdiv] has no checks".into()));
            }
            Plan::Infdiv {
                spec: s.measure()?,
                laplace,
                split: s.split.as_ref().map(|c| (c.parts, c.reps)),
                truncation: s.truncation.as_ref().map(|c| (c.lower, c.reps)),
                semigroup: s.semigroup.as_ref().map(|c| (c.instances, c.max_leaves)),
                level: s.test_level,
            }
        }
        Kind::Diagnostics => {
            let s = require(file.diagnostics.as_ref(), "diagnostics")?;
            let sp = &s.spatial;
            Plan::Diagnostics {
                instances: s.round_trip_instances,
                max_points: s.max_points,
                spatial: SpatialExperiment {
                    rate: sp.resampling_rate,
                    migration_rate: sp.migration_rate,
                    kernel: StochasticMatrix::new(sp.kernel.clone())?,
                    lambda: sp.lambda,
                    horizon: sp.horizon,
                    reps: sp.reps,
                    tolerance,
                    seed,
                },
            }
        }
    })
}

/// Report, replicate values and any extra files of one run.
struct Artifacts {
    outcome: Outcome,
    files: Vec<(String, String)>,
}

impl From<Outcome> for Artifacts {
    fn from(outcome: Outcome) -> Self {
        Artifacts {
            outcome,
            files: Vec::new(),
        }
    }
}

struct Sample {
    genealogy: String,
    events: Option<String>,
    mass_path: Option<String>,
    stats: [f64; 4],
}

fn describe(g: &MarkedSpace) -> [f64; 4] {
    [
        g.total_mass(),
        g.leaf_count() as f64,
        diameter(g),
        tree_height(g),
    ]
}

fn simulate(
    moran: Option<&MoranConfig>,
    branching: Option<&BranchingConfig>,
    horizon: f64,
    replicates: usize,
    seed: u64,
) -> Result<Artifacts> {
    let samples = replicate(replicates, |r| {
        let mut rng = stream(seed, domain::FORWARD, r);
        if let Some(cfg) = moran {
            let state = moran_run(cfg, horizon, &mut rng)?;
            let g = state.genealogy()?;
            Ok(Sample {
                genealogy: to_json(&g),
                events: state.events.as_deref().map(write_jsonl),
                mass_path: None,
                stats: describe(&g),
            })
        } else {
            let cfg = branching.expect("one model is set");
            let state = branching_run(cfg, horizon, &mut rng)?;
            let g = state.genealogy()?;
            Ok(Sample {
                genealogy: to_json(&g),
                events: None,
                mass_path: Some(state.mass_path.to_csv()),
                stats: describe(&g),
            })
        }
    })?;
    let mut files = Vec::new();
    for (r, s) in samples.iter().enumerate() {
        files.push((format!("genealogy-{r}.json"), s.genealogy.clone()));
        if let Some(e) = &s.events {
            files.push((format!("events-{r}.jsonl"), e.clone()));
        }
        if let Some(m) = &s.mass_path {
            files.push((format!("mass-path-{r}.csv"), m.clone()));
        }
    }
    let names = ["total_mass", "leaves", "diameter", "height"];
    let series = names
        .iter()
        .enumerate()
        .map(|(i, name)| Series::new(*name, samples.iter().map(|s| s.stats[i]).collect()))
        .collect();
    Ok(Artifacts {
        outcome: Outcome::new(Report::new("simulate", seed, Vec::new()), series),
        files,
    })
}

fn prefixed_series(series: Vec<Series>, prefix: &str) -> Vec<Series> {
    series
        .into_iter()
        .map(|s| Series::new(format!("{prefix}{}", s.name), s.values))
        .collect()
}

fn execute(plan: &Plan, seed: u64, tolerance: Tolerance) -> Result<Artifacts> {
    Ok(match plan {
        Plan::Simulate {
            moran,
            branching,
            horizon,
            replicates,
        } => simulate(
            moran.as_ref(),
            branching.as_ref(),
            *horizon,
            *replicates,
            seed,
        )?,
        Plan::Duality(exp) => run_moment_duality(exp)?.into(),
        Plan::Fk { cases, exact } => {
            let mut report = Report::new("fk-duality", seed, Vec::new());
            let mut series = Vec::new();
            let labelled = cases.len() > 1;
            for (i, (order, exp)) in cases.iter().enumerate() {
                let out = run_fk_duality(exp)?;
                let (prefix, column) = if labelled {
                    (format!("n = {order}: "), format!("case{i}_"))
                } else {
                    (String::new(), String::new())
                };
                report = report.merge(out.report.prefixed(&prefix));
                series.extend(prefixed_series(out.series, &column));
            }
            let checks = exact
                .iter()
                .map(|&(k, mass, b, lambda, t)| fk_exact_check(k, mass, b, lambda, t))
                .collect::<genealab_verify::Result<Vec<_>>>()?;
            report = report.merge(Report::new("fk-duality", seed, checks));
            Outcome::new(report, series).into()
        }
        Plan::Conditioned(exp) => run_conditioned_duality(exp)?.into(),
        Plan::Equilibrium(exp) => run_equilibrium_check(exp)?.into(),
        Plan::Strong(exp) => run_strong_duality_check(exp)?.into(),
        Plan::Girsanov { experiment, exact } => {
            let out = run_girsanov_check(experiment)?;
            let mut report = out.report;
            if let Some((small, counts)) = exact {
                let check = exact_small_population_check(
                    small,
                    counts,
                    experiment.horizon,
                    experiment.fit_type,
                )?;
                report = report.merge(Report::new("girsanov-check", seed, vec![check]));
            }
            let weights: Vec<Series> = ["M_T", "QV", "weight"]
                .iter()
                .filter_map(|name| out.series.iter().find(|s| s.name == *name).cloned())
                .collect();
            Artifacts {
                outcome: Outcome::new(report, out.series),
                files: vec![("weights.csv".into(), series_csv(&weights))],
            }
        }
        Plan::Infdiv {
            spec,
            laplace,
            split,
            truncation,
            semigroup,
            level,
        } => {
            let mut report = Report::new("infdiv-check", seed, Vec::new());
            let mut series = Vec::new();
            let labelled = laplace.len() > 1;
            for (i, (poly, reps)) in laplace.iter().enumerate() {
                let out = laplace_check(spec, poly, *reps, tolerance, seed.wrapping_add(i as u64))?;
                let prefix = if labelled {
                    format!("functional {i}: ")
                } else {
                    String::new()
                };
                report = report.merge(out.report.prefixed(&prefix));
                series.extend(prefixed_series(out.series, &format!("laplace{i}_")));
            }
            if let Some((parts, reps)) = split {
                let out = split_check(spec, *parts, *reps, *level, seed)?;
                report = report.merge(out.report);
                series.extend(prefixed_series(out.series, "split_"));
            }
            if let Some((lower, reps)) = truncation {
                let out = truncation_check(spec, *lower, *reps, *level, seed)?;
                report = report.merge(out.report);
                series.extend(prefixed_series(out.series, "truncation_"));
            }
            if let Some((instances, max_leaves)) = semigroup {
                report = report.merge(semigroup_laws(*instances, spec.level(), *max_leaves, seed)?);
            }
            Outcome::new(report, series).into()
        }
        Plan::Diagnostics {
            instances,
            max_points,
            spatial,
        } => run_diagnostics(*instances, *max_points, spatial)?.into(),
    })
}

/// What a finished run left behind.
#[derive(Debug)]
pub struct RunResult {
    pub report: Report,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub wall_time: f64,
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| CliError::Io { path, source })
}

/// Worker count: explicit value, else the environment variable, else one
/// per core. Zero also means one per core.
pub fn worker_count(explicit: Option<usize>) -> Result<usize> {
    let n = match explicit {
        Some(n) => n,
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                CliError::Config(format!(
                    "{WORKERS_ENV} must be a non-negative integer, got `{v}`"
                ))
            })?,
            Err(_) => 0,
        },
    };
    Ok(if n == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        n
    })
}

/// Resolves, validates and runs one experiment file, writing the
/// resolved configuration, the report, replicate values and run metadata
/// to the output directory.
pub fn run(kind: Kind, config: &Path, overrides: &Overrides) -> Result<RunResult> {
    let file = load(config)?.resolve(kind, overrides)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let plan = plan(&file, base)?;
    let workers = worker_count(overrides.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;

    let out_dir = file.output_dir();
    fs::create_dir_all(&out_dir).map_err(|source| CliError::Io {
        path: out_dir.clone(),
        source,
    })?;
    write(&out_dir, "resolved_config.toml", &file.to_toml())?;

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let result = pool.install(|| execute(&plan, file.seed, file.tolerance()));
    let wall_time = clock.elapsed().as_secs_f64();
    let metadata = serde_json::json!({
        "tool": "genealab",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": kind.name(),
        "seed": file.seed,
        "workers": workers,
        "started_unix": started,
        "wall_time_seconds": wall_time,
        "completed": result.is_ok(),
    });
    write(
        &out_dir,
        "metadata.json",
        &serde_json::to_string_pretty(&metadata).expect("json"),
    )?;

    let artifacts = match result {
        Ok(a) => a,
        Err(e) => {
            if let Some(partial) = e.partial_report() {
                write(&out_dir, "report.partial.json", &partial.to_json())?;
            }
            return Err(e);
        }
    };
    write(&out_dir, "report.json", &artifacts.outcome.report.to_json())?;
    write(&out_dir, "replicates.csv", &artifacts.outcome.csv())?;
    for (name, text) in &artifacts.files {
        write(&out_dir, name, text)?;
    }
    Ok(RunResult {
        report: artifacts.outcome.report,
        out_dir,
        workers,
        wall_time,
    })
}

/// Exit status of a run: 0 pass, 2 a failed check, 1 an error.
pub fn exit_code(result: &Result<RunResult>) -> i32 {
    match result {
        Ok(r) if r.report.passed() => 0,
        Ok(_) => 2,
        Err(_) => 1,
    }
}
