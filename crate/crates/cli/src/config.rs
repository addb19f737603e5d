//! Experiment files: TOML, one table per experiment kind.
//!
//! Parsing is strict (unknown keys are errors) and every optional key has
//! a default that is written out in full by [`ExperimentFile::resolve`].

use std::fmt;
use std::path::{Path, PathBuf};

use genealab_core::{
    from_distance_matrix, from_distance_matrix_with, from_json, DistanceKernel, EvalOptions, Mark,
};
use genealab_core::{MarkedSpace, PolynomialSpec, Space};
use genealab_sim::{
    Assignment, BranchingConfig, Drift, LocationFallback, MoranConfig, StochasticMatrix,
};
use genealab_verify::{LevyAtom, LevyMeasureSpec, Tolerance};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    DualityCheck,
    FkDuality,
    ConditionedDuality,
    Equilibrium,
    StrongDuality,
    GirsanovCheck,
    InfdivCheck,
    Diagnostics,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::DualityCheck => "duality-check",
            Kind::FkDuality => "fk-duality",
            Kind::ConditionedDuality => "conditioned-duality",
            Kind::Equilibrium => "equilibrium",
            Kind::StrongDuality => "strong-duality",
            Kind::GirsanovCheck => "girsanov-check",
            Kind::InfdivCheck => "infdiv-check",
            Kind::Diagnostics => "diagnostics",
        }
    }

    /// Name of the table holding this experiment's parameters.
    pub fn section(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::DualityCheck => "duality",
            Kind::FkDuality => "fk",
            Kind::ConditionedDuality => "conditioned",
            Kind::Equilibrium => "equilibrium",
            Kind::StrongDuality => "strong",
            Kind::GirsanovCheck => "girsanov",
            Kind::InfdivCheck => "infdiv",
            Kind::Diagnostics => "diagnostics",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn three() -> f64 {
    3.0
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn percent() -> f64 {
    0.01
}

fn unit_kernel() -> Vec<Vec<f64>> {
    vec![vec![1.0]]
}

fn default_cap() -> usize {
    1_000_000
}

fn default_ess() -> f64 {
    100.0
}

/// Accept when `|diff| <= z * se + bias`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "three")]
    pub z: f64,
    /// Absolute allowance for finite-size bias; `10 / N` (or `10 / K`)
    /// when absent, 0 for experiments without a population size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { z: 3.0, bias: None }
    }
}

impl ToleranceConfig {
    pub fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.z, self.bias.unwrap_or(0.0))
    }
}

/// Top level of an experiment file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Kind>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality: Option<DualitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fk: Option<FkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioned: Option<ConditionedSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong: Option<StrongSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub girsanov: Option<GirsanovSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infdiv: Option<InfdivSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsSection>,
}

/// Overrides from the command line; `None` keeps the file's value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

pub fn parse(text: &str) -> Result<ExperimentFile> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        let inner = inner.trim_end();
        if path == "." {
            CliError::Config(inner.to_string())
        } else {
            CliError::Config(format!("at `{path}`: {inner}"))
        }
    })
}

pub fn load(path: &Path) -> Result<ExperimentFile> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}

impl ExperimentFile {
    /// Applies overrides and fills every default, so that the result
    /// describes the run completely.
    pub fn resolve(mut self, kind: Kind, overrides: &Overrides) -> Result<Self> {
        if let Some(declared) = self.experiment {
            if declared != kind {
                return Err(CliError::Config(format!(
                    "file declares experiment `{declared}` but the subcommand is `{kind}`"
                )));
            }
        }
        self.experiment = Some(kind);
        let present = self.present_sections();
        if let Some(other) = present.iter().find(|s| **s != kind.section()) {
            return Err(CliError::Config(format!(
                "section [{other}] does not belong to experiment `{kind}`"
            )));
        }
        if present.is_empty() {
            return Err(CliError::Config(format!(
                "missing section [{}] for experiment `{kind}`",
                kind.section()
            )));
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(out) = &overrides.out {
            self.output = Some(out.clone());
        }
        if self.output.is_none() {
            self.output = Some(PathBuf::from("genealab-out").join(kind.name()));
        }
        if let Some(reps) = overrides.reps {
            self.set_reps(reps);
        }
        if self.tolerance.bias.is_none() {
            self.tolerance.bias = Some(self.size().map_or(0.0, |n| 10.0 / n as f64));
        }
        self.fill_marks();
        Ok(self)
    }

    fn present_sections(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let flags = [
            (self.simulate.is_some(), "simulate"),
            (self.duality.is_some(), "duality"),
            (self.fk.is_some(), "fk"),
            (self.conditioned.is_some(), "conditioned"),
            (self.equilibrium.is_some(), "equilibrium"),
            (self.strong.is_some(), "strong"),
            (self.girsanov.is_some(), "girsanov"),
            (self.infdiv.is_some(), "infdiv"),
            (self.diagnostics.is_some(), "diagnostics"),
        ];
        for (present, name) in flags {
            if present {
                out.push(name);
            }
        }
        out
    }

    /// Population size behind the default bias allowance.
    fn size(&self) -> Option<usize> {
        if let Some(s) = &self.simulate {
            return s.model.as_ref().map(|m| m.individuals);
        }
        if let Some(s) = &self.duality {
            return Some(s.model.individuals);
        }
        if let Some(s) = &self.fk {
            return Some(s.branching.granularity);
        }
        if let Some(s) = &self.conditioned {
            return Some(s.branching.granularity);
        }
        if let Some(s) = &self.equilibrium {
            return Some(s.model.individuals);
        }
        if let Some(s) = &self.strong {
            return Some(s.model.individuals);
        }
        if let Some(s) = &self.girsanov {
            return Some(s.model.individuals);
        }
        None
    }

    fn set_reps(&mut self, reps: usize) {
        if let Some(s) = &mut self.simulate {
            s.replicates = reps;
        }
        if let Some(s) = &mut self.duality {
            s.forward_reps = reps;
            s.dual_reps = reps;
        }
        if let Some(s) = &mut self.fk {
            s.forward_reps = reps;
            s.dual_reps = reps;
        }
        if let Some(s) = &mut self.conditioned {
            s.paths = reps;
        }
        if let Some(s) = &mut self.equilibrium {
            s.reps = reps;
        }
        if let Some(s) = &mut self.strong {
            s.samples = reps;
        }
        if let Some(s) = &mut self.girsanov {
            s.neutral_reps = reps;
            s.selective_reps = reps;
        }
        if let Some(s) = &mut self.infdiv {
            for case in &mut s.laplace {
                case.reps = reps;
            }
            if let Some(c) = &mut s.split {
                c.reps = reps;
            }
            if let Some(c) = &mut s.truncation {
                c.reps = reps;
            }
            if let Some(c) = &mut s.semigroup {
                c.instances = reps;
            }
        }
        if let Some(s) = &mut self.diagnostics {
            s.round_trip_instances = reps;
            s.spatial.reps = reps;
        }
    }

    fn fill_marks(&mut self) {
        let models = [
            self.simulate.as_mut().and_then(|s| s.model.as_mut()),
            self.duality.as_mut().map(|s| &mut s.model),
            self.equilibrium.as_mut().map(|s| &mut s.model),
            self.strong.as_mut().map(|s| &mut s.model),
            self.girsanov.as_mut().map(|s| &mut s.model),
        ];
        for model in models.into_iter().flatten() {
            model.initial.fill_marks();
        }
        if let Some(s) = &mut self.duality {
            if s.dual_start.is_empty() {
                s.dual_start = vec![0; s.polynomial.order];
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("resolved configs serialize")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from("genealab-out"))
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance.tolerance()
    }
}

/// Initial genealogy of a Moran model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    /// One leaf of mass 1: every pair starts at distance 0.
    #[default]
    SingleAncestor,
    /// Leaves with the given masses, pairwise at `distance`.
    Star {
        masses: Vec<f64>,
        distance: f64,
        #[serde(default)]
        locations: Vec<u32>,
        #[serde(default)]
        types: Vec<u32>,
    },
    /// Ultrametric distance matrix, one row per leaf.
    Matrix {
        distances: Vec<Vec<f64>>,
        masses: Vec<f64>,
        #[serde(default)]
        locations: Vec<u32>,
        #[serde(default)]
        types: Vec<u32>,
    },
    /// One entry per individual, all at distance 0.
    Individuals {
        #[serde(default)]
        locations: Vec<u32>,
        #[serde(default)]
        types: Vec<u32>,
    },
    /// A marked space in the JSON format written by `simulate`, relative
    /// to the experiment file.
    File { path: PathBuf },
}

fn marks(count: usize, locations: &[u32], types: &[u32]) -> Result<Vec<Mark>> {
    let field = |v: &[u32], name: &str| -> Result<Vec<u32>> {
        match v.len() {
            0 => Ok(vec![0; count]),
            n if n == count => Ok(v.to_vec()),
            n => Err(CliError::Config(format!(
                "`{name}` has {n} entries, expected {count}"
            ))),
        }
    };
    let l = field(locations, "locations")?;
    let t = field(types, "types")?;
    Ok(l.into_iter().zip(t).map(|(l, t)| Mark::new(l, t)).collect())
}

impl Initial {
    fn fill_marks(&mut self) {
        match self {
            Initial::Star {
                masses,
                locations,
                types,
                ..
            }
            | Initial::Matrix {
                masses,
                locations,
                types,
                ..
            } => {
                for v in [locations, types] {
                    if v.is_empty() {
                        *v = vec![0; masses.len()];
                    }
                }
            }
            Initial::Individuals { locations, types } => {
                let n = locations.len().max(types.len());
                for v in [locations, types] {
                    if v.is_empty() {
                        *v = vec![0; n];
                    }
                }
            }
            Initial::SingleAncestor | Initial::File { .. } => {}
        }
    }

    pub fn space(&self, base: &Path) -> Result<MarkedSpace> {
        Ok(match self {
            Initial::SingleAncestor => MarkedSpace::single_leaf(1.0, Mark::default())?,
            Initial::Star {
                masses,
                distance,
                locations,
                types,
            } => MarkedSpace::star(masses, &marks(masses.len(), locations, types)?, *distance)?,
            Initial::Matrix {
                distances,
                masses,
                locations,
                types,
            } => {
                let flat = flatten(distances, masses.len())?;
                from_distance_matrix_with(
                    &flat,
                    masses,
                    &marks(masses.len(), locations, types)?,
                    false,
                )?
            }
            Initial::Individuals { .. } => {
                return Err(CliError::Config(
                    "individuals do not form an initial space".into(),
                ));
            }
            Initial::File { path } => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|source| CliError::Io { path: full, source })?;
                from_json(&text)?
            }
        })
    }
}

fn flatten(rows: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!(
            "distance matrix must be {n} x {n}"
        )));
    }
    Ok(rows.concat())
}

/// Moran model parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoranModel {
    pub individuals: usize,
    pub resampling_rate: f64,
    #[serde(default)]
    pub mutation_rate: f64,
    #[serde(default = "unit_kernel")]
    pub mutation_kernel: Vec<Vec<f64>>,
    #[serde(default)]
    pub migration_rate: f64,
    #[serde(default = "unit_kernel")]
    pub migration_kernel: Vec<Vec<f64>>,
    #[serde(default)]
    pub selection: f64,
    /// Fitness per type in `[0, 1]`.
    #[serde(default)]
    pub fitness: Vec<f64>,
    #[serde(default)]
    pub assignment: Assignment,
    #[serde(default)]
    pub initial: Initial,
}

impl MoranModel {
    pub fn build(&self, base: &Path) -> Result<MoranConfig> {
        let cfg = MoranConfig::neutral(self.individuals, self.resampling_rate)
            .with_mutation(
                self.mutation_rate,
                StochasticMatrix::new(self.mutation_kernel.clone())?,
            )
            .with_migration(
                self.migration_rate,
                StochasticMatrix::new(self.migration_kernel.clone())?,
            )
            .with_selection(self.selection, self.fitness.clone());
        let cfg = match &self.initial {
            Initial::Individuals { locations, types } => {
                let m = marks(locations.len().max(types.len()), locations, types)?;
                if m.len() != self.individuals {
                    return Err(CliError::Config(format!(
                        "{} individuals listed for a population of {}",
                        m.len(),
                        self.individuals
                    )));
                }
                cfg.with_individuals(m)
            }
            other => cfg.with_initial(other.space(base)?, self.assignment),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    #[default]
    Critical,
    Logistic {
        c: f64,
        capacity: f64,
    },
}

/// Branching particle system started from one ancestor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingModel {
    /// Particles per unit mass.
    pub granularity: usize,
    pub branching_rate: f64,
    #[serde(default = "one")]
    pub initial_mass: f64,
    #[serde(default)]
    pub drift: DriftConfig,
    #[serde(default = "default_cap")]
    pub particle_cap: usize,
}

impl BranchingModel {
    pub fn build(&self) -> Result<BranchingConfig> {
        let drift = match self.drift {
            DriftConfig::Critical => Drift::Critical,
            DriftConfig::Logistic { c, capacity } => Drift::Logistic { c, capacity },
        };
        let cfg =
            BranchingConfig::critical(self.branching_rate, self.granularity, self.initial_mass)?
                .with_drift(drift)
                .with_cap(self.particle_cap);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Kernel of a polynomial, the same rate or cap for every pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Constant { value: f64 },
    Exponential { rate: f64 },
    Threshold { cap: f64 },
    Tent { level: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialConfig {
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    pub kernel: KernelConfig,
}

impl PolynomialConfig {
    pub fn build(&self) -> Result<PolynomialSpec<f64>> {
        let n = self.order;
        let kernel = match self.kernel {
            KernelConfig::Constant { value } => DistanceKernel::Constant(value),
            KernelConfig::Exponential { rate } => DistanceKernel::exponential_uniform(n, rate),
            KernelConfig::Threshold { cap } => DistanceKernel::threshold_uniform(n, cap),
            KernelConfig::Tent { level } => DistanceKernel::Tent(level),
        };
        let poly = PolynomialSpec::new(n, kernel)?;
        Ok(match self.truncation {
            Some(h) => poly.truncated(h),
            None => poly,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Evaluation {
    /// Sum over all ordered tuples of leaves.
    #[default]
    Exact,
    MonteCarlo {
        samples: usize,
    },
}

impl Evaluation {
    pub fn options(self) -> EvalOptions {
        match self {
            Evaluation::Exact => EvalOptions::exact(),
            Evaluation::MonteCarlo { samples } => EvalOptions::monte_carlo(samples),
        }
    }
}

/// Forward simulation writing genealogies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub horizon: f64,
    #[serde(default = "one_usize")]
    pub replicates: usize,
    #[serde(default)]
    pub record_events: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<MoranModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching: Option<BranchingModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualitySection {
    pub horizon: f64,
    pub forward_reps: usize,
    pub dual_reps: usize,
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    /// Also compare both sides with the closed-form pair moment (single
    /// ancestor, order 2, exponential kernel, one site).
    #[serde(default)]
    pub closed_form: bool,
    #[serde(default)]
    pub fallback: LocationFallback,
    /// Sites of the dual lines at time 0.
    #[serde(default)]
    pub dual_start: Vec<u32>,
    #[serde(default)]
    pub evaluation: Evaluation,
    pub polynomial: PolynomialConfig,
    pub model: MoranModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkCase {
    /// Also compare with `c * M_0` (order 1, constant kernel `c`,
    /// critical drift).
    #[serde(default)]
    pub closed_form: bool,
    pub polynomial: PolynomialConfig,
}

/// Exact small-`K` comparison with an exponential pair kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkExact {
    pub granularities: Vec<usize>,
    pub mass: f64,
    pub rate: f64,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkSection {
    pub horizon: f64,
    pub forward_reps: usize,
    pub dual_reps: usize,
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default)]
    pub evaluation: Evaluation,
    pub branching: BranchingModel,
    #[serde(default)]
    pub cases: Vec<FkCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<FkExact>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionedSection {
    pub horizon: f64,
    pub paths: usize,
    pub samples_per_path: usize,
    #[serde(default = "percent")]
    pub level: f64,
    pub branching: BranchingModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumSection {
    pub horizon: f64,
    pub lambdas: Vec<f64>,
    pub reps: usize,
    pub dual_reps: usize,
    pub triples: usize,
    pub model: MoranModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongSection {
    pub horizon: f64,
    pub samples: usize,
    pub entrance_lines: usize,
    pub triple_samples: usize,
    pub permutations: usize,
    #[serde(default = "percent")]
    pub level: f64,
    pub model: MoranModel,
}

/// Exact reweighting check on a small population with the same rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GirsanovExact {
    /// Individuals of each type at time 0; their sum is the population.
    pub initial_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GirsanovSection {
    pub horizon: f64,
    /// Defaults to the resampling rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub fit_type: u32,
    pub neutral_reps: usize,
    pub selective_reps: usize,
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default = "default_ess")]
    pub ess_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<GirsanovExact>,
    pub model: MoranModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub intensity: f64,
    pub masses: Vec<f64>,
    pub distances: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceCase {
    pub reps: usize,
    pub polynomial: PolynomialConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitCase {
    pub parts: usize,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationCase {
    pub lower: f64,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupCase {
    pub instances: usize,
    pub max_leaves: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfdivSection {
    /// Concatenation level `h`.
    pub level: f64,
    /// Significance level of the distribution tests.
    #[serde(default = "percent")]
    pub test_level: f64,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
    #[serde(default)]
    pub laplace: Vec<LaplaceCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semigroup: Option<SemigroupCase>,
}

impl InfdivSection {
    pub fn measure(&self) -> Result<LevyMeasureSpec> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| -> Result<LevyAtom> {
                let space: Space =
                    from_distance_matrix(&flatten(&a.distances, a.masses.len())?, &a.masses)?;
                Ok(LevyAtom {
                    intensity: a.intensity,
                    space,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LevyMeasureSpec::new(self.level, atoms)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialConfig {
    pub resampling_rate: f64,
    pub migration_rate: f64,
    pub kernel: Vec<Vec<f64>>,
    pub lambda: f64,
    pub horizon: f64,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub round_trip_instances: usize,
    pub max_points: usize,
    pub spatial: SpatialConfig,
}
