//! Exact-jump Moran model with resampling, mutation, migration and
//! fitness-biased replacement.
//!
//! Event rules for `N` individuals:
//! - every unordered pair at the same site resamples at rate `d`; one of the
//!   two, chosen uniformly, is replaced by an offspring of the other, which
//!   inherits the parent's type and keeps the replaced individual's site;
//! - every individual mutates at rate `theta`, drawing its new type from
//!   the row of `beta` for its current type;
//! - every individual migrates at rate `c`, drawing its new site from the
//!   row of `A`;
//! - every ordered same-site pair `(i, j)` fires at the additional rate
//!   `alpha * chi(type_i) / N`, replacing `j` by an offspring of `i`.

use genealab_core::{Mark, MarkedSpace, UltrametricSpace};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::ancestry::Ancestry;
use crate::error::{Result, SimError};
use crate::events::Event;
use crate::kernel::StochasticMatrix;
use crate::population::{assign, Assignment};

/// Initial population.
#[derive(Clone, Debug)]
pub enum MoranInitial {
    /// Individuals are attached to the leaves of a space and inherit the
    /// leaves' marks.
    Space {
        space: MarkedSpace,
        assignment: Assignment,
    },
    /// One mark per individual; all pairs start at distance 0 and the
    /// population size is the list length.
    Individuals(Vec<Mark>),
}

#[derive(Clone, Debug)]
pub struct MoranConfig {
    pub n: usize,
    pub resampling_rate: f64,
    pub mutation_rate: f64,
    pub mutation_kernel: StochasticMatrix,
    pub migration_rate: f64,
    pub migration_kernel: StochasticMatrix,
    pub selection: f64,
    /// Fitness `chi` per type, in `[0, 1]`; empty means `chi = 0`.
    pub fitness: Vec<f64>,
    pub initial: MoranInitial,
    pub track_ancestry: bool,
    pub record_events: bool,
}

impl MoranConfig {
    /// Neutral single-site, single-type model started from one ancestor.
    pub fn neutral(n: usize, resampling_rate: f64) -> Self {
        MoranConfig {
            n,
            resampling_rate,
            mutation_rate: 0.0,
            mutation_kernel: StochasticMatrix::identity(1),
            migration_rate: 0.0,
            migration_kernel: StochasticMatrix::identity(1),
            selection: 0.0,
            fitness: Vec::new(),
            initial: MoranInitial::Space {
                space: UltrametricSpace::single_leaf(1.0, Mark::default()).expect("unit leaf"),
                assignment: Assignment::Quota,
            },
            track_ancestry: true,
            record_events: false,
        }
    }

    pub fn with_initial(mut self, space: MarkedSpace, assignment: Assignment) -> Self {
        self.initial = MoranInitial::Space { space, assignment };
        self
    }

    pub fn with_individuals(mut self, marks: Vec<Mark>) -> Self {
        self.n = marks.len();
        self.initial = MoranInitial::Individuals(marks);
        self
    }

    pub fn with_mutation(mut self, rate: f64, kernel: StochasticMatrix) -> Self {
        self.mutation_rate = rate;
        self.mutation_kernel = kernel;
        self
    }

    pub fn with_migration(mut self, rate: f64, kernel: StochasticMatrix) -> Self {
        self.migration_rate = rate;
        self.migration_kernel = kernel;
        self
    }

    pub fn with_selection(mut self, alpha: f64, fitness: Vec<f64>) -> Self {
        self.selection = alpha;
        self.fitness = fitness;
        self
    }

    pub fn with_events(mut self, record: bool) -> Self {
        self.record_events = record;
        self
    }

    pub fn with_ancestry(mut self, track: bool) -> Self {
        self.track_ancestry = track;
        self
    }

    /// The initial genealogy; individual lists become a star at distance 0
    /// with masses `1/N`.
    pub fn initial_space(&self) -> Result<MarkedSpace> {
        Ok(match &self.initial {
            MoranInitial::Space { space, .. } => space.clone(),
            MoranInitial::Individuals(marks) => {
                let mass = 1.0 / marks.len() as f64;
                UltrametricSpace::star(&vec![mass; marks.len()], marks, 0.0)?
            }
        })
    }

    pub fn types(&self) -> usize {
        self.mutation_kernel.len()
    }

    pub fn locations(&self) -> usize {
        self.migration_kernel.len()
    }

    pub fn fitness_of(&self, genotype: u32) -> f64 {
        self.fitness.get(genotype as usize).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(SimError::ZeroPopulation);
        }
        for (name, v) in [
            ("resampling rate", self.resampling_rate),
            ("mutation rate", self.mutation_rate),
            ("migration rate", self.migration_rate),
            ("selection coefficient", self.selection),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !self.fitness.is_empty() && self.fitness.len() != self.types() {
            return Err(SimError::InvalidConfig(format!(
                "fitness has {} entries for {} types",
                self.fitness.len(),
                self.types()
            )));
        }
        if self.fitness.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(SimError::InvalidConfig(
                "fitness values must lie in [0, 1]".into(),
            ));
        }
        let check = |m: &Mark| -> Result<()> {
            if m.location as usize >= self.locations() || m.genotype as usize >= self.types() {
                return Err(SimError::InvalidConfig(format!(
                    "mark (location {}, type {}) outside {} locations and {} types",
                    m.location,
                    m.genotype,
                    self.locations(),
                    self.types()
                )));
            }
            Ok(())
        };
        match &self.initial {
            MoranInitial::Space { space, .. } => {
                if !(space.total_mass() > 0.0) {
                    return Err(SimError::ZeroPopulation);
                }
                space.marks().iter().try_for_each(check)?;
            }
            MoranInitial::Individuals(marks) => {
                if marks.len() != self.n {
                    return Err(SimError::InvalidConfig(format!(
                        "{} initial individuals for N = {}",
                        marks.len(),
                        self.n
                    )));
                }
                marks.iter().try_for_each(check)?;
            }
        }
        Ok(())
    }
}

/// Population at a given time.
#[derive(Clone, Debug)]
pub struct MoranState {
    pub time: f64,
    pub marks: Vec<Mark>,
    ancestry: Option<Ancestry>,
    /// Initial space, and the leaf of it carrying each initial individual.
    base: MarkedSpace,
    ancestor_leaf: Vec<usize>,
    pub events: Option<Vec<Event>>,
}

impl MoranState {
    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn initial_space(&self) -> &MarkedSpace {
        &self.base
    }

    fn ancestry(&self) -> Result<&Ancestry> {
        self.ancestry
            .as_ref()
            .ok_or_else(|| SimError::InconsistentAncestry("ancestry was not tracked".into()))
    }

    /// Time of the most recent common ancestor, `None` if the lineages did
    /// not meet within the run.
    pub fn coalescence_time(&self, i: usize, j: usize) -> Result<Option<f64>> {
        Ok(self.ancestry()?.coalescence_time(i, j, self.time))
    }

    /// Row-major `T_MRCA` matrix.
    pub fn coalescence_matrix(&self) -> Result<Vec<Option<f64>>> {
        Ok(self.ancestry()?.coalescence_matrix(self.time))
    }

    /// Genealogical distance of two individuals, consulting the initial
    /// space for lineages that reach time 0.
    pub fn pair_distance(&self, i: usize, j: usize) -> Result<f64> {
        let a = self.ancestry()?;
        Ok(match a.coalescence_time(i, j, self.time) {
            Some(t) => 2.0 * (self.time - t),
            None => {
                let (x, y) = (a.origin(i) as usize, a.origin(j) as usize);
                2.0 * self.time
                    + self
                        .base
                        .distance(self.ancestor_leaf[x], self.ancestor_leaf[y])
            }
        })
    }

    /// The genealogy of the living population: `N` leaves of mass `1/N`.
    pub fn genealogy(&self) -> Result<MarkedSpace> {
        let n = self.marks.len() as f64;
        self.ancestry()?.genealogy(
            self.time,
            1.0 / n,
            &self.marks,
            &self.base,
            &self.ancestor_leaf,
        )
    }

    pub fn type_counts(&self, types: usize) -> Vec<usize> {
        let mut c = vec![0; types];
        for m in &self.marks {
            if let Some(x) = c.get_mut(m.genotype as usize) {
                *x += 1;
            }
        }
        c
    }

    /// Fraction of individuals of the given type.
    pub fn type_frequency(&self, genotype: u32) -> f64 {
        self.marks.iter().filter(|m| m.genotype == genotype).count() as f64
            / self.marks.len() as f64
    }
}

/// Uniform value below `bound` from the 32-bit word `x`, by Lemire's
/// multiply-and-reject; `None` asks for a fresh word.
#[inline]
fn below(x: u32, bound: u32) -> Option<u32> {
    let m = x as u64 * bound as u64;
    let low = m as u32;
    if low < bound && low < bound.wrapping_neg() % bound {
        return None;
    }
    Some((m >> 32) as u32)
}

/// Uniform ordered pair of distinct indices below `k`, usually from a
/// single 64-bit draw.
#[inline]
pub(crate) fn distinct_pair<R: Rng + ?Sized>(k: usize, rng: &mut R) -> (usize, usize) {
    debug_assert!(k >= 2 && k <= u32::MAX as usize);
    let k = k as u32;
    loop {
        let x: u64 = rng.random();
        let (Some(i), Some(mut j)) = (below(x as u32, k), below((x >> 32) as u32, k - 1)) else {
            continue;
        };
        if j >= i {
            j += 1;
        }
        return (i as usize, j as usize);
    }
}

/// A Moran simulation that can be advanced in stages.
pub struct Moran<'a> {
    cfg: &'a MoranConfig,
    state: MoranState,
    sites: Vec<Vec<u32>>,
    position: Vec<u32>,
    rates: [f64; 4],
    total: f64,
}

impl<'a> Moran<'a> {
    pub fn new<R: Rng + ?Sized>(cfg: &'a MoranConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let base = cfg.initial_space()?;
        let ancestor_leaf = match &cfg.initial {
            MoranInitial::Space { assignment, .. } => assign(&base, cfg.n, *assignment, rng)?,
            MoranInitial::Individuals(marks) => (0..marks.len()).collect(),
        };
        let marks: Vec<Mark> = ancestor_leaf.iter().map(|&l| base.mark(l)).collect();
        let ancestry = cfg.track_ancestry.then(|| Ancestry::new(0..cfg.n as u32));
        let events = cfg.record_events.then(|| {
            vec![Event::Start {
                n: cfg.n,
                resampling_rate: cfg.resampling_rate,
                mutation_rate: cfg.mutation_rate,
                mutation_kernel: cfg.mutation_kernel.clone(),
                selection: cfg.selection,
                types: cfg.types(),
                locations: cfg.locations(),
                marks: marks.clone(),
            }]
        });
        let mut sites = vec![Vec::new(); cfg.locations()];
        let mut position = vec![0u32; cfg.n];
        for (i, m) in marks.iter().enumerate() {
            let s = &mut sites[m.location as usize];
            position[i] = s.len() as u32;
            s.push(i as u32);
        }
        let mut sim = Moran {
            cfg,
            state: MoranState {
                time: 0.0,
                marks,
                ancestry,
                base,
                ancestor_leaf,
                events,
            },
            sites,
            position,
            rates: [0.0; 4],
            total: 0.0,
        };
        sim.update_rates();
        Ok(sim)
    }

    fn update_rates(&mut self) {
        let n = self.cfg.n as f64;
        let pairs: f64 = self
            .sites
            .iter()
            .map(|s| (s.len() * s.len().saturating_sub(1)) as f64)
            .sum();
        self.rates = [
            self.cfg.resampling_rate * pairs / 2.0,
            self.cfg.selection / n * pairs,
            self.cfg.mutation_rate * n,
            self.cfg.migration_rate * n,
        ];
        self.total = self.rates.iter().sum();
    }

    pub fn state(&self) -> &MoranState {
        &self.state
    }

    pub fn into_state(mut self) -> MoranState {
        if let Some(log) = self.state.events.as_mut() {
            log.push(Event::End { t: self.state.time });
        }
        self.state
    }

    /// Uniform ordered pair of distinct individuals at a site chosen with
    /// probability proportional to its number of ordered pairs.
    fn pick_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let pick = |k: usize, rng: &mut R| distinct_pair(k, rng);
        if self.sites.len() == 1 {
            return pick(self.cfg.n, rng);
        }
        let total: usize = self
            .sites
            .iter()
            .map(|s| s.len() * s.len().saturating_sub(1))
            .sum();
        let mut u = rng.random_range(0..total);
        for s in &self.sites {
            let w = s.len() * s.len().saturating_sub(1);
            if u < w {
                let (i, j) = pick(s.len(), rng);
                return (s[i] as usize, s[j] as usize);
            }
            u -= w;
        }
        unreachable!("pair weights are positive")
    }

    fn replace(&mut self, parent: usize, child: usize, selective: bool) {
        let t = self.state.time;
        if let Some(a) = self.state.ancestry.as_mut() {
            a.copy(parent, child, t);
        }
        self.state.marks[child].genotype = self.state.marks[parent].genotype;
        if let Some(log) = self.state.events.as_mut() {
            log.push(if selective {
                Event::Select { t, parent, child }
            } else {
                Event::Resample { t, parent, child }
            });
        }
    }

    fn migrate(&mut self, i: usize, to: u32) {
        let from = self.state.marks[i].location;
        let site = &mut self.sites[from as usize];
        let p = self.position[i] as usize;
        site.swap_remove(p);
        if p < site.len() {
            self.position[site[p] as usize] = p as u32;
        }
        let dest = &mut self.sites[to as usize];
        self.position[i] = dest.len() as u32;
        dest.push(i as u32);
        self.state.marks[i].location = to;
        self.update_rates();
        if let Some(log) = self.state.events.as_mut() {
            log.push(Event::Migrate {
                t: self.state.time,
                individual: i,
                from,
                to,
            });
        }
    }

    /// Runs until `horizon`; the state is then the population at exactly
    /// that time.
    pub fn advance<R: Rng + ?Sized>(&mut self, horizon: f64, rng: &mut R) {
        let only_resampling = self.rates[1..].iter().all(|r| *r == 0.0);
        loop {
            if !(self.total > 0.0) {
                break;
            }
            let e: f64 = Exp1.sample(rng);
            let next = self.state.time + e / self.total;
            if next > horizon {
                break;
            }
            self.state.time = next;
            if only_resampling {
                let (i, j) = self.pick_pair(rng);
                self.replace(i, j, false);
                continue;
            }
            let mut u = rng.random::<f64>() * self.total;
            if u < self.rates[0] {
                let (i, j) = self.pick_pair(rng);
                self.replace(i, j, false);
                continue;
            }
            u -= self.rates[0];
            if u < self.rates[1] {
                let (i, j) = self.pick_pair(rng);
                let chi = self.cfg.fitness_of(self.state.marks[i].genotype);
                if chi >= 1.0 || (chi > 0.0 && rng.random::<f64>() < chi) {
                    self.replace(i, j, true);
                }
                continue;
            }
            u -= self.rates[1];
            let i = rng.random_range(0..self.cfg.n);
            if u < self.rates[2] {
                let from = self.state.marks[i].genotype;
                let to = self.cfg.mutation_kernel.sample(from as usize, rng) as u32;
                if to != from {
                    self.state.marks[i].genotype = to;
                    if let Some(log) = self.state.events.as_mut() {
                        log.push(Event::Mutate {
                            t: self.state.time,
                            individual: i,
                            from,
                            to,
                        });
                    }
                }
            } else {
                let from = self.state.marks[i].location;
                let to = self.cfg.migration_kernel.sample(from as usize, rng) as u32;
                if to != from {
                    self.migrate(i, to);
                }
            }
        }
        self.state.time = self.state.time.max(horizon);
    }
}

/// Runs a Moran model from time 0 to `horizon`.
pub fn moran_run<R: Rng + ?Sized>(
    cfg: &MoranConfig,
    horizon: f64,
    rng: &mut R,
) -> Result<MoranState> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(SimError::InvalidConfig(format!(
            "horizon {horizon} must be finite and >= 0"
        )));
    }
    let mut sim = Moran::new(cfg, rng)?;
    sim.advance(horizon, rng);
    Ok(sim.into_state())
}
