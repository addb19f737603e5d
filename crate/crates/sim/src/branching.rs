//! Critical and logistic binary branching with ancestry.
//!
//! A population of `C` particles of mass `1/K` each: every particle, at
//! rate `b K`, either splits in two (probability `p`) or dies. Critical
//! branching has `p = 1/2`; the logistic variant uses
//! `p = (1 + c (kappa - M) / K) / 2`, clamped to `[0, 1]`, where `M = C/K`,
//! giving the mass drift `b c M (kappa - M)`.

use genealab_core::{decompose, Mark, MarkedSpace, MassDecomposition, NodeId, Space, TreeBuilder};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::ancestry::Ancestry;
use crate::error::{Result, SimError};
use crate::masspath::MassPath;
use crate::population::{assign, Assignment};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drift {
    Critical,
    Logistic { c: f64, capacity: f64 },
}

#[derive(Clone, Debug)]
pub struct BranchingConfig {
    pub branching_rate: f64,
    /// Particles per unit mass.
    pub granularity: usize,
    pub drift: Drift,
    /// Initial genealogy with unnormalized masses; the initial particle
    /// count is `round(total_mass * K)`.
    pub initial: MarkedSpace,
    pub assignment: Assignment,
    pub particle_cap: usize,
    pub track_ancestry: bool,
}

impl BranchingConfig {
    /// Critical branching from a single ancestor of the given mass.
    pub fn critical(branching_rate: f64, granularity: usize, mass: f64) -> Result<Self> {
        Ok(BranchingConfig {
            branching_rate,
            granularity,
            drift: Drift::Critical,
            initial: MarkedSpace::single_leaf(mass, Mark::default())?,
            assignment: Assignment::Quota,
            particle_cap: 1_000_000,
            track_ancestry: true,
        })
    }

    pub fn with_drift(mut self, drift: Drift) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_initial(mut self, space: MarkedSpace) -> Self {
        self.initial = space;
        self
    }

    pub fn with_ancestry(mut self, track: bool) -> Self {
        self.track_ancestry = track;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.particle_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.granularity == 0 {
            return Err(SimError::InvalidConfig("K must be at least 1".into()));
        }
        if !self.branching_rate.is_finite() || self.branching_rate < 0.0 {
            return Err(SimError::InvalidConfig(
                "branching rate must be finite and >= 0".into(),
            ));
        }
        if let Drift::Logistic { c, capacity } = self.drift {
            if !(c >= 0.0 && c.is_finite() && capacity > 0.0 && capacity.is_finite()) {
                return Err(SimError::InvalidConfig(
                    "logistic needs c >= 0 and capacity > 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Split probability at `count` particles.
    pub fn split_probability(&self, count: usize) -> f64 {
        match self.drift {
            Drift::Critical => 0.5,
            Drift::Logistic { c, capacity } => {
                let k = self.granularity as f64;
                (0.5 * (1.0 + c * (capacity - count as f64 / k) / k)).clamp(0.0, 1.0)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct BranchingState {
    pub time: f64,
    pub marks: Vec<Mark>,
    ancestry: Option<Ancestry>,
    base: MarkedSpace,
    ancestor_leaf: Vec<usize>,
    granularity: usize,
    pub mass_path: MassPath,
}

impl BranchingState {
    pub fn count(&self) -> usize {
        self.marks.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.marks.len() as f64 / self.granularity as f64
    }

    pub fn is_extinct(&self) -> bool {
        self.marks.is_empty()
    }

    fn ancestry(&self) -> Result<&Ancestry> {
        self.ancestry
            .as_ref()
            .ok_or_else(|| SimError::InconsistentAncestry("ancestry was not tracked".into()))
    }

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

    /// Genealogy with particle masses `1/K`; the zero space after
    /// extinction.
    pub fn genealogy(&self) -> Result<MarkedSpace> {
        let mass = 1.0 / self.granularity as f64;
        self.ancestry()?.genealogy(
            self.time,
            mass,
            &self.marks,
            &self.base,
            &self.ancestor_leaf,
        )
    }

    pub fn decomposition(&self) -> Result<MassDecomposition<f64, Mark>> {
        Ok(decompose(&self.genealogy()?)?)
    }
}

/// Runs the branching system to `horizon`, recording the mass after every
/// event.
pub fn branching_run<R: Rng + ?Sized>(
    cfg: &BranchingConfig,
    horizon: f64,
    rng: &mut R,
) -> Result<BranchingState> {
    cfg.validate()?;
    let k = cfg.granularity;
    let count = (cfg.initial.total_mass() * k as f64).round() as usize;
    let ancestor_leaf = if count == 0 {
        Vec::new()
    } else {
        assign(&cfg.initial, count, cfg.assignment, rng)?
    };
    let mut marks: Vec<Mark> = ancestor_leaf.iter().map(|&l| cfg.initial.mark(l)).collect();
    let mut ancestry = cfg.track_ancestry.then(|| Ancestry::new(0..count as u32));
    let kf = k as f64;
    let mut path = MassPath::starting(count as f64 / kf);
    let mut time = 0.0;
    let per_particle = cfg.branching_rate * kf;
    loop {
        let c = marks.len();
        let total = per_particle * c as f64;
        if !(total > 0.0) {
            break;
        }
        let e: f64 = Exp1.sample(rng);
        let next = time + e / total;
        if next > horizon {
            break;
        }
        time = next;
        let i = rng.random_range(0..c);
        let p = cfg.split_probability(c);
        if rng.random::<f64>() < p {
            if c + 1 > cfg.particle_cap {
                return Err(SimError::ParticleBudgetExceeded {
                    cap: cfg.particle_cap,
                    time,
                });
            }
            if let Some(a) = ancestry.as_mut() {
                a.birth(i, time);
            }
            marks.push(marks[i]);
        } else {
            if let Some(a) = ancestry.as_mut() {
                a.remove(i);
            }
            marks.swap_remove(i);
        }
        path.record(time, marks.len() as f64 / kf);
    }
    path.close(horizon);
    Ok(BranchingState {
        time: horizon,
        marks,
        ancestry,
        base: cfg.initial.clone(),
        ancestor_leaf,
        granularity: k,
        mass_path: path,
    })
}

/// Samples the genealogy of `n` distinct particles alive at the end of a
/// branching mass path, exactly in law given the path.
///
/// Going back in time through the births recorded in the path (count
/// `C - 1 -> C`), the newborn pair is a uniform pair of the `C` particles,
/// so two of the `k` traced lines merge with probability
/// `C(k, 2) / C(C, 2)`. Deaths leave the traced lines unaffected.
/// Returns a top tree in the sense of grafting: `n` leaves of mass `1/n`,
/// merges at `2 (T - s)`, and lines unmerged at time 0 joined at `2T`.
pub fn replay_genealogy<R: Rng + ?Sized>(
    path: &MassPath,
    granularity: usize,
    n: usize,
    rng: &mut R,
) -> Result<Space> {
    let kf = granularity as f64;
    let counts: Vec<usize> = path
        .masses()
        .iter()
        .map(|m| (m * kf).round() as usize)
        .collect();
    let end = path.end();
    let last = *counts.last().unwrap();
    if n == 0 || n > last {
        return Err(SimError::InvalidConfig(format!(
            "cannot sample {n} of {last} particles"
        )));
    }
    let mut b = TreeBuilder::new();
    let mut lines: Vec<NodeId> = (0..n).map(|_| b.leaf(1.0 / n as f64, ())).collect();
    for s in (1..counts.len()).rev() {
        if lines.len() < 2 {
            break;
        }
        let (before, after) = (counts[s - 1], counts[s]);
        if after != before + 1 {
            continue;
        }
        let k = lines.len() as f64;
        let c = after as f64;
        if rng.random::<f64>() < k * (k - 1.0) / (c * (c - 1.0)) {
            let pair = sample_indices(rng, lines.len(), 2);
            let (x, y) = (
                pair.index(0).max(pair.index(1)),
                pair.index(0).min(pair.index(1)),
            );
            let a = lines.swap_remove(x);
            let bb = lines.swap_remove(y);
            lines.push(b.internal(2.0 * (end - path.times()[s]), vec![a, bb]));
        }
    }
    let root = if lines.len() == 1 {
        lines[0]
    } else {
        b.internal(2.0 * (end - path.start()), lines)
    };
    Ok(b.build(Some(root))?)
}

/// Pair-distance sampler equivalent to [`replay_genealogy`] with two
/// lines, after an `O(path)` precomputation.
#[derive(Clone, Debug)]
pub struct PairReplay {
    /// Birth times, latest first.
    births: Vec<f64>,
    /// Cumulative `-ln(1 - q)` over `births`.
    hazard: Vec<f64>,
    start: f64,
    end: f64,
}

impl PairReplay {
    pub fn new(path: &MassPath, granularity: usize) -> Result<Self> {
        let kf = granularity as f64;
        let counts: Vec<usize> = path
            .masses()
            .iter()
            .map(|m| (m * kf).round() as usize)
            .collect();
        if *counts.last().unwrap() < 2 {
            return Err(SimError::InvalidConfig(
                "fewer than two particles at the end of the path".into(),
            ));
        }
        let mut births = Vec::new();
        let mut hazard = Vec::new();
        let mut total = 0.0;
        for s in (1..counts.len()).rev() {
            if counts[s] == counts[s - 1] + 1 {
                let c = counts[s] as f64;
                total += -(-2.0 / (c * (c - 1.0))).ln_1p();
                births.push(path.times()[s]);
                hazard.push(total);
            }
        }
        Ok(PairReplay {
            births,
            hazard,
            start: path.start(),
            end: path.end(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        let k = self.hazard.partition_point(|&h| h < e);
        match self.births.get(k) {
            Some(t) => 2.0 * (self.end - t),
            None => 2.0 * (self.end - self.start),
        }
    }
}
