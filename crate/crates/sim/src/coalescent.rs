//! The Kingman coalescent enriched by pairwise coalescence times, with
//! spatial, Feynman-Kac and mass-conditioned variants.
//!
//! Time runs backwards from the sampling time: `u = 0` is the present and
//! `u = T` the initial time of the forward model. Two lines that merged at
//! backward time `u` are at distance `2u`; lines still apart at `T` are at
//! distance `2T` plus the distance of their ancestors in the initial space.

use std::sync::Arc;

use genealab_core::{LeafSampler, Mark, MarkedSpace, NodeId, PolynomialSpec, Space, TreeBuilder};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::kernel::StochasticMatrix;
use crate::masspath::MassPath;

#[derive(Clone, Debug, PartialEq)]
pub enum DualMode {
    Plain,
    /// Accumulates `beta_T = int_0^T d C(k_s, 2) ds` for the weight
    /// `exp(beta_T)`.
    FeynmanKac,
    /// Pairwise rate `b / m(T - u)` given the forward mass path `m`, and 0
    /// while the mass is 0.
    Conditioned(Arc<MassPath>),
}

/// A line at `g` jumps to `g'` at rate `migration_rate * (a(g, g') + a(g', g)) / 2`;
/// only lines at the same site coalesce.
#[derive(Clone, Debug, PartialEq)]
pub struct Spatial {
    pub migration_rate: f64,
    pub kernel: StochasticMatrix,
    /// Site of every line at `u = 0`.
    pub start: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualConfig {
    pub n: usize,
    /// Pairwise coalescence rate `d` (or `b` for the branching duals).
    pub rate: f64,
    pub mode: DualMode,
    pub spatial: Option<Spatial>,
    pub horizon: f64,
    pub record_events: bool,
}

impl DualConfig {
    pub fn plain(n: usize, rate: f64, horizon: f64) -> Self {
        DualConfig {
            n,
            rate,
            mode: DualMode::Plain,
            spatial: None,
            horizon,
            record_events: false,
        }
    }

    pub fn with_mode(mut self, mode: DualMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_spatial(mut self, spatial: Spatial) -> Self {
        self.spatial = Some(spatial);
        self
    }

    pub fn with_events(mut self, record: bool) -> Self {
        self.record_events = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(SimError::InvalidConfig(
                "the dual needs at least one line".into(),
            ));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(SimError::InvalidConfig(
                "coalescence rate must be finite and >= 0".into(),
            ));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(SimError::InvalidConfig(
                "horizon must be finite and >= 0".into(),
            ));
        }
        if let DualMode::Conditioned(path) = &self.mode {
            path.covers(self.horizon)?;
        }
        if let Some(s) = &self.spatial {
            if self.mode != DualMode::Plain {
                return Err(SimError::InvalidConfig("spatial duals are plain".into()));
            }
            if s.start.len() != self.n {
                return Err(SimError::InvalidConfig(format!(
                    "{} start sites for {} lines",
                    s.start.len(),
                    self.n
                )));
            }
            if s.start.iter().any(|g| *g as usize >= s.kernel.len()) {
                return Err(SimError::InvalidConfig(
                    "start site outside the geography".into(),
                ));
            }
            if !(s.migration_rate >= 0.0 && s.migration_rate.is_finite()) {
                return Err(SimError::InvalidConfig(
                    "migration rate must be finite and >= 0".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DualEvent {
    /// Blocks containing lines `a` and `b` merge.
    Merge { u: f64, a: usize, b: usize },
    /// The block containing line `line` moves.
    Move {
        u: f64,
        line: usize,
        from: u32,
        to: u32,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoalescentState {
    pub n: usize,
    pub horizon: f64,
    /// Blocks of lines at the horizon, each sorted.
    pub blocks: Vec<Vec<usize>>,
    /// Site of each block (all 0 without geography).
    pub locations: Vec<u32>,
    /// Merges `(u, a, b)` in time order, naming one line of each block.
    pub merges: Vec<(f64, usize, usize)>,
    pub beta: f64,
    pub mode: DualMode,
    pub spatial: bool,
    pub events: Option<Vec<DualEvent>>,
}

impl CoalescentState {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Backward coalescence times, row-major, `None` for lines still apart
    /// at the horizon.
    pub fn coalescence_matrix(&self) -> Vec<Option<f64>> {
        let n = self.n;
        let mut out = vec![None; n * n];
        let mut block: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut owner: Vec<usize> = (0..n).collect();
        for i in 0..n {
            out[i * n + i] = Some(0.0);
        }
        for &(u, a, b) in &self.merges {
            let (x, y) = (owner[a], owner[b]);
            let moved = std::mem::take(&mut block[y]);
            for &i in &block[x] {
                for &j in &moved {
                    out[i * n + j] = Some(u);
                    out[j * n + i] = Some(u);
                }
            }
            for &j in &moved {
                owner[j] = x;
            }
            block[x].extend(moved);
        }
        out
    }

    /// Pair distances `2 min(T_ij, T)`, row-major.
    pub fn distance_matrix(&self) -> Vec<f64> {
        self.coalescence_matrix()
            .into_iter()
            .map(|c| 2.0 * c.unwrap_or(self.horizon))
            .collect()
    }

    /// The coalescent tree as a space: leaves are lines of mass `1/n`,
    /// merges at `2u`, and blocks still apart at the horizon joined at
    /// `2T`.
    pub fn tree(&self) -> Result<Space> {
        let mut b = TreeBuilder::new();
        let mut node: Vec<NodeId> = (0..self.n)
            .map(|_| b.leaf(1.0 / self.n as f64, ()))
            .collect();
        let mut owner: Vec<usize> = (0..self.n).collect();
        let find = |mut x: usize, owner: &mut Vec<usize>| {
            while owner[x] != x {
                owner[x] = owner[owner[x]];
                x = owner[x];
            }
            x
        };
        for &(u, a, c) in &self.merges {
            let (x, y) = (find(a, &mut owner), find(c, &mut owner));
            let joined = b.internal(2.0 * u, vec![node[x], node[y]]);
            owner[y] = x;
            node[x] = joined;
        }
        let mut roots: Vec<NodeId> = Vec::new();
        for i in 0..self.n {
            if find(i, &mut owner) == i {
                roots.push(node[i]);
            }
        }
        let root = if roots.len() == 1 {
            roots[0]
        } else {
            b.internal(2.0 * self.horizon, roots)
        };
        Ok(b.build(Some(root))?)
    }

    /// `exp(beta_T)`, 1 outside Feynman-Kac mode.
    pub fn weight(&self) -> f64 {
        self.beta.exp()
    }
}

fn pairs(k: usize) -> f64 {
    (k * k.saturating_sub(1)) as f64 / 2.0
}

/// Backward time at which the per-pair hazard accumulated from `u`
/// reaches `target`, or `None` if that happens after `horizon`.
fn conditioned_step(path: &MassPath, rate: f64, horizon: f64, u: f64, target: f64) -> Option<f64> {
    if !(rate > 0.0) {
        return None;
    }
    let f = path.inverse_mass_solve_back(horizon - u, target / rate)?;
    (f >= 0.0).then_some(horizon - f)
}

/// Runs the dual coalescent on `[0, T]`.
pub fn coalescent_run<R: Rng + ?Sized>(cfg: &DualConfig, rng: &mut R) -> Result<CoalescentState> {
    cfg.validate()?;
    let n = cfg.n;
    let horizon = cfg.horizon;
    let mut blocks: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut locations: Vec<u32> = match &cfg.spatial {
        Some(s) => s.start.clone(),
        None => vec![0; n],
    };
    let kernel = cfg
        .spatial
        .as_ref()
        .map(|s| s.kernel.symmetrized())
        .unwrap_or_default();
    let sites = cfg.spatial.as_ref().map_or(0, |s| s.kernel.len());
    let ceiling = (0..sites)
        .map(|g| kernel[g * sites..(g + 1) * sites].iter().sum::<f64>())
        .fold(0.0, f64::max);
    let mut merges = Vec::new();
    let mut events = cfg.record_events.then(Vec::new);
    let mut beta = 0.0;
    let mut u = 0.0;
    let merge = |blocks: &mut Vec<Vec<usize>>,
                 locations: &mut Vec<u32>,
                 x: usize,
                 y: usize|
     -> (usize, usize) {
        let (x, y) = (x.min(y), x.max(y));
        let moved = blocks.swap_remove(y);
        locations.swap_remove(y);
        let (a, b) = (blocks[x][0], moved[0]);
        blocks[x].extend(moved);
        blocks[x].sort_unstable();
        (a, b)
    };
    loop {
        let k = blocks.len();
        if let Some(s) = &cfg.spatial {
            let mut at = vec![0usize; sites];
            for &g in &locations {
                at[g as usize] += 1;
            }
            let coal: f64 = at.iter().map(|&m| cfg.rate * pairs(m)).sum();
            let total = coal + s.migration_rate * ceiling * k as f64;
            if !(total > 0.0) {
                break;
            }
            let e: f64 = Exp1.sample(rng);
            let next = u + e / total;
            if next > horizon {
                break;
            }
            u = next;
            if rng.random::<f64>() * total < coal {
                let mut w = rng.random::<f64>() * coal;
                let mut site = at
                    .iter()
                    .rposition(|&m| m >= 2)
                    .expect("a site with two lines");
                for (g, &m) in at.iter().enumerate() {
                    let r = cfg.rate * pairs(m);
                    if w < r {
                        site = g;
                        break;
                    }
                    w -= r;
                }
                let here: Vec<usize> = (0..k).filter(|&i| locations[i] == site as u32).collect();
                let pick = sample_indices(rng, here.len(), 2);
                let (a, b) = merge(
                    &mut blocks,
                    &mut locations,
                    here[pick.index(0)],
                    here[pick.index(1)],
                );
                merges.push((u, a, b));
                if let Some(ev) = events.as_mut() {
                    ev.push(DualEvent::Merge { u, a, b });
                }
            } else {
                let i = rng.random_range(0..k);
                let from = locations[i];
                let row = &kernel[from as usize * sites..(from as usize + 1) * sites];
                let mut w = rng.random::<f64>() * ceiling;
                let mut to = from;
                for (g, &r) in row.iter().enumerate() {
                    if w < r {
                        to = g as u32;
                        break;
                    }
                    w -= r;
                }
                if to != from {
                    locations[i] = to;
                    if let Some(ev) = events.as_mut() {
                        ev.push(DualEvent::Move {
                            u,
                            line: blocks[i][0],
                            from,
                            to,
                        });
                    }
                }
            }
            continue;
        }
        let p = pairs(k);
        let next = if p == 0.0 {
            None
        } else {
            let e: f64 = Exp1.sample(rng);
            match &cfg.mode {
                DualMode::Conditioned(path) => conditioned_step(path, cfg.rate, horizon, u, e / p),
                _ if cfg.rate > 0.0 => Some(u + e / (cfg.rate * p)).filter(|t| *t <= horizon),
                _ => None,
            }
        };
        let until = next.unwrap_or(horizon);
        if cfg.mode == DualMode::FeynmanKac {
            beta += cfg.rate * p * (until - u);
        }
        let Some(t) = next else { break };
        u = t;
        let pick = sample_indices(rng, k, 2);
        let (a, b) = merge(&mut blocks, &mut locations, pick.index(0), pick.index(1));
        merges.push((u, a, b));
        if let Some(ev) = events.as_mut() {
            ev.push(DualEvent::Merge { u, a, b });
        }
    }
    Ok(CoalescentState {
        n,
        horizon,
        blocks,
        locations,
        merges,
        beta,
        mode: cfg.mode.clone(),
        spatial: cfg.spatial.is_some(),
        events,
    })
}

/// Ancestor sampling when a block sits at a site without initial mass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationFallback {
    #[default]
    Error,
    /// Draw from the whole initial measure instead (an approximation).
    Global,
}

/// Evaluates the duality function: one ancestor per block is drawn from
/// the initial sampling measure (restricted to the block's site in spatial
/// mode), cross-block distances are `2T` plus the ancestors' distance, and
/// the Feynman-Kac mode multiplies by `M_0^k exp(beta_T)` with `k` blocks.
pub fn duality_value<R: Rng + ?Sized>(
    initial: &MarkedSpace,
    state: &CoalescentState,
    poly: &PolynomialSpec<f64>,
    fallback: LocationFallback,
    rng: &mut R,
) -> Result<f64> {
    if poly.order() != state.n {
        return Err(SimError::OrderMismatch {
            expected: state.n,
            found: poly.order(),
        });
    }
    let global = LeafSampler::new(initial)?;
    let mut ancestors = Vec::with_capacity(state.blocks.len());
    for &site in &state.locations {
        let leaf = if state.spatial {
            let local = LeafSampler::from_weights(
                (0..initial.leaf_count())
                    .filter(|&l| initial.mark(l).location == site)
                    .map(|l| (l, initial.leaf_mass(l))),
            );
            match (local, fallback) {
                (Ok(s), _) => s.sample(rng),
                (Err(_), LocationFallback::Global) => global.sample(rng),
                (Err(_), LocationFallback::Error) => return Err(SimError::EmptyLocation(site)),
            }
        } else {
            global.sample(rng)
        };
        ancestors.push(leaf);
    }
    let n = state.n;
    let mut block_of = vec![0usize; n];
    for (b, lines) in state.blocks.iter().enumerate() {
        for &i in lines {
            block_of[i] = b;
        }
    }
    let mut d = state.distance_matrix();
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (block_of[i], block_of[j]);
            if x != y {
                d[i * n + j] += initial.distance(ancestors[x], ancestors[y]);
            }
        }
    }
    let marks: Vec<Mark> = (0..n)
        .map(|i| {
            let b = block_of[i];
            let mut m = initial.mark(ancestors[b]);
            m.location = state.locations[b];
            m
        })
        .collect();
    let mut value = poly.integrand(&mut d, poly.needs_marks().then_some(marks.as_slice()))?;
    if state.mode == DualMode::FeynmanKac {
        value *= initial.total_mass().powi(state.blocks.len() as i32) * state.beta.exp();
    }
    Ok(value)
}

/// A sample of the entrance law at depth `T`: the tree of an `n_lines`
/// coalescent at rate `d`, capped at `2T`.
pub fn entrance_law_tree<R: Rng + ?Sized>(
    n_lines: usize,
    horizon: f64,
    rate: f64,
    rng: &mut R,
) -> Result<Space> {
    coalescent_run(&DualConfig::plain(n_lines, rate, horizon), rng)?.tree()
}
