use genealab_core::{LeafMark, LeafSampler, UltrametricSpace};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// How individuals of the initial population are attached to the leaves
/// of the initial space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// Deterministic largest-remainder quotas proportional to leaf mass.
    #[default]
    Quota,
    /// Independent draws from the sampling measure.
    Iid,
}

/// Largest-remainder apportionment of `count` individuals to leaves in
/// proportion to `weights`; ties go to the lower index. Returns one leaf
/// label per individual, in leaf order.
pub fn quota(weights: &[f64], count: usize) -> Result<Vec<usize>> {
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || !(total > 0.0) {
        return Err(SimError::ZeroPopulation);
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / total * count as f64).collect();
    let mut seats: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let given: usize = seats.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(count.saturating_sub(given)) {
        seats[i] += 1;
    }
    Ok(seats
        .iter()
        .enumerate()
        .flat_map(|(leaf, &k)| std::iter::repeat_n(leaf, k))
        .collect())
}

/// Initial leaf of each of `count` individuals.
pub fn assign<M: LeafMark, R: Rng + ?Sized>(
    space: &UltrametricSpace<f64, M>,
    count: usize,
    how: Assignment,
    rng: &mut R,
) -> Result<Vec<usize>> {
    match how {
        Assignment::Quota => quota(&space.leaf_masses(), count),
        Assignment::Iid => {
            let sampler = LeafSampler::new(space)?;
            Ok((0..count).map(|_| sampler.sample(rng)).collect())
        }
    }
}
