//! Sampling leaves proportionally to their mass.

use rand::Rng;

use crate::error::{GenealogyError, Result};
use crate::mark::LeafMark;
use crate::matrix::DistanceMatrixSample;
use crate::scalar::Scalar;
use crate::space::UltrametricSpace;

/// Draws leaf labels i.i.d. from the normalized sampling measure.
#[derive(Clone, Debug)]
pub struct LeafSampler {
    cumulative: Vec<f64>,
    labels: Vec<usize>,
}

impl LeafSampler {
    pub fn new<T: Scalar, M: LeafMark>(space: &UltrametricSpace<T, M>) -> Result<Self> {
        Self::from_weights(
            space
                .leaf_order()
                .iter()
                .map(|&l| (l, space.leaf_mass(l).as_f64())),
        )
    }

    /// Sampler over arbitrary `(label, weight)` pairs.
    pub fn from_weights(weights: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut cumulative = Vec::new();
        let mut labels = Vec::new();
        let mut acc = 0.0;
        for (label, w) in weights {
            if w > 0.0 {
                acc += w;
                cumulative.push(acc);
                labels.push(label);
            }
        }
        if labels.is_empty() {
            return Err(GenealogyError::EmptySpace);
        }
        Ok(LeafSampler { cumulative, labels })
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("nonempty sampler")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.total();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.labels[i.min(self.labels.len() - 1)]
    }
}

/// Draws `n` leaves i.i.d. from the normalized sampling measure and reads
/// their distance matrix (and marks, when the space is marked).
pub fn sample_distance_matrix<T: Scalar, M: LeafMark, R: Rng + ?Sized>(
    space: &UltrametricSpace<T, M>,
    n: usize,
    rng: &mut R,
) -> Result<DistanceMatrixSample<T>> {
    if n == 0 {
        return Err(GenealogyError::InvalidArgument(
            "sample order must be at least 1".into(),
        ));
    }
    let sampler = LeafSampler::new(space)?;
    let leaves: Vec<usize> = (0..n).map(|_| sampler.sample(rng)).collect();
    Ok(DistanceMatrixSample::from_leaves(space, &leaves))
}
