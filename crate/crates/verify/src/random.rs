//! Random finite ultrametric spaces for law checks.

use genealab_core::{from_distance_matrix, Space};
use rand::Rng;

/// Random agglomeration of `n` points: clusters are merged one pair at a
/// time at non-decreasing heights drawn from `step`, capped at `height`.
/// Returns the row-major distance matrix.
pub fn random_ultrametric<R: Rng + ?Sized>(
    n: usize,
    height: f64,
    step: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut d = vec![0.0; n * n];
    let mut level = 0.0f64;
    while clusters.len() > 1 {
        // Repeated levels produce multifurcations after reduction.
        if rng.random_bool(0.7) {
            level = (level + step * rng.random_range(1..4) as f64).min(height);
        }
        let a = rng.random_range(0..clusters.len());
        let x = clusters.swap_remove(a);
        let b = rng.random_range(0..clusters.len());
        for &i in &x {
            for &j in &clusters[b] {
                d[i * n + j] = level;
                d[j * n + i] = level;
            }
        }
        clusters[b].extend(x);
    }
    d
}

/// Masses in `{1/8, ..., 9/8}`.
pub fn random_masses<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(1..10) as f64 / 8.0)
        .collect()
}

/// A space with `1..=max_leaves` leaves and height at most `2h`, on a grid
/// of `h / 4`, so that some merges sit exactly at `2h`.
pub fn random_component<R: Rng + ?Sized>(h: f64, max_leaves: usize, rng: &mut R) -> Space {
    let n = rng.random_range(1..=max_leaves.max(1));
    let d = random_ultrametric(n, 2.0 * h, h / 4.0, rng);
    from_distance_matrix(&d, &random_masses(n, rng)).expect("generated matrix is ultrametric")
}
