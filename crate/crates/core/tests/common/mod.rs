#![allow(dead_code)]

use genealab_core::{Mark, MarkedSpace, NodeId, Space, TreeBuilder};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random agglomeration of `n` points. Merge heights are multiples of 0.5 so
/// that ties (and hence flattening) occur. Returns the row-major matrix.
pub fn random_ultrametric(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut d = vec![0.0; n * n];
    let mut height = 0.0;
    while clusters.len() > 1 {
        if rng.random_bool(0.7) {
            height += 0.5 * rng.random_range(1..4) as f64;
        }
        let a = rng.random_range(0..clusters.len());
        let x = clusters.swap_remove(a);
        let b = rng.random_range(0..clusters.len());
        for &i in &x {
            for &j in &clusters[b] {
                d[i * n + j] = height;
                d[j * n + i] = height;
            }
        }
        clusters[b].extend(x);
    }
    d
}

pub fn random_masses(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(1..10) as f64 / 8.0)
        .collect()
}

pub fn random_space(n: usize, rng: &mut impl Rng) -> Space {
    let d = random_ultrametric(n, rng);
    let m = random_masses(n, rng);
    genealab_core::from_distance_matrix(&d, &m).unwrap()
}

pub fn random_marked(n: usize, types: u32, rng: &mut impl Rng) -> MarkedSpace {
    let d = random_ultrametric(n, rng);
    let m = random_masses(n, rng);
    let marks: Vec<Mark> = (0..n)
        .map(|_| Mark::new(0, rng.random_range(0..types)))
        .collect();
    genealab_core::from_distance_matrix_with(&d, &m, &marks, false).unwrap()
}

/// Two leaves of masses `a` and `b` at distance `d`.
pub fn pair(a: f64, b: f64, d: f64) -> Space {
    let mut t = TreeBuilder::new();
    let x = t.leaf(a, ());
    let y = t.leaf(b, ());
    let r = t.internal(d, vec![x, y]);
    t.build(Some(r)).unwrap()
}

pub fn leaf(mass: f64) -> Space {
    Space::single_leaf(mass, ()).unwrap()
}

pub fn all_pairs(space: &Space) -> Vec<f64> {
    let n = space.leaf_count();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            out.push(space.distance(i, j));
        }
    }
    out
}

pub fn root_children(space: &Space) -> usize {
    space.root().map_or(0, |r| match r {
        NodeId::Leaf(_) => 0,
        r => space.children(r).len(),
    })
}
