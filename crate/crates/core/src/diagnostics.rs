//! Equivalence-class digests and compactness functionals: diameter, covering
//! numbers, and bounds on the Gromov-Prohorov distance.

use rand::seq::SliceRandom;
use rand::Rng;
use sha2::{Digest as _, Sha256};

use crate::error::{GenealogyError, Result};
use crate::mark::LeafMark;
use crate::scalar::Scalar;
use crate::space::{Digest, NodeId, UltrametricSpace};
use crate::stats::wasserstein1;

/// Largest merge value of the stored tree, zero-mass leaves included.
pub fn tree_height<T: Scalar, M: LeafMark>(space: &UltrametricSpace<T, M>) -> T {
    space.root().map_or(T::zero(), |r| space.merge_value(r))
}

/// Essential supremum of the distance: the largest merge value separating
/// two leaves of positive mass. Zero for the zero element.
pub fn diameter<T: Scalar, M: LeafMark>(space: &UltrametricSpace<T, M>) -> T {
    let mut best = T::zero();
    for node in space.internal_nodes() {
        let positive = space
            .children(node)
            .iter()
            .filter(|c| space.node_mass(**c) > T::zero())
            .count();
        if positive >= 2 {
            best = best.max(space.merge_value(node));
        }
    }
    best
}

/// Mass rounded to 40 significant bits, so that `m / c * c` and `m` hash
/// alike.
fn quantized_mass<T: Scalar>(m: T) -> u64 {
    let bits = m.canonical_bits();
    if bits == 0 {
        return 0;
    }
    (bits + (1 << 11)) & !((1u64 << 12) - 1)
}

/// Digest of the equivalence class: invariant under relabeling, removal of
/// zero-mass leaves, and merging of zero-distance leaves with equal marks.
/// Masses are compared to 40 significant bits, distances exactly.
pub fn canonical_hash<T: Scalar, M: LeafMark>(space: &UltrametricSpace<T, M>) -> Digest {
    let reduced = space.reduced();
    let Some(root) = reduced.root() else {
        return crate::space::zero_digest();
    };
    let mut digests: Vec<Option<Digest>> = vec![None; reduced.internal_count()];
    let leaf_digest = |l: usize| -> Digest {
        let mut h = Sha256::new();
        h.update(b"l");
        h.update(quantized_mass(reduced.leaf_mass(l)).to_le_bytes());
        let mut buf = Vec::new();
        reduced.mark(l).encode(&mut buf);
        h.update(&buf);
        h.finalize().into()
    };
    // Internal nodes are stored in post-order.
    for node in reduced.internal_nodes() {
        let NodeId::Internal(i) = node else {
            unreachable!()
        };
        let mut kids: Vec<Digest> = reduced
            .children(node)
            .iter()
            .map(|c| match *c {
                NodeId::Leaf(l) => leaf_digest(l),
                NodeId::Internal(ci) => digests[ci].expect("post-order"),
            })
            .collect();
        kids.sort();
        let mut h = Sha256::new();
        h.update(b"n");
        h.update(reduced.merge_value(node).canonical_bits().to_le_bytes());
        for k in &kids {
            h.update(k);
        }
        digests[i] = Some(h.finalize().into());
    }
    match root {
        NodeId::Leaf(l) => leaf_digest(l),
        NodeId::Internal(i) => digests[i].expect("root digest"),
    }
}

/// Equality of equivalence classes, decided through [`canonical_hash`].
pub fn isomorphic<T: Scalar, M: LeafMark>(
    a: &UltrametricSpace<T, M>,
    b: &UltrametricSpace<T, M>,
) -> bool {
    canonical_hash(a) == canonical_hash(b)
}

/// Minimal number of closed `eps`-balls carrying normalized mass at least
/// `1 - eps`. Balls are the maximal subtrees with merge value `<= eps`, so
/// the minimum takes the heaviest balls first. At least one ball is
/// always reported.
pub fn covering_number<T: Scalar, M: LeafMark>(
    space: &UltrametricSpace<T, M>,
    eps: T,
) -> Result<usize> {
    if !(eps > T::zero()) {
        return Err(GenealogyError::InvalidArgument(format!(
            "covering radius {eps} must be positive"
        )));
    }
    let total = space.total_mass().as_f64();
    if !(total > 0.0) {
        return Err(GenealogyError::EmptySpace);
    }
    let mut masses: Vec<f64> = space
        .clusters(|m| m <= eps)
        .into_iter()
        .map(|c| space.node_mass(c).as_f64() / total)
        .filter(|m| *m > 0.0)
        .collect();
    masses.sort_by(|a, b| b.total_cmp(a));
    let target = 1.0 - eps.as_f64() - 1e-12;
    let mut covered = 0.0;
    for (k, m) in masses.iter().enumerate() {
        covered += m;
        if covered >= target {
            return Ok(k + 1);
        }
    }
    Ok(masses.len())
}

/// Exact law of the distance between two independent samples from the
/// normalized measure, as sorted `(distance, probability)` atoms.
pub fn pair_distance_law<T: Scalar, M: LeafMark>(
    space: &UltrametricSpace<T, M>,
) -> Result<Vec<(f64, f64)>> {
    let total = space.total_mass().as_f64();
    if !(total > 0.0) {
        return Err(GenealogyError::EmptySpace);
    }
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let self_pairs: f64 = (0..space.leaf_count())
        .map(|l| (space.leaf_mass(l).as_f64() / total).powi(2))
        .sum();
    atoms.push((0.0, self_pairs));
    for node in space.internal_nodes() {
        let m = space.node_mass(node).as_f64() / total;
        let inner: f64 = space
            .children(node)
            .iter()
            .map(|c| (space.node_mass(*c).as_f64() / total).powi(2))
            .sum();
        let p = m * m - inner;
        if p > 0.0 {
            atoms.push((space.merge_value(node).as_f64(), p));
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (d, p) in atoms {
        match merged.last_mut() {
            Some(last) if last.0 == d => last.1 += p,
            _ => merged.push((d, p)),
        }
    }
    Ok(merged)
}

/// Lower and upper bounds on a Gromov-type distance between two normalized
/// spaces, both in distance units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpBounds {
    /// Wasserstein-1 distance between the two exact pair-distance laws.
    pub lower: f64,
    /// Smallest distortion `E|r_a(x,x') - r_b(y,y')|` found over couplings
    /// induced by leaf matchings; any coupling bounds the lower bound from
    /// above.
    pub upper: f64,
}

/// Search effort for the matching part of [`gp_distance_bounds`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GpSearch {
    /// Exhaustive search over matchings up to this many leaves per side.
    pub exhaustive_limit: usize,
    /// Random restarts for the greedy search beyond the limit.
    pub restarts: usize,
    /// Pairwise swaps tried per restart.
    pub swaps: usize,
}

impl Default for GpSearch {
    fn default() -> Self {
        GpSearch {
            exhaustive_limit: 8,
            restarts: 4,
            swaps: 400,
        }
    }
}

struct Side {
    weights: Vec<f64>,
    dist: Vec<f64>,
    n: usize,
}

impl Side {
    fn new<T: Scalar, M: LeafMark>(space: &UltrametricSpace<T, M>) -> Result<Self> {
        let total = space.total_mass().as_f64();
        if !(total > 0.0) {
            return Err(GenealogyError::EmptySpace);
        }
        let leaves: Vec<usize> = space
            .leaf_order()
            .iter()
            .copied()
            .filter(|&l| space.leaf_mass(l) > T::zero())
            .collect();
        let n = leaves.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = space.distance(leaves[i], leaves[j]).as_f64();
            }
        }
        Ok(Side {
            weights: leaves
                .iter()
                .map(|&l| space.leaf_mass(l).as_f64() / total)
                .collect(),
            dist,
            n,
        })
    }
}

/// Distortion of the north-west-corner coupling of `a` (in its order) and
/// `b` (in the order `perm`).
fn distortion(a: &Side, b: &Side, perm: &[usize]) -> f64 {
    let mut atoms: Vec<(usize, usize, f64)> = Vec::with_capacity(a.n + b.n);
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a.weights[0], b.weights[perm[0]]);
    loop {
        let w = ra.min(rb);
        if w > 0.0 {
            atoms.push((i, perm[j], w));
        }
        ra -= w;
        rb -= w;
        if ra <= 1e-15 {
            i += 1;
            if i == a.n {
                break;
            }
            ra = a.weights[i];
        }
        if rb <= 1e-15 {
            j += 1;
            if j == b.n {
                break;
            }
            rb = b.weights[perm[j]];
        }
    }
    let mut total = 0.0;
    for &(x, y, w) in &atoms {
        for &(x2, y2, w2) in &atoms {
            total += w * w2 * (a.dist[x * a.n + x2] - b.dist[y * b.n + y2]).abs();
        }
    }
    total
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Bounds on the distance between two normalized spaces; see [`GpBounds`].
/// Equal spaces give `(0, 0)`.
pub fn gp_distance_bounds<T: Scalar, M: LeafMark, R: Rng + ?Sized>(
    a: &UltrametricSpace<T, M>,
    b: &UltrametricSpace<T, M>,
    search: GpSearch,
    rng: &mut R,
) -> Result<GpBounds> {
    let lower = wasserstein1(&pair_distance_law(a)?, &pair_distance_law(b)?);
    let sa = Side::new(a)?;
    let sb = Side::new(b)?;
    let mut perm: Vec<usize> = (0..sb.n).collect();
    let mut best = distortion(&sa, &sb, &perm);
    if sa.n.max(sb.n) <= search.exhaustive_limit {
        while next_permutation(&mut perm) {
            best = best.min(distortion(&sa, &sb, &perm));
        }
    } else if sb.n >= 2 {
        for restart in 0..search.restarts.max(1) {
            let mut p: Vec<usize> = (0..sb.n).collect();
            if restart > 0 {
                p.shuffle(rng);
            }
            let mut cost = distortion(&sa, &sb, &p);
            for _ in 0..search.swaps {
                let x = rng.random_range(0..sb.n);
                let y = rng.random_range(0..sb.n);
                if x == y {
                    continue;
                }
                p.swap(x, y);
                let c = distortion(&sa, &sb, &p);
                if c < cost {
                    cost = c;
                } else {
                    p.swap(x, y);
                }
            }
            best = best.min(cost);
        }
    }
    // Any coupling dominates the lower bound; only rounding can invert them.
    let upper = if best < lower && lower - best < 1e-12 {
        lower
    } else {
        best
    };
    Ok(GpBounds { lower, upper })
}
