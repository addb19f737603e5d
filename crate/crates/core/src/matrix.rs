//! Distance matrices: validation, reconstruction of the dendrogram, and
//! sampled matrices.

use std::fmt::Write as _;

use crate::error::{GenealogyError, Result};
use crate::mark::{LeafMark, Mark};
use crate::scalar::Scalar;
use crate::space::{NodeId, TreeBuilder, UltrametricSpace};

/// An `n x n` matrix of sampled distances, row-major, with optional marks.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrixSample<T> {
    pub order: usize,
    pub distances: Vec<T>,
    pub marks: Option<Vec<Mark>>,
}

impl<T: Scalar> DistanceMatrixSample<T> {
    /// Reads the matrix of the given leaves (repetitions allowed).
    pub fn from_leaves<M: LeafMark>(space: &UltrametricSpace<T, M>, leaves: &[usize]) -> Self {
        let n = leaves.len();
        let mut distances = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = space.distance(leaves[i], leaves[j]);
                distances[i * n + j] = d;
                distances[j * n + i] = d;
            }
        }
        let marks: Option<Vec<Mark>> = leaves.iter().map(|&l| space.mark(l).to_mark()).collect();
        DistanceMatrixSample {
            order: n,
            distances,
            marks,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.distances[i * self.order + j]
    }

    /// Checks shape, zero diagonal, symmetry and the three-point condition.
    pub fn validate(&self) -> Result<()> {
        validate_matrix(&self.distances, self.order)
    }

    pub fn is_ultrametric(&self) -> bool {
        self.validate().is_ok()
    }

    /// CSV with header `row,col,value`, one line per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,value\n");
        for i in 0..self.order {
            for j in 0..self.order {
                let _ = writeln!(out, "{i},{j},{}", self.get(i, j).as_f64());
            }
        }
        out
    }
}

/// Exact validation of a row-major `n x n` distance matrix.
pub fn validate_matrix<T: Scalar>(d: &[T], n: usize) -> Result<()> {
    if d.len() != n * n {
        return Err(GenealogyError::DimensionMismatch {
            expected: n * n,
            found: d.len(),
        });
    }
    for i in 0..n {
        for j in 0..n {
            let v = d[i * n + j];
            let bad =
                !v.is_finite() || v < T::zero() || (i == j && v != T::zero()) || v != d[j * n + i];
            if bad {
                return Err(GenealogyError::InvalidDistance {
                    row: i,
                    col: j,
                    value: v.as_f64(),
                });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let ij = d[i * n + j];
            for k in j + 1..n {
                let ik = d[i * n + k];
                let jk = d[j * n + k];
                if ij > ik.max(jk) || ik > ij.max(jk) || jk > ij.max(ik) {
                    return Err(GenealogyError::NotUltrametric(i, j, k));
                }
            }
        }
    }
    Ok(())
}

/// Builds an unmarked space from a row-major distance matrix. Leaf `i` of
/// the result is row `i`. At least one mass must be positive.
pub fn from_distance_matrix<T: Scalar>(
    distances: &[T],
    masses: &[T],
) -> Result<UltrametricSpace<T>> {
    from_distance_matrix_with(distances, masses, &vec![(); masses.len()], false)
}

/// General form: marks per row, and `allow_zero` to accept an all-zero mass
/// vector (including the empty matrix, which yields the zero element).
pub fn from_distance_matrix_with<T: Scalar, M: LeafMark>(
    distances: &[T],
    masses: &[T],
    marks: &[M],
    allow_zero: bool,
) -> Result<UltrametricSpace<T, M>> {
    let n = masses.len();
    if marks.len() != n {
        return Err(GenealogyError::DimensionMismatch {
            expected: n,
            found: marks.len(),
        });
    }
    validate_matrix(distances, n)?;
    for (leaf, m) in masses.iter().enumerate() {
        if !m.is_finite() || *m < T::zero() {
            return Err(GenealogyError::NegativeMass {
                leaf,
                value: m.as_f64(),
            });
        }
    }
    if !allow_zero && masses.iter().all(|m| *m == T::zero()) {
        return Err(GenealogyError::EmptySpace);
    }
    if n == 0 {
        return Ok(UltrametricSpace::zero());
    }
    let mut b = TreeBuilder::new();
    let ids: Vec<NodeId> = (0..n).map(|i| b.leaf(masses[i], marks[i])).collect();
    let all: Vec<usize> = (0..n).collect();
    let root = split(&mut b, &ids, distances, n, all);
    b.build(Some(root))
}

/// Top-down single linkage. In an ultrametric, "distance below the maximum"
/// is an equivalence relation, and its classes are the root's children.
fn split<T: Scalar, M: LeafMark>(
    b: &mut TreeBuilder<T, M>,
    ids: &[NodeId],
    d: &[T],
    n: usize,
    set: Vec<usize>,
) -> NodeId {
    enum Task<T> {
        Split(Vec<usize>),
        Join(T, usize),
    }
    let mut tasks = vec![Task::Split(set)];
    let mut done: Vec<NodeId> = Vec::new();
    while let Some(task) = tasks.pop() {
        match task {
            Task::Split(set) if set.len() == 1 => done.push(ids[set[0]]),
            Task::Split(set) => {
                let mut top = T::zero();
                for (a, &i) in set.iter().enumerate() {
                    for &j in &set[a + 1..] {
                        top = top.max(d[i * n + j]);
                    }
                }
                let mut classes: Vec<Vec<usize>> = Vec::new();
                let mut rest = set;
                while let Some(&first) = rest.first() {
                    let (inside, outside): (Vec<usize>, Vec<usize>) = rest
                        .into_iter()
                        .partition(|&j| j == first || d[first * n + j] < top);
                    classes.push(inside);
                    rest = outside;
                }
                if top == T::zero() {
                    // All points coincide: one star at distance 0.
                    let kids = classes.into_iter().flatten().map(|i| ids[i]).collect();
                    done.push(b.internal(T::zero(), kids));
                    continue;
                }
                tasks.push(Task::Join(top, classes.len()));
                for c in classes.into_iter().rev() {
                    tasks.push(Task::Split(c));
                }
            }
            Task::Join(merge, k) => {
                let kids = done.split_off(done.len() - k);
                done.push(b.internal(merge, kids));
            }
        }
    }
    done.pop().expect("nonempty set")
}
