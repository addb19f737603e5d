use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// A row-stochastic matrix on a finite set, used for mutation (on types)
/// and migration (on locations).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StochasticMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(SimError::InvalidKernel(
                "kernel needs at least one state".into(),
            ));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(SimError::InvalidKernel(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(SimError::InvalidKernel(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(SimError::InvalidKernel(format!(
                    "row {i} sums to {s}, not 1"
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(StochasticMatrix { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        StochasticMatrix { n, entries }
    }

    /// Two states swapped with probability `p` from either side.
    pub fn flip(p: f64, q: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![q, 1.0 - q]])
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn sample<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let mut u: f64 = rng.random();
        let row = self.row(from);
        for (j, &p) in row.iter().enumerate() {
            if u < p {
                return j;
            }
            u -= p;
        }
        row.iter().rposition(|&p| p > 0.0).unwrap_or(from)
    }

    /// `(a + a^T) / 2` as a row-major jump-rate matrix with zero
    /// diagonal. Rows need not sum to one.
    pub fn symmetrized(&self) -> Vec<f64> {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    entries[i * n + j] = 0.5 * (self.get(i, j) + self.get(j, i));
                }
            }
        }
        entries
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for StochasticMatrix {
    type Error = SimError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<StochasticMatrix> for Vec<Vec<f64>> {
    fn from(m: StochasticMatrix) -> Self {
        m.rows()
    }
}
