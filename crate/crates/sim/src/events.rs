//! JSON-lines event logs.

use genealab_core::Mark;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::kernel::StochasticMatrix;

/// One line of a forward event log. `Start` carries the model parameters
/// and the initial marks; `End` closes the covered time interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Start {
        n: usize,
        resampling_rate: f64,
        mutation_rate: f64,
        mutation_kernel: StochasticMatrix,
        selection: f64,
        types: usize,
        locations: usize,
        marks: Vec<Mark>,
    },
    Resample {
        t: f64,
        parent: usize,
        child: usize,
    },
    Select {
        t: f64,
        parent: usize,
        child: usize,
    },
    Mutate {
        t: f64,
        individual: usize,
        from: u32,
        to: u32,
    },
    Migrate {
        t: f64,
        individual: usize,
        from: u32,
        to: u32,
    },
    End {
        t: f64,
    },
}

pub fn write_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for e in items {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SimError::Parse(format!("line {}: {e}", i + 1)))
        })
        .collect()
}
