//! Verdicts and their JSON/CSV forms.

use std::fmt::Write as _;

use genealab_core::stats::mean_and_se;
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA: &str = "genealab/report/1";

/// Mean of a replicate sample with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        let (mean, std_error) = mean_and_se(values);
        Estimate {
            mean,
            std_error,
            replicates: values.len(),
        }
    }

    pub fn exact(value: f64, replicates: usize) -> Self {
        Estimate {
            mean: value,
            std_error: 0.0,
            replicates,
        }
    }
}

/// Accept when `|a - b| <= z * sqrt(se_a^2 + se_b^2) + bias`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub z: f64,
    pub bias: f64,
}

impl Tolerance {
    pub fn new(z: f64, bias: f64) -> Self {
        Tolerance { z, bias }
    }

    /// Three standard errors plus `10 / size`.
    pub fn finite_size(size: usize) -> Self {
        Tolerance::new(3.0, 10.0 / size as f64)
    }

    pub fn accepts(&self, diff: f64, se: f64) -> bool {
        diff.abs() <= self.z * se + self.bias
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(3.0, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

fn z_score(diff: f64, se: f64) -> Option<f64> {
    let z = diff / se;
    z.is_finite().then_some(z).or((diff == 0.0).then_some(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    /// Two Monte Carlo estimates of the same quantity.
    Comparison {
        name: String,
        forward: Estimate,
        dual: Estimate,
        z_score: Option<f64>,
        tolerance: Tolerance,
        verdict: Verdict,
    },
    /// A Monte Carlo estimate against a known value.
    Target {
        name: String,
        estimate: Estimate,
        target: f64,
        z_score: Option<f64>,
        tolerance: Tolerance,
        verdict: Verdict,
    },
    /// Two numbers computed without sampling.
    Exact {
        name: String,
        value: f64,
        target: f64,
        abs_tol: f64,
        verdict: Verdict,
    },
    /// A goodness-of-fit test, passing when `p_value >= level`.
    Distribution {
        name: String,
        test: String,
        statistic: f64,
        p_value: f64,
        level: f64,
        verdict: Verdict,
    },
    /// A count of failures against the largest acceptable count.
    Count {
        name: String,
        observed: usize,
        limit: usize,
        trials: usize,
        verdict: Verdict,
    },
}

impl Check {
    pub fn comparison(
        name: impl Into<String>,
        forward: Estimate,
        dual: Estimate,
        tolerance: Tolerance,
    ) -> Self {
        let diff = forward.mean - dual.mean;
        let se = forward.std_error.hypot(dual.std_error);
        Check::Comparison {
            name: name.into(),
            forward,
            dual,
            z_score: z_score(diff, se),
            tolerance,
            verdict: Verdict::of(tolerance.accepts(diff, se)),
        }
    }

    pub fn target(
        name: impl Into<String>,
        estimate: Estimate,
        target: f64,
        tolerance: Tolerance,
    ) -> Self {
        let diff = estimate.mean - target;
        Check::Target {
            name: name.into(),
            estimate,
            target,
            z_score: z_score(diff, estimate.std_error),
            tolerance,
            verdict: Verdict::of(tolerance.accepts(diff, estimate.std_error)),
        }
    }

    pub fn exact(name: impl Into<String>, value: f64, target: f64, abs_tol: f64) -> Self {
        Check::Exact {
            name: name.into(),
            value,
            target,
            abs_tol,
            verdict: Verdict::of((value - target).abs() <= abs_tol),
        }
    }

    pub fn distribution(
        name: impl Into<String>,
        test: &str,
        statistic: f64,
        p_value: f64,
        level: f64,
    ) -> Self {
        Check::Distribution {
            name: name.into(),
            test: test.into(),
            statistic,
            p_value,
            level,
            verdict: Verdict::of(p_value >= level),
        }
    }

    pub fn count(name: impl Into<String>, observed: usize, limit: usize, trials: usize) -> Self {
        Check::Count {
            name: name.into(),
            observed,
            limit,
            trials,
            verdict: Verdict::of(observed <= limit),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Check::Comparison { name, .. }
            | Check::Target { name, .. }
            | Check::Exact { name, .. }
            | Check::Distribution { name, .. }
            | Check::Count { name, .. } => name,
        }
    }

    /// Same check under `prefix` followed by its name.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        match &mut self {
            Check::Comparison { name, .. }
            | Check::Target { name, .. }
            | Check::Exact { name, .. }
            | Check::Distribution { name, .. }
            | Check::Count { name, .. } => name.insert_str(0, prefix),
        }
        self
    }

    pub fn verdict(&self) -> Verdict {
        match self {
            Check::Comparison { verdict, .. }
            | Check::Target { verdict, .. }
            | Check::Exact { verdict, .. }
            | Check::Distribution { verdict, .. }
            | Check::Count { verdict, .. } => *verdict,
        }
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let tag = if self.verdict().passed() {
            "PASS"
        } else {
            "FAIL"
        };
        let detail = match self {
            Check::Comparison {
                forward,
                dual,
                z_score,
                ..
            } => format!(
                "forward {:.6} +- {:.6}, dual {:.6} +- {:.6}, z = {}",
                forward.mean,
                forward.std_error,
                dual.mean,
                dual.std_error,
                fmt_z(*z_score)
            ),
            Check::Target {
                estimate,
                target,
                z_score,
                ..
            } => format!(
                "{:.6} +- {:.6} vs {target:.6}, z = {}",
                estimate.mean,
                estimate.std_error,
                fmt_z(*z_score)
            ),
            Check::Exact {
                value,
                target,
                abs_tol,
                ..
            } => {
                format!(
                    "{value:.10} vs {target:.10} (|diff| {:.2e}, tol {abs_tol:.0e})",
                    (value - target).abs()
                )
            }
            Check::Distribution {
                test,
                statistic,
                p_value,
                level,
                ..
            } => format!("{test} statistic {statistic:.5}, p = {p_value:.4} (level {level})"),
            Check::Count {
                observed,
                limit,
                trials,
                ..
            } => format!("{observed} of {trials} (limit {limit})"),
        };
        format!("{tag} {}: {detail}", self.name())
    }
}

fn fmt_z(z: Option<f64>) -> String {
    z.map_or_else(|| "inf".into(), |z| format!("{z:.3}"))
}

/// Outcome of one experiment. Everything here is a function of the
/// configuration and the seed; timing lives elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub experiment: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Free-form facts worth keeping (winning compensator, skipped paths).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl Report {
    pub fn new(experiment: impl Into<String>, seed: u64, checks: Vec<Check>) -> Self {
        let verdict = Verdict::of(checks.iter().all(|c| c.verdict().passed()));
        Report {
            schema: REPORT_SCHEMA.into(),
            experiment: experiment.into(),
            seed,
            checks,
            notes: Vec::new(),
            verdict,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Appends another report's checks and notes, keeping this name.
    pub fn merge(mut self, other: Report) -> Self {
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
        self.verdict = Verdict::of(self.checks.iter().all(|c| c.verdict().passed()));
        self
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.checks = self
            .checks
            .into_iter()
            .map(|c| c.prefixed(prefix))
            .collect();
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn summary(&self) -> Vec<String> {
        self.checks.iter().map(Check::summary).collect()
    }
}

/// Per-replicate values of one quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Series {
            name: name.into(),
            values,
        }
    }
}

/// CSV with a `replicate` column and one column per series; shorter
/// series leave their cells empty.
pub fn series_csv(series: &[Series]) -> String {
    let mut out = String::from("replicate");
    for s in series {
        out.push(',');
        out.push_str(&s.name);
    }
    out.push('\n');
    let rows = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    for r in 0..rows {
        let _ = write!(out, "{r}");
        for s in series {
            out.push(',');
            if let Some(v) = s.values.get(r) {
                let _ = write!(out, "{v}");
            }
        }
        out.push('\n');
    }
    out
}

/// A report together with the replicate values behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub series: Vec<Series>,
}

impl Outcome {
    pub fn new(report: Report, series: Vec<Series>) -> Self {
        Outcome { report, series }
    }

    pub fn csv(&self) -> String {
        series_csv(&self.series)
    }
}
