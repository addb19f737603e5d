#![allow(dead_code)]

use genealab_core::stats::mean_and_se;
use genealab_sim::rng::{domain, stream, SimRng};
use genealab_verify::{Report, Verdict};

pub fn rng(index: u64) -> SimRng {
    stream(77_031, domain::TEST, index)
}

/// Asserts `|mean - target| <= 3 se + bias`.
pub fn assert_mean(values: &[f64], target: f64, bias: f64, what: &str) {
    let (m, se) = mean_and_se(values);
    assert!(
        (m - target).abs() <= 3.0 * se + bias,
        "{what}: mean {m} +- {se} vs {target} (bias {bias})"
    );
}

pub fn assert_passed(report: &Report) {
    for line in report.summary() {
        println!("{line}");
    }
    for c in &report.checks {
        assert_eq!(c.verdict(), Verdict::Pass, "{}", c.summary());
    }
}
