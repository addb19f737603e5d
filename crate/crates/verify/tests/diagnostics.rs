mod common;

use common::assert_passed;
use genealab_sim::StochasticMatrix;
use genealab_verify::{
    fixture_checks, round_trip_check, run_diagnostics, SpatialExperiment, Tolerance, Verdict,
};

fn spatial(reps: usize) -> SpatialExperiment {
    SpatialExperiment {
        rate: 2.0,
        migration_rate: 0.8,
        kernel: StochasticMatrix::flip(0.3, 0.9).unwrap(),
        lambda: 0.5,
        horizon: 1.0,
        reps,
        tolerance: Tolerance::default(),
        seed: 12,
    }
}

#[test]
fn random_ultrametrics_round_trip_exactly() {
    let check = round_trip_check(1_000, 12, 3).unwrap();
    assert_eq!(check.verdict(), Verdict::Pass, "{}", check.summary());
}

#[test]
fn fixtures_have_the_hand_computed_values() {
    let checks = fixture_checks().unwrap();
    assert_eq!(checks.len(), 3 + 12);
    for c in checks {
        assert_eq!(c.verdict(), Verdict::Pass, "{}", c.summary());
    }
}

#[test]
fn full_diagnostics_pass() {
    let out = run_diagnostics(200, 10, &spatial(20_000)).unwrap();
    assert_passed(&out.report);
    assert_eq!(out.report.experiment, "diagnostics");
    assert_eq!(out.series.len(), 2);
}
