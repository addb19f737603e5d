//! Exactness checks of the core representation and of the spatial dual.

use genealab_core::{
    covering_number, diameter, from_distance_matrix, from_distance_matrix_with, DistanceKernel,
    Mark, PolynomialSpec, Space, TreeBuilder,
};
use genealab_sim::rng::domain;
use genealab_sim::{
    coalescent_run, duality_value, stream, DualConfig, LocationFallback, Spatial, StochasticMatrix,
};

use crate::error::Result;
use crate::harness::replicate;
use crate::oracle::two_site_pair_laplace;
use crate::random::{random_masses, random_ultrametric};
use crate::report::{Check, Estimate, Outcome, Report, Series, Tolerance};

/// Builds `instances` random ultrametrics with up to `max_points` points
/// and counts those whose distance matrix or masses do not come back
/// entry for entry.
pub fn round_trip_check(instances: usize, max_points: usize, seed: u64) -> Result<Check> {
    let failures = replicate(instances, |i| {
        let mut rng = stream(seed, domain::TEST, i);
        let n = rand::Rng::random_range(&mut rng, 1..=max_points.max(1));
        let d = random_ultrametric(n, 8.0, 0.5, &mut rng);
        let m = random_masses(n, &mut rng);
        let s = from_distance_matrix(&d, &m)?;
        Ok(s.distance_matrix() != d || s.leaf_masses() != m)
    })?;
    let bad = failures.iter().filter(|f| **f).count();
    Ok(Check::count(
        "distance matrix round-trip mismatches",
        bad,
        0,
        instances,
    ))
}

struct Fixture {
    name: &'static str,
    space: Space,
    diameter: f64,
    covering: Vec<(f64, usize)>,
}

fn fixtures() -> Result<Vec<Fixture>> {
    // Two clusters of two leaves: {a, b} at 0.1, {c, d} at 0.2, joined at 0.6.
    let mut t = TreeBuilder::new();
    let a = t.leaf(0.4, ());
    let b = t.leaf(0.1, ());
    let c = t.leaf(0.3, ());
    let d = t.leaf(0.2, ());
    let ab = t.internal(0.1, vec![a, b]);
    let cd = t.internal(0.2, vec![c, d]);
    let root = t.internal(0.6, vec![ab, cd]);
    let clusters = t.build(Some(root))?;

    // Star of ten equal leaves at distance 4.
    let star = Space::star(&[0.1; 10], &[(); 10], 4.0)?;

    // Comb: leaf k joins the leaves before it at 0.1 k, masses halving.
    let n = 5;
    let masses = [0.5, 0.25, 0.125, 0.0625, 0.0625];
    let mut dm = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                dm[i * n + j] = 0.1 * i.max(j) as f64;
            }
        }
    }
    let comb = from_distance_matrix(&dm, &masses)?;

    Ok(vec![
        Fixture {
            name: "two clusters",
            space: clusters,
            diameter: 0.6,
            covering: vec![(0.05, 4), (0.12, 3), (0.25, 2), (0.6, 1)],
        },
        Fixture {
            name: "star",
            space: star,
            diameter: 4.0,
            covering: vec![(0.05, 10), (0.3, 7), (0.5, 5), (0.95, 1)],
        },
        Fixture {
            name: "comb",
            space: comb,
            diameter: 0.4,
            covering: vec![(0.05, 5), (0.1, 3), (0.15, 2), (0.2, 1)],
        },
    ])
}

/// Diameter and covering numbers of hand-built spaces against values
/// worked out by hand.
pub fn fixture_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for f in fixtures()? {
        checks.push(Check::exact(
            format!("diameter of {}", f.name),
            diameter(&f.space),
            f.diameter,
            0.0,
        ));
        for (eps, want) in f.covering {
            let got = covering_number(&f.space, eps)?;
            checks.push(Check::exact(
                format!("covering number of {} at {eps}", f.name),
                got as f64,
                want as f64,
                0.0,
            ));
        }
    }
    Ok(checks)
}

/// Two dual lines on two sites, started together and apart, against the
/// three-state matrix exponential.
#[derive(Clone, Debug)]
pub struct SpatialExperiment {
    pub rate: f64,
    pub migration_rate: f64,
    pub kernel: StochasticMatrix,
    pub lambda: f64,
    pub horizon: f64,
    pub reps: usize,
    pub tolerance: Tolerance,
    pub seed: u64,
}

pub fn spatial_two_site_check(exp: &SpatialExperiment) -> Result<Outcome> {
    let k = &exp.kernel;
    // Symmetrized hop rate of one line between the two sites.
    let hop = 0.5 * (k.get(0, 1) + k.get(1, 0));
    let oracle = two_site_pair_laplace(exp.rate, exp.migration_rate, hop, exp.lambda, exp.horizon);
    let marks = [Mark::new(0, 0), Mark::new(1, 0)];
    let ancestors = from_distance_matrix_with(&[0.0; 4], &[0.5, 0.5], &marks, false)?;
    let poly = PolynomialSpec::new(2, DistanceKernel::exponential_uniform(2, exp.lambda))?;
    let mut checks = Vec::new();
    let mut series = Vec::new();
    for (label, start, want) in [
        ("together", vec![0, 0], oracle[0]),
        ("apart", vec![0, 1], oracle[1]),
    ] {
        let cfg = DualConfig::plain(2, exp.rate, exp.horizon).with_spatial(Spatial {
            migration_rate: exp.migration_rate,
            kernel: k.clone(),
            start,
        });
        let values = replicate(exp.reps, |r| {
            let s = coalescent_run(&cfg, &mut stream(exp.seed, domain::DUAL, r))?;
            Ok(duality_value(
                &ancestors,
                &s,
                &poly,
                LocationFallback::Error,
                &mut stream(exp.seed, domain::GRAFT, r),
            )?)
        })?;
        checks.push(Check::target(
            format!("two-site dual started {label} vs matrix exponential"),
            Estimate::from_values(&values),
            want,
            exp.tolerance,
        ));
        series.push(Series::new(label, values));
    }
    Ok(Outcome::new(
        Report::new("diagnostics-spatial", exp.seed, checks),
        series,
    ))
}

/// Round-trip, fixtures and the spatial check in one report.
pub fn run_diagnostics(
    instances: usize,
    max_points: usize,
    spatial: &SpatialExperiment,
) -> Result<Outcome> {
    let mut checks = vec![round_trip_check(instances, max_points, spatial.seed)?];
    checks.extend(fixture_checks()?);
    let Outcome { report, series } = spatial_two_site_check(spatial)?;
    let report = Report::new("diagnostics", spatial.seed, checks).merge(report);
    Ok(Outcome::new(report, series))
}
