//! Statistical verification of genealogy dualities.
//!
//! Experiments run a forward simulator and its dual (or a reweighted
//! neutral model, or a Poisson concatenation sampler) on independent
//! replicate streams and summarize the comparison in a [`Report`] of
//! checks, each with its own pass/fail verdict.

pub mod diagnostics;
pub mod error;
pub mod girsanov;
pub mod harness;
pub mod infdiv;
pub mod oracle;
pub mod random;
pub mod report;

pub use diagnostics::{
    fixture_checks, round_trip_check, run_diagnostics, spatial_two_site_check, SpatialExperiment,
};
pub use error::{Result, VerifyError};
pub use girsanov::{
    exact_small_population_check, path_weight, psi, run_girsanov_check, Compensator,
    GirsanovConfig, GirsanovExperiment, PairFitness, PathWeight, WeightMethod,
};
pub use harness::{
    fk_exact_check, replicate, run_conditioned_duality, run_equilibrium_check, run_fk_duality,
    run_moment_duality, run_strong_duality_check, ConditionedExperiment, EquilibriumExperiment,
    FkExperiment, MomentExperiment, StrongExperiment,
};
pub use infdiv::{
    laplace_check, poisson_concatenate, semigroup_laws, split_check, truncation_check, LevyAtom,
    LevyMeasureSpec,
};
pub use report::{
    series_csv, Check, Estimate, Outcome, Report, Series, Tolerance, Verdict, REPORT_SCHEMA,
};
