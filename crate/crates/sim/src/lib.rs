//! Exact-jump simulators for tree-valued population models.
//!
//! Forward: the Moran model (resampling, mutation, migration, selection)
//! and critical or logistic branching particles, both tracking ancestry so
//! that the genealogy of the living population can be read off at any
//! time. Dual: the Kingman coalescent with pairwise coalescence times, in
//! plain, spatial, Feynman-Kac and mass-conditioned form.
//!
//! Randomness always comes from the caller; [`rng::stream`] gives the
//! per-replicate streams used throughout.

pub mod ancestry;
pub mod branching;
pub mod coalescent;
pub mod error;
pub mod events;
pub mod exact;
pub mod kernel;
pub mod masspath;
pub mod moran;
pub mod population;
pub mod rng;
pub mod typepath;

pub use ancestry::Ancestry;
pub use branching::{
    branching_run, replay_genealogy, BranchingConfig, BranchingState, Drift, PairReplay,
};
pub use coalescent::{
    coalescent_run, duality_value, entrance_law_tree, CoalescentState, DualConfig, DualEvent,
    DualMode, LocationFallback, Spatial,
};
pub use error::{Result, SimError};
pub use events::{read_jsonl, write_jsonl, Event};
pub use exact::{exact_dual_expectation, ExactDual, Terminal};
pub use kernel::StochasticMatrix;
pub use masspath::MassPath;
pub use moran::{moran_run, Moran, MoranConfig, MoranInitial, MoranState};
pub use population::{assign, quota, Assignment};
pub use rng::{stream, SimRng};
pub use typepath::{type_count_run, JumpKind, TypeJump, TypePath};
