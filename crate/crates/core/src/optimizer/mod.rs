//! Box-constrained CMA-ES over trajectory parameters, with per-generation
//! records and snapshots that can be restored into any number of branches.

mod cmaes;
mod record;

pub use cmaes::{
    Bounds, Candidate, Cmaes, CmaesError, CmaesSettings, CmaesSnapshot, Convergence, RngState, DEFAULT_MAX_GENERATIONS,
    DEFAULT_SIGMA0, EIGEN_FLOOR, SNAPSHOT_SCHEMA,
};
pub use record::{argmin_first, select_optimum, CandidateRecord, GenerationRecord};
