//! Post-hoc analyses of converged runs.

mod adaptation;
mod fourier;
mod frame;
mod nesting;
mod sensitivity;

use thiserror::Error;

pub use adaptation::{classify_adaptation, classify_runs, tally, Adaptation, AdaptationRow, ParamTally};
pub use fourier::{fourier, fourier_on_grid, full_spectrum, reconstruct, FourierMode, FourierSpectrum, DEFAULT_MODES};
pub use frame::{rotate_to_resultant, RotatedRecord};
pub use nesting::{nesting_order, NestingReport, PairRelation, Relation, DEFAULT_NESTING_TOLERANCE};
pub use sensitivity::{sensitivity, SensitivityReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("covariance is not symmetric positive-definite")]
    NotPositiveDefinite,
    #[error("samples are not uniformly spaced over exactly one period")]
    NonUniformSampling,
    #[error("{got} samples cannot resolve {modes} modes (need at least {needed})")]
    TooFewSamples { got: usize, modes: usize, needed: usize },
    #[error("planar mean force {0} N is too small to define a direction")]
    DegenerateForce(f64),
    #[error("traces must share one grid: lengths {0} and {1}")]
    GridMismatch(usize, usize),
}
