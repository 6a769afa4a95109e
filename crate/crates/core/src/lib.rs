//! Core numerics for flapping-fin damage-recovery experiments.
//!
//! Everything here is pure and allocation-only (`no_std` + `alloc`):
//!
//! * [`params`] - the nine optimizable trajectory parameters, their box and
//!   convergence thresholds;
//! * [`kinematics`] - parameters to a time-resolved stroke over one period;
//! * [`plant`] - quasi-steady blade-element force model of an intact or
//!   amputated flat plate, with the repeated-run / start-up-discard protocol;
//! * [`fitness`] - force-target closeness plus geometric efficiency;
//! * [`optimizer`] - box-constrained CMA-ES with snapshots for branching;
//! * [`analysis`] - PCA sensitivity, Fourier modes, resultant frames, AOA
//!   nesting and adaptation classification.
#![no_std]
// `!(x > 0.0)` style checks are deliberate: they reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod fitness;
pub mod kinematics;
pub mod optimizer;
pub mod params;
pub mod plant;
pub mod reference;
pub mod seed;

pub use params::{Param, ParamTable, TrajectoryParams, N_PARAMS};
