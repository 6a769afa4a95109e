//! Converged optima measured on the physical oil-tank rig.
//!
//! One intact and five amputated fins each for thrust and side force. The
//! values are rounded as published, so parameter vectors are approximate
//! (speed codes are reported as integers, for instance). Used as fixtures.

use crate::fitness::ObjectiveMode;
use crate::params::TrajectoryParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceOptimum {
    pub label: &'static str,
    pub mode: ObjectiveMode,
    pub amputated: bool,
    pub params: [f64; 9],
    /// Signed relative deviation of the produced force from the target.
    pub closeness: f64,
    pub fitness: f64,
}

impl ReferenceOptimum {
    pub fn trajectory(&self) -> TrajectoryParams {
        TrajectoryParams::from_array(self.params)
    }
}

const fn row(
    label: &'static str,
    mode: ObjectiveMode,
    amputated: bool,
    params: [f64; 9],
    closeness: f64,
    fitness: f64,
) -> ReferenceOptimum {
    ReferenceOptimum {
        label,
        mode,
        amputated,
        params,
        closeness,
        fitness,
    }
}

use ObjectiveMode::{SideForce as S, Thrust as T};

pub const REFERENCE_OPTIMA: [ReferenceOptimum; 12] = [
    row(
        "thrust intact",
        T,
        false,
        [24.8, 12.9, 26.7, 5.3, 0.0, 1.2, 0.6, 0.6, 0.70],
        0.0029,
        0.1157,
    ),
    row(
        "thrust amputated 1",
        T,
        true,
        [31.7, 15.2, 51.8, 2.3, 1.0, 1.2, 0.8, 0.9, 0.78],
        0.0130,
        0.1088,
    ),
    row(
        "thrust amputated 2",
        T,
        true,
        [32.0, 14.8, 70.0, 2.7, 2.0, 1.2, 0.5, 0.7, 0.70],
        0.0067,
        0.0920,
    ),
    row(
        "thrust amputated 3",
        T,
        true,
        [31.5, 15.2, -68.2, 4.7, 2.0, 1.2, 0.5, 1.0, 0.72],
        0.0032,
        0.1049,
    ),
    row(
        "thrust amputated 4",
        T,
        true,
        [31.5, 13.6, -63.4, 6.1, 2.0, 1.2, 0.9, 0.7, 0.73],
        0.0085,
        0.0879,
    ),
    row(
        "thrust amputated 5",
        T,
        true,
        [30.0, 13.4, -70.0, 5.8, 1.0, 1.2, 0.5, 0.6, 0.79],
        0.0016,
        0.0810,
    ),
    row(
        "side force intact",
        S,
        false,
        [15.2, 8.1, -70.0, 2.9, 3.0, 1.1, 0.2, 0.3, 0.86],
        -0.0062,
        0.0087,
    ),
    row(
        "side force amputated 1",
        S,
        true,
        [32.1, 15.0, -57.0, 2.9, 4.0, 1.2, 0.4, 0.4, 0.90],
        -0.1618,
        0.1633,
    ),
    row(
        "side force amputated 2",
        S,
        true,
        [31.3, 15.2, -70.0, 4.2, 3.0, 1.2, 0.4, 0.8, 0.70],
        -0.0091,
        0.0854,
    ),
    row(
        "side force amputated 3",
        S,
        true,
        [29.6, 13.1, -70.0, 4.3, 2.0, 1.1, 0.4, 0.7, 0.75],
        -0.0027,
        0.0933,
    ),
    row(
        "side force amputated 4",
        S,
        true,
        [18.7, 13.7, -70.0, 4.8, 3.0, 1.1, 0.3, 0.6, 0.86],
        -0.0189,
        0.1059,
    ),
    row(
        "side force amputated 5",
        S,
        true,
        [16.8, 11.6, -41.2, 4.4, 4.0, 1.1, 0.3, 0.4, 0.88],
        0.0198,
        0.0408,
    ),
];

/// Intact-fin thrust optimum.
pub fn intact_thrust() -> &'static ReferenceOptimum {
    &REFERENCE_OPTIMA[0]
}
