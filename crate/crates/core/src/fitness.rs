//! Force-target fitness: closeness to the target plus geometric efficiency.
//!
//! ```text
//! f = 0.8 * |F_target - |F|| / F_target + 0.2 * |1 - F / F_n|
//! ```
//!
//! `F` is the cycle-mean z force for thrust or the planar magnitude of the
//! cycle-mean force for side force; `F_n` is the cycle mean of the
//! instantaneous normal-force magnitude. Lower is better.

use libm::sqrt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plant::CycleRecord;

pub const CLOSENESS_WEIGHT: f64 = 0.8;
pub const EFFICIENCY_WEIGHT: f64 = 0.2;
/// Normal forces at or below this are treated as no force at all.
pub const MIN_NORMAL_FORCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    Thrust,
    SideForce,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Objective {
    pub mode: ObjectiveMode,
    /// Newtons.
    #[serde(default = "default_target")]
    pub f_target: f64,
}

fn default_target() -> f64 {
    1.0
}

impl Objective {
    pub fn thrust(f_target: f64) -> Self {
        Self {
            mode: ObjectiveMode::Thrust,
            f_target,
        }
    }

    pub fn side_force(f_target: f64) -> Self {
        Self {
            mode: ObjectiveMode::SideForce,
            f_target,
        }
    }

    /// The force the objective acts on, from a cycle-mean force vector.
    pub fn force_of(&self, mean_force: [f64; 3]) -> f64 {
        match self.mode {
            ObjectiveMode::Thrust => mean_force[2],
            ObjectiveMode::SideForce => sqrt(mean_force[0] * mean_force[0] + mean_force[1] * mean_force[1]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessValue {
    pub f: f64,
    pub closeness_term: f64,
    pub efficiency_term: f64,
    pub force_used: f64,
    pub normal_force_used: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitnessError {
    #[error("normal force {0} N is too small for an efficiency ratio")]
    DegenerateForce(f64),
    #[error("target force must be positive, got {0}")]
    InvalidTarget(f64),
}

/// Fitness of a measured `(F, F_n)` pair.
pub fn fitness_of_forces(force: f64, normal_force: f64, f_target: f64) -> Result<FitnessValue, FitnessError> {
    if !(f_target > 0.0) {
        return Err(FitnessError::InvalidTarget(f_target));
    }
    if !(normal_force > MIN_NORMAL_FORCE) {
        return Err(FitnessError::DegenerateForce(normal_force));
    }
    let closeness_term = (f_target - force.abs()).abs() / f_target;
    let efficiency_term = (1.0 - force / normal_force).abs();
    Ok(FitnessValue {
        f: CLOSENESS_WEIGHT * closeness_term + EFFICIENCY_WEIGHT * efficiency_term,
        closeness_term,
        efficiency_term,
        force_used: force,
        normal_force_used: normal_force,
    })
}

pub fn fitness(record: &CycleRecord, objective: &Objective) -> Result<FitnessValue, FitnessError> {
    fitness_of_forces(
        objective.force_of(record.mean_force),
        record.mean_normal_force_mag,
        objective.f_target,
    )
}
