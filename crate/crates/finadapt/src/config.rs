//! Run configuration documents.

use std::path::Path;

use finadapt_core::fitness::{Objective, ObjectiveMode};
use finadapt_core::optimizer::{CmaesSettings, DEFAULT_MAX_GENERATIONS, DEFAULT_SIGMA0};
use finadapt_core::plant::{EvalSettings, PlantConfig, DEFAULT_AREA_LOSS};
use finadapt_core::TrajectoryParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;

/// Generations between convergence and the default branch point.
pub const DEFAULT_BRANCH_OFFSET: u64 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    pub objective: Objective,
    #[serde(default)]
    pub plant: PlantConfig,
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub evaluation: EvalSettings,
    #[serde(default)]
    pub schedule: Schedule,
    /// Set for runs resumed from another run's snapshot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineage: Option<Lineage>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub seed: u64,
    #[serde(default)]
    pub population_size: Option<usize>,
    #[serde(default = "default_sigma0")]
    pub initial_step: f64,
    #[serde(default = "default_max_generations")]
    pub max_generations: u64,
    /// Defaults to the preset matching the objective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initialization: Option<Initialization>,
}

fn default_sigma0() -> f64 {
    DEFAULT_SIGMA0
}

fn default_max_generations() -> u64 {
    DEFAULT_MAX_GENERATIONS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    Thrust,
    SideForce,
    Explicit(TrajectoryParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    /// Write a snapshot after every this many generations (and at the end).
    pub snapshot_every: u64,
    /// Damaged branches to start once the run has finished.
    pub branches: Vec<BranchDirective>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            snapshot_every: 1,
            branches: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPoint {
    /// This many generations before the generation that met all criteria
    /// (or before the last generation if the run hit its cap).
    BeforeEnd(u64),
    Generation(u64),
}

impl Default for BranchPoint {
    fn default() -> Self {
        BranchPoint::BeforeEnd(DEFAULT_BRANCH_OFFSET)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDirective {
    #[serde(default)]
    pub at: BranchPoint,
    #[serde(default = "default_damage")]
    pub damage_fraction: f64,
    /// One plant-noise seed per branch.
    pub seeds: Vec<u64>,
    /// Also give each branch its own sampling stream, derived from its seed.
    #[serde(default)]
    pub reseed_sampler: bool,
}

fn default_damage() -> f64 {
    DEFAULT_AREA_LOSS
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lineage {
    pub parent_run: String,
    /// Last parent generation shared with this run.
    pub at_generation: u64,
    pub parent_config_sha256: String,
    /// Seed of the replacement sampling stream, if the sampler was reseeded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler_seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig =
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if !valid_run_id(&self.run_id) {
            return bad(format!(
                "run_id {:?} must be non-empty and use only letters, digits, '.', '_' or '-'",
                self.run_id
            ));
        }
        if !(self.objective.f_target > 0.0 && self.objective.f_target.is_finite()) {
            return bad(format!("f_target must be positive, got {}", self.objective.f_target));
        }
        self.plant.check().or_else(|e| bad(format!("plant: {e}")))?;
        self.evaluation.check().or_else(|e| bad(format!("evaluation: {e}")))?;
        let opt = &self.optimizer;
        if !(opt.initial_step > 0.0 && opt.initial_step.is_finite()) {
            return bad("optimizer.initial_step must be positive".into());
        }
        if opt.population_size.is_some_and(|l| l < 2) {
            return bad("optimizer.population_size must be at least 2".into());
        }
        if opt.max_generations == 0 {
            return bad("optimizer.max_generations must be at least 1".into());
        }
        if self.schedule.snapshot_every == 0 {
            return bad("schedule.snapshot_every must be at least 1".into());
        }
        for (i, b) in self.schedule.branches.iter().enumerate() {
            if b.seeds.is_empty() {
                return bad(format!("schedule.branches[{i}] needs at least one seed"));
            }
            if !(0.0..1.0).contains(&b.damage_fraction) {
                return bad(format!("schedule.branches[{i}].damage_fraction must lie in [0, 1)"));
            }
        }
        let report = finadapt_core::params::validate(&self.start(), &finadapt_core::ParamTable::standard());
        if let Some(v) = report.violations().next() {
            return bad(format!("initialization: {} {}", v.param.name(), v.status));
        }
        Ok(())
    }

    pub fn start(&self) -> TrajectoryParams {
        match &self.optimizer.initialization {
            Some(Initialization::Explicit(p)) => *p,
            Some(Initialization::Thrust) => TrajectoryParams::thrust_initialization(),
            Some(Initialization::SideForce) => TrajectoryParams::side_force_initialization(),
            None => match self.objective.mode {
                ObjectiveMode::Thrust => TrajectoryParams::thrust_initialization(),
                ObjectiveMode::SideForce => TrajectoryParams::side_force_initialization(),
            },
        }
    }

    pub fn cmaes_settings(&self) -> CmaesSettings {
        CmaesSettings {
            population_size: self.optimizer.population_size,
            initial_step: self.optimizer.initial_step,
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configs always serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

pub fn valid_run_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{"run_id": "demo", "objective": {"mode": "thrust", "f_target": 0.5}, "optimizer": {"seed": 4}}"#
    }

    #[test]
    fn defaults_fill_in() {
        let c: RunConfig = serde_json::from_str(minimal()).unwrap();
        c.validate().unwrap();
        assert_eq!(c.optimizer.initial_step, 0.3);
        assert_eq!(c.optimizer.max_generations, 300);
        assert_eq!(c.schedule.snapshot_every, 1);
        assert_eq!(c.evaluation.n_runs, 3);
        assert_eq!(c.start(), TrajectoryParams::thrust_initialization());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a: RunConfig = serde_json::from_str(minimal()).unwrap();
        let mut b = a.clone();
        assert_eq!(a.sha256(), b.sha256());
        b.optimizer.seed = 5;
        assert_ne!(a.sha256(), b.sha256());
        assert_eq!(a.sha256().len(), 64);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c: RunConfig = serde_json::from_str(minimal()).unwrap();
        c.run_id = "../escape".into();
        assert!(matches!(c.validate(), Err(HarnessError::Config(_))));
        let mut c: RunConfig = serde_json::from_str(minimal()).unwrap();
        c.optimizer.initialization = Some(Initialization::Explicit(
            TrajectoryParams::thrust_initialization().with(finadapt_core::Param::Frequency, 2.0),
        ));
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("frequency"), "{err}");
        assert!(serde_json::from_str::<RunConfig>(&minimal().replace("\"seed\"", "\"sead\"")).is_err());
    }

    #[test]
    fn branch_directive_shape() {
        let d: BranchDirective = serde_json::from_str(r#"{"seeds": [1, 2]}"#).unwrap();
        assert_eq!(d.at, BranchPoint::BeforeEnd(10));
        assert_eq!(d.damage_fraction, 0.442);
        let d: BranchDirective = serde_json::from_str(r#"{"at": {"generation": 69}, "seeds": [1]}"#).unwrap();
        assert_eq!(d.at, BranchPoint::Generation(69));
    }
}
