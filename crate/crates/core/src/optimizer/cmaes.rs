//! CMA-ES in ask/tell form on a box rescaled to the unit cube.
//!
//! Candidates are drawn without constraints and clamped only for evaluation;
//! the update sees the raw draws. Weights and learning rates are the usual
//! defaults for positive recombination weights (rank-one plus rank-mu update,
//! cumulative step-size adaptation).

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use libm::{exp, floor, log, sqrt};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ParamTable, TrajectoryParams, N_PARAMS};
use crate::seed;

pub const SNAPSHOT_SCHEMA: &str = "finadapt.cmaes-snapshot/1";
/// Initial step size in unit-cube coordinates.
pub const DEFAULT_SIGMA0: f64 = 0.3;
pub const DEFAULT_MAX_GENERATIONS: u64 = 300;
/// Smallest eigenvalue the covariance is allowed to keep.
pub const EIGEN_FLOOR: f64 = 1e-14;
/// Initial per-axis standard deviation as a fraction of the box width.
const INITIAL_AXIS_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmaesError {
    #[error("start value {value} for parameter {index} lies outside [{lower}, {upper}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("invalid optimizer settings: {0}")]
    InvalidSettings(String),
    #[error("expected {expected} fitness values for the generation, got {got}")]
    WrongFitnessCount { expected: usize, got: usize },
    #[error("candidates were drawn in generation {drawn}, optimizer is at generation {current}")]
    StaleCandidates { drawn: u64, current: u64 },
    #[error("every candidate of the generation failed to evaluate")]
    AllCandidatesFailed,
    #[error("snapshot schema {found:?} is not compatible with {expected:?}")]
    SchemaMismatch { expected: String, found: String },
    #[error("snapshot is inconsistent: {0}")]
    CorruptSnapshot(String),
}

/// Per-parameter search box and convergence thresholds, in parameter units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl Bounds {
    pub fn from_table(table: &ParamTable) -> Self {
        Self {
            lower: table.lower().to_vec(),
            upper: table.upper().to_vec(),
            thresholds: table.thresholds().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn check(&self) -> Result<(), CmaesError> {
        let n = self.lower.len();
        if n == 0 || self.upper.len() != n || self.thresholds.len() != n {
            return Err(CmaesError::InvalidSettings(
                "bounds and thresholds must be non-empty and of equal length".into(),
            ));
        }
        for i in 0..n {
            let (lo, hi, th) = (self.lower[i], self.upper[i], self.thresholds[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CmaesError::InvalidSettings(alloc::format!(
                    "empty range for parameter {i}"
                )));
            }
            if !(th > 0.0 && th.is_finite()) {
                return Err(CmaesError::InvalidSettings(alloc::format!(
                    "threshold for parameter {i} must be positive"
                )));
            }
        }
        Ok(())
    }

    fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| (v - self.lower[i]) / self.width(i))
            .collect()
    }

    /// Affine map back to parameter units, without clamping.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &v)| self.lower[i] + v * self.width(i))
            .collect()
    }

    /// Maps to parameter units and clamps onto the box.
    pub fn project_unit(&self, u: &[f64]) -> Vec<f64> {
        self.from_unit(u)
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.clamp(self.lower[i], self.upper[i]))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaesSettings {
    /// Defaults to `4 + floor(3 ln n)`.
    pub population_size: Option<usize>,
    /// Step size in unit-cube coordinates.
    pub initial_step: f64,
}

impl Default for CmaesSettings {
    fn default() -> Self {
        Self {
            population_size: None,
            initial_step: DEFAULT_SIGMA0,
        }
    }
}

pub fn default_population_size(dim: usize) -> usize {
    4 + floor(3.0 * log(dim as f64)) as usize
}

/// One draw of a generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub generation: u64,
    pub index: usize,
    /// Raw draw in unit-cube coordinates; this is what the update uses.
    pub unit: Vec<f64>,
    /// Raw draw in parameter units, possibly outside the box.
    pub raw: Vec<f64>,
    /// Clamped onto the box; this is what gets evaluated.
    pub projected: Vec<f64>,
}

impl Candidate {
    /// The projected point as a trajectory, if the search space is the 9-parameter one.
    pub fn trajectory(&self) -> Option<TrajectoryParams> {
        let arr: [f64; N_PARAMS] = self.projected.as_slice().try_into().ok()?;
        Some(TrajectoryParams::from_array(arr))
    }
}

/// Per-parameter spread `sigma * sqrt(C_ii)` in parameter units and the resulting flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub spread: Vec<f64>,
    pub flags: Vec<bool>,
    pub all: bool,
}

/// Serializable position of the sampler's ChaCha8 generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub key: [u32; 8],
    pub stream: u64,
    /// Word position as `[low, high]` halves of a 128-bit counter.
    pub word_pos: [u64; 2],
}

impl RngState {
    fn capture(rng: &ChaCha8Rng) -> Self {
        let bytes = rng.get_seed();
        let mut key = [0u32; 8];
        for (k, chunk) in key.iter_mut().zip(bytes.chunks_exact(4)) {
            *k = u32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        let pos = rng.get_word_pos();
        Self {
            key,
            stream: rng.get_stream(),
            word_pos: [pos as u64, (pos >> 64) as u64],
        }
    }

    fn rebuild(&self) -> ChaCha8Rng {
        let mut bytes = [0u8; 32];
        for (chunk, k) in bytes.chunks_exact_mut(4).zip(self.key) {
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(bytes);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos[0] as u128 | (self.word_pos[1] as u128) << 64);
        rng
    }
}

/// Complete optimizer state as plain data. Vectors and matrices are in
/// unit-cube coordinates; matrices are stored row by row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmaesSnapshot {
    pub schema: String,
    pub generation: u64,
    pub population_size: usize,
    pub step_size: f64,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub path_sigma: Vec<f64>,
    pub path_c: Vec<f64>,
    pub bounds: Bounds,
    pub rng: RngState,
}

/// Constants fixed by dimension and population size.
#[derive(Clone, Debug)]
struct Strategy {
    mu: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Strategy {
    fn new(n: usize, lambda: usize) -> Self {
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| log((lambda as f64 + 1.0) / 2.0) - log(i as f64))
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (sqrt((mu_eff - 1.0) / (nf + 1.0)) - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3) * (nf + 1.3) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0) * (nf + 2.0) + mu_eff));
        let chi_n = sqrt(nf) * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Cmaes {
    bounds: Bounds,
    lambda: usize,
    strategy: Strategy,
    generation: u64,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    path_sigma: DVector<f64>,
    path_c: DVector<f64>,
    /// Eigenvectors of `cov`, one per column.
    basis: DMatrix<f64>,
    /// Square roots of the (floored) eigenvalues of `cov`.
    scales: DVector<f64>,
    rng: ChaCha8Rng,
}

fn sampler_rng(seed: u64) -> ChaCha8Rng {
    seed::rng_for(seed, &[])
}

impl Cmaes {
    /// Starts a search at `start` (parameter units), which must lie in the box.
    pub fn new(start: &[f64], bounds: Bounds, seed: u64, settings: CmaesSettings) -> Result<Self, CmaesError> {
        bounds.check()?;
        let n = bounds.dim();
        if start.len() != n {
            return Err(CmaesError::InvalidSettings(alloc::format!(
                "start has {} values for a {n}-dimensional box",
                start.len()
            )));
        }
        for (i, &v) in start.iter().enumerate() {
            if !(v >= bounds.lower[i] && v <= bounds.upper[i]) {
                return Err(CmaesError::OutOfBounds {
                    index: i,
                    value: v,
                    lower: bounds.lower[i],
                    upper: bounds.upper[i],
                });
            }
        }
        if !(settings.initial_step > 0.0 && settings.initial_step.is_finite()) {
            return Err(CmaesError::InvalidSettings("initial step must be positive".into()));
        }
        let lambda = settings.population_size.unwrap_or_else(|| default_population_size(n));
        if lambda < 2 {
            return Err(CmaesError::InvalidSettings("population size must be at least 2".into()));
        }
        let variance = INITIAL_AXIS_FRACTION * INITIAL_AXIS_FRACTION;
        let mut state = Self {
            mean: DVector::from_vec(bounds.to_unit(start)),
            strategy: Strategy::new(n, lambda),
            bounds,
            lambda,
            generation: 0,
            sigma: settings.initial_step,
            cov: DMatrix::from_diagonal_element(n, n, variance),
            path_sigma: DVector::zeros(n),
            path_c: DVector::zeros(n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, sqrt(variance)),
            rng: sampler_rng(seed),
        };
        state.refresh_eigen();
        Ok(state)
    }

    /// Starts from a trajectory inside the standard parameter table.
    pub fn for_trajectory(
        start: &TrajectoryParams,
        table: &ParamTable,
        seed: u64,
        settings: CmaesSettings,
    ) -> Result<Self, CmaesError> {
        Self::new(&start.to_array(), Bounds::from_table(table), seed, settings)
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn population_size(&self) -> usize {
        self.lambda
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn step_size(&self) -> f64 {
        self.sigma
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Distribution mean in parameter units.
    pub fn mean(&self) -> Vec<f64> {
        self.bounds.from_unit(self.mean.as_slice())
    }

    pub fn mean_unit(&self) -> &[f64] {
        self.mean.as_slice()
    }

    /// Covariance in unit-cube coordinates (without the `sigma^2` factor).
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Covariance of the sampling distribution, `sigma^2 C`, in parameter units.
    pub fn covariance_in_units(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            self.sigma * self.sigma * self.cov[(i, j)] * self.bounds.width(i) * self.bounds.width(j)
        })
    }

    /// Replaces the sampler's random stream, leaving the distribution untouched.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = sampler_rng(seed);
    }

    /// Draws one generation of `lambda` candidates.
    pub fn ask(&mut self) -> Vec<Candidate> {
        let n = self.dim();
        (0..self.lambda)
            .map(|index| {
                let z = DVector::from_fn(n, |_, _| -> f64 { StandardNormal.sample(&mut self.rng) });
                let y = &self.basis * z.component_mul(&self.scales);
                let unit: Vec<f64> = (&self.mean + y * self.sigma).iter().copied().collect();
                Candidate {
                    generation: self.generation,
                    index,
                    raw: self.bounds.from_unit(&unit),
                    projected: self.bounds.project_unit(&unit),
                    unit,
                }
            })
            .collect()
    }

    /// Updates the distribution from the fitness of every candidate of the
    /// current generation (lower is better).
    ///
    /// Non-finite values mark failed evaluations and are replaced by the
    /// worst finite value. A generation whose values are all equal carries no
    /// ranking information; the distribution is then kept as it is and only
    /// the generation counter advances.
    pub fn tell(&mut self, candidates: &[Candidate], fitness: &[f64]) -> Result<(), CmaesError> {
        if candidates.len() != self.lambda || fitness.len() != self.lambda {
            return Err(CmaesError::WrongFitnessCount {
                expected: self.lambda,
                got: fitness.len().min(candidates.len()),
            });
        }
        if let Some(c) = candidates.iter().find(|c| c.generation != self.generation) {
            return Err(CmaesError::StaleCandidates {
                drawn: c.generation,
                current: self.generation,
            });
        }
        let worst = fitness
            .iter()
            .copied()
            .filter(|f| f.is_finite())
            .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.max(f))))
            .ok_or(CmaesError::AllCandidatesFailed)?;
        let clean: Vec<f64> = fitness.iter().map(|&f| if f.is_finite() { f } else { worst }).collect();
        let best = clean.iter().copied().fold(f64::INFINITY, f64::min);
        if best == worst {
            self.generation += 1;
            return Ok(());
        }

        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&a, &b| clean[a].total_cmp(&clean[b]).then(a.cmp(&b)));

        let n = self.dim();
        let s = &self.strategy;
        let steps: Vec<DVector<f64>> = order[..s.mu]
            .iter()
            .map(|&k| (DVector::from_column_slice(&candidates[k].unit) - &self.mean) / self.sigma)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in s.weights.iter().zip(&steps) {
            y_w += y * *w;
        }

        // The mean stays in the box. The paths follow the step it actually
        // took, so pushes against a bound do not accumulate into step growth.
        let old_mean = self.mean.clone();
        self.mean += &y_w * self.sigma;
        for v in self.mean.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let y_w = (&self.mean - old_mean) / self.sigma;

        let inv_scales = self.scales.map(|d| 1.0 / d);
        let whitened = &self.basis * (self.basis.tr_mul(&y_w)).component_mul(&inv_scales);
        self.path_sigma =
            &self.path_sigma * (1.0 - s.c_sigma) + whitened * sqrt(s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff);
        let ps_norm = self.path_sigma.norm();
        let decay = 1.0 - libm::pow(1.0 - s.c_sigma, 2.0 * (self.generation + 1) as f64);
        let h_sigma = ps_norm / sqrt(decay) < (1.4 + 2.0 / (n as f64 + 1.0)) * s.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        self.path_c = &self.path_c * (1.0 - s.c_c) + &y_w * (h * sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff));

        let delta_h = (1.0 - h) * s.c_c * (2.0 - s.c_c);
        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, y) in s.weights.iter().zip(&steps) {
            rank_mu += y * y.transpose() * *w;
        }
        self.cov = &self.cov * (1.0 + s.c_1 * delta_h - s.c_1 - s.c_mu)
            + &self.path_c * self.path_c.transpose() * s.c_1
            + rank_mu * s.c_mu;

        self.sigma *= exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0));
        self.repair_covariance();
        self.generation += 1;
        Ok(())
    }

    /// Re-symmetrizes `cov` and lifts eigenvalues to the floor.
    fn repair_covariance(&mut self) {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let floored = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
        let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose();
        self.cov = (&rebuilt + rebuilt.transpose()) * 0.5;
        self.refresh_eigen();
    }

    /// Recomputes the sampling factors from `cov` alone, so a restored state
    /// reproduces them exactly.
    fn refresh_eigen(&mut self) {
        let eig = SymmetricEigen::new(self.cov.clone());
        self.scales = eig.eigenvalues.map(|v| sqrt(v.max(EIGEN_FLOOR)));
        self.basis = eig.eigenvectors;
    }

    pub fn converged(&self) -> Convergence {
        let spread: Vec<f64> = (0..self.dim())
            .map(|i| self.sigma * sqrt(self.cov[(i, i)]) * self.bounds.width(i))
            .collect();
        let flags: Vec<bool> = spread.iter().zip(&self.bounds.thresholds).map(|(s, t)| s < t).collect();
        let all = flags.iter().all(|&f| f);
        Convergence { spread, flags, all }
    }

    pub fn snapshot(&self) -> CmaesSnapshot {
        let n = self.dim();
        CmaesSnapshot {
            schema: SNAPSHOT_SCHEMA.to_string(),
            generation: self.generation,
            population_size: self.lambda,
            step_size: self.sigma,
            mean: self.mean.iter().copied().collect(),
            covariance: (0..n).map(|i| self.cov.row(i).iter().copied().collect()).collect(),
            path_sigma: self.path_sigma.iter().copied().collect(),
            path_c: self.path_c.iter().copied().collect(),
            bounds: self.bounds.clone(),
            rng: RngState::capture(&self.rng),
        }
    }

    pub fn restore(snapshot: &CmaesSnapshot) -> Result<Self, CmaesError> {
        if schema_major(&snapshot.schema) != schema_major(SNAPSHOT_SCHEMA) {
            return Err(CmaesError::SchemaMismatch {
                expected: SNAPSHOT_SCHEMA.to_string(),
                found: snapshot.schema.clone(),
            });
        }
        let bounds = snapshot.bounds.clone();
        bounds.check()?;
        let n = bounds.dim();
        let corrupt = |what: &str| CmaesError::CorruptSnapshot(what.to_string());
        if snapshot.mean.len() != n || snapshot.path_sigma.len() != n || snapshot.path_c.len() != n {
            return Err(corrupt("vector length does not match the bounds"));
        }
        if snapshot.covariance.len() != n || snapshot.covariance.iter().any(|r| r.len() != n) {
            return Err(corrupt("covariance is not square in the bounds' dimension"));
        }
        if !(snapshot.step_size > 0.0 && snapshot.step_size.is_finite()) {
            return Err(corrupt("step size must be positive"));
        }
        if snapshot.population_size < 2 {
            return Err(corrupt("population size must be at least 2"));
        }
        let cov = DMatrix::from_fn(n, n, |i, j| snapshot.covariance[i][j]);
        if cov.iter().any(|v| !v.is_finite()) || cov != cov.transpose() {
            return Err(corrupt("covariance must be finite and symmetric"));
        }
        let mut state = Self {
            mean: DVector::from_column_slice(&snapshot.mean),
            strategy: Strategy::new(n, snapshot.population_size),
            lambda: snapshot.population_size,
            generation: snapshot.generation,
            sigma: snapshot.step_size,
            cov,
            path_sigma: DVector::from_column_slice(&snapshot.path_sigma),
            path_c: DVector::from_column_slice(&snapshot.path_c),
            basis: DMatrix::identity(n, n),
            scales: DVector::zeros(n),
            rng: snapshot.rng.rebuild(),
            bounds,
        };
        state.refresh_eigen();
        Ok(state)
    }
}

/// `"name/3"` -> `Some(("name", "3"))`.
fn schema_major(schema: &str) -> Option<(&str, &str)> {
    let (name, version) = schema.rsplit_once('/')?;
    Some((name, version.split('.').next()?))
}
