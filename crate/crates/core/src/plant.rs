//! Quasi-steady blade-element stand-in for the flapping-fin rig.
//!
//! Geometry: the fin hangs from its mount, so the stem points along lab `-z`
//! at rest and `+z` points from the fin towards the body it propels.
//! Deflection angles `(x, y)` tilt the stem to
//!
//! ```text
//! d = (sin x cos y, sin y, -cos x cos y)
//! ```
//!
//! The fin is a flat plate containing the stem, spanning radii
//! `root_offset ..= root_offset + span`. Its chord direction is
//! `c = cos(p) e1 + sin(p) e2` with `e1 = (cos x, 0, sin x)`, `e2 = e1 x d`
//! and `p` the absolute pitch; the plate normal is `n = c x d`.
//!
//! Each spanwise strip at radius `r` moves with `U = r dd/dt` plus, for an
//! amputated fin whose pressure centre sits `e` off the pitch axis,
//! `e * dp/dt * n`. Its normal force is `-1/2 rho C0 A (U.n) |U|` along `n`,
//! i.e. magnitude `1/2 rho C0 sin(alpha) A U^2` with `alpha` the angle between
//! `U` and the plate. Added mass and wake effects are not modelled.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use libm::{cos, exp, sin, sqrt};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{self, KinematicsError, KinematicsSample, KinematicsTrace};
use crate::params::TrajectoryParams;
use crate::seed;

/// Start-up cycles dropped from every run.
pub const DISCARDED_CYCLES: usize = 3;
/// Points of the uniform azimuth grid that records are resampled onto.
pub const DEFAULT_GRID: usize = 360;
/// Area lost when one half of the plate is cut away (the stem mount stays).
pub const DEFAULT_AREA_LOSS: f64 = 0.442;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("invalid plant setting: {0}")]
    InvalidSettings(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinSpec {
    /// m, radial extent of the plate.
    pub span: f64,
    /// m
    pub chord: f64,
    /// m, stem length from the pivot to the fin root.
    pub root_offset: f64,
    pub n_strips: usize,
    /// s, first-order lag of the effective pitch; 0 for a rigid fin.
    pub pitch_lag_tau: f64,
}

impl Default for FinSpec {
    fn default() -> Self {
        Self {
            span: 0.200,
            chord: 0.050,
            root_offset: 0.225,
            n_strips: 20,
            pitch_lag_tau: 0.0,
        }
    }
}

impl FinSpec {
    pub fn area(&self) -> f64 {
        self.span * self.chord
    }

    pub fn strip_radius(&self, i: usize) -> f64 {
        self.root_offset + (i as f64 + 0.5) * self.span / self.n_strips as f64
    }

    pub fn centroid_radius(&self) -> f64 {
        self.root_offset + 0.5 * self.span
    }

    fn check(&self) -> Result<(), PlantError> {
        if !(self.span > 0.0 && self.chord > 0.0 && self.root_offset > 0.0) {
            return Err(PlantError::InvalidSettings("fin dimensions must be positive"));
        }
        if self.n_strips < 4 {
            return Err(PlantError::InvalidSettings("at least 4 strips required"));
        }
        if !(self.pitch_lag_tau >= 0.0) {
            return Err(PlantError::InvalidSettings("pitch lag must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidSpec {
    /// kg/m^3
    pub density: f64,
    /// m^2/s
    pub kinematic_viscosity: f64,
    /// `C0` in `C_N(alpha) = C0 sin(alpha)`.
    pub normal_force_coefficient: f64,
}

impl Default for FluidSpec {
    fn default() -> Self {
        Self {
            density: 880.0,
            kinematic_viscosity: 115e-6,
            normal_force_coefficient: 3.4,
        }
    }
}

impl FluidSpec {
    fn check(&self) -> Result<(), PlantError> {
        if self.density > 0.0 && self.kinematic_viscosity > 0.0 && self.normal_force_coefficient > 0.0 {
            Ok(())
        } else {
            Err(PlantError::InvalidSettings("fluid properties must be positive"))
        }
    }
}

/// One-sided planform loss.
///
/// `cp_lateral_offset` is the signed chordwise position of the retained
/// planform's centroid along the chord direction `c`; the cut removes the
/// `+c` side, so the offset is negative for an amputated fin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamageState {
    pub intact: bool,
    pub area_loss_fraction: f64,
    /// m
    pub cp_lateral_offset: f64,
}

impl Default for DamageState {
    fn default() -> Self {
        Self::intact()
    }
}

impl DamageState {
    pub fn intact() -> Self {
        Self {
            intact: true,
            area_loss_fraction: 0.0,
            cp_lateral_offset: 0.0,
        }
    }

    pub fn retained_area_fraction(&self) -> f64 {
        1.0 - self.area_loss_fraction
    }

    fn check(&self) -> Result<(), PlantError> {
        if self.intact && (self.area_loss_fraction != 0.0 || self.cp_lateral_offset != 0.0) {
            return Err(PlantError::InvalidSettings("intact fin cannot carry damage"));
        }
        if !(0.0..1.0).contains(&self.area_loss_fraction) {
            return Err(PlantError::InvalidSettings("area loss must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Cuts a chordwise band of width `fraction * chord` off the `+c` edge.
///
/// The retained rectangle spans `[-chord/2, chord/2 - fraction*chord]` about
/// the pitch axis; its centroid is `-fraction * chord / 2` (a quarter chord
/// when half the plate is removed).
pub fn apply_damage(fin: &FinSpec, fraction: f64) -> Result<DamageState, PlantError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(PlantError::InvalidSettings("damage fraction must lie in [0, 1)"));
    }
    if fraction == 0.0 {
        return Ok(DamageState::intact());
    }
    Ok(DamageState {
        intact: false,
        area_loss_fraction: fraction,
        cp_lateral_offset: -0.5 * fraction * fin.chord,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// N, standard deviation of additive noise on every force sample.
    pub force_noise_std: f64,
    pub rng_seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            force_noise_std: 0.01,
            rng_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    pub fin: FinSpec,
    pub fluid: FluidSpec,
    pub damage: DamageState,
    pub noise: NoiseSpec,
}

impl PlantConfig {
    pub fn check(&self) -> Result<(), PlantError> {
        self.fin.check()?;
        self.fluid.check()?;
        self.damage.check()?;
        if !(self.noise.force_noise_std >= 0.0) {
            return Err(PlantError::InvalidSettings("noise std must be non-negative"));
        }
        Ok(())
    }

    pub fn noiseless(mut self) -> Self {
        self.noise.force_noise_std = 0.0;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub n_runs: usize,
    pub n_cycles: usize,
    /// Kinematic samples per period.
    pub n_samples: usize,
    /// Azimuth grid size of recorded traces.
    pub grid_size: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            n_runs: 3,
            n_cycles: 5,
            n_samples: 360,
            grid_size: DEFAULT_GRID,
        }
    }
}

impl EvalSettings {
    pub fn check(&self) -> Result<(), PlantError> {
        if self.n_runs < 3 {
            return Err(PlantError::InvalidSettings("every trajectory needs at least 3 runs"));
        }
        if self.n_cycles <= DISCARDED_CYCLES {
            return Err(PlantError::InvalidSettings("need at least 4 cycles per run"));
        }
        if self.grid_size < 4 {
            return Err(PlantError::InvalidSettings("grid too small"));
        }
        Ok(())
    }
}

/// Lab-frame orientation of the stem and the plate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FinFrame {
    pub stem: [f64; 3],
    pub chord: [f64; 3],
    pub normal: [f64; 3],
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    sqrt(dot(a, a))
}

pub fn fin_frame(sweep_deg: [f64; 2], pitch_deg: f64) -> FinFrame {
    let (x, y) = (sweep_deg[0].to_radians(), sweep_deg[1].to_radians());
    let (sx, cx, sy, cy) = (sin(x), cos(x), sin(y), cos(y));
    let stem = [sx * cy, sy, -cx * cy];
    let e1 = [cx, 0.0, sx];
    let e2 = cross(e1, stem);
    let p = pitch_deg.to_radians();
    let (sp, cp) = (sin(p), cos(p));
    let chord = [
        cp * e1[0] + sp * e2[0],
        cp * e1[1] + sp * e2[1],
        cp * e1[2] + sp * e2[2],
    ];
    FinFrame {
        stem,
        chord,
        normal: cross(chord, stem),
    }
}

/// Time derivative of the stem direction, 1/s.
fn stem_rate(sweep_deg: [f64; 2], sweep_rate_deg: [f64; 2]) -> [f64; 3] {
    let (x, y) = (sweep_deg[0].to_radians(), sweep_deg[1].to_radians());
    let (vx, vy) = (sweep_rate_deg[0].to_radians(), sweep_rate_deg[1].to_radians());
    let (sx, cx, sy, cy) = (sin(x), cos(x), sin(y), cos(y));
    [cx * cy * vx - sx * sy * vy, cy * vy, sx * cy * vx + cx * sy * vy]
}

/// Instantaneous plate force.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForceSample {
    /// N, lab frame.
    pub force: [f64; 3],
    /// N, signed component along the plate normal.
    pub normal: f64,
}

/// Sums the strip forces for one kinematic state.
pub fn plate_force(
    sweep_deg: [f64; 2],
    sweep_rate_deg: [f64; 2],
    pitch_deg: f64,
    pitch_rate_deg: f64,
    fin: &FinSpec,
    fluid: &FluidSpec,
    damage: &DamageState,
) -> ForceSample {
    let frame = fin_frame(sweep_deg, pitch_deg);
    let dstem = stem_rate(sweep_deg, sweep_rate_deg);
    let lateral = damage.cp_lateral_offset * pitch_rate_deg.to_radians();
    let strip_area = fin.area() * damage.retained_area_fraction() / fin.n_strips as f64;
    let k = 0.5 * fluid.density * fluid.normal_force_coefficient * strip_area;

    let mut normal = 0.0;
    for i in 0..fin.n_strips {
        let r = fin.strip_radius(i);
        let u = [
            r * dstem[0] + lateral * frame.normal[0],
            r * dstem[1] + lateral * frame.normal[1],
            r * dstem[2] + lateral * frame.normal[2],
        ];
        normal -= k * dot(u, frame.normal) * norm(u);
    }
    ForceSample {
        force: frame.normal.map(|c| normal * c),
        normal,
    }
}

/// Force on the fin at one sample of a rigid-fin trace.
pub fn strip_forces(
    trace: &KinematicsTrace,
    fin: &FinSpec,
    fluid: &FluidSpec,
    damage: &DamageState,
    sample_index: usize,
) -> ForceSample {
    let s = &trace.samples[sample_index];
    plate_force(
        s.sweep,
        s.sweep_rate,
        s.pitch_absolute,
        s.pitch_rate,
        fin,
        fluid,
        damage,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSample {
    pub t: f64,
    pub phi: f64,
    pub force: [f64; 3],
    pub normal: f64,
    /// Effective angle of attack after the pitch lag, degrees.
    pub aoa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleTrace {
    pub index: usize,
    pub discarded: bool,
    pub samples: Vec<CycleSample>,
}

fn simulate(trace: &KinematicsTrace, n_cycles: usize, plant: &PlantConfig, rng: &mut ChaCha8Rng) -> Vec<CycleTrace> {
    let fin = &plant.fin;
    let tau = fin.pitch_lag_tau;
    let h = trace.dt();
    let decay = if tau > 0.0 { exp(-h / tau) } else { 0.0 };
    let n = trace.len();

    // lag error (effective minus commanded pitch); the plate starts at zero angle of attack
    let mut lag = if tau > 0.0 { -trace.samples[0].aoa } else { 0.0 };
    let noise = plant.noise.force_noise_std;

    let mut cycles = Vec::with_capacity(n_cycles);
    for cycle in 0..n_cycles {
        let mut samples = Vec::with_capacity(n);
        for (i, s) in trace.samples.iter().enumerate() {
            let (pitch, pitch_rate) = if tau > 0.0 {
                (s.pitch_absolute + lag, -lag / tau)
            } else {
                (s.pitch_absolute, s.pitch_rate)
            };
            let mut f = plate_force(
                s.sweep,
                s.sweep_rate,
                pitch,
                pitch_rate,
                fin,
                &plant.fluid,
                &plant.damage,
            );
            if noise > 0.0 {
                for c in f.force.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *c += noise * z;
                }
                let z: f64 = StandardNormal.sample(rng);
                f.normal += noise * z;
            }
            samples.push(CycleSample {
                t: s.t,
                phi: s.phi,
                force: f.force,
                normal: f.normal,
                aoa: s.aoa + lag,
            });
            if tau > 0.0 {
                // exact response to a linearly interpolated command; the
                // commanded pitch gains a full turn across the period seam
                let next = match trace.samples.get(i + 1) {
                    Some(nx) => nx.pitch_absolute,
                    None => trace.samples[0].pitch_absolute + 360.0,
                };
                let slope = (next - s.pitch_absolute) / h;
                lag = -tau * slope + (lag + tau * slope) * decay;
            }
        }
        cycles.push(CycleTrace {
            index: cycle,
            discarded: cycle < DISCARDED_CYCLES,
            samples,
        });
    }
    cycles
}

/// Simulates `n_cycles` consecutive periods; the first three are flagged discarded.
///
/// `stream` selects the noise substream of `plant.noise.rng_seed`.
pub fn run_cycles(
    params: &TrajectoryParams,
    n_cycles: usize,
    plant: &PlantConfig,
    n_samples: usize,
    stream: u64,
) -> Result<Vec<CycleTrace>, PlantError> {
    plant.check()?;
    if n_cycles <= DISCARDED_CYCLES {
        return Err(PlantError::InvalidSettings("need at least 4 cycles per run"));
    }
    let trace = kinematics::generate(params, n_samples)?;
    let mut rng = seed::rng_for(plant.noise.rng_seed, &[stream]);
    Ok(simulate(&trace, n_cycles, plant, &mut rng))
}

/// Averaged outcome of evaluating one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// N, time average over retained cycles of all runs.
    pub mean_force: [f64; 3],
    /// N, time average of `|F_n(t)|`.
    pub mean_normal_force_mag: f64,
    /// Uniform azimuth grid, radians.
    pub phi_grid: Vec<f64>,
    /// `(Fx, Fy, Fz, F_n)` per grid point.
    pub force_trace: Vec<[f64; 4]>,
    /// Effective angle of attack per grid point, degrees.
    pub aoa_trace: Vec<f64>,
    pub n_runs: usize,
    /// Span times the cycle-mean fin-centroid speed over the kinematic viscosity.
    pub reynolds: f64,
}

/// Force and normal-force averages without the traces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub mean_force: [f64; 3],
    pub mean_normal_force_mag: f64,
    pub reynolds: f64,
}

impl CycleRecord {
    pub fn summary(&self) -> RecordSummary {
        RecordSummary {
            mean_force: self.mean_force,
            mean_normal_force_mag: self.mean_normal_force_mag,
            reynolds: self.reynolds,
        }
    }
}

/// Periodic linear interpolation weights from increasing sample azimuths onto a uniform grid.
fn grid_weights(phis: &[f64], grid_size: usize) -> Vec<(usize, usize, f64)> {
    let n = phis.len();
    (0..grid_size)
        .map(|g| {
            let target = TAU * g as f64 / grid_size as f64;
            let j = phis.partition_point(|&p| p <= target).saturating_sub(1);
            let (lo, hi) = (j, (j + 1) % n);
            let hi_phi = if hi == 0 { phis[0] + TAU } else { phis[hi] };
            let w = (target - phis[lo]) / (hi_phi - phis[lo]);
            (lo, hi, w)
        })
        .collect()
}

pub fn uniform_grid(grid_size: usize) -> Vec<f64> {
    (0..grid_size).map(|g| TAU * g as f64 / grid_size as f64).collect()
}

fn mean_centroid_speed(trace: &KinematicsTrace, fin: &FinSpec) -> f64 {
    let r = fin.centroid_radius();
    let total: f64 = trace
        .samples
        .iter()
        .map(|s: &KinematicsSample| r * norm(stem_rate(s.sweep, s.sweep_rate)))
        .sum();
    total / trace.len() as f64
}

/// Evaluates a trajectory `n_runs` times and averages the retained cycles.
///
/// Run `k` draws noise from substream `(stream, k)`, so records depend only on
/// `(params, plant, settings, stream)`.
pub fn evaluate(
    params: &TrajectoryParams,
    plant: &PlantConfig,
    settings: &EvalSettings,
    stream: u64,
) -> Result<CycleRecord, PlantError> {
    plant.check()?;
    settings.check()?;
    let trace = kinematics::generate(params, settings.n_samples)?;
    let phis: Vec<f64> = trace.samples.iter().map(|s| s.phi).collect();
    let weights = grid_weights(&phis, settings.grid_size);

    let mut force_sum = [0.0; 3];
    let mut normal_sum = 0.0;
    let mut count = 0usize;
    let mut force_trace = alloc::vec![[0.0; 4]; settings.grid_size];
    let mut aoa_trace = alloc::vec![0.0; settings.grid_size];
    let mut retained = 0usize;

    for run in 0..settings.n_runs {
        let mut rng = seed::rng_for(plant.noise.rng_seed, &[stream, run as u64]);
        let cycles = simulate(&trace, settings.n_cycles, plant, &mut rng);
        for cycle in cycles.iter().filter(|c| !c.discarded) {
            for s in &cycle.samples {
                for (acc, f) in force_sum.iter_mut().zip(s.force) {
                    *acc += f;
                }
                normal_sum += s.normal.abs();
            }
            count += cycle.samples.len();
            for (g, &(lo, hi, w)) in weights.iter().enumerate() {
                let (a, b) = (&cycle.samples[lo], &cycle.samples[hi]);
                let lerp = |x: f64, y: f64| x + w * (y - x);
                let out = &mut force_trace[g];
                for (o, (&x, &y)) in out.iter_mut().zip(a.force.iter().zip(&b.force)) {
                    *o += lerp(x, y);
                }
                out[3] += lerp(a.normal, b.normal);
                // aoa is periodic per cycle, no unwrapping across the seam needed
                aoa_trace[g] += lerp(a.aoa, b.aoa);
            }
            retained += 1;
        }
    }

    let inv = 1.0 / count as f64;
    let inv_cycles = 1.0 / retained as f64;
    for v in force_trace.iter_mut() {
        for c in v.iter_mut() {
            *c *= inv_cycles;
        }
    }
    for a in aoa_trace.iter_mut() {
        *a *= inv_cycles;
    }
    let speed = mean_centroid_speed(&trace, &plant.fin);
    Ok(CycleRecord {
        mean_force: force_sum.map(|f| f * inv),
        mean_normal_force_mag: normal_sum * inv,
        phi_grid: uniform_grid(settings.grid_size),
        force_trace,
        aoa_trace,
        n_runs: settings.n_runs,
        reynolds: plant.fin.span * speed / plant.fluid.kinematic_viscosity,
    })
}
