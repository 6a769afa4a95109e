//! Trajectory parameters to time-resolved fin kinematics over one period.
//!
//! The fin stem sweeps an elliptical path in the plane of lab-frame deflection
//! angles `(x, y)`, parametrized by the azimuth `phi`:
//!
//! ```text
//! x(phi) = stroke * cos(phi)
//! y(phi) = thickness * sin(phi) + camber * thickness * sin(phi)^2
//! ```
//!
//! The fin pitch about the stem is the local trajectory normal plus an angle of
//! attack `aoa(phi) = rotation * S(phi - rotation_phase + pi/2; accel)` where
//! `S(x; a) = tanh(b sin x) / tanh(b)` with `b = tan(pi * min(a, 0.995) / 2)`.
//! `S(x; 0)` is exactly `sin x`.
//!
//! Time maps to azimuth with a piecewise-constant rate: one half-cycle, chosen
//! by `floor(speed_code)`, runs `speed_up_value` times faster than the rest.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use libm::{atan2, cos, floor, sin, tan, tanh};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::TrajectoryParams;

/// Smallest admissible number of samples per period.
pub const MIN_SAMPLES: usize = 360;

/// Rotation acceleration is capped here so the squareness gain stays finite.
pub const MAX_SQUARENESS: f64 = 0.995;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("degenerate trajectory: thickness angle is zero, the path has no interior")]
    DegenerateTrajectory,
    #[error("at least {MIN_SAMPLES} samples per period required, got {0}")]
    TooFewSamples(usize),
    #[error("frequency must be positive and finite, got {0}")]
    InvalidFrequency(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicsSample {
    /// Seconds since the start of the period.
    pub t: f64,
    /// Azimuthal trajectory parameter, radians.
    pub phi: f64,
    /// Stem deflection angles about the lab x and y axes, degrees.
    pub sweep: [f64; 2],
    /// Orientation of the outward trajectory normal, degrees, continuous over the period.
    pub normal_angle: f64,
    /// Fin orientation about the stem, degrees; `normal_angle + aoa`.
    pub pitch_absolute: f64,
    /// Pitch relative to the local trajectory normal, degrees.
    pub aoa: f64,
    /// deg/s
    pub sweep_rate: [f64; 2],
    /// deg/s
    pub pitch_rate: f64,
    /// rad/s
    pub phi_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicsTrace {
    pub samples: Vec<KinematicsSample>,
    /// Seconds.
    pub period: f64,
}

impl KinematicsTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.period / self.samples.len() as f64
    }
}

/// Position on the (cambered) ellipse in degrees.
pub fn base_ellipse(params: &TrajectoryParams, phi: f64) -> (f64, f64) {
    let (s, c) = (sin(phi), cos(phi));
    let th = params.thickness_angle;
    (params.stroke_angle * c, th * s + params.camber * th * s * s)
}

/// First and second azimuthal derivatives of [`base_ellipse`].
fn ellipse_derivatives(params: &TrajectoryParams, phi: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = (sin(phi), cos(phi));
    let (st, th, k) = (params.stroke_angle, params.thickness_angle, params.camber);
    let d1 = [-st * s, th * c + 2.0 * k * th * s * c];
    let d2 = [-st * c, -th * s + 2.0 * k * th * (c * c - s * s)];
    (d1, d2)
}

fn squareness_gain(accel: f64) -> Option<f64> {
    if accel <= 0.0 {
        None
    } else {
        Some(tan(PI * accel.min(MAX_SQUARENESS) / 2.0))
    }
}

/// Squared-off sinusoid `S(x; a)` and its derivative.
pub fn squareness(x: f64, accel: f64) -> (f64, f64) {
    match squareness_gain(accel) {
        None => (sin(x), cos(x)),
        Some(b) => {
            let th = tanh(b * sin(x));
            let norm = tanh(b);
            (th / norm, b * cos(x) * (1.0 - th * th) / norm)
        }
    }
}

/// Angle of attack in degrees at azimuth `phi`.
pub fn aoa_trace(params: &TrajectoryParams, phi: f64) -> f64 {
    let u = phi - params.rotation_phase + FRAC_PI_2;
    params.rotation_angle * squareness(u, params.rotation_acceleration).0
}

/// Piecewise-constant azimuthal rate profile of one period.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeWarp {
    period: f64,
    base_rate: f64,
    speed_up: f64,
    /// Sped-up half-cycle `[start, start + pi)` in azimuth, `None` for uniform speed.
    section_start: Option<f64>,
    /// `(phi_start, t_start, rate)`, ordered, covering `[0, 2pi)`.
    segments: Vec<(f64, f64, f64)>,
}

impl TimeWarp {
    pub fn new(params: &TrajectoryParams) -> Result<Self, KinematicsError> {
        let f = params.frequency;
        if !(f > 0.0 && f.is_finite()) {
            return Err(KinematicsError::InvalidFrequency(f));
        }
        let period = 1.0 / f;
        let code = floor(params.speed_code);
        let section_start = if code >= 1.0 {
            // codes 1..4 start at points I..IV; larger floors wrap around
            let k = (code as i64 - 1).rem_euclid(4) as f64;
            Some(k * FRAC_PI_2)
        } else {
            None
        };
        let speed_up = params.speed_up_value;
        let (base_rate, segments) = match section_start {
            None => (TAU * f, alloc::vec![(0.0, 0.0, TAU * f)]),
            Some(a) => {
                // pi / (s w0) + pi / w0 = period
                let w0 = PI * (1.0 + 1.0 / speed_up) / period;
                let fast = speed_up * w0;
                let b = a + PI;
                let mut bounds: Vec<(f64, f64)> = Vec::with_capacity(3);
                if b <= TAU {
                    if a > 0.0 {
                        bounds.push((0.0, w0));
                    }
                    bounds.push((a, fast));
                    if b < TAU {
                        bounds.push((b, w0));
                    }
                } else {
                    bounds.extend([(0.0, fast), (b - TAU, w0), (a, fast)]);
                }
                let mut segs = Vec::with_capacity(bounds.len());
                let mut t = 0.0;
                for (i, &(start, rate)) in bounds.iter().enumerate() {
                    segs.push((start, t, rate));
                    let end = bounds.get(i + 1).map_or(TAU, |n| n.0);
                    t += (end - start) / rate;
                }
                (w0, segs)
            }
        };
        Ok(Self {
            period,
            base_rate,
            speed_up,
            section_start,
            segments,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Azimuthal rate outside the sped-up section, rad/s.
    pub fn base_rate(&self) -> f64 {
        self.base_rate
    }

    pub fn section(&self) -> Option<(f64, f64)> {
        self.section_start.map(|a| (a, a + PI))
    }

    fn segment_at(&self, t: f64) -> &(f64, f64, f64) {
        let i = self.segments.partition_point(|s| s.1 <= t);
        &self.segments[i.saturating_sub(1)]
    }

    /// Azimuth at time `t` within `[0, period)`.
    pub fn phi(&self, t: f64) -> f64 {
        let &(phi0, t0, rate) = self.segment_at(t);
        phi0 + rate * (t - t0)
    }

    /// Azimuthal rate at time `t`, right-continuous at section boundaries.
    pub fn rate(&self, t: f64) -> f64 {
        self.segment_at(t).2
    }

    /// Whether azimuth `phi` lies in the sped-up half-cycle.
    pub fn in_section(&self, phi: f64) -> bool {
        match self.section_start {
            None => false,
            Some(a) => (phi - a).rem_euclid(TAU) < PI,
        }
    }

    /// Times at which the sped-up section is entered and left, measured from
    /// `t = 0`; the exit may be smaller than the entry if the section wraps.
    pub fn section_times(&self) -> Option<(f64, f64)> {
        let (a, b) = self.section()?;
        Some((self.time_at(a.rem_euclid(TAU)), self.time_at(b.rem_euclid(TAU))))
    }

    /// Inverse of [`TimeWarp::phi`] on `[0, 2pi)`.
    pub fn time_at(&self, phi: f64) -> f64 {
        let i = self.segments.partition_point(|s| s.0 <= phi);
        let &(phi0, t0, rate) = &self.segments[i.saturating_sub(1)];
        t0 + (phi - phi0) / rate
    }

    pub fn speed_up(&self) -> f64 {
        if self.section_start.is_some() {
            self.speed_up
        } else {
            1.0
        }
    }
}

/// Azimuth reached at time `t` (seconds) into the period.
pub fn time_warp(params: &TrajectoryParams, t: f64) -> Result<f64, KinematicsError> {
    Ok(TimeWarp::new(params)?.phi(t))
}

/// Samples one period uniformly in time.
///
/// Bounds are not enforced here (see [`crate::params::validate`]); only
/// geometrically degenerate paths are rejected.
pub fn generate(params: &TrajectoryParams, n_samples: usize) -> Result<KinematicsTrace, KinematicsError> {
    if n_samples < MIN_SAMPLES {
        return Err(KinematicsError::TooFewSamples(n_samples));
    }
    if params.thickness_angle == 0.0 {
        return Err(KinematicsError::DegenerateTrajectory);
    }
    let warp = TimeWarp::new(params)?;
    let period = warp.period();
    let dt = period / n_samples as f64;
    let rad2deg = 180.0 / PI;

    let mut samples = Vec::with_capacity(n_samples);
    let mut prev_normal: Option<f64> = None;
    for i in 0..n_samples {
        let t = i as f64 * dt;
        let phi = warp.phi(t);
        let rate = warp.rate(t);
        let (x, y) = base_ellipse(params, phi);
        let (d1, d2) = ellipse_derivatives(params, phi);

        // outward normal: tangent rotated clockwise
        let raw = atan2(d1[1], d1[0]) * rad2deg - 90.0;
        let normal_angle = match prev_normal {
            None => raw,
            Some(p) => p + wrap_degrees(raw - p),
        };
        prev_normal = Some(normal_angle);
        let normal_rate = (d1[0] * d2[1] - d1[1] * d2[0]) / (d1[0] * d1[0] + d1[1] * d1[1]);

        let u = phi - params.rotation_phase + FRAC_PI_2;
        let (s, ds) = squareness(u, params.rotation_acceleration);
        let aoa = params.rotation_angle * s;
        let aoa_rate = params.rotation_angle * ds * rate;

        samples.push(KinematicsSample {
            t,
            phi,
            sweep: [x, y],
            normal_angle,
            pitch_absolute: normal_angle + aoa,
            aoa,
            sweep_rate: [d1[0] * rate, d1[1] * rate],
            pitch_rate: normal_rate * rad2deg * rate + aoa_rate,
            phi_rate: rate,
        });
    }
    Ok(KinematicsTrace { samples, period })
}

/// Wraps an angle difference into `(-180, 180]` degrees.
pub fn wrap_degrees(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 {
        180.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Param;

    fn thrust() -> TrajectoryParams {
        TrajectoryParams::thrust_initialization()
    }

    #[test]
    fn base_ellipse_examples() {
        let p = thrust().with(Param::Camber, 0.0);
        let (x, y) = base_ellipse(&p, 0.0);
        assert_eq!((x, y), (25.43, 0.0));
        let (x, y) = base_ellipse(&p, FRAC_PI_2);
        assert!(x.abs() < 1e-12);
        assert!((y - 14.29).abs() < 1e-12);

        let p = thrust()
            .with(Param::StrokeAngle, 20.0)
            .with(Param::ThicknessAngle, 10.0)
            .with(Param::Camber, 0.5);
        let (x, y) = base_ellipse(&p, FRAC_PI_2);
        assert!(x.abs() < 1e-12);
        assert!((y - 15.0).abs() < 1e-12);
    }

    #[test]
    fn camber_leaves_major_axis_endpoints() {
        for k in [0.0, 0.3, 1.0] {
            let p = thrust().with(Param::Camber, k);
            let (_, y0) = base_ellipse(&p, 0.0);
            let (_, y1) = base_ellipse(&p, PI);
            assert!(y0.abs() < 1e-12 && y1.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rotation_gives_zero_aoa() {
        let p = thrust().with(Param::RotationAngle, 0.0);
        for i in 0..100 {
            assert_eq!(aoa_trace(&p, i as f64 * 0.0628), 0.0);
        }
    }

    #[test]
    fn sinusoid_extremes_at_rotation_phase() {
        let p = thrust()
            .with(Param::RotationAngle, 30.0)
            .with(Param::RotationPhase, 1.0)
            .with(Param::RotationAcceleration, 0.0);
        assert!((aoa_trace(&p, 1.0) - 30.0).abs() < 1e-12);
        assert!((aoa_trace(&p, 1.0 + PI) + 30.0).abs() < 1e-12);
    }

    #[test]
    fn squareness_widens_the_plateau() {
        // closed form: 1 - 2 asin(s0)/pi with s0 the plateau edge
        const FRACTION_A0: f64 = 0.287_132_586_257_412_56;
        const FRACTION_A09: f64 = 0.850_179_139_612_836_9;
        let n = 36_000;
        let frac = |a: f64| {
            let p = thrust()
                .with(Param::RotationAngle, 30.0)
                .with(Param::RotationPhase, 1.0)
                .with(Param::RotationAcceleration, a);
            (0..n)
                .filter(|&i| aoa_trace(&p, TAU * i as f64 / n as f64).abs() > 27.0)
                .count() as f64
                / n as f64
        };
        let (f0, f9) = (frac(0.0), frac(0.9));
        assert!((f0 - FRACTION_A0).abs() < 1e-3, "{f0}");
        assert!((f9 - FRACTION_A09).abs() < 1e-3, "{f9}");
        assert!(f9 > f0);
    }

    #[test]
    fn zero_accel_is_exact_sine() {
        for i in 0..1000 {
            let x = -7.0 + 0.014 * i as f64;
            let (s, ds) = squareness(x, 0.0);
            assert_eq!(s, sin(x));
            assert_eq!(ds, cos(x));
        }
    }

    #[test]
    fn squareness_derivative_matches_finite_difference() {
        for a in [0.1, 0.5, 0.9, 1.0] {
            for i in 0..50 {
                let x = 0.13 * i as f64;
                let h = 1e-6;
                let fd = (squareness(x + h, a).0 - squareness(x - h, a).0) / (2.0 * h);
                let an = squareness(x, a).1;
                assert!((fd - an).abs() < 1e-4 * (1.0 + an.abs()), "a={a} x={x}");
            }
        }
    }

    #[test]
    fn uniform_warp_for_speed_code_below_one() {
        let p = thrust().with(Param::SpeedCode, 0.5).with(Param::Frequency, 0.8);
        let w = TimeWarp::new(&p).unwrap();
        for i in 0..100 {
            let t = i as f64 * 0.0125;
            assert!((w.phi(t) - TAU * 0.8 * t).abs() < 1e-12);
        }
        assert!(w.section().is_none());
    }

    #[test]
    fn speed_up_time_ratio() {
        let p = thrust().with(Param::SpeedCode, 1.2).with(Param::SpeedUp, 1.2);
        let w = TimeWarp::new(&p).unwrap();
        let (t_in, t_out) = w.section_times().unwrap();
        assert_eq!(t_in, 0.0);
        let inside = t_out - t_in;
        let outside = w.period() - inside;
        assert!((outside / inside - 1.2).abs() < 1e-12);
    }

    #[test]
    fn section_entry_exit_times_match_hand_integration() {
        // two rates over equal azimuth extents: outside time = T s / (s + 1)
        const ENTRY: f64 = 0.807_453_416_149_068_4;
        const EXIT: f64 = 1.428_571_428_571_428_6;
        let p = thrust()
            .with(Param::SpeedCode, 3.7)
            .with(Param::SpeedUp, 1.3)
            .with(Param::Frequency, 0.7);
        let w = TimeWarp::new(&p).unwrap();
        assert_eq!(w.section(), Some((PI, TAU)));
        let (t_in, t_out) = w.section_times().unwrap();
        assert!((t_in - ENTRY).abs() < 1e-12, "{t_in}");
        // exit coincides with the period end, reported as t = 0 of the next cycle
        assert!(t_out.abs() < 1e-12 || (t_out - EXIT).abs() < 1e-12, "{t_out}");
        assert!((w.phi(ENTRY) - PI).abs() < 1e-12);
    }

    #[test]
    fn wrapped_section_for_code_four() {
        let p = thrust().with(Param::SpeedCode, 4.5).with(Param::SpeedUp, 1.3);
        let w = TimeWarp::new(&p).unwrap();
        assert!(w.in_section(0.1) && w.in_section(1.5) && w.in_section(5.0));
        assert!(!w.in_section(2.0) && !w.in_section(4.0));
        assert!((w.rate(0.0) / w.base_rate() - 1.3).abs() < 1e-12);
        assert!((w.phi(w.period() - 1e-12) - TAU).abs() < 1e-9);
    }

    #[test]
    fn generate_thrust_initialization() {
        let tr = generate(&thrust(), 720).unwrap();
        assert_eq!(tr.len(), 720);
        assert!((tr.period - 1.0 / 0.71).abs() < 1e-12);
        let xmax = tr.samples.iter().map(|s| s.sweep[0]).fold(f64::MIN, f64::max);
        assert!((xmax - 25.43).abs() < 1e-9);
        assert_eq!(tr.samples[0].t, 0.0);
        assert_eq!(tr.samples[0].phi, 0.0);
    }

    #[test]
    fn generate_rejects_flat_and_short() {
        let flat = thrust().with(Param::ThicknessAngle, 0.0).with(Param::Camber, 0.0);
        assert_eq!(generate(&flat, 360), Err(KinematicsError::DegenerateTrajectory));
        assert_eq!(generate(&thrust(), 100), Err(KinematicsError::TooFewSamples(100)));
    }

    #[test]
    fn table_s2_intact_thrust_period() {
        let p = TrajectoryParams::from_array([24.8, 12.9, 26.7, 5.3, 0.0, 1.2, 0.6, 0.6, 0.70]);
        let tr = generate(&p, 360).unwrap();
        assert!((tr.period - 1.428_571_428_571_428_6).abs() < 1e-12);
    }

    #[test]
    fn pitch_rate_matches_finite_difference() {
        let p = thrust().with(Param::SpeedCode, 0.3);
        let tr = generate(&p, 3600).unwrap();
        let dt = tr.dt();
        for i in (1..tr.len() - 1).step_by(37) {
            let s = &tr.samples;
            let fd = (s[i + 1].pitch_absolute - s[i - 1].pitch_absolute) / (2.0 * dt);
            assert!((fd - s[i].pitch_rate).abs() < 1e-2 * (1.0 + fd.abs()), "i={i}");
            let fdx = (s[i + 1].sweep[0] - s[i - 1].sweep[0]) / (2.0 * dt);
            assert!((fdx - s[i].sweep_rate[0]).abs() < 1e-2 * (1.0 + fdx.abs()));
        }
    }

    #[test]
    fn normal_turns_once_per_cycle() {
        let tr = generate(&thrust().with(Param::Camber, 1.0), 720).unwrap();
        let first = tr.samples[0].normal_angle;
        let last = tr.samples.last().unwrap().normal_angle;
        let step = last - tr.samples[tr.len() - 2].normal_angle;
        assert!((last + step - first - 360.0).abs() < 1.0);
    }

    #[test]
    fn wrap_degrees_range() {
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(190.0), -170.0);
        assert_eq!(wrap_degrees(-370.0), -10.0);
    }
}
