//! Trajectory parameters, their admissible box and convergence thresholds.

use core::f64::consts::PI;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Number of optimizable trajectory parameters.
pub const N_PARAMS: usize = 9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryType {
    #[default]
    Ellipse,
}

/// Index of an optimizable parameter, in canonical vector order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    StrokeAngle,
    ThicknessAngle,
    RotationAngle,
    RotationPhase,
    SpeedCode,
    SpeedUp,
    RotationAcceleration,
    Camber,
    Frequency,
}

impl Param {
    pub const ALL: [Param; N_PARAMS] = [
        Param::StrokeAngle,
        Param::ThicknessAngle,
        Param::RotationAngle,
        Param::RotationPhase,
        Param::SpeedCode,
        Param::SpeedUp,
        Param::RotationAcceleration,
        Param::Camber,
        Param::Frequency,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::StrokeAngle => "stroke_angle",
            Param::ThicknessAngle => "thickness_angle",
            Param::RotationAngle => "rotation_angle",
            Param::RotationPhase => "rotation_phase",
            Param::SpeedCode => "speed_code",
            Param::SpeedUp => "speed_up_value",
            Param::RotationAcceleration => "rotation_acceleration",
            Param::Camber => "camber",
            Param::Frequency => "frequency",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Param::StrokeAngle | Param::ThicknessAngle | Param::RotationAngle => "deg",
            Param::RotationPhase => "rad",
            Param::Frequency => "Hz",
            _ => "",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The ten trajectory variables; all but the type are optimized.
///
/// Angles are degrees, `rotation_phase` is radians, `frequency` is Hz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryParams {
    #[serde(default)]
    pub trajectory_type: TrajectoryType,
    pub stroke_angle: f64,
    pub thickness_angle: f64,
    pub rotation_angle: f64,
    pub rotation_phase: f64,
    pub speed_code: f64,
    pub speed_up_value: f64,
    pub rotation_acceleration: f64,
    pub camber: f64,
    pub frequency: f64,
}

impl TrajectoryParams {
    /// Optimum of a rigid fin for thrust, used to seed thrust optimizations.
    pub fn thrust_initialization() -> Self {
        Self::from_array([25.43, 14.29, -40.46, 6.18, 2.95, 1.10, 0.13, 0.20, 0.71])
    }

    /// Optimum of a rigid fin for side force, used to seed side-force optimizations.
    pub fn side_force_initialization() -> Self {
        Self::from_array([26.12, 13.30, -62.51, 2.63, 1.34, 1.18, 0.03, 0.18, 0.72])
    }

    pub fn from_array(v: [f64; N_PARAMS]) -> Self {
        Self {
            trajectory_type: TrajectoryType::Ellipse,
            stroke_angle: v[0],
            thickness_angle: v[1],
            rotation_angle: v[2],
            rotation_phase: v[3],
            speed_code: v[4],
            speed_up_value: v[5],
            rotation_acceleration: v[6],
            camber: v[7],
            frequency: v[8],
        }
    }

    pub fn to_array(&self) -> [f64; N_PARAMS] {
        [
            self.stroke_angle,
            self.thickness_angle,
            self.rotation_angle,
            self.rotation_phase,
            self.speed_code,
            self.speed_up_value,
            self.rotation_acceleration,
            self.camber,
            self.frequency,
        ]
    }

    pub fn get(&self, p: Param) -> f64 {
        self.to_array()[p.index()]
    }

    pub fn with(mut self, p: Param, value: f64) -> Self {
        let mut v = self.to_array();
        v[p.index()] = value;
        let ty = self.trajectory_type;
        self = Self::from_array(v);
        self.trajectory_type = ty;
        self
    }
}

/// Admissible interval and convergence threshold of one parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
    pub threshold: f64,
}

impl ParamRange {
    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// Bounds and convergence thresholds for all nine parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamTable {
    pub ranges: [ParamRange; N_PARAMS],
}

impl Default for ParamTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl ParamTable {
    /// The rig's parameter box and per-parameter convergence criteria.
    pub fn standard() -> Self {
        let r = |min, max, threshold| ParamRange { min, max, threshold };
        Self {
            ranges: [
                r(15.27, 32.18, 3.0),
                r(0.0, 15.27, 3.0),
                r(-70.0, 70.0, 3.0),
                r(0.0, 2.0 * PI - 0.1, 0.4),
                r(0.0, 4.9, 0.9),
                r(1.1, 1.3, 0.1),
                r(0.0, 1.0, 0.2),
                r(0.0, 1.0, 0.2),
                r(0.7, 0.9, 0.01),
            ],
        }
    }

    pub fn range(&self, p: Param) -> &ParamRange {
        &self.ranges[p.index()]
    }

    pub fn lower(&self) -> [f64; N_PARAMS] {
        self.ranges.map(|r| r.min)
    }

    pub fn upper(&self) -> [f64; N_PARAMS] {
        self.ranges.map(|r| r.max)
    }

    pub fn thresholds(&self) -> [f64; N_PARAMS] {
        self.ranges.map(|r| r.threshold)
    }

    /// Componentwise clamp into the box.
    pub fn project(&self, params: &TrajectoryParams) -> TrajectoryParams {
        let mut v = params.to_array();
        for (x, r) in v.iter_mut().zip(self.ranges.iter()) {
            *x = x.clamp(r.min, r.max);
        }
        TrajectoryParams::from_array(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RangeStatus {
    InRange,
    BelowMinimum { minimum: f64 },
    AboveMaximum { maximum: f64 },
    NotANumber,
}

impl fmt::Display for RangeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeStatus::InRange => f.write_str("in range"),
            RangeStatus::BelowMinimum { minimum } => write!(f, "minimum {minimum}"),
            RangeStatus::AboveMaximum { maximum } => write!(f, "maximum {maximum}"),
            RangeStatus::NotANumber => f.write_str("not a number"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldCheck {
    pub param: Param,
    pub value: f64,
    pub status: RangeStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub fields: [FieldCheck; N_PARAMS],
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.fields.iter().all(|c| c.status == RangeStatus::InRange)
    }

    pub fn violations(&self) -> impl Iterator<Item = &FieldCheck> {
        self.fields.iter().filter(|c| c.status != RangeStatus::InRange)
    }
}

/// Checks every field against its closed interval. Total: never fails.
pub fn validate(params: &TrajectoryParams, table: &ParamTable) -> ValidationReport {
    let v = params.to_array();
    let fields = core::array::from_fn(|i| {
        let r = table.ranges[i];
        let value = v[i];
        let status = if value.is_nan() {
            RangeStatus::NotANumber
        } else if value < r.min {
            RangeStatus::BelowMinimum { minimum: r.min }
        } else if value > r.max {
            RangeStatus::AboveMaximum { maximum: r.max }
        } else {
            RangeStatus::InRange
        };
        FieldCheck {
            param: Param::ALL[i],
            value,
            status,
        }
    });
    ValidationReport { fields }
}
