//! Re-expresses side-force records in the frame of their own resultant.

use alloc::vec::Vec;

use libm::{atan2, cos, sin, sqrt};
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::fitness::MIN_NORMAL_FORCE;
use crate::plant::CycleRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedRecord {
    /// The record with x and y force components expressed in `(x*, y*)`.
    pub record: CycleRecord,
    /// Rotation about +z applied to the lab frame, degrees.
    pub rotation: f64,
}

fn rotate(v: [f64; 2], c: f64, s: f64) -> [f64; 2] {
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Rotates each record about +z so its cycle-mean planar force points along +x*.
pub fn rotate_to_resultant(records: &[CycleRecord]) -> Result<Vec<RotatedRecord>, AnalysisError> {
    records
        .iter()
        .map(|rec| {
            let [fx, fy, _] = rec.mean_force;
            let planar = sqrt(fx * fx + fy * fy);
            if !(planar > MIN_NORMAL_FORCE) {
                return Err(AnalysisError::DegenerateForce(planar));
            }
            let angle = -atan2(fy, fx);
            let (c, s) = (cos(angle), sin(angle));
            let mut out = rec.clone();
            let m = rotate([fx, fy], c, s);
            out.mean_force = [m[0], m[1], rec.mean_force[2]];
            for sample in out.force_trace.iter_mut() {
                let r = rotate([sample[0], sample[1]], c, s);
                sample[0] = r[0];
                sample[1] = r[1];
            }
            Ok(RotatedRecord {
                record: out,
                rotation: angle.to_degrees(),
            })
        })
        .collect()
}
