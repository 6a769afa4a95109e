//! Which parameters a damaged fin moved, judged against convergence thresholds.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptation {
    Increase,
    Decrease,
    NoChange,
}

impl Adaptation {
    pub fn symbol(self) -> &'static str {
        match self {
            Adaptation::Increase => "+",
            Adaptation::Decrease => "-",
            Adaptation::NoChange => "0",
        }
    }
}

/// A change counts only when it exceeds the threshold strictly.
pub fn classify_adaptation(intact: &[f64], adapted: &[f64], thresholds: &[f64]) -> Vec<Adaptation> {
    intact
        .iter()
        .zip(adapted)
        .zip(thresholds)
        .map(|((&a, &b), &t)| {
            let delta = b - a;
            if delta.abs() > t {
                if delta > 0.0 {
                    Adaptation::Increase
                } else {
                    Adaptation::Decrease
                }
            } else {
                Adaptation::NoChange
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptationRow {
    pub run: usize,
    pub changes: Vec<Adaptation>,
}

pub fn classify_runs(intact: &[f64], adapted: &[Vec<f64>], thresholds: &[f64]) -> Vec<AdaptationRow> {
    adapted
        .iter()
        .enumerate()
        .map(|(run, a)| AdaptationRow {
            run,
            changes: classify_adaptation(intact, a, thresholds),
        })
        .collect()
}

/// Counts of each outcome for one parameter across runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamTally {
    pub increase: usize,
    pub decrease: usize,
    pub no_change: usize,
}

pub fn tally(rows: &[AdaptationRow]) -> Vec<ParamTally> {
    let n = rows.first().map_or(0, |r| r.changes.len());
    let mut out = alloc::vec![ParamTally::default(); n];
    for row in rows {
        for (t, c) in out.iter_mut().zip(&row.changes) {
            match c {
                Adaptation::Increase => t.increase += 1,
                Adaptation::Decrease => t.decrease += 1,
                Adaptation::NoChange => t.no_change += 1,
            }
        }
    }
    out
}
