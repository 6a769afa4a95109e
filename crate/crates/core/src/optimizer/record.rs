use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fitness::FitnessValue;
use crate::plant::RecordSummary;

/// Outcome of evaluating one candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub index: usize,
    /// Draw in parameter units, possibly outside the box.
    pub raw: Vec<f64>,
    /// Evaluated point.
    pub projected: Vec<f64>,
    pub summary: Option<RecordSummary>,
    pub fitness: Option<FitnessValue>,
    /// Why evaluation failed, when it did.
    pub error: Option<String>,
    /// Value handed to the optimizer: the fitness, or the generation's worst
    /// finite fitness for a failed candidate.
    pub ranked_fitness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u64,
    pub candidates: Vec<CandidateRecord>,
    /// Step size before the update.
    pub step_size: f64,
    /// `sigma * sqrt(C_ii)` in parameter units, after the update.
    pub spread: Vec<f64>,
    pub converged: Vec<bool>,
    pub all_converged: bool,
    /// Index of the best candidate (lowest fitness, ties to the lowest index).
    pub best: usize,
}

impl GenerationRecord {
    pub fn best_candidate(&self) -> &CandidateRecord {
        &self.candidates[self.best]
    }

    pub fn median_fitness(&self) -> f64 {
        let mut f: Vec<f64> = self.candidates.iter().map(|c| c.ranked_fitness).collect();
        f.sort_by(f64::total_cmp);
        let n = f.len();
        if n % 2 == 1 {
            f[n / 2]
        } else {
            0.5 * (f[n / 2 - 1] + f[n / 2])
        }
    }
}

/// Index of the smallest value; ties go to the first. NaN never wins.
pub fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|b| v < values[b]) {
            best = Some(i);
        }
    }
    best
}

/// The optimum of a run: the best candidate of its final generation only.
pub fn select_optimum(final_generation: &GenerationRecord) -> Option<&CandidateRecord> {
    let f: Vec<f64> = final_generation.candidates.iter().map(|c| c.ranked_fitness).collect();
    argmin_first(&f).map(|i| &final_generation.candidates[i])
}
