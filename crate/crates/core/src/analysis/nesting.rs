//! Whether angle-of-attack traces form concentric loops.
//!
//! Trace `i` encloses trace `j` when `|aoa_i| >= |aoa_j| - tol` at every grid
//! point, i.e. its loop lies outside `j`'s in a polar plot.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Degrees.
pub const DEFAULT_NESTING_TOLERANCE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Encloses,
    EnclosedBy,
    /// Each encloses the other within tolerance.
    Coincident,
    Crossing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRelation {
    pub i: usize,
    pub j: usize,
    pub relation: Relation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestingReport {
    /// One entry per unordered pair, `i < j`.
    pub pairs: Vec<PairRelation>,
    /// Indices from outermost to innermost, when no pair crosses.
    pub chain: Option<Vec<usize>>,
}

fn encloses(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| x.abs() >= y.abs() - tol)
}

pub fn nesting_order(traces: &[Vec<f64>], tolerance: f64) -> Result<NestingReport, AnalysisError> {
    if let Some(first) = traces.first() {
        if let Some(bad) = traces.iter().find(|t| t.len() != first.len()) {
            return Err(AnalysisError::GridMismatch(first.len(), bad.len()));
        }
    }
    let n = traces.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let relation = match (
                encloses(&traces[i], &traces[j], tolerance),
                encloses(&traces[j], &traces[i], tolerance),
            ) {
                (true, true) => Relation::Coincident,
                (true, false) => Relation::Encloses,
                (false, true) => Relation::EnclosedBy,
                (false, false) => Relation::Crossing,
            };
            pairs.push(PairRelation { i, j, relation });
        }
    }
    let chain = if pairs.iter().any(|p| p.relation == Relation::Crossing) {
        None
    } else {
        // Without crossings, the number of traces each one encloses orders them.
        let outranks = |i: usize| {
            pairs
                .iter()
                .filter(|p| {
                    (p.i == i && p.relation == Relation::Encloses) || (p.j == i && p.relation == Relation::EnclosedBy)
                })
                .count()
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| outranks(b).cmp(&outranks(a)).then(a.cmp(&b)));
        Some(order)
    };
    Ok(NestingReport { pairs, chain })
}
