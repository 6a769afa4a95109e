//! Tables and summaries built from finished runs.
//!
//! Every table is plain RFC 4180 CSV. Optimum traces are not stored in the
//! logs; they are recomputed from the candidate's noise stream, which
//! reproduces the record the optimizer ranked.

use std::fs;
use std::path::{Path, PathBuf};

use finadapt_core::analysis::{
    classify_adaptation, fourier_on_grid, nesting_order, rotate_to_resultant, sensitivity, tally, Adaptation,
    AdaptationRow, FourierSpectrum, NestingReport, ParamTally, SensitivityReport, DEFAULT_MODES,
    DEFAULT_NESTING_TOLERANCE,
};
use finadapt_core::fitness::{FitnessValue, ObjectiveMode};
use finadapt_core::kinematics::wrap_degrees;
use finadapt_core::optimizer::{CandidateRecord, Cmaes};
use finadapt_core::plant::CycleRecord;
use finadapt_core::{Param, ParamTable, TrajectoryParams, N_PARAMS};
use serde::Serialize;

use crate::config::RunConfig;
use crate::engine::evaluate_candidate;
use crate::error::HarnessError;
use crate::store::{RunLog, Store, Termination};

/// A finished run with everything reports need.
#[derive(Clone, Debug)]
pub struct FinishedRun {
    pub config: RunConfig,
    pub log: RunLog,
    pub termination: Termination,
}

impl FinishedRun {
    pub fn load(store: &Store, run_id: &str) -> Result<Self, HarnessError> {
        let config = store.read_config(run_id)?;
        let log = store.read_log(run_id, false)?;
        let termination = log
            .termination
            .clone()
            .ok_or_else(|| HarnessError::Unfinished(run_id.to_string()))?;
        Ok(Self {
            config,
            log,
            termination,
        })
    }

    pub fn id(&self) -> &str {
        &self.config.run_id
    }

    pub fn optimum(&self) -> &CandidateRecord {
        &self.termination.optimum
    }

    pub fn optimum_params(&self) -> TrajectoryParams {
        let v: [f64; N_PARAMS] = self
            .optimum()
            .projected
            .as_slice()
            .try_into()
            .expect("logged candidates have nine parameters");
        TrajectoryParams::from_array(v)
    }

    /// Signed relative deviation of the optimum's force from the target.
    pub fn closeness(&self) -> Option<f64> {
        let f = self.optimum().fitness?;
        Some((f.force_used - self.config.objective.f_target) / self.config.objective.f_target)
    }

    /// The optimum's full record, recomputed.
    pub fn optimum_record(&self) -> Result<(CycleRecord, FitnessValue), HarnessError> {
        evaluate_candidate(
            &self.config,
            self.termination.final_generation,
            self.optimum().index,
            &self.optimum_params(),
        )
        .map_err(|e| HarnessError::Report(format!("run {:?}: re-evaluating the optimum: {e}", self.id())))
    }

    /// Sensitivity of the final search distribution.
    pub fn sensitivity(&self, store: &Store) -> Result<SensitivityReport, HarnessError> {
        let g = self.termination.final_generation;
        let es = Cmaes::restore(&store.read_snapshot(self.id(), g)?).map_err(|source| HarnessError::Optimizer {
            run: self.id().to_string(),
            generation: g,
            source,
        })?;
        sensitivity(&es.covariance_in_units()).map_err(|source| HarnessError::Analysis {
            run: self.id().to_string(),
            source,
        })
    }
}

/// Traces of an optimum, in the resultant frame for side-force runs.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimumTraces {
    pub record: CycleRecord,
    /// Rotation applied about +z, degrees; zero for thrust runs.
    pub rotation: f64,
    pub side_force_frame: bool,
}

impl OptimumTraces {
    pub fn of(run: &FinishedRun) -> Result<Self, HarnessError> {
        let (record, _) = run.optimum_record()?;
        if run.config.objective.mode == ObjectiveMode::SideForce {
            let rotated =
                rotate_to_resultant(std::slice::from_ref(&record)).map_err(|source| HarnessError::Analysis {
                    run: run.id().to_string(),
                    source,
                })?;
            let r = rotated.into_iter().next().expect("one record in, one out");
            Ok(Self {
                record: r.record,
                rotation: r.rotation,
                side_force_frame: true,
            })
        } else {
            Ok(Self {
                record,
                rotation: 0.0,
                side_force_frame: false,
            })
        }
    }

    /// Named signals on the shared azimuth grid.
    pub fn signals(&self) -> Vec<(&'static str, Vec<f64>)> {
        let column = |c: usize| self.record.force_trace.iter().map(|s| s[c]).collect::<Vec<f64>>();
        let (x, y) = if self.side_force_frame {
            ("force_x_star", "force_y_star")
        } else {
            ("force_x", "force_y")
        };
        vec![
            (x, column(0)),
            (y, column(1)),
            ("force_z", column(2)),
            ("normal_force", column(3)),
            ("aoa", self.record.aoa_trace.clone()),
        ]
    }

    pub fn spectra(&self, run_id: &str) -> Result<Vec<(&'static str, FourierSpectrum)>, HarnessError> {
        self.signals()
            .into_iter()
            .map(|(name, s)| {
                fourier_on_grid(&self.record.phi_grid, &s, DEFAULT_MODES)
                    .map(|spec| (name, spec))
                    .map_err(|source| HarnessError::Analysis {
                        run: run_id.to_string(),
                        source,
                    })
            })
            .collect()
    }

    pub fn aoa_spectrum(&self, run_id: &str) -> Result<FourierSpectrum, HarnessError> {
        fourier_on_grid(&self.record.phi_grid, &self.record.aoa_trace, DEFAULT_MODES).map_err(|source| {
            HarnessError::Analysis {
                run: run_id.to_string(),
                source,
            }
        })
    }
}

/// How a damaged branch compares with the run it was copied from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchComparison {
    pub run_id: String,
    pub reference_run: String,
    pub changes: Vec<Adaptation>,
    pub closeness: Option<f64>,
    /// Phase of the first angle-of-attack harmonic, branch minus reference, degrees.
    pub aoa_phase_shift: f64,
}

/// Fitness statistics around a branch point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Recovery {
    pub run_id: String,
    /// Generation median of the parent at the shared generation.
    pub pre_branch_median: f64,
    /// Largest generation median after the branch.
    pub peak_median: f64,
    pub final_median: f64,
    pub generations: usize,
}

impl Recovery {
    pub fn of(store: &Store, branch: &FinishedRun) -> Result<Self, HarnessError> {
        let lineage = branch
            .config
            .lineage
            .as_ref()
            .ok_or_else(|| HarnessError::Report(format!("run {:?} is not a branch", branch.id())))?;
        let parent = store.read_log(&lineage.parent_run, false)?;
        let pre = parent
            .generation(lineage.at_generation)
            .ok_or_else(|| HarnessError::CorruptLog {
                path: store.log_path(&lineage.parent_run),
                reason: format!("generation {} is missing", lineage.at_generation),
            })?
            .median_fitness();
        let medians: Vec<f64> = branch.log.generations.iter().map(|g| g.median_fitness()).collect();
        Ok(Self {
            run_id: branch.id().to_string(),
            pre_branch_median: pre,
            peak_median: medians.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            final_median: medians.last().copied().unwrap_or(f64::NAN),
            generations: medians.len(),
        })
    }
}

pub fn compare_branch(reference: &FinishedRun, branch: &FinishedRun) -> Result<BranchComparison, HarnessError> {
    let thresholds = ParamTable::standard().thresholds();
    let changes = classify_adaptation(
        &reference.optimum_params().to_array(),
        &branch.optimum_params().to_array(),
        &thresholds,
    );
    let phase = |run: &FinishedRun| -> Result<f64, HarnessError> {
        let spec = OptimumTraces::of(run)?.aoa_spectrum(run.id())?;
        Ok(spec.modes[0].phase)
    };
    Ok(BranchComparison {
        run_id: branch.id().to_string(),
        reference_run: reference.id().to_string(),
        changes,
        closeness: branch.closeness(),
        aoa_phase_shift: wrap_degrees(phase(branch)? - phase(reference)?),
    })
}

/// Runs whose configuration names `parent` as their origin, sorted by id.
pub fn children(store: &Store, parent: &str) -> Result<Vec<String>, HarnessError> {
    let mut out = Vec::new();
    for id in store.run_ids()? {
        let c = store.read_config(&id)?;
        if c.lineage.as_ref().is_some_and(|l| l.parent_run == parent) {
            out.push(id);
        }
    }
    Ok(out)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Csv {
        path: PathBuf::from("<memory>"),
        source: e,
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn param_names() -> impl Iterator<Item = &'static str> {
    Param::ALL.iter().map(|p| p.name())
}

/// One row per evaluated candidate, with the generation median alongside.
pub fn paths_csv(run: &FinishedRun) -> Result<String, HarnessError> {
    let mut w = csv_writer();
    let mut header = vec![
        "generation",
        "candidate",
        "best",
        "median_fitness",
        "fitness",
        "force",
        "normal_force",
    ];
    header.extend(param_names());
    header.extend(["step_size", "all_converged", "error"]);
    w.write_record(&header).map_err(csv_err)?;
    for g in &run.log.generations {
        let median = g.median_fitness();
        for c in &g.candidates {
            let mut row = vec![
                g.generation.to_string(),
                c.index.to_string(),
                (c.index == g.best).to_string(),
                num(median),
                num(c.ranked_fitness),
                opt_num(c.fitness.map(|f| f.force_used)),
                opt_num(c.fitness.map(|f| f.normal_force_used)),
            ];
            row.extend(c.projected.iter().map(|&v| num(v)));
            row.extend([
                num(g.step_size),
                g.all_converged.to_string(),
                c.error.clone().unwrap_or_default(),
            ]);
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    Ok(finish(w))
}

/// One row per run: the final generation's best candidate.
pub fn optimum_csv(runs: &[FinishedRun]) -> Result<String, HarnessError> {
    let mut w = csv_writer();
    let mut header = vec![
        "run_id",
        "parent_run",
        "branch_generation",
        "damage_fraction",
        "mode",
        "f_target",
        "reason",
        "final_generation",
        "candidate",
    ];
    header.extend(param_names());
    header.extend(["force", "normal_force", "closeness", "fitness", "reynolds"]);
    w.write_record(&header).map_err(csv_err)?;
    for run in runs {
        let o = run.optimum();
        let lineage = run.config.lineage.as_ref();
        let mode = match run.config.objective.mode {
            ObjectiveMode::Thrust => "thrust",
            ObjectiveMode::SideForce => "side_force",
        };
        let mut row = vec![
            run.id().to_string(),
            lineage.map(|l| l.parent_run.clone()).unwrap_or_default(),
            lineage.map(|l| l.at_generation.to_string()).unwrap_or_default(),
            num(run.config.plant.damage.area_loss_fraction),
            mode.to_string(),
            num(run.config.objective.f_target),
            run.termination.reason.as_str().to_string(),
            run.termination.final_generation.to_string(),
            o.index.to_string(),
        ];
        row.extend(o.projected.iter().map(|&v| num(v)));
        row.extend([
            opt_num(o.fitness.map(|f| f.force_used)),
            opt_num(o.fitness.map(|f| f.normal_force_used)),
            opt_num(run.closeness()),
            num(o.ranked_fitness),
            opt_num(o.summary.map(|s| s.reynolds)),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    Ok(finish(w))
}

/// Mean and first harmonics of each optimum signal.
pub fn fourier_csv(runs: &[FinishedRun]) -> Result<String, HarnessError> {
    let mut w = csv_writer();
    w.write_record([
        "run_id",
        "signal",
        "mode",
        "amplitude",
        "phase_deg",
        "frame_rotation_deg",
    ])
    .map_err(csv_err)?;
    for run in runs {
        let traces = OptimumTraces::of(run)?;
        for (signal, spec) in traces.spectra(run.id())? {
            w.write_record([run.id(), signal, "0", &num(spec.mean), "0", &num(traces.rotation)])
                .map_err(csv_err)?;
            for m in &spec.modes {
                w.write_record([
                    run.id(),
                    signal,
                    &m.k.to_string(),
                    &num(m.amplitude),
                    &num(m.phase),
                    &num(traces.rotation),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    Ok(finish(w))
}

/// Scree and per-parameter radii of each run's final distribution.
pub fn sensitivity_csv(store: &Store, runs: &[FinishedRun]) -> Result<String, HarnessError> {
    let mut w = csv_writer();
    w.write_record([
        "run_id",
        "component",
        "eigenvalue",
        "scree_fraction",
        "parameter",
        "radius",
        "normalized_radius",
    ])
    .map_err(csv_err)?;
    for run in runs {
        let s = run.sensitivity(store)?;
        for (i, p) in Param::ALL.iter().enumerate() {
            w.write_record([
                run.id(),
                &(i + 1).to_string(),
                &num(s.eigenvalues[i]),
                &num(s.scree[i]),
                p.name(),
                &num(s.radius[i]),
                &num(s.normalized_radius[i]),
            ])
            .map_err(csv_err)?;
        }
    }
    Ok(finish(w))
}

pub fn classification_csv(rows: &[BranchComparison]) -> Result<String, HarnessError> {
    let mut w = csv_writer();
    let mut header = vec!["run_id", "reference_run"];
    header.extend(param_names());
    header.extend(["closeness", "aoa_phase_shift_deg"]);
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut row = vec![r.run_id.clone(), r.reference_run.clone()];
        row.extend(r.changes.iter().map(|c| c.symbol().to_string()));
        row.extend([opt_num(r.closeness), num(r.aoa_phase_shift)]);
        w.write_record(&row).map_err(csv_err)?;
    }
    Ok(finish(w))
}

/// Comparisons involving `run`: against its parent if it is a branch, and
/// against each of its own branches.
pub fn comparisons_for(store: &Store, run: &FinishedRun) -> Result<Vec<BranchComparison>, HarnessError> {
    let mut rows = Vec::new();
    if let Some(l) = &run.config.lineage {
        let parent = FinishedRun::load(store, &l.parent_run)?;
        rows.push(compare_branch(&parent, run)?);
    }
    for child in children(store, run.id())? {
        let child = FinishedRun::load(store, &child)?;
        rows.push(compare_branch(run, &child)?);
    }
    if rows.is_empty() {
        return Err(HarnessError::Report(format!(
            "run {:?} has no parent and no branches to compare with",
            run.id()
        )));
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportKind {
    Paths,
    Optimum,
    Fourier,
    Sensitivity,
    Classification,
}

/// One table for one run, as CSV text.
pub fn export(store: &Store, run_id: &str, what: ExportKind) -> Result<String, HarnessError> {
    let run = FinishedRun::load(store, run_id)?;
    let runs = std::slice::from_ref(&run);
    match what {
        ExportKind::Paths => paths_csv(&run),
        ExportKind::Optimum => optimum_csv(runs),
        ExportKind::Fourier => fourier_csv(runs),
        ExportKind::Sensitivity => sensitivity_csv(store, runs),
        ExportKind::Classification => classification_csv(&comparisons_for(store, &run)?),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub parent_run: Option<String>,
    pub reason: &'static str,
    pub final_generation: u64,
    pub fitness: f64,
    pub force: Option<f64>,
    pub closeness: Option<f64>,
    pub reynolds: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisSummary {
    pub runs: Vec<RunSummary>,
    pub recoveries: Vec<Recovery>,
    pub comparisons: Vec<BranchComparison>,
    /// Per parameter, how many compared branches moved it which way.
    pub adaptation_tally: Vec<(&'static str, ParamTally)>,
    /// Nesting of the optima's angle-of-attack traces, indices into `runs`.
    pub aoa_nesting: NestingReport,
}

/// Writes the full report bundle for `run_ids` into `out` and returns its summary.
///
/// Branch comparisons cover every listed branch, against its parent.
pub fn analyze(store: &Store, run_ids: &[String], out: &Path) -> Result<AnalysisSummary, HarnessError> {
    if run_ids.is_empty() {
        return Err(HarnessError::Config("analyze needs at least one run".into()));
    }
    let runs = run_ids
        .iter()
        .map(|id| FinishedRun::load(store, id))
        .collect::<Result<Vec<_>, _>>()?;

    let mut comparisons = Vec::new();
    let mut recoveries = Vec::new();
    for run in &runs {
        if let Some(l) = &run.config.lineage {
            let parent = FinishedRun::load(store, &l.parent_run)?;
            comparisons.push(compare_branch(&parent, run)?);
            recoveries.push(Recovery::of(store, run)?);
        }
    }
    let rows: Vec<AdaptationRow> = comparisons
        .iter()
        .enumerate()
        .map(|(run, c)| AdaptationRow {
            run,
            changes: c.changes.clone(),
        })
        .collect();
    let adaptation_tally = if rows.is_empty() {
        Vec::new()
    } else {
        param_names().zip(tally(&rows)).collect()
    };

    let mut aoa = Vec::with_capacity(runs.len());
    for run in &runs {
        aoa.push(OptimumTraces::of(run)?.record.aoa_trace);
    }
    let aoa_nesting = nesting_order(&aoa, DEFAULT_NESTING_TOLERANCE).map_err(|source| HarnessError::Analysis {
        run: run_ids.join(","),
        source,
    })?;

    let write = |name: &str, text: &str| -> Result<(), HarnessError> {
        let path = out.join(name);
        fs::write(&path, text).map_err(HarnessError::io(&path))
    };
    let paths_dir = out.join("paths");
    fs::create_dir_all(&paths_dir).map_err(HarnessError::io(&paths_dir))?;
    for run in &runs {
        write(&format!("paths/{}.csv", run.id()), &paths_csv(run)?)?;
    }
    write("optimum.csv", &optimum_csv(&runs)?)?;
    write("fourier.csv", &fourier_csv(&runs)?)?;
    write("sensitivity.csv", &sensitivity_csv(store, &runs)?)?;
    write("classification.csv", &classification_csv(&comparisons)?)?;

    let summary = AnalysisSummary {
        runs: runs
            .iter()
            .map(|r| RunSummary {
                run_id: r.id().to_string(),
                parent_run: r.config.lineage.as_ref().map(|l| l.parent_run.clone()),
                reason: r.termination.reason.as_str(),
                final_generation: r.termination.final_generation,
                fitness: r.optimum().ranked_fitness,
                force: r.optimum().fitness.map(|f| f.force_used),
                closeness: r.closeness(),
                reynolds: r.optimum().summary.map(|s| s.reynolds),
            })
            .collect(),
        recoveries,
        comparisons,
        adaptation_tally,
        aoa_nesting,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summaries always serialize");
    write("summary.json", &json)?;
    Ok(summary)
}
