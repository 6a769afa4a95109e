//! The optimize / snapshot / branch protocol.

use finadapt_core::fitness::{fitness, FitnessValue};
use finadapt_core::optimizer::{argmin_first, select_optimum, CandidateRecord, Cmaes, CmaesError, GenerationRecord};
use finadapt_core::plant::{apply_damage, evaluate, CycleRecord};
use finadapt_core::{seed, ParamTable, TrajectoryParams};
use rayon::prelude::*;

use crate::config::{BranchPoint, Lineage, RunConfig};
use crate::error::HarnessError;
use crate::store::{LogHeader, LogLine, Store, Termination, TerminationReason, LOG_SCHEMA};

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub run_id: String,
    pub reason: TerminationReason,
    pub final_generation: u64,
    pub optimum: CandidateRecord,
    /// Outcomes of branches the run's schedule asked for.
    pub branches: Vec<RunOutcome>,
}

impl RunOutcome {
    fn from_termination(run_id: &str, t: &Termination) -> Self {
        Self {
            run_id: run_id.to_string(),
            reason: t.reason,
            final_generation: t.final_generation,
            optimum: t.optimum.clone(),
            branches: Vec::new(),
        }
    }
}

/// Test hook for interrupting a run between generations.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunControl {
    /// Return right after this generation has been logged, as if the process had been killed.
    pub stop_after: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Progress {
    Finished(Box<RunOutcome>),
    Interrupted { last_generation: u64 },
}

/// A request to resume copies of a run's state on a damaged plant.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchRequest {
    pub parent: String,
    pub at: BranchPoint,
    pub damage_fraction: f64,
    /// One branch per seed; each seeds the branch's plant noise.
    pub seeds: Vec<u64>,
    pub reseed_sampler: bool,
}

/// Noise substream of one candidate evaluation.
pub fn candidate_stream(generation: u64, index: usize) -> u64 {
    seed::derive(generation, &[index as u64])
}

/// Simulates one candidate exactly as the optimizer did.
pub fn evaluate_candidate(
    config: &RunConfig,
    generation: u64,
    index: usize,
    params: &TrajectoryParams,
) -> Result<(CycleRecord, FitnessValue), String> {
    let record = evaluate(
        params,
        &config.plant,
        &config.evaluation,
        candidate_stream(generation, index),
    )
    .map_err(|e| e.to_string())?;
    let value = fitness(&record, &config.objective).map_err(|e| e.to_string())?;
    Ok((record, value))
}

fn evaluate_generation(
    config: &RunConfig,
    es: &mut Cmaes,
) -> (Vec<finadapt_core::optimizer::Candidate>, Vec<CandidateRecord>) {
    let generation = es.generation();
    let candidates = es.ask();
    let mut records: Vec<CandidateRecord> = candidates
        .par_iter()
        .map(|c| {
            let params = c.trajectory().expect("search space has nine parameters");
            let (summary, fitness_value, error) = match evaluate_candidate(config, generation, c.index, &params) {
                Ok((rec, f)) => (Some(rec.summary()), Some(f), None),
                Err(e) => (None, None, Some(e)),
            };
            CandidateRecord {
                index: c.index,
                raw: c.raw.clone(),
                projected: c.projected.clone(),
                summary,
                fitness: fitness_value,
                error,
                ranked_fitness: fitness_value.map_or(f64::NAN, |f| f.f),
            }
        })
        .collect();
    let worst = records
        .iter()
        .map(|r| r.ranked_fitness)
        .filter(|f| f.is_finite())
        .fold(f64::NAN, f64::max);
    for r in records.iter_mut().filter(|r| !r.ranked_fitness.is_finite()) {
        r.ranked_fitness = worst;
    }
    (candidates, records)
}

fn initial_state(store: &Store, config: &RunConfig) -> Result<Cmaes, HarnessError> {
    match &config.lineage {
        Some(l) => {
            let snap = store.read_snapshot(&l.parent_run, l.at_generation)?;
            let mut es = Cmaes::restore(&snap).map_err(|source| HarnessError::Optimizer {
                run: config.run_id.clone(),
                generation: l.at_generation,
                source,
            })?;
            if let Some(s) = l.sampler_seed {
                es.reseed(s);
            }
            Ok(es)
        }
        None => Cmaes::for_trajectory(
            &config.start(),
            &ParamTable::standard(),
            config.optimizer.seed,
            config.cmaes_settings(),
        )
        .map_err(|e| HarnessError::Config(e.to_string())),
    }
}

/// Runs (or resumes) a configuration and then any branches its schedule asks for.
pub fn run(store: &Store, config: &RunConfig) -> Result<RunOutcome, HarnessError> {
    match run_with(store, config, RunControl::default())? {
        Progress::Finished(outcome) => {
            let mut outcome = *outcome;
            for directive in &config.schedule.branches {
                let request = BranchRequest {
                    parent: config.run_id.clone(),
                    at: directive.at,
                    damage_fraction: directive.damage_fraction,
                    seeds: directive.seeds.clone(),
                    reseed_sampler: directive.reseed_sampler,
                };
                outcome.branches.extend(branch(store, &request)?);
            }
            Ok(outcome)
        }
        Progress::Interrupted { .. } => unreachable!("no stop point was requested"),
    }
}

/// Runs one configuration without its branch schedule.
///
/// If the run directory already holds this configuration, the run resumes
/// from its newest snapshot that the log covers; later log lines are
/// discarded and recomputed, which reproduces them exactly.
pub fn run_with(store: &Store, config: &RunConfig, control: RunControl) -> Result<Progress, HarnessError> {
    config.validate()?;
    let id = config.run_id.as_str();
    let hash = config.sha256();
    if store.exists(id) {
        if store.read_config(id)?.sha256() != hash {
            return Err(HarnessError::Config(format!(
                "run {id:?} already exists with a different configuration"
            )));
        }
    } else {
        store.write_config(config)?;
    }

    let header = LogHeader {
        schema: LOG_SCHEMA.to_string(),
        run_id: id.to_string(),
        config_sha256: hash,
        first_generation: config.lineage.as_ref().map_or(0, |l| l.at_generation + 1),
        parent: config.lineage.clone(),
    };
    let existing = if store.log_path(id).is_file() {
        Some(store.read_log(id, true)?)
    } else {
        None
    };
    if let Some(log) = &existing {
        if log.header != header {
            return Err(HarnessError::CorruptLog {
                path: store.log_path(id),
                reason: "header does not match the run configuration".into(),
            });
        }
        if let Some(t) = &log.termination {
            return Ok(Progress::Finished(Box::new(RunOutcome::from_termination(id, t))));
        }
    }

    let logged_last = existing.as_ref().and_then(|l| l.last_generation());
    let resume_at = store
        .snapshot_generations(id)?
        .into_iter()
        .rev()
        .find(|&g| logged_last.is_some_and(|last| g <= last));
    let mut lines = vec![LogLine::Header(header.clone())];
    let mut es = match resume_at {
        Some(g) => {
            let log = existing.expect("a resume point implies a log");
            lines.extend(
                log.generations
                    .into_iter()
                    .take_while(|r| r.generation <= g)
                    .map(LogLine::Generation),
            );
            Cmaes::restore(&store.read_snapshot(id, g)?).map_err(|source| HarnessError::Optimizer {
                run: id.to_string(),
                generation: g,
                source,
            })?
        }
        None => initial_state(store, config)?,
    };
    store.rewrite_log(id, &lines)?;
    let mut log = store.open_log_for_append(id)?;

    loop {
        let generation = es.generation();
        let step_size = es.step_size();
        let (candidates, records) = evaluate_generation(config, &mut es);
        let ranked: Vec<f64> = records.iter().map(|r| r.ranked_fitness).collect();
        es.tell(&candidates, &ranked)
            .map_err(|source| HarnessError::Optimizer {
                run: id.to_string(),
                generation,
                source: match source {
                    CmaesError::AllCandidatesFailed => {
                        let first = records.iter().find_map(|r| r.error.clone()).unwrap_or_default();
                        CmaesError::InvalidSettings(format!("every candidate failed, first error: {first}"))
                    }
                    other => other,
                },
            })?;
        let convergence = es.converged();
        let record = GenerationRecord {
            generation,
            best: argmin_first(&ranked).expect("at least one finite fitness"),
            candidates: records,
            step_size,
            spread: convergence.spread,
            converged: convergence.flags,
            all_converged: convergence.all,
        };
        log.append(&LogLine::Generation(record.clone()))?;

        let reason = if convergence.all {
            Some(TerminationReason::Converged)
        } else if generation + 1 >= config.optimizer.max_generations {
            Some(TerminationReason::Cap)
        } else {
            None
        };
        if reason.is_some() || (generation + 1) % config.schedule.snapshot_every == 0 {
            store.write_snapshot(id, generation, &es.snapshot())?;
        }
        if let Some(reason) = reason {
            let termination = Termination {
                reason,
                final_generation: generation,
                optimum: select_optimum(&record).expect("generations are never empty").clone(),
            };
            log.append(&LogLine::Termination(termination.clone()))?;
            return Ok(Progress::Finished(Box::new(RunOutcome::from_termination(
                id,
                &termination,
            ))));
        }
        if control.stop_after == Some(generation) {
            return Ok(Progress::Interrupted {
                last_generation: generation,
            });
        }
    }
}

/// Generation whose snapshot a branch point refers to.
pub fn resolve_branch_point(store: &Store, parent: &str, at: BranchPoint) -> Result<u64, HarnessError> {
    match at {
        BranchPoint::Generation(g) => Ok(g),
        BranchPoint::BeforeEnd(offset) => {
            let log = store.read_log(parent, false)?;
            let t = log
                .termination
                .ok_or_else(|| HarnessError::Unfinished(parent.to_string()))?;
            Ok(t.final_generation.saturating_sub(offset))
        }
    }
}

/// Configurations of the branches a request describes.
pub fn branch_configs(store: &Store, request: &BranchRequest) -> Result<Vec<RunConfig>, HarnessError> {
    if request.seeds.is_empty() {
        return Err(HarnessError::Config("a branch needs at least one seed".into()));
    }
    let parent = store.read_config(&request.parent)?;
    let at = resolve_branch_point(store, &request.parent, request.at)?;
    store.read_snapshot(&request.parent, at)?;
    let damage = apply_damage(&parent.plant.fin, request.damage_fraction)
        .map_err(|e| HarnessError::Config(format!("damage fraction: {e}")))?;
    let permille = (request.damage_fraction * 1000.0).round() as u64;
    Ok(request
        .seeds
        .iter()
        .map(|&s| {
            let mut child = parent.clone();
            child.run_id = format!("{}-g{at}-d{permille}-s{s}", request.parent);
            child.plant.damage = damage;
            child.plant.noise.rng_seed = s;
            child.schedule.branches.clear();
            child.lineage = Some(Lineage {
                parent_run: request.parent.clone(),
                at_generation: at,
                parent_config_sha256: parent.sha256(),
                sampler_seed: request.reseed_sampler.then(|| seed::derive(s, &[at])),
            });
            child
        })
        .collect())
}

/// Restores the parent's snapshot once per seed and runs each branch to the end.
pub fn branch(store: &Store, request: &BranchRequest) -> Result<Vec<RunOutcome>, HarnessError> {
    let configs = branch_configs(store, request)?;
    configs.par_iter().map(|c| run(store, c)).collect()
}
