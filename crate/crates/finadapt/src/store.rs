//! On-disk layout of runs.
//!
//! ```text
//! <root>/<run_id>/config.json
//! <root>/<run_id>/log.jsonl              header, one line per generation, termination
//! <root>/<run_id>/snapshots/gen-00042.json  optimizer state after generation 42
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use finadapt_core::optimizer::{CandidateRecord, CmaesSnapshot, GenerationRecord};
use serde::{Deserialize, Serialize};

use crate::config::{Lineage, RunConfig};
use crate::error::HarnessError;

pub const LOG_SCHEMA: &str = "finadapt.runlog/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema: String,
    pub run_id: String,
    pub config_sha256: String,
    /// Index of the first generation this log records.
    pub first_generation: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<Lineage>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Converged,
    Cap,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::Converged => "converged",
            TerminationReason::Cap => "cap",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub reason: TerminationReason,
    pub final_generation: u64,
    /// Best candidate of the final generation.
    pub optimum: CandidateRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogLine {
    Header(LogHeader),
    Generation(GenerationRecord),
    Termination(Termination),
}

/// A parsed log.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub header: LogHeader,
    pub generations: Vec<GenerationRecord>,
    pub termination: Option<Termination>,
}

impl RunLog {
    pub fn last_generation(&self) -> Option<u64> {
        self.generations.last().map(|g| g.generation)
    }

    pub fn generation(&self, g: u64) -> Option<&GenerationRecord> {
        let first = self.generations.first()?.generation;
        self.generations.get(g.checked_sub(first)? as usize)
    }
}

#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

fn schema_major(s: &str) -> Option<(&str, &str)> {
    let (name, v) = s.rsplit_once('/')?;
    Some((name, v.split('.').next()?))
}

pub(crate) fn compatible_schema(found: &str, expected: &str) -> bool {
    schema_major(found).is_some() && schema_major(found) == schema_major(expected)
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join(run_id)
    }

    pub fn config_path(&self, run_id: &str) -> PathBuf {
        self.run_dir(run_id).join("config.json")
    }

    pub fn log_path(&self, run_id: &str) -> PathBuf {
        self.run_dir(run_id).join("log.jsonl")
    }

    pub fn snapshot_path(&self, run_id: &str, generation: u64) -> PathBuf {
        self.run_dir(run_id)
            .join("snapshots")
            .join(format!("gen-{generation:05}.json"))
    }

    pub fn exists(&self, run_id: &str) -> bool {
        self.config_path(run_id).is_file()
    }

    pub fn read_config(&self, run_id: &str) -> Result<RunConfig, HarnessError> {
        let path = self.config_path(run_id);
        if !path.is_file() {
            return Err(HarnessError::MissingRun(run_id.to_string()));
        }
        let text = fs::read_to_string(&path).map_err(HarnessError::io(&path))?;
        serde_json::from_str(&text).map_err(HarnessError::json(&path))
    }

    pub fn write_config(&self, config: &RunConfig) -> Result<(), HarnessError> {
        let dir = self.run_dir(&config.run_id);
        fs::create_dir_all(dir.join("snapshots")).map_err(HarnessError::io(&dir))?;
        let text = serde_json::to_string_pretty(config).expect("configs always serialize");
        write_atomic(&self.config_path(&config.run_id), text.as_bytes())
    }

    pub fn write_snapshot(&self, run_id: &str, generation: u64, snap: &CmaesSnapshot) -> Result<(), HarnessError> {
        let text = serde_json::to_string_pretty(snap).expect("snapshots always serialize");
        write_atomic(&self.snapshot_path(run_id, generation), text.as_bytes())
    }

    pub fn read_snapshot(&self, run_id: &str, generation: u64) -> Result<CmaesSnapshot, HarnessError> {
        let path = self.snapshot_path(run_id, generation);
        if !path.is_file() {
            return Err(HarnessError::MissingSnapshot {
                run: run_id.to_string(),
                generation,
            });
        }
        let text = fs::read_to_string(&path).map_err(HarnessError::io(&path))?;
        serde_json::from_str(&text).map_err(HarnessError::json(&path))
    }

    /// Generations with a stored snapshot, ascending.
    pub fn snapshot_generations(&self, run_id: &str) -> Result<Vec<u64>, HarnessError> {
        let dir = self.run_dir(run_id).join("snapshots");
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut gens: Vec<u64> = fs::read_dir(&dir)
            .map_err(HarnessError::io(&dir))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_prefix("gen-")?.strip_suffix(".json")?.parse().ok()
            })
            .collect();
        gens.sort_unstable();
        Ok(gens)
    }

    /// Ids of every run in the store, sorted.
    pub fn run_ids(&self) -> Result<Vec<String>, HarnessError> {
        if !self.root.is_dir() {
            return Ok(Vec::new());
        }
        let mut ids: Vec<String> = fs::read_dir(&self.root)
            .map_err(HarnessError::io(&self.root))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|id| self.exists(id))
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Reads a complete log. With `tolerate_torn_tail`, an unparsable final
    /// line (an interrupted write) is dropped instead of reported.
    pub fn read_log(&self, run_id: &str, tolerate_torn_tail: bool) -> Result<RunLog, HarnessError> {
        let path = self.log_path(run_id);
        if !path.is_file() {
            return Err(HarnessError::MissingRun(run_id.to_string()));
        }
        let file = File::open(&path).map_err(HarnessError::io(&path))?;
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<Result<_, _>>()
            .map_err(HarnessError::io(&path))?;
        let corrupt = |reason: String| HarnessError::CorruptLog {
            path: path.clone(),
            reason,
        };
        let mut parsed = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            match serde_json::from_str::<LogLine>(line) {
                Ok(l) => parsed.push(l),
                Err(_) if tolerate_torn_tail && i + 1 == lines.len() => break,
                Err(e) => {
                    // A header from a different major version should say so.
                    if i == 0 {
                        if let Some(found) = schema_of(line) {
                            if !compatible_schema(&found, LOG_SCHEMA) {
                                return Err(HarnessError::SchemaMismatch {
                                    path: path.clone(),
                                    expected: LOG_SCHEMA.into(),
                                    found,
                                });
                            }
                        }
                    }
                    return Err(corrupt(format!("line {}: {e}", i + 1)));
                }
            }
        }
        let mut iter = parsed.into_iter();
        let header = match iter.next() {
            Some(LogLine::Header(h)) => h,
            _ => return Err(corrupt("missing header line".into())),
        };
        if !compatible_schema(&header.schema, LOG_SCHEMA) {
            return Err(HarnessError::SchemaMismatch {
                path: path.clone(),
                expected: LOG_SCHEMA.into(),
                found: header.schema,
            });
        }
        let mut generations = Vec::new();
        let mut termination = None;
        for line in iter {
            match line {
                LogLine::Generation(g) => {
                    let expected = header.first_generation + generations.len() as u64;
                    if termination.is_some() || g.generation != expected {
                        return Err(corrupt(format!(
                            "generation {} out of sequence (expected {expected})",
                            g.generation
                        )));
                    }
                    generations.push(g);
                }
                LogLine::Termination(t) => termination = Some(t),
                LogLine::Header(_) => return Err(corrupt("second header line".into())),
            }
        }
        Ok(RunLog {
            header,
            generations,
            termination,
        })
    }

    /// Rewrites the log with only the given lines.
    pub fn rewrite_log(&self, run_id: &str, lines: &[LogLine]) -> Result<(), HarnessError> {
        let mut buf = Vec::new();
        for l in lines {
            serde_json::to_writer(&mut buf, l).expect("log lines always serialize");
            buf.push(b'\n');
        }
        write_atomic(&self.log_path(run_id), &buf)
    }

    pub fn open_log_for_append(&self, run_id: &str) -> Result<LogWriter, HarnessError> {
        let path = self.log_path(run_id);
        let file = OpenOptions::new()
            .append(true)
            .create(true)
            .open(&path)
            .map_err(HarnessError::io(&path))?;
        Ok(LogWriter {
            out: BufWriter::new(file),
            path,
        })
    }
}

fn schema_of(line: &str) -> Option<String> {
    let v: serde_json::Value = serde_json::from_str(line).ok()?;
    Some(v.get("schema")?.as_str()?.to_string())
}

/// Appends whole lines and flushes each one.
pub struct LogWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl LogWriter {
    pub fn append(&mut self, line: &LogLine) -> Result<(), HarnessError> {
        let mut buf = serde_json::to_vec(line).expect("log lines always serialize");
        buf.push(b'\n');
        self.out.write_all(&buf).map_err(HarnessError::io(&self.path))?;
        self.out.flush().map_err(HarnessError::io(&self.path))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(HarnessError::io(&tmp))?;
    fs::rename(&tmp, path).map_err(HarnessError::io(path))
}
