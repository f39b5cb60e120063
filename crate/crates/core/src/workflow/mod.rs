//! Checking an ordered history of revisions, each one anew.

mod metrics;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::CheckConfig;
use crate::engine::{check_revision, report_to_json, CheckReport, EngineError, Status, Verdict};
use crate::lang::{parse_program, Program, ProgramError};
use crate::spec::DependencySpec;

pub use metrics::{diff_summary, metrics, IncrementSummary, Phase, RevisionMetrics};

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("no `.ecs` revisions found in {0}")]
    EmptyHistory(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("revision {revision}: {source}")]
    Parse { revision: String, source: ProgramError },
}

#[derive(Debug, Clone)]
pub struct Revision {
    pub path: PathBuf,
    /// File name, used as the revision id.
    pub name: String,
    pub program: Program,
}

#[derive(Debug, Clone)]
pub struct History {
    pub revisions: Vec<Revision>,
}

fn read(path: &Path) -> Result<String, WorkflowError> {
    std::fs::read_to_string(path).map_err(|source| WorkflowError::Io { path: path.to_path_buf(), source })
}

fn load_paths(paths: Vec<PathBuf>) -> Result<History, WorkflowError> {
    let mut revisions = Vec::with_capacity(paths.len());
    for path in paths {
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        let program = parse_program(&read(&path)?, &name)
            .map_err(|source| WorkflowError::Parse { revision: name.clone(), source })?;
        revisions.push(Revision { path, name, program });
    }
    Ok(History { revisions })
}

/// Loads every `.ecs` file of `dir`, in lexicographic file-name order.
pub fn load_history(dir: &Path) -> Result<History, WorkflowError> {
    let entries = std::fs::read_dir(dir).map_err(|source| WorkflowError::Io { path: dir.to_path_buf(), source })?;
    let mut paths = Vec::new();
    for e in entries {
        let e = e.map_err(|source| WorkflowError::Io { path: dir.to_path_buf(), source })?;
        let path = e.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "ecs") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(WorkflowError::EmptyHistory(dir.to_path_buf()));
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    load_paths(paths)
}

/// Loads the revisions listed in a manifest, one path per line, relative to
/// the manifest's directory. Blank lines and `#` comments are skipped.
pub fn load_history_list(manifest: &Path) -> Result<History, WorkflowError> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let paths: Vec<PathBuf> = read(manifest)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect();
    if paths.is_empty() {
        return Err(WorkflowError::EmptyHistory(manifest.to_path_buf()));
    }
    load_paths(paths)
}

#[derive(Debug)]
pub struct RevisionResult {
    pub name: String,
    pub metrics: RevisionMetrics,
    pub summary: IncrementSummary,
    pub report: Result<CheckReport, EngineError>,
}

#[derive(Debug)]
pub struct HistoryReport {
    pub revisions: Vec<RevisionResult>,
}

impl HistoryReport {
    /// Worst status over all revisions; a failed revision counts as unknown.
    pub fn status(&self) -> Status {
        self.revisions
            .iter()
            .map(|r| r.report.as_ref().map_or(Status::Unknown, |r| r.status))
            .max()
            .unwrap_or(Status::Correct)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.revisions
                .iter()
                .map(|r| {
                    let mut v = match &r.report {
                        Ok(report) => report_to_json(report),
                        Err(e) => json!({ "origin": r.name, "error": e.to_string() }),
                    };
                    v["metrics"] = serde_json::to_value(&r.metrics).expect("metrics serialize");
                    v["increment"] = serde_json::to_value(&r.summary).expect("summary serializes");
                    v
                })
                .collect(),
        )
    }

    /// A table with one row per revision: id, phase, LOC, verdict, time.
    pub fn render_table(&self) -> String {
        let width = self.revisions.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
        let mut out = format!("{:<width$}  {:<12}  {:>5}  {:<10}  {:>8}\n", "revision", "phase", "LOC", "verdict", "time");
        for r in &self.revisions {
            let (verdict, time) = match &r.report {
                Ok(rep) => (rep.status.label().to_string(), format!("{} ms", rep.stats.wall_ms)),
                Err(_) => ("error".to_string(), "-".to_string()),
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:<12}  {:>5}  {:<10}  {:>8}",
                r.name,
                r.summary.phase.label(),
                r.metrics.loc,
                verdict,
                time
            );
        }
        for r in &self.revisions {
            if let Some(note) = &r.summary.note {
                let _ = writeln!(out, "note: {}: {note}", r.name);
            }
            match &r.report {
                Err(e) => {
                    let _ = writeln!(out, "error: {}: {e}", r.name);
                }
                Ok(rep) => {
                    for d in &rep.deps {
                        if let Verdict::Incorrect(t) = &d.verdict {
                            let _ = writeln!(out, "\n{}: {} violated:", r.name, d.dep);
                            out.push_str(&t.render());
                        }
                    }
                }
            }
        }
        out
    }
}

/// Checks every revision independently (in parallel) and classifies the
/// increments between consecutive revisions.
pub fn check_history(
    h: &History,
    spec: &DependencySpec,
    hal: Option<&Program>,
    config: &CheckConfig,
) -> HistoryReport {
    let revisions = h
        .revisions
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let m = metrics(&r.program, spec);
            let summary = match i {
                0 => IncrementSummary::skeleton(&m),
                _ => diff_summary(&h.revisions[i - 1].program, &r.program),
            };
            RevisionResult {
                name: r.name.clone(),
                metrics: m,
                summary,
                report: check_revision(&r.program, spec, hal, config),
            }
        })
        .collect();
    HistoryReport { revisions }
}
