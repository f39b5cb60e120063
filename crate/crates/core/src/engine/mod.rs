//! Three-way verdicts: the must-analysis proves, the explorer refutes, and
//! whatever neither settles is Unknown with the dominant bound as reason.

mod report;

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{check_must, prove_assertions, AssertionStatus, MustResult, WorklistOrder};
use crate::cfg::{build_cfg, call_sites, Cfg, CfgError, Graph, NodeId, NodeKind};
use crate::config::CheckConfig;
use crate::explore::{explore, Exploration, Trace, UnknownReason};
use crate::instrument::{instrument_detailed, InstrumentError};
use crate::lang::{emit_source, lint_program, merge_programs, parse_program, Lint, Loc, MergeError, Program, ProgramError};
use crate::spec::{DependencySpec, SpecError, TemporalDependency};

pub use report::{render_report_text, report_to_json};

/// JSON Schema that [`report_to_json`] output conforms to.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/check_report.schema.json");

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Parse(#[from] ProgramError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("cannot merge the HAL model: {0}")]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Cfg(#[from] CfgError),
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    /// The prover and the explorer disagree; always an internal bug.
    #[error("internal contradiction on `{id}`: proved by must-analysis but the explorer found a violation")]
    Contradiction { id: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// `vacuous` when the `after` function is never called.
    Correct { vacuous: bool },
    Incorrect(Box<Trace>),
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Correct { .. } => "correct",
            Verdict::Incorrect(_) => "incorrect",
            Verdict::Unknown(_) => "unknown",
        }
    }

    /// The verdict without its trace, for comparing verdicts across encodings.
    pub fn class(&self) -> VerdictClass {
        match self {
            Verdict::Correct { vacuous } => VerdictClass::Correct { vacuous: *vacuous },
            Verdict::Incorrect(_) => VerdictClass::Incorrect,
            Verdict::Unknown(r) => VerdictClass::Unknown(*r),
        }
    }

    pub fn trace(&self) -> Option<&Trace> {
        match self {
            Verdict::Incorrect(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictClass {
    Correct { vacuous: bool },
    Incorrect,
    Unknown(UnknownReason),
}

/// How a verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    MustAnalysis,
    Exploration,
    ExhaustiveExploration,
    Bounds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepResult {
    pub dep: TemporalDependency,
    pub verdict: Verdict,
    pub basis: Basis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Correct,
    Unknown,
    Incorrect,
}

impl Status {
    pub fn of<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Status {
        verdicts
            .into_iter()
            .map(|v| match v {
                Verdict::Correct { .. } => Status::Correct,
                Verdict::Unknown(_) => Status::Unknown,
                Verdict::Incorrect(_) => Status::Incorrect,
            })
            .max()
            .unwrap_or(Status::Correct)
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Correct => "correct",
            Status::Unknown => "unknown",
            Status::Incorrect => "incorrect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarnessStatus {
    Reached,
    NotReachedWithinBounds,
    StructurallyUnreachable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarnessEntry {
    pub callee: String,
    pub line: u32,
    pub column: u32,
    pub status: HarnessStatus,
    pub suggestion: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub paths: u64,
    pub truncations: u64,
    pub exhaustive: bool,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub origin: String,
    pub spec_hash: String,
    pub status: Status,
    pub deps: Vec<DepResult>,
    pub harness: Vec<HarnessEntry>,
    pub lints: Vec<Lint>,
    pub warnings: Vec<String>,
    pub stats: Stats,
}

impl CheckReport {
    /// A copy with the wall-clock time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> CheckReport {
        let mut r = self.clone();
        r.stats.wall_ms = 0;
        r
    }

    pub fn verdict(&self, id: &str) -> Option<&Verdict> {
        self.deps.iter().find(|d| d.dep.id == id).map(|d| &d.verdict)
    }
}

/// Everything the verdict and harness reports are derived from.
pub struct Analysis {
    pub program: Program,
    pub cfg: Cfg,
    pub must: Vec<MustResult>,
    pub exploration: Exploration,
}

fn merged(p: &Program, hal: Option<&Program>) -> Result<Program, EngineError> {
    Ok(match hal {
        Some(h) => merge_programs(p, h)?,
        None => p.clone(),
    })
}

/// Runs the must-analysis and the explorer on `p` (merged with `hal`).
pub fn analyze(
    p: &Program,
    spec: &DependencySpec,
    hal: Option<&Program>,
    config: &CheckConfig,
) -> Result<Analysis, EngineError> {
    let program = merged(p, hal)?;
    let cfg = build_cfg(&program, &config.cfg_config())?;
    let must = spec.deps.iter().map(|d| check_must(&cfg.main, d, WorklistOrder::Fifo)).collect();
    let exploration = explore(&cfg.main, &spec.deps, &config.bounds);
    Ok(Analysis { program, cfg, must, exploration })
}

fn decide(must: &MustResult, violation: Option<&Trace>, ex: &Exploration, id: &str) -> Result<(Verdict, Basis), EngineError> {
    match (must, violation) {
        (MustResult::Proved { .. }, Some(_)) => Err(EngineError::Contradiction { id: id.to_string() }),
        (MustResult::Proved { vacuous }, None) => Ok((Verdict::Correct { vacuous: *vacuous }, Basis::MustAnalysis)),
        (_, Some(t)) => Ok((Verdict::Incorrect(Box::new(t.clone())), Basis::Exploration)),
        (_, None) => Ok(match ex.unknown_reason() {
            None => (Verdict::Correct { vacuous: false }, Basis::ExhaustiveExploration),
            Some(r) => (Verdict::Unknown(r), Basis::Bounds),
        }),
    }
}

/// Checks every dependency of `spec` on one program revision.
pub fn check_revision(
    p: &Program,
    spec: &DependencySpec,
    hal: Option<&Program>,
    config: &CheckConfig,
) -> Result<CheckReport, EngineError> {
    let start = Instant::now();
    let a = analyze(p, spec, hal, config)?;
    let mut deps = Vec::with_capacity(spec.len());
    for (i, d) in spec.deps.iter().enumerate() {
        let (verdict, basis) = decide(&a.must[i], a.exploration.violations[i].as_ref(), &a.exploration, &d.id)?;
        deps.push(DepResult { dep: d.clone(), verdict, basis });
    }
    let harness = harness_entries(&a.cfg, spec, &a.exploration);
    let mut warnings = Vec::new();
    for name in spec.functions() {
        let mut called = false;
        a.program.for_each_call(&mut |c| called |= c.name == name);
        if !called && a.program.function(name).is_none() {
            warnings.push(format!("spec function `{name}` does not occur in the program"));
        }
    }
    for r in &deps {
        if r.verdict == (Verdict::Correct { vacuous: true }) {
            warnings.push(format!(
                "{} holds vacuously: `{}` is never called, so the dependency is not checked (see the harness report)",
                r.dep.id, r.dep.after
            ));
        }
    }
    let status = Status::of(deps.iter().map(|d| &d.verdict));
    Ok(CheckReport {
        origin: p.origin.clone(),
        spec_hash: spec.hash(),
        status,
        deps,
        harness,
        lints: lint_program(&a.program),
        warnings,
        stats: Stats {
            paths: a.exploration.paths,
            truncations: a.exploration.truncations.total(),
            exhaustive: a.exploration.exhaustive,
            wall_ms: start.elapsed().as_millis() as u64,
        },
    })
}

/// Classifies every call site of a spec function by reachability.
pub fn harness_adequacy(
    p: &Program,
    spec: &DependencySpec,
    hal: Option<&Program>,
    config: &CheckConfig,
) -> Result<Vec<HarnessEntry>, EngineError> {
    let program = merged(p, hal)?;
    let cfg = build_cfg(&program, &config.cfg_config())?;
    let ex = explore(&cfg.main, &[], &config.bounds);
    Ok(harness_entries(&cfg, spec, &ex))
}

fn harness_entries(cfg: &Cfg, spec: &DependencySpec, ex: &Exploration) -> Vec<HarnessEntry> {
    let g = &cfg.main;
    call_sites(cfg, spec)
        .into_iter()
        .filter(|s| s.is_spec_function)
        .map(|s| {
            let node = g.node(s.node);
            let status = if !node.structurally_reachable {
                HarnessStatus::StructurallyUnreachable
            } else if ex.reached[s.node.index()] {
                HarnessStatus::Reached
            } else {
                HarnessStatus::NotReachedWithinBounds
            };
            let suggestion = (status == HarnessStatus::NotReachedWithinBounds).then(|| suggestion(g, s.node));
            HarnessEntry { callee: s.callee, line: s.loc.line, column: s.loc.column, status, suggestion }
        })
        .collect()
}

fn suggestion(g: &Graph, site: NodeId) -> String {
    let places = g.node(site).guards.iter().rev().find_map(|b| match &g.node(*b).kind {
        NodeKind::Branch { places, .. } if !places.is_empty() => Some(places.clone()),
        _ => None,
    });
    match places {
        Some(places) => {
            let examples: Vec<String> = places.iter().map(|p| format!("`{p} = *;`")).collect();
            format!(
                "the guarding condition depends on {}; consider a harness assignment such as {}",
                places.join(", "),
                examples.join(" or ")
            )
        }
        None => "no explored path reaches this call; consider raising --loop-bound or --max-steps".to_string(),
    }
}

/// Verdict of one `assert` statement under the generic assertion checker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionResult {
    pub node: NodeId,
    pub loc: Loc,
    pub cond: String,
    pub verdict: Verdict,
}

/// Checks every `assert` of `p` with constant propagation as prover and
/// the explorer as refuter.
pub fn check_assertions(p: &Program, config: &CheckConfig) -> Result<(Cfg, Vec<AssertionResult>, Exploration), EngineError> {
    let cfg = build_cfg(p, &config.cfg_config())?;
    let proved = prove_assertions(&cfg.main);
    let ex = explore(&cfg.main, &[], &config.bounds);
    let mut out = Vec::new();
    for (node, status) in proved {
        let failure = ex.assert_failures.iter().find(|t| t.assertion_node() == Some(node));
        let n = cfg.main.node(node);
        let verdict = match (status, failure) {
            (AssertionStatus::Proved, Some(_)) => {
                return Err(EngineError::Contradiction { id: format!("assert@{}", n.loc) })
            }
            (AssertionStatus::Proved, None) => Verdict::Correct { vacuous: false },
            (_, Some(t)) => Verdict::Incorrect(Box::new(t.clone())),
            (_, None) => match ex.unknown_reason() {
                None => Verdict::Correct { vacuous: false },
                Some(r) => Verdict::Unknown(r),
            },
        };
        let cond = match &n.kind {
            NodeKind::Assert { cond_text, .. } => cond_text.clone(),
            _ => unreachable!("prove_assertions only reports assert nodes"),
        };
        out.push(AssertionResult { node, loc: n.loc, cond, verdict });
    }
    Ok((cfg, out, ex))
}

/// Result of checking the assertion encoding of a revision. Incorrect
/// verdicts carry the failing assertion's trace, replayable on `cfg`.
pub struct InstrumentedCheck {
    /// The instrumented program, re-parsed from its emitted text.
    pub program: Program,
    pub cfg: Cfg,
    pub deps: Vec<DepResult>,
}

/// Checks `spec` on `p` by instrumenting it with assertions and running the
/// generic assertion checker. Verdicts follow the same rules as
/// [`check_revision`].
pub fn check_revision_instrumented(
    p: &Program,
    spec: &DependencySpec,
    hal: Option<&Program>,
    config: &CheckConfig,
) -> Result<InstrumentedCheck, EngineError> {
    let program = merged(p, hal)?;
    let inst = instrument_detailed(&program, spec)?;
    let text = emit_source(&inst.program);
    let program = parse_program(&text, &format!("{} (instrumented)", p.origin))?;
    let (cfg, asserts, ex) = check_assertions(&program, config)?;
    let mut deps = Vec::new();
    for d in &inst.deps {
        let expected = format!("{} == 1", d.aux_name);
        let mine: Vec<&AssertionResult> = asserts.iter().filter(|a| a.cond == expected).collect();
        let nodes: Vec<NodeId> = mine.iter().map(|a| a.node).collect();
        let (verdict, basis) = if mine.is_empty() {
            (Verdict::Correct { vacuous: true }, Basis::MustAnalysis)
        } else if let Some(t) = ex.assert_failures.iter().find(|t| t.assertion_node().is_some_and(|n| nodes.contains(&n))) {
            (Verdict::Incorrect(Box::new(t.clone())), Basis::Exploration)
        } else if mine.iter().all(|a| matches!(a.verdict, Verdict::Correct { .. })) {
            let proved = prove_assertions(&cfg.main)
                .into_iter()
                .filter(|(n, _)| nodes.contains(n))
                .all(|(_, s)| s == AssertionStatus::Proved);
            if proved {
                (Verdict::Correct { vacuous: false }, Basis::MustAnalysis)
            } else {
                (Verdict::Correct { vacuous: false }, Basis::ExhaustiveExploration)
            }
        } else {
            let reason = ex.unknown_reason().expect("an unsettled assertion implies a bound was hit");
            (Verdict::Unknown(reason), Basis::Bounds)
        };
        deps.push(DepResult { dep: d.dep.clone(), verdict, basis });
    }
    Ok(InstrumentedCheck { program, cfg, deps })
}
