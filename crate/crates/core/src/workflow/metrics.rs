//! Per-revision size metrics and increment classification.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::lang::{emit_source, ExprKind, Program, Stmt, StmtKind};
use crate::spec::DependencySpec;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RevisionMetrics {
    /// Non-blank lines of the canonical emission.
    pub loc: usize,
    /// Call sites whose callee is named in the spec.
    pub hal_calls: usize,
    pub call_count: usize,
    pub nondet_count: usize,
    pub var_count: usize,
    pub branch_count: usize,
    pub loop_count: usize,
    pub array_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Skeleton,
    ControlFlow,
    DataFlow,
    Mixed,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Skeleton => "skeleton",
            Phase::ControlFlow => "control-flow",
            Phase::DataFlow => "data-flow",
            Phase::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IncrementSummary {
    pub added: usize,
    pub removed: usize,
    pub modified: usize,
    pub new_vars: usize,
    pub new_arrays: usize,
    pub phase: Phase,
    pub note: Option<String>,
}

impl IncrementSummary {
    /// The summary of the first revision, which has no predecessor.
    pub fn skeleton(m: &RevisionMetrics) -> Self {
        IncrementSummary {
            added: m.loc,
            removed: 0,
            modified: 0,
            new_vars: 0,
            new_arrays: 0,
            phase: Phase::Skeleton,
            note: None,
        }
    }
}

/// Every variable declaration, keyed by `function::name` (`::name` for globals).
/// The flag tells arrays apart.
fn declarations(p: &Program) -> Vec<(String, bool)> {
    let mut out: Vec<(String, bool)> = p.globals.iter().map(|g| (format!("::{}", g.name), g.array_len.is_some())).collect();
    for f in &p.functions {
        if let Some(body) = &f.body {
            for s in &body.stmts {
                s.walk(&mut |s| {
                    if let StmtKind::VarDecl(d) = &s.kind {
                        out.push((format!("{}::{}", f.name, d.name), d.array_len.is_some()));
                    }
                });
            }
        }
    }
    out
}

fn for_each_stmt(p: &Program, f: &mut dyn FnMut(&Stmt)) {
    for func in &p.functions {
        if let Some(body) = &func.body {
            for s in &body.stmts {
                s.walk(f);
            }
        }
    }
}

fn canonical_lines(p: &Program) -> Vec<String> {
    emit_source(p).lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()
}

pub fn metrics(p: &Program, spec: &DependencySpec) -> RevisionMetrics {
    let mut m = RevisionMetrics { loc: canonical_lines(p).len(), ..Default::default() };
    p.for_each_call(&mut |c| {
        m.call_count += 1;
        if spec.mentions(&c.name) {
            m.hal_calls += 1;
        }
    });
    let decls = declarations(p);
    m.var_count = decls.len();
    m.array_count = decls.iter().filter(|(_, array)| *array).count();
    for g in &p.globals {
        if let Some(init) = &g.init {
            init.walk(&mut |e| m.nondet_count += usize::from(matches!(e.kind, ExprKind::Nondet)));
        }
    }
    for_each_stmt(p, &mut |s| {
        match s.kind {
            StmtKind::If { .. } => m.branch_count += 1,
            StmtKind::While { .. } => m.loop_count += 1,
            _ => {}
        }
        for e in s.own_exprs() {
            e.walk(&mut |e| m.nondet_count += usize::from(matches!(e.kind, ExprKind::Nondet)));
        }
    });
    m
}

/// Line-based diff of the canonical emissions: `(added, removed, modified)`.
/// Within each hunk, paired deletions and insertions count as modifications.
fn line_diff(a: &[String], b: &[String]) -> (usize, usize, usize) {
    let (n, m) = (a.len(), b.len());
    let mut lcs = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if a[i] == b[j] { lcs[i + 1][j + 1] + 1 } else { lcs[i + 1][j].max(lcs[i][j + 1]) };
        }
    }
    let (mut i, mut j) = (0, 0);
    let (mut added, mut removed, mut modified) = (0, 0, 0);
    let (mut hunk_del, mut hunk_ins) = (0, 0);
    let mut flush = |del: &mut usize, ins: &mut usize| {
        let pairs = (*del).min(*ins);
        modified += pairs;
        removed += *del - pairs;
        added += *ins - pairs;
        *del = 0;
        *ins = 0;
    };
    while i < n || j < m {
        if i < n && j < m && a[i] == b[j] {
            flush(&mut hunk_del, &mut hunk_ins);
            i += 1;
            j += 1;
        } else if j < m && (i == n || lcs[i][j + 1] >= lcs[i + 1][j]) {
            hunk_ins += 1;
            j += 1;
        } else {
            hunk_del += 1;
            i += 1;
        }
    }
    flush(&mut hunk_del, &mut hunk_ins);
    (added, removed, modified)
}

/// Summarizes the increment from `prev` to `next` and classifies its phase.
pub fn diff_summary(prev: &Program, next: &Program) -> IncrementSummary {
    let (added, removed, modified) = line_diff(&canonical_lines(prev), &canonical_lines(next));
    let old: BTreeSet<String> = declarations(prev).into_iter().map(|(k, _)| k).collect();
    let fresh: Vec<(String, bool)> = declarations(next).into_iter().filter(|(k, _)| !old.contains(k)).collect();
    let new_arrays = fresh.iter().filter(|(_, array)| *array).count();
    let new_vars = fresh.len() - new_arrays;
    let empty = DependencySpec::default();
    let (a, b) = (metrics(prev, &empty), metrics(next, &empty));
    let control_changed = a.branch_count != b.branch_count || a.loop_count != b.loop_count || a.call_count != b.call_count;
    let control_grew = b.branch_count > a.branch_count || b.loop_count > a.loop_count;
    let data = new_vars > 0 || new_arrays > 0;
    let (phase, note) = if added + removed + modified == 0 {
        (Phase::Mixed, None)
    } else if !data && control_changed {
        (Phase::ControlFlow, None)
    } else if data && !control_grew {
        (Phase::DataFlow, None)
    } else {
        let note = if data {
            "this increment adds both variables and control flow; consider separate increments for control flow and data flow"
        } else {
            "this increment changes statements without changing control flow or adding variables"
        };
        (Phase::Mixed, Some(note.to_string()))
    };
    IncrementSummary { added, removed, modified, new_vars, new_arrays, phase, note }
}
