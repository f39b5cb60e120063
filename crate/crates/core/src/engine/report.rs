//! JSON and text renderings of a [`CheckReport`].

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use super::{Basis, CheckReport, HarnessEntry, HarnessStatus, Stats, Status, Verdict};
use crate::lang::Lint;

#[derive(Serialize)]
struct DepJson<'a> {
    id: &'a str,
    before: &'a str,
    after: &'a str,
    verdict: &'static str,
    basis: Basis,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vacuous: Option<bool>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    origin: &'a str,
    spec_hash: &'a str,
    status: Status,
    deps: Vec<DepJson<'a>>,
    harness: &'a [HarnessEntry],
    lints: &'a [Lint],
    warnings: &'a [String],
    stats: &'a Stats,
}

pub fn report_to_json(r: &CheckReport) -> Value {
    let deps = r
        .deps
        .iter()
        .map(|d| {
            let (reason, trace, vacuous) = match &d.verdict {
                Verdict::Correct { vacuous } => (None, None, Some(*vacuous)),
                Verdict::Incorrect(t) => (None, Some(t.to_json()), None),
                Verdict::Unknown(reason) => (Some(reason.to_string()), None, None),
            };
            DepJson {
                id: &d.dep.id,
                before: &d.dep.before,
                after: &d.dep.after,
                verdict: d.verdict.label(),
                basis: d.basis,
                reason,
                trace,
                vacuous,
            }
        })
        .collect();
    let json = ReportJson {
        origin: &r.origin,
        spec_hash: &r.spec_hash,
        status: r.status,
        deps,
        harness: &r.harness,
        lints: &r.lints,
        warnings: &r.warnings,
        stats: &r.stats,
    };
    serde_json::to_value(json).expect("report serialization cannot fail")
}

fn harness_label(s: HarnessStatus) -> &'static str {
    match s {
        HarnessStatus::Reached => "reached",
        HarnessStatus::NotReachedWithinBounds => "not reached within bounds",
        HarnessStatus::StructurallyUnreachable => "structurally unreachable",
    }
}

/// Human-readable report: a verdict table, traces, harness and lints.
pub fn render_report_text(r: &CheckReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}: {}", r.origin, r.status.label().to_uppercase());
    let width = r.deps.iter().map(|d| d.dep.to_string().len()).max().unwrap_or(0);
    for d in &r.deps {
        let extra = match &d.verdict {
            Verdict::Correct { vacuous: true } => " (vacuous)".to_string(),
            Verdict::Unknown(reason) => format!(" ({reason})"),
            _ => String::new(),
        };
        let _ = writeln!(out, "  {:<width$}  {}{}", d.dep.to_string(), d.verdict.label(), extra);
    }
    for d in &r.deps {
        if let Verdict::Incorrect(t) = &d.verdict {
            let _ = writeln!(out, "\ntrace for {}:", d.dep.id);
            out.push_str(&t.render());
        }
    }
    if !r.harness.is_empty() {
        out.push_str("\nharness:\n");
        for h in &r.harness {
            let _ = writeln!(out, "  {} at {}:{}: {}", h.callee, h.line, h.column, harness_label(h.status));
            if let Some(s) = &h.suggestion {
                let _ = writeln!(out, "    {s}");
            }
        }
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for l in &r.lints {
        let _ = writeln!(out, "lint: {} in {}: {}", l.loc, l.function, l.message);
    }
    let _ = writeln!(
        out,
        "\n{} path(s), {} truncation(s), {}, {} ms",
        r.stats.paths,
        r.stats.truncations,
        if r.stats.exhaustive { "exhaustive" } else { "bounded" },
        r.stats.wall_ms
    );
    out
}
