//! Bounded depth-first path exploration with a dependency monitor.
//!
//! Every branch outcome and every observable `*` value forks the search.
//! Branch alternatives are tried `false` first; integer alternatives come from
//! [`nondet_domain`] in ascending order. A violation is recorded once per
//! dependency (the first one found) and the violating path keeps running.

mod machine;
mod trace;

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::cfg::{Graph, NodeKind, Operand};
use crate::config::Bounds;
use crate::spec::TemporalDependency;

pub use machine::Truncation;
pub use trace::{Choice, Step, StepKind, Trace, TraceTarget};

use machine::{Advance, Event, EventKind, Machine};

/// Why a dependency could not be decided, strongest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownReason {
    Timeout,
    PathBound,
    StepBound,
    LoopBound,
    Imprecision,
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UnknownReason::Timeout => "timeout",
            UnknownReason::PathBound => "path-bound",
            UnknownReason::StepBound => "step-bound",
            UnknownReason::LoopBound => "loop-bound",
            UnknownReason::Imprecision => "imprecision",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Truncations {
    pub loop_bound: u64,
    pub step_bound: u64,
    pub path_bound: bool,
    pub timeout: bool,
}

impl Truncations {
    pub fn total(&self) -> u64 {
        self.loop_bound + self.step_bound + u64::from(self.path_bound) + u64::from(self.timeout)
    }
}

#[derive(Debug, Clone)]
pub struct Exploration {
    /// First violating trace per dependency, by position in the input slice.
    pub violations: Vec<Option<Trace>>,
    /// First failing trace per `assert` node, in discovery order.
    pub assert_failures: Vec<Trace>,
    pub paths: u64,
    pub truncations: Truncations,
    /// Paths cut short by an out-of-bounds index or division by zero.
    pub faults: u64,
    /// Some integer `*` had to be sampled from a finite domain.
    pub sampled: bool,
    /// Nodes executed on at least one path.
    pub reached: Vec<bool>,
    pub exhaustive: bool,
}

impl Exploration {
    /// The dominant reason exploration was inconclusive, if any.
    pub fn unknown_reason(&self) -> Option<UnknownReason> {
        let t = &self.truncations;
        if t.timeout {
            Some(UnknownReason::Timeout)
        } else if t.path_bound {
            Some(UnknownReason::PathBound)
        } else if t.step_bound > 0 {
            Some(UnknownReason::StepBound)
        } else if t.loop_bound > 0 {
            Some(UnknownReason::LoopBound)
        } else if self.faults > 0 || self.sampled {
            Some(UnknownReason::Imprecision)
        } else {
            None
        }
    }
}

/// Integer values tried for an observable `*`: `0`, `1`, and `k-1, k, k+1`
/// for every literal `k` compared against in the program. Comparisons on
/// instrumentation state (`__idcc_` variables) are skipped.
pub fn nondet_domain(g: &Graph) -> Vec<i64> {
    let mut set: BTreeSet<i64> = BTreeSet::from([0, 1]);
    let mentions_state = |op: &Operand| {
        let mut found = false;
        op.for_each_load(&mut |p| found |= g.var(p.var).name.starts_with("__idcc_"));
        found
    };
    fn visit(op: &Operand, f: &mut dyn FnMut(&Operand)) {
        f(op);
        match op {
            Operand::Unary(_, e) => visit(e, f),
            Operand::Binary(_, l, r) => {
                visit(l, f);
                visit(r, f);
            }
            Operand::Load(p) => {
                if let crate::cfg::Access::Index(i) = &p.access {
                    visit(i, f);
                }
            }
            _ => {}
        }
    }
    for n in &g.nodes {
        for root in crate::cfg::evaluated_operands(&n.kind) {
            visit(root, &mut |op| {
                if let Operand::Binary(o, l, r) = op {
                    if o.is_comparison() && !mentions_state(l) && !mentions_state(r) {
                        for k in [l.const_value(), r.const_value()].into_iter().flatten() {
                            set.extend([k.wrapping_sub(1), k, k.wrapping_add(1)]);
                        }
                    }
                }
            });
        }
    }
    set.into_iter().collect()
}

/// Explores all paths of `g` within `bounds`, monitoring `deps`.
pub fn explore(g: &Graph, deps: &[TemporalDependency], bounds: &Bounds) -> Exploration {
    let domain = nondet_domain(g);
    let machine = Machine::new(g, deps, bounds.loop_bound, bounds.max_steps, domain);
    let start = Instant::now();
    let mut out = Exploration {
        violations: vec![None; deps.len()],
        assert_failures: Vec::new(),
        paths: 0,
        truncations: Truncations::default(),
        faults: 0,
        sampled: g.has_observable_int_nondet(),
        reached: vec![false; g.len()],
        exhaustive: false,
    };
    let mut stack = vec![machine.initial()];
    let mut events: Vec<Event> = Vec::new();
    let mut ticks: u64 = 0;
    'search: while let Some(mut st) = stack.pop() {
        loop {
            ticks += 1;
            if ticks.is_multiple_of(256) && start.elapsed() > bounds.timeout {
                out.truncations.timeout = true;
                break 'search;
            }
            let at = st.node;
            let step = machine.advance(&mut st, &mut events);
            for e in events.drain(..) {
                record(&machine, &mut out, e);
            }
            match step {
                Advance::Continue => out.reached[at.index()] = true,
                Advance::NeedChoice(alts) => {
                    for alt in alts.into_iter().rev() {
                        let mut s = st.clone();
                        s.pending.push(alt);
                        stack.push(s);
                    }
                    break;
                }
                Advance::Exit => {
                    out.reached[at.index()] = true;
                    out.paths += 1;
                    break;
                }
                Advance::Truncated(t) => {
                    out.paths += 1;
                    match t {
                        Truncation::LoopBound => out.truncations.loop_bound += 1,
                        Truncation::StepBound => out.truncations.step_bound += 1,
                    }
                    break;
                }
                Advance::Fault(_) => {
                    out.paths += 1;
                    out.faults += 1;
                    break;
                }
            }
        }
        if out.paths >= bounds.max_paths && !stack.is_empty() {
            out.truncations.path_bound = true;
            break;
        }
    }
    out.exhaustive = out.unknown_reason().is_none();
    out
}

fn record(machine: &Machine, out: &mut Exploration, e: Event) {
    match e.kind {
        EventKind::Violation(i) => {
            if out.violations[i].is_none() {
                let steps = trace::materialize(machine.graph, machine.deps, &e.steps);
                out.violations[i] = Some(Trace { target: TraceTarget::Dependency(machine.deps[i].clone()), steps });
            }
        }
        EventKind::AssertFailed(node) => {
            if out.assert_failures.iter().all(|t| t.assertion_node() != Some(node)) {
                let n = machine.graph.node(node);
                out.assert_failures.push(Trace {
                    target: TraceTarget::Assertion { node, loc: n.loc, text: n.text.clone() },
                    steps: trace::materialize(machine.graph, machine.deps, &e.steps),
                });
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("replay diverged at step {step}: {message}")]
    Divergence { step: usize, message: String },
}

/// Re-executes `trace` on `g` without bounds, feeding back its recorded
/// choices, and returns the reproduced trace. Fails unless the same steps
/// lead to the same violation.
pub fn replay(g: &Graph, trace: &Trace) -> Result<Trace, ReplayError> {
    let deps: Vec<TemporalDependency> = match &trace.target {
        TraceTarget::Dependency(d) => vec![d.clone()],
        TraceTarget::Assertion { .. } => Vec::new(),
    };
    let machine = Machine::new(g, &deps, u32::MAX, u64::MAX, Vec::new());
    let choices = trace.choices();
    let mut next = 0;
    let cap = trace.steps.len() + 1;
    let mut st = machine.initial();
    let mut events = Vec::new();
    let diverge = |step: usize, message: String| Err(ReplayError::Divergence { step, message });
    loop {
        if st.recorded > cap {
            return diverge(st.recorded, "replay ran past the end of the trace".to_string());
        }
        match machine.advance(&mut st, &mut events) {
            Advance::Continue => {
                for e in events.drain(..) {
                    let hit = match (&trace.target, e.kind) {
                        (TraceTarget::Dependency(_), EventKind::Violation(_)) => true,
                        (TraceTarget::Assertion { node, .. }, EventKind::AssertFailed(n)) => *node == n,
                        _ => false,
                    };
                    if hit {
                        let steps = trace::materialize(g, &deps, &e.steps);
                        if let Some(i) = (0..steps.len().max(trace.steps.len()))
                            .find(|&i| steps.get(i) != trace.steps.get(i))
                        {
                            return diverge(i, "reproduced steps differ from the recorded ones".to_string());
                        }
                        return Ok(Trace { target: trace.target.clone(), steps });
                    }
                }
            }
            Advance::NeedChoice(alts) => {
                let Some(&c) = choices.get(next) else {
                    return diverge(st.recorded, "trace has no choice left".to_string());
                };
                let same_kind = matches!(
                    (alts.first(), c),
                    (Some(Choice::Bool(_)), Choice::Bool(_)) | (Some(Choice::Int(_)), Choice::Int(_)) | (None, Choice::Int(_))
                );
                if !same_kind {
                    return diverge(st.recorded, format!("recorded choice {c:?} does not fit this point"));
                }
                st.pending.push(c);
                next += 1;
            }
            Advance::Exit | Advance::Truncated(_) => {
                return diverge(st.recorded, "path ended without reproducing the violation".to_string())
            }
            Advance::Fault(msg) => return diverge(st.recorded, msg),
        }
    }
}

/// Whether the graph has `assert` nodes at all.
pub fn has_assertions(g: &Graph) -> bool {
    g.nodes.iter().any(|n| matches!(n.kind, NodeKind::Assert { .. }))
}

#[cfg(test)]
mod tests;
