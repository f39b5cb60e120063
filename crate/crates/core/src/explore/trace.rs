//! Counterexample traces and their JSON form.

use std::rc::Rc;

use serde::Serialize;

use crate::cfg::{Graph, InlineFrame, NodeId, NodeKind, NondetId};
use crate::lang::Loc;
use crate::spec::TemporalDependency;

/// A resolved nondeterministic choice: a branch direction or an integer.
/// Serialized as an integer (branch directions as 0 and 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Bool(bool),
    Int(i64),
}

impl Serialize for Choice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i64(self.value())
    }
}

impl Choice {
    pub fn value(self) -> i64 {
        match self {
            Choice::Bool(b) => b as i64,
            Choice::Int(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Call,
    Branch,
    Assign,
    NondetChoice,
    LoopIter,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub line: u32,
    #[serde(skip)]
    pub column: u32,
    pub kind: StepKind,
    pub detail: String,
    pub choice: Option<Choice>,
    #[serde(skip)]
    pub inline_stack: Vec<InlineFrame>,
    #[serde(skip)]
    pub node: NodeId,
}

/// What a trace demonstrates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceTarget {
    Dependency(TemporalDependency),
    Assertion { node: NodeId, loc: Loc, text: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub target: TraceTarget,
    pub steps: Vec<Step>,
}

#[derive(Serialize)]
struct TraceJson<'a> {
    dep: String,
    steps: &'a [Step],
    replayable: bool,
}

impl Trace {
    /// The dependency id, or `assert@line:col` for assertion traces.
    pub fn label(&self) -> String {
        match &self.target {
            TraceTarget::Dependency(d) => d.id.clone(),
            TraceTarget::Assertion { loc, .. } => format!("assert@{loc}"),
        }
    }

    pub fn assertion_node(&self) -> Option<NodeId> {
        match &self.target {
            TraceTarget::Assertion { node, .. } => Some(*node),
            TraceTarget::Dependency(_) => None,
        }
    }

    /// The choices a replay must feed back, in order.
    pub fn choices(&self) -> Vec<Choice> {
        self.steps.iter().filter_map(|s| s.choice).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(TraceJson { dep: self.label(), steps: &self.steps, replayable: true })
            .expect("trace serialization cannot fail")
    }

    /// One step per line: `line:col  kind  detail [choice]`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let choice = match s.choice {
                Some(Choice::Bool(b)) => format!(" [choose {b}]"),
                Some(Choice::Int(v)) => format!(" [choose {v}]"),
                None => String::new(),
            };
            let kind = serde_json::to_value(s.kind).expect("kind serializes");
            out.push_str(&format!(
                "{:>3}. {}:{} {} {}{}\n",
                i + 1,
                s.line,
                s.column,
                kind.as_str().unwrap_or_default(),
                s.detail,
                choice
            ));
        }
        out
    }
}

impl Serialize for Trace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TraceJson { dep: self.label(), steps: &self.steps, replayable: true }.serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StepInfo {
    Plain,
    Outcome(bool),
    Iteration { taken: bool, count: u32 },
    Nondet(NondetId),
    Violation(usize),
    AssertFailed,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RawStep {
    pub node: NodeId,
    pub kind: StepKind,
    pub choice: Option<Choice>,
    pub info: StepInfo,
}

/// Persistent (shared-tail) list of steps, newest first.
pub(crate) type StepList = Option<Rc<StepLink>>;

#[derive(Debug)]
pub(crate) struct StepLink {
    pub step: RawStep,
    pub prev: StepList,
}

pub(crate) fn push(list: &StepList, step: RawStep) -> StepList {
    Some(Rc::new(StepLink { step, prev: list.clone() }))
}

pub(crate) fn materialize(g: &Graph, deps: &[TemporalDependency], list: &StepList) -> Vec<Step> {
    let mut raw = Vec::new();
    let mut cur = list.as_ref();
    while let Some(link) = cur {
        raw.push(link.step);
        cur = link.prev.as_ref();
    }
    raw.reverse();
    raw.iter().map(|r| describe(g, deps, r)).collect()
}

fn describe(g: &Graph, deps: &[TemporalDependency], r: &RawStep) -> Step {
    let node = g.node(r.node);
    let mut loc = node.loc;
    let cond = match &node.kind {
        NodeKind::Branch { cond_text, .. } | NodeKind::Assert { cond_text, .. } => cond_text.as_str(),
        _ => "",
    };
    let detail = match r.info {
        StepInfo::Plain => match &node.kind {
            NodeKind::Call { callee, .. } => callee.clone(),
            _ => node.text.clone(),
        },
        StepInfo::Outcome(b) => format!("{cond} -> {b}"),
        StepInfo::Iteration { taken: true, count } => format!("{cond} -> true (iteration {count})"),
        StepInfo::Iteration { taken: false, .. } => format!("{cond} -> false (loop exit)"),
        StepInfo::Nondet(id) => {
            loc = g.nondets[id.0].loc;
            format!("* at {loc}")
        }
        StepInfo::Violation(i) => {
            let d = &deps[i];
            format!("{}: {} called before {}", d.id, d.after, d.before)
        }
        StepInfo::AssertFailed => format!("assertion failed: {cond}"),
    };
    Step {
        line: loc.line,
        column: loc.column,
        kind: r.kind,
        detail,
        choice: r.choice,
        inline_stack: node.inline_stack.clone(),
        node: r.node,
    }
}
