//! Single-step execution of a graph node with a dependency monitor.

use std::collections::HashMap;

use super::trace::{push, Choice, RawStep, StepInfo, StepKind, StepList};
use crate::cfg::{Access, CallArg, Graph, NodeId, NodeKind, NondetId, Operand, Place};
use crate::lang::{eval_binary, eval_unary, BinaryOp};
use crate::spec::TemporalDependency;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Truncation {
    LoopBound,
    StepBound,
}

#[derive(Debug, Clone)]
pub(crate) struct ExecState {
    pub node: NodeId,
    pub mem: Vec<i64>,
    pub flags: Vec<bool>,
    pub loop_iters: Vec<u32>,
    pub steps: StepList,
    pub recorded: usize,
    pub step_count: u64,
    /// Choices already made for the current node, consumed in evaluation order.
    pub pending: Vec<Choice>,
}

#[derive(Debug)]
pub(crate) enum Advance {
    Continue,
    NeedChoice(Vec<Choice>),
    Exit,
    Truncated(Truncation),
    Fault(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EventKind {
    Violation(usize),
    AssertFailed(NodeId),
}

pub(crate) struct Event {
    pub kind: EventKind,
    /// The path so far, ending with the violation step.
    pub steps: StepList,
}

enum Stop {
    Need(Vec<Choice>),
    Fault(String),
}

struct Cursor<'a> {
    pending: &'a [Choice],
    pos: usize,
    used: Vec<(NondetId, Choice)>,
}

pub(crate) struct Machine<'g> {
    pub graph: &'g Graph,
    pub deps: &'g [TemporalDependency],
    after: HashMap<&'g str, Vec<usize>>,
    before: HashMap<&'g str, Vec<usize>>,
    loop_bound: u32,
    max_steps: u64,
    domain: Vec<i64>,
}

impl<'g> Machine<'g> {
    pub fn new(
        graph: &'g Graph,
        deps: &'g [TemporalDependency],
        loop_bound: u32,
        max_steps: u64,
        domain: Vec<i64>,
    ) -> Self {
        let mut after: HashMap<&str, Vec<usize>> = HashMap::new();
        let mut before: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, d) in deps.iter().enumerate() {
            after.entry(d.after.as_str()).or_default().push(i);
            before.entry(d.before.as_str()).or_default().push(i);
        }
        Machine { graph, deps, after, before, loop_bound, max_steps, domain }
    }

    pub fn initial(&self) -> ExecState {
        ExecState {
            node: self.graph.entry,
            mem: vec![0; self.graph.memory_size],
            flags: vec![false; self.deps.len()],
            loop_iters: vec![0; self.graph.loop_count],
            steps: None,
            recorded: 0,
            step_count: 0,
            pending: Vec::new(),
        }
    }

    fn nondet(&self, id: NondetId, cur: &mut Cursor) -> Result<i64, Stop> {
        let info = self.graph.nondets[id.0];
        if !info.observable {
            return Ok(0);
        }
        if let Some(&c) = cur.pending.get(cur.pos) {
            cur.pos += 1;
            cur.used.push((id, c));
            return Ok(c.value());
        }
        Err(Stop::Need(if info.boolean {
            vec![Choice::Bool(false), Choice::Bool(true)]
        } else {
            self.domain.iter().map(|&v| Choice::Int(v)).collect()
        }))
    }

    fn eval(&self, mem: &[i64], op: &Operand, cur: &mut Cursor) -> Result<i64, Stop> {
        match op {
            Operand::Const(v) => Ok(*v),
            Operand::Nondet(id) => self.nondet(*id, cur),
            Operand::Load(p) => Ok(mem[self.addr(mem, p, cur)?]),
            Operand::Unary(o, e) => Ok(eval_unary(*o, self.eval(mem, e, cur)?)),
            Operand::Binary(o, l, r) => {
                let l = self.eval(mem, l, cur)?;
                match o {
                    BinaryOp::And if l == 0 => return Ok(0),
                    BinaryOp::Or if l != 0 => return Ok(1),
                    _ => {}
                }
                let r = self.eval(mem, r, cur)?;
                eval_binary(*o, l, r).ok_or_else(|| Stop::Fault("division by zero".to_string()))
            }
        }
    }

    fn addr(&self, mem: &[i64], p: &Place, cur: &mut Cursor) -> Result<usize, Stop> {
        let v = self.graph.var(p.var);
        match &p.access {
            Access::Whole => Ok(v.base),
            Access::Field(i) => Ok(v.base + i),
            Access::Index(op) => {
                let i = self.eval(mem, op, cur)?;
                let len = v.shape.cells() as i64;
                if i < 0 || i >= len {
                    Err(Stop::Fault(format!("index {i} out of bounds for `{}` of length {len}", v.name)))
                } else {
                    Ok(v.base + i as usize)
                }
            }
        }
    }

    /// Executes the current node and moves to its successor. On
    /// `NeedChoice` the state is unchanged; push one alternative onto
    /// `pending` and call again.
    pub fn advance(&self, st: &mut ExecState, events: &mut Vec<Event>) -> Advance {
        let id = st.node;
        let node = self.graph.node(id);
        if matches!(node.kind, NodeKind::Exit) {
            return Advance::Exit;
        }
        if st.step_count >= self.max_steps {
            return Advance::Truncated(Truncation::StepBound);
        }
        let pending = std::mem::take(&mut st.pending);
        let mut cur = Cursor { pending: &pending, pos: 0, used: Vec::new() };
        let result = self.evaluate(st, &node.kind, &mut cur);
        let (writes, label, own) = match result {
            Ok(r) => r,
            Err(Stop::Need(alts)) => {
                st.pending = pending;
                return Advance::NeedChoice(alts);
            }
            Err(Stop::Fault(msg)) => return Advance::Fault(msg),
        };
        if let (NodeKind::Branch { loop_head: Some(l), .. }, Some(true)) = (&node.kind, label) {
            if st.loop_iters[l.0] >= self.loop_bound {
                return Advance::Truncated(Truncation::LoopBound);
            }
            st.loop_iters[l.0] += 1;
        }
        st.step_count += 1;

        let mut branch_choice = None;
        for (nd, c) in &cur.used {
            if self.graph.nondets[nd.0].boolean {
                branch_choice = Some(*c);
            } else {
                self.record(st, RawStep { node: id, kind: StepKind::NondetChoice, choice: Some(*c), info: StepInfo::Nondet(*nd) });
            }
        }
        for (range, value) in writes {
            for c in range.clone() {
                st.mem[c] = 0;
            }
            if let Some(v) = value {
                st.mem[range.start] = v;
            }
        }
        if let Some((kind, info)) = own {
            self.record(st, RawStep { node: id, kind, choice: branch_choice, info });
        }
        match &node.kind {
            NodeKind::Call { callee, .. } => {
                for &i in self.after.get(callee.as_str()).into_iter().flatten() {
                    if !st.flags[i] {
                        let step = RawStep { node: id, kind: StepKind::Violation, choice: None, info: StepInfo::Violation(i) };
                        events.push(Event { kind: EventKind::Violation(i), steps: push(&st.steps, step) });
                    }
                }
                for &i in self.before.get(callee.as_str()).into_iter().flatten() {
                    st.flags[i] = true;
                }
            }
            NodeKind::Assert { .. } if label == Some(false) => {
                let step = RawStep { node: id, kind: StepKind::Violation, choice: None, info: StepInfo::AssertFailed };
                events.push(Event { kind: EventKind::AssertFailed(id), steps: push(&st.steps, step) });
            }
            _ => {}
        }

        let edge_label = if matches!(node.kind, NodeKind::Branch { .. }) { label } else { None };
        let edge = self.graph.successor(id, edge_label).expect("well-formed graph");
        st.node = edge.to;
        if let Some(l) = self.graph.node(edge.to).loop_entry {
            if !edge.back {
                st.loop_iters[l.0] = 0;
            }
        }
        Advance::Continue
    }

    fn record(&self, st: &mut ExecState, step: RawStep) {
        st.steps = push(&st.steps, step);
        st.recorded += 1;
    }

    /// Computes a node's effects without touching the state.
    #[allow(clippy::type_complexity)]
    fn evaluate(
        &self,
        st: &ExecState,
        kind: &NodeKind,
        cur: &mut Cursor,
    ) -> Result<(Vec<(std::ops::Range<usize>, Option<i64>)>, Option<bool>, Option<(StepKind, StepInfo)>), Stop> {
        let mem = &st.mem;
        Ok(match kind {
            NodeKind::Entry | NodeKind::Exit => (Vec::new(), None, None),
            NodeKind::Decl { var, init } => {
                let v = match init {
                    Some(op) => Some(self.eval(mem, op, cur)?),
                    None => None,
                };
                let info = self.graph.var(*var);
                (vec![(info.base..info.base + info.shape.cells(), v)], None, Some((StepKind::Assign, StepInfo::Plain)))
            }
            NodeKind::Assign { target, value } => {
                let v = self.eval(mem, value, cur)?;
                let a = self.addr(mem, target, cur)?;
                (vec![(a..a + 1, Some(v))], None, Some((StepKind::Assign, StepInfo::Plain)))
            }
            NodeKind::Call { args, result, inlined, result_nondet, .. } => {
                let mut writes = Vec::new();
                if !inlined {
                    // evaluated for faults only; the callee ignores them
                    for a in args {
                        if let CallArg::Value(op) = a {
                            self.eval(mem, op, cur)?;
                        }
                    }
                }
                if let (false, Some(place), Some(nd)) = (inlined, result, result_nondet) {
                    let a = self.addr(mem, place, cur)?;
                    let v = self.nondet(*nd, cur)?;
                    writes.push((a..a + 1, Some(v)));
                }
                (writes, None, Some((StepKind::Call, StepInfo::Plain)))
            }
            NodeKind::Branch { cond, loop_head, .. } => {
                let taken = self.eval(mem, cond, cur)? != 0;
                let info = match loop_head {
                    Some(l) => (
                        StepKind::LoopIter,
                        StepInfo::Iteration { taken, count: st.loop_iters[l.0] + u32::from(taken) },
                    ),
                    None => (StepKind::Branch, StepInfo::Outcome(taken)),
                };
                (Vec::new(), Some(taken), Some(info))
            }
            NodeKind::Assert { cond, .. } => {
                let ok = self.eval(mem, cond, cur)? != 0;
                (Vec::new(), Some(ok), None)
            }
        })
    }
}
