//! Control-flow graphs: one per defined function, plus the whole-program
//! "main view" in which defined callees are inlined.
//!
//! Expressions are lowered so that node operands never contain calls; every
//! call becomes its own [`NodeKind::Call`] node, which is also the event the
//! dependency monitors and the must-analysis observe.

mod dot;
mod lower;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::lang::{BinaryOp, Loc, Program, UnaryOp};
use crate::spec::DependencySpec;

pub use dot::graph_to_dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NondetId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LoopId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CfgConfig {
    pub inline_depth: usize,
}

impl Default for CfgConfig {
    fn default() -> Self {
        CfgConfig { inline_depth: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfgError {
    #[error("the program does not define `main`")]
    MissingMain,
    #[error("{loc}: call chain through `{function}` exceeds the inline depth of {depth} (recursion is not supported)")]
    RecursionBeyondBound { function: String, depth: usize, loc: Loc },
    #[error("`{callee}` is not declared and is called with differing argument counts {arities:?}")]
    UnknownCalleeArity { callee: String, arities: Vec<usize> },
    #[error("{loc}: unknown variable `{name}`")]
    UnknownVariable { name: String, loc: Loc },
    #[error("{loc}: `{var}` has no field `{field}`")]
    UnknownField { var: String, field: String, loc: Loc },
    #[error("{loc}: unknown struct `{name}`")]
    UnknownRecord { name: String, loc: Loc },
    #[error("{loc}: {message}")]
    TypeError { message: String, loc: Loc },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Int,
    Array(u32),
    Record { name: String, fields: Vec<String> },
}

impl Shape {
    pub fn cells(&self) -> usize {
        match self {
            Shape::Int => 1,
            Shape::Array(n) => *n as usize,
            Shape::Record { fields, .. } => fields.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Global,
    Local,
    Param,
    /// Compiler-introduced storage for call results and short-circuit values.
    Temp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub shape: Shape,
    pub kind: VarKind,
    /// Offset of the first cell in the flat memory.
    pub base: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Access {
    Whole,
    Field(usize),
    Index(Box<Operand>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub var: VarId,
    pub access: Access,
}

impl Place {
    pub fn whole(var: VarId) -> Self {
        Place { var, access: Access::Whole }
    }
}

/// A call-free expression over resolved storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Const(i64),
    Nondet(NondetId),
    Load(Place),
    Unary(UnaryOp, Box<Operand>),
    Binary(BinaryOp, Box<Operand>, Box<Operand>),
}

impl Operand {
    /// Value of an operand built only from constants.
    pub fn const_value(&self) -> Option<i64> {
        match self {
            Operand::Const(v) => Some(*v),
            Operand::Unary(op, e) => Some(crate::lang::eval_unary(*op, e.const_value()?)),
            Operand::Binary(op, l, r) => crate::lang::eval_binary(*op, l.const_value()?, r.const_value()?),
            _ => None,
        }
    }

    /// Calls `f` on every nondet in evaluation order.
    pub fn for_each_nondet(&self, f: &mut dyn FnMut(NondetId)) {
        match self {
            Operand::Const(_) => {}
            Operand::Nondet(id) => f(*id),
            Operand::Load(p) => p.for_each_nondet(f),
            Operand::Unary(_, e) => e.for_each_nondet(f),
            Operand::Binary(_, l, r) => {
                l.for_each_nondet(f);
                r.for_each_nondet(f);
            }
        }
    }

    /// Sub-operands whose value can make evaluation fault: array indices
    /// and divisors.
    pub fn fault_operands(&self) -> Vec<&Operand> {
        let mut out = Vec::new();
        self.collect_fault_operands(&mut out);
        out
    }

    fn collect_fault_operands<'a>(&'a self, out: &mut Vec<&'a Operand>) {
        match self {
            Operand::Const(_) | Operand::Nondet(_) => {}
            Operand::Load(p) => {
                if let Access::Index(i) = &p.access {
                    out.push(i);
                    i.collect_fault_operands(out);
                }
            }
            Operand::Unary(_, e) => e.collect_fault_operands(out),
            Operand::Binary(op, l, r) => {
                if matches!(op, BinaryOp::Div | BinaryOp::Rem) {
                    out.push(r);
                }
                l.collect_fault_operands(out);
                r.collect_fault_operands(out);
            }
        }
    }

    pub fn for_each_load(&self, f: &mut dyn FnMut(&Place)) {
        match self {
            Operand::Const(_) | Operand::Nondet(_) => {}
            Operand::Load(p) => {
                f(p);
                if let Access::Index(i) = &p.access {
                    i.for_each_load(f);
                }
            }
            Operand::Unary(_, e) => e.for_each_load(f),
            Operand::Binary(_, l, r) => {
                l.for_each_load(f);
                r.for_each_load(f);
            }
        }
    }
}

impl Place {
    pub fn for_each_nondet(&self, f: &mut dyn FnMut(NondetId)) {
        if let Access::Index(i) = &self.access {
            i.for_each_nondet(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallArg {
    Value(Operand),
    /// `&x`: the callee sees the caller's storage.
    Ref(VarId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Entry,
    Exit,
    /// Declaration: zero the variable, then apply the initializer if any.
    Decl { var: VarId, init: Option<Operand> },
    Assign { target: Place, value: Operand },
    /// A call event. Inlined callees continue with their parameter bindings
    /// and body; opaque callees return `result_nondet` into `result`.
    Call {
        callee: String,
        args: Vec<CallArg>,
        result: Option<Place>,
        inlined: bool,
        result_nondet: Option<NondetId>,
    },
    /// Two successors labelled `true` and `false`.
    Branch {
        cond: Operand,
        cond_text: String,
        loop_head: Option<LoopId>,
        /// Source text of the places the condition reads.
        places: Vec<String>,
    },
    Assert { cond: Operand, cond_text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub to: NodeId,
    pub label: Option<bool>,
    /// Closes a loop iteration.
    pub back: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InlineFrame {
    pub callee: String,
    pub call_loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub loc: Loc,
    pub inline_stack: Vec<InlineFrame>,
    pub text: String,
    pub succs: Vec<Edge>,
    /// Set on the first node a loop executes for each iteration check.
    pub loop_entry: Option<LoopId>,
    /// Enclosing branch nodes, outermost first.
    pub guards: Vec<NodeId>,
    pub structurally_reachable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NondetInfo {
    pub loc: Loc,
    /// A bare `*` condition: forks into the two branch outcomes.
    pub boolean: bool,
    /// The value can influence control flow or stored state that is read.
    pub observable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub function: String,
    pub nodes: Vec<Node>,
    pub entry: NodeId,
    pub exit: NodeId,
    pub vars: Vec<VarInfo>,
    pub nondets: Vec<NondetInfo>,
    pub loop_count: usize,
    pub memory_size: usize,
    preds: Vec<Vec<NodeId>>,
}

impl Graph {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn preds(&self, id: NodeId) -> &[NodeId] {
        &self.preds[id.0]
    }

    pub fn var(&self, id: VarId) -> &VarInfo {
        &self.vars[id.0]
    }

    /// Call nodes in creation (source) order.
    pub fn call_nodes(&self) -> impl Iterator<Item = (NodeId, &str)> {
        self.ids().filter_map(move |id| match &self.node(id).kind {
            NodeKind::Call { callee, .. } => Some((id, callee.as_str())),
            _ => None,
        })
    }

    /// Whether some integer-valued `*` can affect execution.
    pub fn has_observable_int_nondet(&self) -> bool {
        self.nondets.iter().any(|n| n.observable && !n.boolean)
    }

    pub fn branch_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Branch { loop_head: None, .. }))
            .count()
    }

    /// The successor along the edge labelled `label` (or the only edge).
    pub fn successor(&self, id: NodeId, label: Option<bool>) -> Option<Edge> {
        self.node(id).succs.iter().copied().find(|e| e.label == label)
    }

    /// Checks that every edge targets an existing node and that branch
    /// nodes carry exactly one `true` and one `false` edge.
    pub fn is_well_formed(&self) -> bool {
        self.nodes.iter().all(|n| {
            let targets_ok = n.succs.iter().all(|e| e.to.0 < self.nodes.len());
            let shape_ok = match &n.kind {
                NodeKind::Branch { .. } => {
                    n.succs.len() == 2
                        && n.succs.iter().filter(|e| e.label == Some(true)).count() == 1
                        && n.succs.iter().filter(|e| e.label == Some(false)).count() == 1
                }
                NodeKind::Exit => n.succs.is_empty(),
                _ => n.succs.len() == 1 && n.succs[0].label.is_none(),
            };
            targets_ok && shape_ok
        }) && self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Entry)).count() == 1
            && self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Exit)).count() == 1
    }

    fn finish(&mut self) {
        let mut preds = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for e in &n.succs {
                if !preds[e.to.0].contains(&NodeId(i)) {
                    preds[e.to.0].push(NodeId(i));
                }
            }
        }
        self.preds = preds;
        self.mark_structural_reachability();
        self.mark_observable_nondets();
    }

    /// Forward reachability that drops edges refuted by constant conditions.
    fn mark_structural_reachability(&mut self) {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([self.entry]);
        seen[self.entry.0] = true;
        while let Some(id) = queue.pop_front() {
            let node = &self.nodes[id.0];
            let fixed = match &node.kind {
                NodeKind::Branch { cond, .. } => cond.const_value().map(|v| v != 0),
                _ => None,
            };
            for e in &node.succs {
                if fixed.is_some() && e.label.is_some() && e.label != fixed {
                    continue;
                }
                if !seen[e.to.0] {
                    seen[e.to.0] = true;
                    queue.push_back(e.to);
                }
            }
        }
        for (n, s) in self.nodes.iter_mut().zip(seen) {
            n.structurally_reachable = s;
        }
    }

    /// A nondet is observable when its value can influence a branch, an
    /// assertion, a fault (index or divisor), or a variable that itself
    /// flows into one of those.
    fn mark_observable_nondets(&mut self) {
        let mut relevant: BTreeSet<VarId> = BTreeSet::new();
        let mut observable = vec![false; self.nondets.len()];
        for n in &self.nodes {
            if let NodeKind::Branch { cond, .. } | NodeKind::Assert { cond, .. } = &n.kind {
                cond.for_each_load(&mut |p| {
                    relevant.insert(p.var);
                });
                cond.for_each_nondet(&mut |id| observable[id.0] = true);
            }
            for op in evaluated_operands(&n.kind) {
                for sensitive in op.fault_operands() {
                    sensitive.for_each_load(&mut |p| {
                        relevant.insert(p.var);
                    });
                    sensitive.for_each_nondet(&mut |id| observable[id.0] = true);
                }
            }
            if let Some(place) = written_place(&n.kind) {
                if let Access::Index(i) = &place.access {
                    i.for_each_load(&mut |p| {
                        relevant.insert(p.var);
                    });
                    i.for_each_nondet(&mut |id| observable[id.0] = true);
                }
            }
        }
        loop {
            let before = relevant.len();
            for n in &self.nodes {
                let (var, value) = match &n.kind {
                    NodeKind::Decl { var, init: Some(v) } => (*var, v),
                    NodeKind::Assign { target, value } => (target.var, value),
                    _ => continue,
                };
                if relevant.contains(&var) {
                    value.for_each_load(&mut |p| {
                        relevant.insert(p.var);
                    });
                }
            }
            if relevant.len() == before {
                break;
            }
        }
        for n in &self.nodes {
            match &n.kind {
                NodeKind::Decl { var, init: Some(v) } if relevant.contains(var) => {
                    v.for_each_nondet(&mut |id| observable[id.0] = true)
                }
                NodeKind::Assign { target, value } if relevant.contains(&target.var) => {
                    value.for_each_nondet(&mut |id| observable[id.0] = true)
                }
                NodeKind::Call { result: Some(place), result_nondet: Some(id), .. } if relevant.contains(&place.var) => {
                    observable[id.0] = true
                }
                _ => {}
            }
        }
        for (info, obs) in self.nondets.iter_mut().zip(observable) {
            info.observable = obs || info.boolean;
        }
    }
}

fn written_place(kind: &NodeKind) -> Option<&Place> {
    match kind {
        NodeKind::Assign { target, .. } => Some(target),
        NodeKind::Call { result: Some(place), .. } => Some(place),
        _ => None,
    }
}

/// Operands whose value is computed when the node executes.
pub fn evaluated_operands(kind: &NodeKind) -> Vec<&Operand> {
    fn index_of<'a>(p: &'a Place, out: &mut Vec<&'a Operand>) {
        if let Access::Index(i) = &p.access {
            out.push(i);
        }
    }
    let mut out = Vec::new();
    match kind {
        NodeKind::Decl { init: Some(init), .. } => out.push(init),
        NodeKind::Assign { target, value } => {
            index_of(target, &mut out);
            out.push(value);
        }
        NodeKind::Call { args, result, inlined: false, .. } => {
            for a in args {
                if let CallArg::Value(op) = a {
                    out.push(op);
                }
            }
            if let Some(place) = result {
                index_of(place, &mut out);
            }
        }
        NodeKind::Call { result: Some(place), .. } => index_of(place, &mut out),
        NodeKind::Branch { cond, .. } | NodeKind::Assert { cond, .. } => out.push(cond),
        _ => {}
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub origin: String,
    /// Per-function graphs; calls stay opaque.
    pub functions: BTreeMap<String, Graph>,
    /// `main` with defined callees inlined.
    pub main: Graph,
    pub inline_depth: usize,
}

/// Builds the per-function graphs and the inlined main view.
pub fn build_cfg(p: &Program, config: &CfgConfig) -> Result<Cfg, CfgError> {
    if !p.is_defined("main") {
        return Err(CfgError::MissingMain);
    }
    check_undeclared_arities(p)?;
    let mut functions = BTreeMap::new();
    for f in p.functions.iter().filter(|f| f.body.is_some()) {
        let g = lower::lower_function(p, f, false, config.inline_depth)?;
        functions.insert(f.name.clone(), g);
    }
    let main_def = p.function("main").expect("checked above");
    let main = lower::lower_function(p, main_def, true, config.inline_depth)?;
    Ok(Cfg { origin: p.origin.clone(), functions, main, inline_depth: config.inline_depth })
}

fn check_undeclared_arities(p: &Program) -> Result<(), CfgError> {
    let mut arities: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    p.for_each_call(&mut |c| {
        if p.function(&c.name).is_none() {
            arities.entry(c.name.clone()).or_default().insert(c.args.len());
        }
    });
    for (callee, set) in arities {
        if set.len() > 1 {
            return Err(CfgError::UnknownCalleeArity { callee, arities: set.into_iter().collect() });
        }
    }
    Ok(())
}

/// A call node of the main view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallSite {
    #[serde(skip)]
    pub node: NodeId,
    pub callee: String,
    pub loc: Loc,
    pub inline_stack: Vec<InlineFrame>,
    pub is_spec_function: bool,
}

/// All call sites of the main view in source order.
pub fn call_sites(c: &Cfg, spec: &DependencySpec) -> Vec<CallSite> {
    c.main
        .call_nodes()
        .map(|(id, callee)| {
            let node = c.main.node(id);
            CallSite {
                node: id,
                callee: callee.to_string(),
                loc: node.loc,
                inline_stack: node.inline_stack.clone(),
                is_spec_function: spec.mentions(callee),
            }
        })
        .collect()
}
