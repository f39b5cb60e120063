//! Flat-lattice constant propagation over scalar memory cells, used to
//! discharge `assert` statements without exploring paths. Branch conditions
//! are ignored; array cells are never tracked.

use std::collections::VecDeque;

use crate::cfg::{Access, Graph, NodeId, NodeKind, Operand, Place, Shape};
use crate::lang::{eval_binary, eval_unary, BinaryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Value {
    Const(i64),
    Unknown,
}

/// `None` is an unreached program point.
type State = Option<Vec<Value>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssertionStatus {
    Proved,
    NotProved,
}

struct Analysis<'g> {
    graph: &'g Graph,
    tracked: Vec<bool>,
}

impl Analysis<'_> {
    fn cell(&self, p: &Place) -> Option<usize> {
        let v = self.graph.var(p.var);
        match (&v.shape, &p.access) {
            (Shape::Int, Access::Whole) => Some(v.base),
            (Shape::Record { .. }, Access::Field(i)) => Some(v.base + i),
            _ => None,
        }
    }

    fn eval(&self, s: &[Value], op: &Operand) -> Value {
        match op {
            Operand::Const(c) => Value::Const(*c),
            Operand::Nondet(_) => Value::Unknown,
            Operand::Load(p) => match self.cell(p) {
                Some(c) if self.tracked[c] => s[c],
                _ => Value::Unknown,
            },
            Operand::Unary(o, e) => match self.eval(s, e) {
                Value::Const(v) => Value::Const(eval_unary(*o, v)),
                Value::Unknown => Value::Unknown,
            },
            Operand::Binary(o, l, r) => {
                let l = self.eval(s, l);
                // short-circuit operators can be decided by one side
                match (o, l) {
                    (BinaryOp::And, Value::Const(0)) => return Value::Const(0),
                    (BinaryOp::Or, Value::Const(v)) if v != 0 => return Value::Const(1),
                    _ => {}
                }
                match (l, self.eval(s, r)) {
                    (Value::Const(a), Value::Const(b)) => eval_binary(*o, a, b).map_or(Value::Unknown, Value::Const),
                    _ => Value::Unknown,
                }
            }
        }
    }

    fn write(&self, s: &mut [Value], p: &Place, v: Value) {
        if let Some(c) = self.cell(p) {
            s[c] = v;
        }
    }

    fn transfer(&self, id: NodeId, mut s: Vec<Value>) -> Vec<Value> {
        match &self.graph.node(id).kind {
            NodeKind::Decl { var, init } => {
                let info = self.graph.var(*var);
                s[info.base..info.base + info.shape.cells()].fill(Value::Const(0));
                if let Some(init) = init {
                    let v = self.eval(&s, init);
                    s[info.base] = v;
                }
            }
            NodeKind::Assign { target, value } => {
                let v = self.eval(&s, value);
                self.write(&mut s, target, v);
            }
            NodeKind::Call { result: Some(place), inlined: false, .. } => self.write(&mut s, place, Value::Unknown),
            _ => {}
        }
        s
    }
}

fn join(a: &State, b: &[Value]) -> Vec<Value> {
    match a {
        None => b.to_vec(),
        Some(a) => a.iter().zip(b).map(|(x, y)| if x == y { *x } else { Value::Unknown }).collect(),
    }
}

/// Status of every `assert` node of `g`, in node order.
pub fn prove_assertions(g: &Graph) -> Vec<(NodeId, AssertionStatus)> {
    let mut tracked = vec![true; g.memory_size];
    for v in &g.vars {
        if matches!(v.shape, Shape::Array(_)) {
            tracked[v.base..v.base + v.shape.cells()].fill(false);
        }
    }
    let a = Analysis { graph: g, tracked };
    // memory starts zeroed
    let mut states: Vec<State> = vec![None; g.len()];
    states[g.entry.index()] = Some(vec![Value::Const(0); g.memory_size]);
    let mut work = VecDeque::from([g.entry]);
    while let Some(id) = work.pop_front() {
        let Some(input) = states[id.index()].clone() else { continue };
        let out = a.transfer(id, input);
        for e in &g.node(id).succs {
            let t = e.to.index();
            let next = join(&states[t], &out);
            if states[t].as_ref() != Some(&next) {
                states[t] = Some(next);
                work.push_back(e.to);
            }
        }
    }
    g.ids()
        .filter_map(|id| match &g.node(id).kind {
            NodeKind::Assert { cond, .. } => {
                let status = match &states[id.index()] {
                    None => AssertionStatus::Proved,
                    Some(s) => match a.eval(s, cond) {
                        Value::Const(v) if v != 0 => AssertionStatus::Proved,
                        _ => AssertionStatus::NotProved,
                    },
                };
                Some((id, status))
            }
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{build_cfg, CfgConfig};
    use crate::lang::parse_program;

    fn statuses(src: &str) -> Vec<AssertionStatus> {
        let c = build_cfg(&parse_program(src, "t.ecs").unwrap(), &CfgConfig::default()).unwrap();
        prove_assertions(&c.main).into_iter().map(|(_, s)| s).collect()
    }

    #[test]
    fn flag_set_on_all_paths() {
        let src = "int s = 0;\nvoid f1() { s = 1; }\nvoid main() { if (*) { f1(); } else { f1(); } assert(s == 1); }";
        assert_eq!(statuses(src), [AssertionStatus::Proved]);
    }

    #[test]
    fn flag_set_on_some_paths() {
        let src = "int s = 0;\nvoid main() { if (*) { s = 1; } assert(s == 1); }";
        assert_eq!(statuses(src), [AssertionStatus::NotProved]);
    }

    #[test]
    fn loops_reach_fixpoint() {
        let src = "int s = 0;\nvoid main() { int i = 0; while (i < 3) { assert(s == 1); s = 1; i = i + 1; } assert(s == 1); }";
        assert_eq!(statuses(src), [AssertionStatus::NotProved, AssertionStatus::NotProved]);
    }

    #[test]
    fn arrays_and_nondet_are_unknown() {
        let src = "void main() { int a[2]; a[0] = 1; assert(a[0] == 1); int x = *; assert(x == x); }";
        assert_eq!(statuses(src), [AssertionStatus::NotProved, AssertionStatus::NotProved]);
    }
}
