use std::collections::HashMap;

use super::*;
use crate::lang::{
    emit_call, emit_decl, emit_expr, emit_stmt_header, Block, CallExpr, Expr, ExprKind, FuncDef, LValue, Stmt,
    StmtKind, TypeName, VarDecl,
};

#[derive(Debug, Clone, Copy)]
struct Pending {
    from: NodeId,
    label: Option<bool>,
}

fn seq(from: NodeId) -> Pending {
    Pending { from, label: None }
}

type Preds = Vec<Pending>;

struct Frame {
    scopes: Vec<HashMap<String, VarId>>,
    result: Option<Place>,
    returns: Preds,
}

impl Frame {
    fn new(result: Option<Place>) -> Self {
        Frame { scopes: vec![HashMap::new()], result, returns: Vec::new() }
    }
}

struct Lowerer<'p> {
    program: &'p Program,
    inline: bool,
    inline_depth: usize,
    nodes: Vec<Node>,
    vars: Vec<VarInfo>,
    nondets: Vec<NondetInfo>,
    loops: usize,
    memory: usize,
    temps: usize,
    globals: HashMap<String, VarId>,
    frame: Frame,
    inline_stack: Vec<InlineFrame>,
    guards: Vec<NodeId>,
}

type Res<T> = Result<T, CfgError>;

pub(super) fn lower_function(p: &Program, f: &FuncDef, inline: bool, inline_depth: usize) -> Res<Graph> {
    let mut l = Lowerer {
        program: p,
        inline,
        inline_depth,
        nodes: Vec::new(),
        vars: Vec::new(),
        nondets: Vec::new(),
        loops: 0,
        memory: 0,
        temps: 0,
        globals: HashMap::new(),
        frame: Frame::new(None),
        inline_stack: Vec::new(),
        guards: Vec::new(),
    };
    let entry = l.add(NodeKind::Entry, f.loc, "entry".to_string(), &[]);
    let mut preds = vec![seq(entry)];
    for g in &p.globals {
        let shape = l.shape_of(&g.ty, g.array_len, g.loc)?;
        let v = l.new_var(&g.name, shape, VarKind::Global);
        if f.name == "main" {
            if let Some(init) = &g.init {
                let op = l.expr(init, &mut preds)?;
                let n = l.add(NodeKind::Decl { var: v, init: Some(op) }, g.loc, emit_decl(g), &preds);
                preds = vec![seq(n)];
            }
        }
        l.globals.insert(g.name.clone(), v);
    }
    for param in &f.params {
        let shape = match (&param.ty, param.array) {
            (_, Some(crate::lang::ArrayLen::Sized(n))) => Shape::Array(n),
            (_, Some(crate::lang::ArrayLen::Unsized)) => Shape::Array(0),
            (ty, None) => l.shape_of(ty, None, param.loc)?,
        };
        let v = l.new_var(&param.name, shape, VarKind::Param);
        l.frame.scopes[0].insert(param.name.clone(), v);
    }
    if f.ret != TypeName::Void {
        let ret = l.new_var("$ret", Shape::Int, VarKind::Temp);
        l.frame.result = Some(Place::whole(ret));
    }
    let body = f.body.as_ref().expect("only defined functions are lowered");
    let mut out = l.block(body, preds)?;
    out.append(&mut l.frame.returns);
    let exit = l.add(NodeKind::Exit, f.loc, "exit".to_string(), &out);
    let mut g = Graph {
        function: f.name.clone(),
        nodes: l.nodes,
        entry,
        exit,
        vars: l.vars,
        nondets: l.nondets,
        loop_count: l.loops,
        memory_size: l.memory,
        preds: Vec::new(),
    };
    g.finish();
    Ok(g)
}

impl Lowerer<'_> {
    fn add(&mut self, kind: NodeKind, loc: Loc, text: String, preds: &[Pending]) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            kind,
            loc,
            inline_stack: self.inline_stack.clone(),
            text,
            succs: Vec::new(),
            loop_entry: None,
            guards: self.guards.clone(),
            structurally_reachable: false,
        });
        for p in preds {
            self.connect(*p, id, false);
        }
        id
    }

    fn connect(&mut self, p: Pending, to: NodeId, back: bool) {
        self.nodes[p.from.0].succs.push(Edge { to, label: p.label, back });
    }

    fn new_var(&mut self, name: &str, shape: Shape, kind: VarKind) -> VarId {
        let id = VarId(self.vars.len());
        let base = self.memory;
        self.memory += shape.cells();
        self.vars.push(VarInfo { name: name.to_string(), shape, kind, base });
        id
    }

    fn temp(&mut self) -> VarId {
        self.temps += 1;
        let name = format!("$t{}", self.temps);
        self.new_var(&name, Shape::Int, VarKind::Temp)
    }

    fn nondet(&mut self, loc: Loc, boolean: bool) -> NondetId {
        self.nondets.push(NondetInfo { loc, boolean, observable: false });
        NondetId(self.nondets.len() - 1)
    }

    fn shape_of(&self, ty: &TypeName, array_len: Option<u32>, loc: Loc) -> Res<Shape> {
        match (ty, array_len) {
            (TypeName::Int | TypeName::UnsignedChar, None) => Ok(Shape::Int),
            (TypeName::Int | TypeName::UnsignedChar, Some(n)) => Ok(Shape::Array(n)),
            (TypeName::Struct(name), None) => {
                let r = self
                    .program
                    .record(name)
                    .ok_or_else(|| CfgError::UnknownRecord { name: name.clone(), loc })?;
                Ok(Shape::Record { name: name.clone(), fields: r.fields.iter().map(|f| f.name.clone()).collect() })
            }
            (TypeName::Struct(_), Some(_)) => {
                Err(CfgError::TypeError { message: "arrays of structs are not supported".to_string(), loc })
            }
            (TypeName::Void, _) => Err(CfgError::TypeError { message: "variables cannot be void".to_string(), loc }),
        }
    }

    fn resolve(&self, name: &str, loc: Loc) -> Res<VarId> {
        self.frame
            .scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .or_else(|| self.globals.get(name))
            .copied()
            .ok_or_else(|| CfgError::UnknownVariable { name: name.to_string(), loc })
    }

    fn declare(&mut self, name: &str, v: VarId) {
        self.frame.scopes.last_mut().expect("a scope is always open").insert(name.to_string(), v);
    }

    fn scalar(&self, name: &str, loc: Loc) -> Res<Place> {
        let v = self.resolve(name, loc)?;
        match self.vars[v.0].shape {
            Shape::Int => Ok(Place::whole(v)),
            _ => Err(CfgError::TypeError { message: format!("`{name}` is an aggregate and cannot be used as a value"), loc }),
        }
    }

    fn field(&self, base: &str, field: &str, loc: Loc) -> Res<Place> {
        let v = self.resolve(base, loc)?;
        match &self.vars[v.0].shape {
            Shape::Record { fields, .. } => match fields.iter().position(|f| f == field) {
                Some(i) => Ok(Place { var: v, access: Access::Field(i) }),
                None => Err(CfgError::UnknownField { var: base.to_string(), field: field.to_string(), loc }),
            },
            _ => Err(CfgError::TypeError { message: format!("`{base}` is not a struct"), loc }),
        }
    }

    fn indexed(&mut self, base: &str, index: &Expr, loc: Loc, preds: &mut Preds) -> Res<Place> {
        let v = self.resolve(base, loc)?;
        if !matches!(self.vars[v.0].shape, Shape::Array(_)) {
            return Err(CfgError::TypeError { message: format!("`{base}` is not an array"), loc });
        }
        let i = self.expr(index, preds)?;
        Ok(Place { var: v, access: Access::Index(Box::new(i)) })
    }

    fn lvalue(&mut self, lv: &LValue, preds: &mut Preds) -> Res<Place> {
        match lv {
            LValue::Var { name, loc } => self.scalar(name, *loc),
            LValue::Field { base, field, loc } => self.field(base, field, *loc),
            LValue::Index { base, index, loc } => self.indexed(base, index, *loc, preds),
        }
    }

    fn expr(&mut self, e: &Expr, preds: &mut Preds) -> Res<Operand> {
        Ok(match &e.kind {
            ExprKind::IntLit { value, .. } => Operand::Const(*value),
            ExprKind::Nondet => Operand::Nondet(self.nondet(e.loc, false)),
            ExprKind::Var(name) => Operand::Load(self.scalar(name, e.loc)?),
            ExprKind::Field { base, field } => Operand::Load(self.field(base, field, e.loc)?),
            ExprKind::Index { base, index } => Operand::Load(self.indexed(base, index, e.loc, preds)?),
            ExprKind::Call(c) => {
                let t = self.temp();
                self.call(c, Some(Place::whole(t)), preds)?;
                Operand::Load(Place::whole(t))
            }
            ExprKind::AddrOf(name) => {
                return Err(CfgError::TypeError {
                    message: format!("`&{name}` is only allowed as a call argument"),
                    loc: e.loc,
                })
            }
            ExprKind::Unary { op, operand } => Operand::Unary(*op, Box::new(self.expr(operand, preds)?)),
            ExprKind::Binary { op, lhs, rhs } if matches!(op, BinaryOp::And | BinaryOp::Or) && rhs.contains_call() => {
                self.short_circuit(*op, lhs, rhs, preds)?
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs, preds)?;
                let r = self.expr(rhs, preds)?;
                Operand::Binary(*op, Box::new(l), Box::new(r))
            }
        })
    }

    /// `a && f()` / `a || f()`: the call only happens when `a` does not decide.
    fn short_circuit(&mut self, op: BinaryOp, lhs: &Expr, rhs: &Expr, preds: &mut Preds) -> Res<Operand> {
        let l = self.expr(lhs, preds)?;
        let t = self.temp();
        let lhs_text = emit_expr(lhs);
        let b = self.add(
            NodeKind::Branch { cond: l, cond_text: lhs_text.clone(), loop_head: None, places: places_of(lhs) },
            lhs.loc,
            format!("if ({lhs_text})"),
            preds,
        );
        let (eval_on, decided) = if op == BinaryOp::And { (true, 0) } else { (false, 1) };
        self.guards.push(b);
        let mut rp = vec![Pending { from: b, label: Some(eval_on) }];
        let r = self.expr(rhs, &mut rp)?;
        let rhs_text = emit_expr(rhs);
        let a1 = self.add(
            NodeKind::Assign {
                target: Place::whole(t),
                value: Operand::Binary(BinaryOp::Ne, Box::new(r), Box::new(Operand::Const(0))),
            },
            rhs.loc,
            format!("({rhs_text}) != 0"),
            &rp,
        );
        let a2 = self.add(
            NodeKind::Assign { target: Place::whole(t), value: Operand::Const(decided) },
            lhs.loc,
            decided.to_string(),
            &[Pending { from: b, label: Some(!eval_on) }],
        );
        self.guards.pop();
        *preds = vec![seq(a1), seq(a2)];
        Ok(Operand::Load(Place::whole(t)))
    }

    fn is_aggregate(&self, name: &str, loc: Loc) -> bool {
        self.resolve(name, loc).is_ok_and(|v| self.vars[v.0].shape != Shape::Int)
    }

    fn call(&mut self, c: &CallExpr, result: Option<Place>, preds: &mut Preds) -> Res<()> {
        let mut args = Vec::with_capacity(c.args.len());
        for a in &c.args {
            match &a.kind {
                ExprKind::AddrOf(name) => args.push(CallArg::Ref(self.resolve(name, a.loc)?)),
                ExprKind::Var(name) if self.is_aggregate(name, a.loc) => {
                    args.push(CallArg::Ref(self.resolve(name, a.loc)?))
                }
                _ => args.push(CallArg::Value(self.expr(a, preds)?)),
            }
        }
        let def = self.program.function(&c.name).filter(|f| f.body.is_some());
        let text = emit_call(c);
        match def {
            Some(f) if self.inline => {
                if self.inline_stack.len() >= self.inline_depth {
                    return Err(CfgError::RecursionBeyondBound {
                        function: c.name.clone(),
                        depth: self.inline_depth,
                        loc: c.loc,
                    });
                }
                let node = self.add(
                    NodeKind::Call {
                        callee: c.name.clone(),
                        args: args.clone(),
                        result: result.clone(),
                        inlined: true,
                        result_nondet: None,
                    },
                    c.loc,
                    text,
                    preds,
                );
                let mut cur = vec![seq(node)];
                self.inline_stack.push(InlineFrame { callee: c.name.clone(), call_loc: c.loc });
                let saved = std::mem::replace(&mut self.frame, Frame::new(result));
                for ((param, arg), arg_expr) in f.params.iter().zip(args).zip(&c.args) {
                    match arg {
                        CallArg::Ref(v) => {
                            self.frame.scopes[0].insert(param.name.clone(), v);
                        }
                        CallArg::Value(op) => {
                            if param.is_aggregate() {
                                return Err(CfgError::TypeError {
                                    message: format!("parameter `{}` of `{}` needs an aggregate argument", param.name, f.name),
                                    loc: arg_expr.loc,
                                });
                            }
                            let v = self.new_var(&param.name, Shape::Int, VarKind::Param);
                            let n = self.add(
                                NodeKind::Assign { target: Place::whole(v), value: op },
                                arg_expr.loc,
                                format!("{} = {}", param.name, emit_expr(arg_expr)),
                                &cur,
                            );
                            cur = vec![seq(n)];
                            self.frame.scopes[0].insert(param.name.clone(), v);
                        }
                    }
                }
                let body = f.body.as_ref().expect("filtered on defined");
                let mut out = self.block(body, cur)?;
                let frame = std::mem::replace(&mut self.frame, saved);
                self.inline_stack.pop();
                out.extend(frame.returns);
                *preds = out;
            }
            _ => {
                let result_nondet = result.as_ref().map(|_| self.nondet(c.loc, false));
                let node = self.add(
                    NodeKind::Call { callee: c.name.clone(), args, result, inlined: false, result_nondet },
                    c.loc,
                    text,
                    preds,
                );
                *preds = vec![seq(node)];
            }
        }
        Ok(())
    }

    fn block(&mut self, b: &Block, mut preds: Preds) -> Res<Preds> {
        self.frame.scopes.push(HashMap::new());
        for s in &b.stmts {
            preds = self.stmt(s, preds)?;
        }
        self.frame.scopes.pop();
        Ok(preds)
    }

    fn cond(&mut self, e: &Expr, preds: &mut Preds) -> Res<Operand> {
        if e.is_nondet() {
            Ok(Operand::Nondet(self.nondet(e.loc, true)))
        } else {
            self.expr(e, preds)
        }
    }

    fn decl(&mut self, d: &VarDecl, mut preds: Preds) -> Res<Preds> {
        let shape = self.shape_of(&d.ty, d.array_len, d.loc)?;
        if shape != Shape::Int && d.init.is_some() {
            return Err(CfgError::TypeError { message: format!("aggregate `{}` cannot be initialized", d.name), loc: d.loc });
        }
        let text = emit_decl(d);
        match &d.init {
            Some(Expr { kind: ExprKind::Call(c), .. }) => {
                let v = self.new_var(&d.name, shape, VarKind::Local);
                let n = self.add(NodeKind::Decl { var: v, init: None }, d.loc, text, &preds);
                preds = vec![seq(n)];
                self.call(c, Some(Place::whole(v)), &mut preds)?;
                self.declare(&d.name, v);
            }
            Some(init) => {
                let op = self.expr(init, &mut preds)?;
                let v = self.new_var(&d.name, shape, VarKind::Local);
                let n = self.add(NodeKind::Decl { var: v, init: Some(op) }, d.loc, text, &preds);
                preds = vec![seq(n)];
                self.declare(&d.name, v);
            }
            None => {
                let v = self.new_var(&d.name, shape, VarKind::Local);
                let n = self.add(NodeKind::Decl { var: v, init: None }, d.loc, text, &preds);
                preds = vec![seq(n)];
                self.declare(&d.name, v);
            }
        }
        Ok(preds)
    }

    fn stmt(&mut self, s: &Stmt, mut preds: Preds) -> Res<Preds> {
        match &s.kind {
            StmtKind::VarDecl(d) => self.decl(d, preds),
            StmtKind::Assign { target, value } => {
                if let ExprKind::Call(c) = &value.kind {
                    let place = self.lvalue(target, &mut preds)?;
                    self.call(c, Some(place), &mut preds)?;
                    return Ok(preds);
                }
                let op = self.expr(value, &mut preds)?;
                let place = self.lvalue(target, &mut preds)?;
                let n = self.add(NodeKind::Assign { target: place, value: op }, s.loc, emit_stmt_header(s), &preds);
                Ok(vec![seq(n)])
            }
            StmtKind::Call(c) => {
                self.call(c, None, &mut preds)?;
                Ok(preds)
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let op = self.cond(cond, &mut preds)?;
                let cond_text = emit_expr(cond);
                let b = self.add(
                    NodeKind::Branch { cond: op, cond_text, loop_head: None, places: places_of(cond) },
                    s.loc,
                    emit_stmt_header(s),
                    &preds,
                );
                self.guards.push(b);
                let mut out = self.stmt(then_branch, vec![Pending { from: b, label: Some(true) }])?;
                let f = Pending { from: b, label: Some(false) };
                match else_branch {
                    Some(e) => out.extend(self.stmt(e, vec![f])?),
                    None => out.push(f),
                }
                self.guards.pop();
                Ok(out)
            }
            StmtKind::While { cond, body } => {
                let first = NodeId(self.nodes.len());
                let lp = LoopId(self.loops);
                self.loops += 1;
                let op = self.cond(cond, &mut preds)?;
                let cond_text = emit_expr(cond);
                let b = self.add(
                    NodeKind::Branch { cond: op, cond_text, loop_head: Some(lp), places: places_of(cond) },
                    s.loc,
                    emit_stmt_header(s),
                    &preds,
                );
                self.nodes[first.0].loop_entry = Some(lp);
                self.guards.push(b);
                let out = self.stmt(body, vec![Pending { from: b, label: Some(true) }])?;
                for p in out {
                    self.connect(p, first, true);
                }
                self.guards.pop();
                Ok(vec![Pending { from: b, label: Some(false) }])
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    match self.frame.result.clone() {
                        Some(place) => {
                            let op = self.expr(e, &mut preds)?;
                            let n = self.add(NodeKind::Assign { target: place, value: op }, s.loc, emit_stmt_header(s), &preds);
                            preds = vec![seq(n)];
                        }
                        None => {
                            self.expr(e, &mut preds)?;
                        }
                    }
                }
                self.frame.returns.extend(preds);
                Ok(Vec::new())
            }
            StmtKind::Assert(e) => {
                let op = self.expr(e, &mut preds)?;
                let n = self.add(
                    NodeKind::Assert { cond: op, cond_text: emit_expr(e) },
                    s.loc,
                    emit_stmt_header(s),
                    &preds,
                );
                Ok(vec![seq(n)])
            }
            StmtKind::Block(b) => self.block(b, preds),
        }
    }
}

/// Source text of the storage locations a condition reads.
fn places_of(e: &Expr) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    e.walk(&mut |e| {
        let text = match &e.kind {
            ExprKind::Var(n) => n.clone(),
            ExprKind::Field { base, field } => format!("{base}.{field}"),
            ExprKind::Index { .. } => emit_expr(e),
            _ => return,
        };
        if !out.contains(&text) {
            out.push(text);
        }
    });
    out
}
