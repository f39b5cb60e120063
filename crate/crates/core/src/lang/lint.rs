use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LintCode {
    /// A local is read while it still holds its implicit zero value on some path.
    DefaultZeroInit,
    /// Arithmetic stored into an `unsigned char`.
    TruncationRisk,
    /// A `*` harness assignment whose variable is never read.
    UnusedHarness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lint {
    pub code: LintCode,
    pub function: String,
    pub loc: Loc,
    pub message: String,
}

/// Collects lints for every defined function, sorted by location.
pub fn lint_program(p: &Program) -> Vec<Lint> {
    let mut lints = Vec::new();
    for f in p.functions.iter().filter(|f| f.body.is_some()) {
        lint_function(p, f, &mut lints);
    }
    lints.sort_by(|a, b| (a.loc, a.code, &a.function).cmp(&(b.loc, b.code, &b.function)));
    lints
}

type Uninit = Option<BTreeSet<String>>;

struct ZeroInitScan<'a> {
    program: &'a Program,
    first_read: BTreeMap<String, Loc>,
}

impl ZeroInitScan<'_> {
    fn read(&mut self, state: &Uninit, name: &str, loc: Loc) {
        if state.as_ref().is_some_and(|s| s.contains(name)) {
            let entry = self.first_read.entry(name.to_string()).or_insert(loc);
            *entry = (*entry).min(loc);
        }
    }

    fn expr(&mut self, state: &Uninit, e: &Expr) {
        e.walk(&mut |e| match &e.kind {
            ExprKind::Var(n) | ExprKind::Field { base: n, .. } | ExprKind::Index { base: n, .. } => {
                self.read(state, n, e.loc)
            }
            _ => {}
        });
    }

    fn call(&mut self, state: &mut Uninit, c: &CallExpr) {
        for a in &c.args {
            self.expr(state, a);
        }
        if self.program.is_defined(&c.name) {
            // A defined callee may write through `&x`; undefined ones leave memory alone.
            for a in &c.args {
                if let ExprKind::AddrOf(n) = &a.kind {
                    if let Some(s) = state {
                        s.remove(n);
                    }
                }
            }
        }
    }

    fn expr_calls(&mut self, state: &mut Uninit, e: &Expr) {
        let mut calls = Vec::new();
        e.for_each_call(&mut |c| calls.push(c.clone()));
        self.expr(state, e);
        for c in &calls {
            self.call(state, c);
        }
    }

    fn stmt(&mut self, state: Uninit, s: &Stmt) -> Uninit {
        let mut state = state;
        match &s.kind {
            StmtKind::VarDecl(d) => {
                if let Some(init) = &d.init {
                    self.expr_calls(&mut state, init);
                }
                if let Some(set) = &mut state {
                    if d.init.is_some() {
                        set.remove(&d.name);
                    } else {
                        set.insert(d.name.clone());
                    }
                }
                state
            }
            StmtKind::Assign { target, value } => {
                if let LValue::Index { index, .. } = target {
                    self.expr_calls(&mut state, index);
                }
                self.expr_calls(&mut state, value);
                if let Some(set) = &mut state {
                    set.remove(target.root());
                }
                state
            }
            StmtKind::Call(c) => {
                for a in &c.args {
                    let mut calls = Vec::new();
                    a.for_each_call(&mut |c| calls.push(c.clone()));
                    for inner in &calls {
                        self.call(&mut state, inner);
                    }
                }
                self.call(&mut state, c);
                state
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                self.expr_calls(&mut state, cond);
                let t = self.stmt(state.clone(), then_branch);
                let e = match else_branch {
                    Some(e) => self.stmt(state, e),
                    None => state,
                };
                union(t, e)
            }
            StmtKind::While { cond, body } => {
                let mut head = state.clone();
                loop {
                    let mut at_cond = head.clone();
                    self.expr_calls(&mut at_cond, cond);
                    let body_out = self.stmt(at_cond.clone(), body);
                    let next = union(state.clone(), body_out);
                    if next == head {
                        let mut exit = head;
                        self.expr_calls(&mut exit, cond);
                        return exit;
                    }
                    head = next;
                }
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr_calls(&mut state, e);
                }
                None
            }
            StmtKind::Assert(e) => {
                self.expr_calls(&mut state, e);
                state
            }
            StmtKind::Block(b) => {
                for inner in &b.stmts {
                    state = self.stmt(state, inner);
                }
                state
            }
        }
    }
}

fn union(a: Uninit, b: Uninit) -> Uninit {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(mut a), Some(b)) => {
            a.extend(b);
            Some(a)
        }
    }
}

fn lint_function(p: &Program, f: &FuncDef, lints: &mut Vec<Lint>) {
    let body = f.body.as_ref().expect("defined function");
    let mut scan = ZeroInitScan { program: p, first_read: BTreeMap::new() };
    let mut state: Uninit = Some(BTreeSet::new());
    for s in &body.stmts {
        state = scan.stmt(state, s);
    }
    for (name, loc) in scan.first_read {
        lints.push(Lint {
            code: LintCode::DefaultZeroInit,
            function: f.name.clone(),
            loc,
            message: format!("`{name}` is read before any assignment and holds its implicit default value 0"),
        });
    }

    let mut uchar: BTreeSet<String> = p
        .globals
        .iter()
        .filter(|g| g.ty == TypeName::UnsignedChar && g.array_len.is_none())
        .map(|g| g.name.clone())
        .collect();
    let mut reads: BTreeSet<String> = BTreeSet::new();
    let mut harness_writes: Vec<(String, Loc)> = Vec::new();
    let mut locals: BTreeSet<String> = f.params.iter().map(|p| p.name.clone()).collect();
    for s in &body.stmts {
        s.walk(&mut |s| {
            for e in s.own_exprs() {
                e.walk(&mut |e| match &e.kind {
                    ExprKind::Var(n) | ExprKind::Field { base: n, .. } | ExprKind::Index { base: n, .. } => {
                        reads.insert(n.clone());
                    }
                    ExprKind::AddrOf(n) => {
                        reads.insert(n.clone());
                    }
                    _ => {}
                });
            }
            match &s.kind {
                StmtKind::VarDecl(d) => {
                    locals.insert(d.name.clone());
                    if d.ty == TypeName::UnsignedChar && d.array_len.is_none() {
                        uchar.insert(d.name.clone());
                    }
                    if let Some(init) = &d.init {
                        if d.ty == TypeName::UnsignedChar && has_arithmetic(init) {
                            lints.push(truncation(f, &d.name, d.loc));
                        }
                    }
                }
                StmtKind::Assign { target, value } => {
                    if let LValue::Var { name, .. } = target {
                        if uchar.contains(name) && has_arithmetic(value) {
                            lints.push(truncation(f, name, s.loc));
                        }
                    }
                    if value.is_nondet() {
                        harness_writes.push((target.root().to_string(), s.loc));
                    }
                }
                _ => {}
            }
        });
    }
    for (name, loc) in harness_writes {
        if locals.contains(&name) && !reads.contains(&name) {
            lints.push(Lint {
                code: LintCode::UnusedHarness,
                function: f.name.clone(),
                loc,
                message: format!("harness assignment to `{name}` has no effect: the variable is never read"),
            });
        }
    }
}

fn truncation(f: &FuncDef, name: &str, loc: Loc) -> Lint {
    Lint {
        code: LintCode::TruncationRisk,
        function: f.name.clone(),
        loc,
        message: format!("arithmetic result stored in `unsigned char` `{name}` may be truncated"),
    }
}

fn has_arithmetic(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |e| {
        if let ExprKind::Binary { op, .. } = &e.kind {
            found |= op.is_arithmetic();
        }
        if let ExprKind::Unary { op: UnaryOp::Neg, .. } = &e.kind {
            found = true;
        }
    });
    found
}
