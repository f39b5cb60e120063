//! Abstract syntax of ECS programs.
//!
//! Every node carries the `(line, column)` of its first token. Structural
//! comparison that should ignore locations goes through
//! [`Program::without_locations`].

use std::fmt;

use serde::Serialize;

/// A 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Loc {
    pub line: u32,
    pub column: u32,
}

impl Loc {
    pub const fn new(line: u32, column: u32) -> Self {
        Loc { line, column }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Radix {
    Decimal,
    Hex,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeName {
    Int,
    /// Behaves like `int`; kept distinct for linting and re-emission.
    UnsignedChar,
    Void,
    Struct(String),
}

impl TypeName {
    pub fn is_integer(&self) -> bool {
        matches!(self, TypeName::Int | TypeName::UnsignedChar)
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeName::Int => f.write_str("int"),
            TypeName::UnsignedChar => f.write_str("unsigned char"),
            TypeName::Void => f.write_str("void"),
            TypeName::Struct(name) => write!(f, "struct {name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub origin: String,
    pub records: Vec<RecordDef>,
    pub functions: Vec<FuncDef>,
    pub globals: Vec<VarDecl>,
}

impl Program {
    pub fn empty(origin: impl Into<String>) -> Self {
        Program {
            origin: origin.into(),
            records: Vec::new(),
            functions: Vec::new(),
            globals: Vec::new(),
        }
    }

    pub fn function(&self, name: &str) -> Option<&FuncDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn record(&self, name: &str) -> Option<&RecordDef> {
        self.records.iter().find(|r| r.name == name)
    }

    /// Whether `name` has a body somewhere in this program.
    pub fn is_defined(&self, name: &str) -> bool {
        self.function(name).is_some_and(|f| f.body.is_some())
    }

    /// A copy with every location reset to `0:0`, for location-blind comparison.
    pub fn without_locations(&self) -> Program {
        let mut p = self.clone();
        p.visit_locs_mut(&mut |loc| *loc = Loc::default());
        p
    }

    pub(crate) fn visit_locs_mut(&mut self, f: &mut dyn FnMut(&mut Loc)) {
        for r in &mut self.records {
            f(&mut r.loc);
            for field in &mut r.fields {
                f(&mut field.loc);
            }
        }
        for g in &mut self.globals {
            g.visit_locs_mut(f);
        }
        for func in &mut self.functions {
            f(&mut func.loc);
            for p in &mut func.params {
                f(&mut p.loc);
            }
            if let Some(body) = &mut func.body {
                body.visit_locs_mut(f);
            }
        }
    }

    /// Calls `f` on every call expression in the program, in source order.
    pub fn for_each_call(&self, f: &mut dyn FnMut(&CallExpr)) {
        for g in &self.globals {
            if let Some(init) = &g.init {
                init.for_each_call(f);
            }
        }
        for func in &self.functions {
            if let Some(body) = &func.body {
                for s in &body.stmts {
                    s.for_each_call(f);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDef {
    pub name: String,
    pub fields: Vec<FieldDef>,
    pub loc: Loc,
}

impl RecordDef {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDef {
    pub ty: TypeName,
    pub name: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub ty: TypeName,
    pub name: String,
    pub array_len: Option<u32>,
    pub init: Option<Expr>,
    pub loc: Loc,
}

impl VarDecl {
    fn visit_locs_mut(&mut self, f: &mut dyn FnMut(&mut Loc)) {
        f(&mut self.loc);
        if let Some(init) = &mut self.init {
            init.visit_locs_mut(f);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayLen {
    Sized(u32),
    Unsized,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub ty: TypeName,
    pub name: String,
    pub array: Option<ArrayLen>,
    pub loc: Loc,
}

impl Param {
    pub fn is_aggregate(&self) -> bool {
        self.array.is_some() || matches!(self.ty, TypeName::Struct(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncDef {
    pub ret: TypeName,
    pub name: String,
    pub params: Vec<Param>,
    /// `None` for a declaration without a body.
    pub body: Option<Block>,
    pub loc: Loc,
}

impl FuncDef {
    pub fn is_undefined(&self) -> bool {
        self.body.is_none()
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub loc: Loc,
}

impl Block {
    fn visit_locs_mut(&mut self, f: &mut dyn FnMut(&mut Loc)) {
        f(&mut self.loc);
        for s in &mut self.stmts {
            s.visit_locs_mut(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    VarDecl(VarDecl),
    Assign { target: LValue, value: Expr },
    Call(CallExpr),
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    While { cond: Expr, body: Box<Stmt> },
    Return(Option<Expr>),
    Assert(Expr),
    Block(Block),
}

impl Stmt {
    pub fn new(kind: StmtKind, loc: Loc) -> Self {
        Stmt { kind, loc }
    }

    fn visit_locs_mut(&mut self, f: &mut dyn FnMut(&mut Loc)) {
        f(&mut self.loc);
        match &mut self.kind {
            StmtKind::VarDecl(d) => d.visit_locs_mut(f),
            StmtKind::Assign { target, value } => {
                target.visit_locs_mut(f);
                value.visit_locs_mut(f);
            }
            StmtKind::Call(c) => c.visit_locs_mut(f),
            StmtKind::If { cond, then_branch, else_branch } => {
                cond.visit_locs_mut(f);
                then_branch.visit_locs_mut(f);
                if let Some(e) = else_branch {
                    e.visit_locs_mut(f);
                }
            }
            StmtKind::While { cond, body } => {
                cond.visit_locs_mut(f);
                body.visit_locs_mut(f);
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    e.visit_locs_mut(f);
                }
            }
            StmtKind::Assert(e) => e.visit_locs_mut(f),
            StmtKind::Block(b) => b.visit_locs_mut(f),
        }
    }

    /// Visits this statement and all nested statements, pre-order.
    pub fn walk(&self, f: &mut dyn FnMut(&Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                then_branch.walk(f);
                if let Some(e) = else_branch {
                    e.walk(f);
                }
            }
            StmtKind::While { body, .. } => body.walk(f),
            StmtKind::Block(b) => {
                for s in &b.stmts {
                    s.walk(f);
                }
            }
            _ => {}
        }
    }

    /// Expressions owned directly by this statement (not by nested statements).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::VarDecl(d) => d.init.iter().collect(),
            StmtKind::Assign { target, value } => {
                let mut v: Vec<&Expr> = Vec::new();
                if let LValue::Index { index, .. } = target {
                    v.push(index);
                }
                v.push(value);
                v
            }
            StmtKind::Call(c) => c.args.iter().collect(),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Assert(e) => vec![e],
            StmtKind::Block(_) => Vec::new(),
        }
    }

    pub fn for_each_call(&self, f: &mut dyn FnMut(&CallExpr)) {
        self.walk(&mut |s| {
            if let StmtKind::Call(c) = &s.kind {
                f(c);
                for a in &c.args {
                    a.for_each_call(f);
                }
            } else {
                for e in s.own_exprs() {
                    e.for_each_call(f);
                }
            }
        });
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Var { name: String, loc: Loc },
    Field { base: String, field: String, loc: Loc },
    Index { base: String, index: Box<Expr>, loc: Loc },
}

impl LValue {
    pub fn root(&self) -> &str {
        match self {
            LValue::Var { name, .. } => name,
            LValue::Field { base, .. } | LValue::Index { base, .. } => base,
        }
    }

    pub fn loc(&self) -> Loc {
        match self {
            LValue::Var { loc, .. } | LValue::Field { loc, .. } | LValue::Index { loc, .. } => *loc,
        }
    }

    fn visit_locs_mut(&mut self, f: &mut dyn FnMut(&mut Loc)) {
        match self {
            LValue::Var { loc, .. } | LValue::Field { loc, .. } => f(loc),
            LValue::Index { index, loc, .. } => {
                f(loc);
                index.visit_locs_mut(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallExpr {
    pub name: String,
    pub args: Vec<Expr>,
    pub loc: Loc,
}

impl CallExpr {
    fn visit_locs_mut(&mut self, f: &mut dyn FnMut(&mut Loc)) {
        f(&mut self.loc);
        for a in &mut self.args {
            a.visit_locs_mut(f);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Not => "!",
            UnaryOp::Neg => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Div | BinaryOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge
        )
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Div | BinaryOp::Rem)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    IntLit { value: i64, radix: Radix },
    /// The nondeterministic choice `*`.
    Nondet,
    Var(String),
    Field { base: String, field: String },
    Index { base: String, index: Box<Expr> },
    Call(CallExpr),
    /// `&x`; only legal as a call argument.
    AddrOf(String),
    Unary { op: UnaryOp, operand: Box<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Loc) -> Self {
        Expr { kind, loc }
    }

    pub fn is_nondet(&self) -> bool {
        matches!(self.kind, ExprKind::Nondet)
    }

    fn visit_locs_mut(&mut self, f: &mut dyn FnMut(&mut Loc)) {
        f(&mut self.loc);
        match &mut self.kind {
            ExprKind::Index { index, .. } => index.visit_locs_mut(f),
            ExprKind::Call(c) => c.visit_locs_mut(f),
            ExprKind::Unary { operand, .. } => operand.visit_locs_mut(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.visit_locs_mut(f);
                rhs.visit_locs_mut(f);
            }
            _ => {}
        }
    }

    /// Visits this expression and every sub-expression, pre-order.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Index { index, .. } => index.walk(f),
            ExprKind::Call(c) => {
                for a in &c.args {
                    a.walk(f);
                }
            }
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            _ => {}
        }
    }

    pub fn for_each_call(&self, f: &mut dyn FnMut(&CallExpr)) {
        self.walk(&mut |e| {
            if let ExprKind::Call(c) = &e.kind {
                f(c);
            }
        });
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e.kind, ExprKind::Call(_)));
        found
    }

    /// Folds the expression if it mentions no variables, calls or `*`.
    pub fn const_value(&self) -> Option<i64> {
        match &self.kind {
            ExprKind::IntLit { value, .. } => Some(*value),
            ExprKind::Unary { op, operand } => {
                let v = operand.const_value()?;
                Some(eval_unary(*op, v))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = lhs.const_value()?;
                let r = rhs.const_value()?;
                eval_binary(*op, l, r)
            }
            _ => None,
        }
    }
}

pub fn eval_unary(op: UnaryOp, v: i64) -> i64 {
    match op {
        UnaryOp::Not => (v == 0) as i64,
        UnaryOp::Neg => v.wrapping_neg(),
    }
}

/// Integer semantics shared by every evaluator. `None` on division by zero.
pub fn eval_binary(op: BinaryOp, l: i64, r: i64) -> Option<i64> {
    Some(match op {
        BinaryOp::Add => l.wrapping_add(r),
        BinaryOp::Sub => l.wrapping_sub(r),
        BinaryOp::Div => {
            if r == 0 {
                return None;
            }
            l.wrapping_div(r)
        }
        BinaryOp::Rem => {
            if r == 0 {
                return None;
            }
            l.wrapping_rem(r)
        }
        BinaryOp::Eq => (l == r) as i64,
        BinaryOp::Ne => (l != r) as i64,
        BinaryOp::Lt => (l < r) as i64,
        BinaryOp::Le => (l <= r) as i64,
        BinaryOp::Gt => (l > r) as i64,
        BinaryOp::Ge => (l >= r) as i64,
        BinaryOp::And => (l != 0 && r != 0) as i64,
        BinaryOp::Or => (l != 0 || r != 0) as i64,
    })
}
