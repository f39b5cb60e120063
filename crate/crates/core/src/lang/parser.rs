use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ProgramError};

/// Parses ECS source text into a [`Program`].
///
/// Declarations and a later definition of the same function are merged into a
/// single [`FuncDef`] at the position of the first occurrence.
pub fn parse_program(source: &str, origin: &str) -> Result<Program, ProgramError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut program = Program::empty(origin);
    let mut func_index: HashMap<String, usize> = HashMap::new();
    while !parser.at(&Tok::Eof) {
        match parser.item()? {
            Item::Record(r) => {
                if program.record(&r.name).is_some() {
                    return Err(ProgramError::DuplicateDefinition { kind: "struct", name: r.name, loc: r.loc });
                }
                program.records.push(r);
            }
            Item::Global(g) => {
                if program.globals.iter().any(|o| o.name == g.name) {
                    return Err(ProgramError::DuplicateDefinition { kind: "variable", name: g.name, loc: g.loc });
                }
                program.globals.push(g);
            }
            Item::Func(f) => match func_index.get(&f.name) {
                Some(&i) => merge_function(&mut program.functions[i], f)?,
                None => {
                    func_index.insert(f.name.clone(), program.functions.len());
                    program.functions.push(f);
                }
            },
        }
    }
    check_arities(&program)?;
    Ok(program)
}

pub(crate) fn merge_function(existing: &mut FuncDef, incoming: FuncDef) -> Result<(), ProgramError> {
    if existing.body.is_some() && incoming.body.is_some() {
        return Err(ProgramError::DuplicateDefinition {
            kind: "function",
            name: incoming.name,
            loc: incoming.loc,
        });
    }
    if existing.arity() != incoming.arity() {
        return Err(ProgramError::ArityMismatch {
            expected: existing.arity(),
            found: incoming.arity(),
            callee: incoming.name,
            loc: incoming.loc,
        });
    }
    if existing.ret != incoming.ret {
        return Err(ProgramError::DuplicateDefinition {
            kind: "function (conflicting return type)",
            name: incoming.name,
            loc: incoming.loc,
        });
    }
    if incoming.body.is_some() {
        existing.params = incoming.params;
        existing.body = incoming.body;
    }
    Ok(())
}

/// Every call to a declared or defined function must pass the declared
/// number of arguments.
pub(crate) fn check_arities(program: &Program) -> Result<(), ProgramError> {
    let mut err = None;
    program.for_each_call(&mut |call| {
        if err.is_some() {
            return;
        }
        if let Some(f) = program.function(&call.name) {
            if f.arity() != call.args.len() {
                err = Some(ProgramError::ArityMismatch {
                    callee: call.name.clone(),
                    expected: f.arity(),
                    found: call.args.len(),
                    loc: call.loc,
                });
            }
        }
    });
    err.map_or(Ok(()), Err)
}

enum Item {
    Record(RecordDef),
    Global(VarDecl),
    Func(FuncDef),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn loc(&self) -> Loc {
        self.tokens[self.pos].loc
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().describe();
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        let message = format!("expected {}, found {}", expected.join(" or "), found);
        ParseError::new(self.loc(), expected, found, message)
    }

    fn expect(&mut self, t: Tok) -> PResult<Loc> {
        if self.at(&t) {
            Ok(self.bump().loc)
        } else {
            Err(self.error(&[&format!("`{}`", t.spelling())]))
        }
    }

    fn ident(&mut self) -> PResult<(String, Loc)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let loc = self.bump().loc;
                Ok((name, loc))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn starts_type(&self) -> bool {
        matches!(self.peek(), Tok::IntKw | Tok::Unsigned | Tok::Void | Tok::Struct)
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        match self.peek() {
            Tok::IntKw => {
                self.bump();
                Ok(TypeName::Int)
            }
            Tok::Unsigned => {
                self.bump();
                self.expect(Tok::Char)?;
                Ok(TypeName::UnsignedChar)
            }
            Tok::Void => {
                self.bump();
                Ok(TypeName::Void)
            }
            Tok::Struct => {
                self.bump();
                let (name, _) = self.ident()?;
                Ok(TypeName::Struct(name))
            }
            _ => Err(self.error(&["type"])),
        }
    }

    fn array_len(&mut self) -> PResult<u32> {
        match self.peek().clone() {
            Tok::Int { value, .. } if value > 0 && value <= u32::MAX as i64 => {
                self.bump();
                Ok(value as u32)
            }
            _ => Err(self.error(&["positive array length"])),
        }
    }

    fn item(&mut self) -> PResult<Item> {
        let start = self.loc();
        if self.at(&Tok::Struct) && matches!(self.peek_at(2), Tok::LBrace) {
            return self.record_def().map(Item::Record);
        }
        if !self.starts_type() {
            return Err(self.error(&["declaration"]));
        }
        let ty = self.type_name()?;
        let (name, _) = self.ident()?;
        if self.at(&Tok::LParen) {
            return self.function_rest(ty, name, start).map(Item::Func);
        }
        self.var_decl_rest(ty, name, start).map(Item::Global)
    }

    fn record_def(&mut self) -> PResult<RecordDef> {
        let loc = self.expect(Tok::Struct)?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut fields = Vec::new();
        while !self.at(&Tok::RBrace) {
            let floc = self.loc();
            let ty = match self.peek() {
                Tok::IntKw | Tok::Unsigned => self.type_name()?,
                _ => return Err(self.error(&["`int`", "`unsigned char`", "`}`"])),
            };
            let (fname, _) = self.ident()?;
            self.expect(Tok::Semi)?;
            if fields.iter().any(|f: &FieldDef| f.name == fname) {
                return Err(ParseError::new(
                    floc,
                    vec!["unique field name".into()],
                    format!("`{fname}`"),
                    format!("duplicate field `{fname}` in struct `{name}`"),
                ));
            }
            fields.push(FieldDef { ty, name: fname, loc: floc });
        }
        self.expect(Tok::RBrace)?;
        self.expect(Tok::Semi)?;
        Ok(RecordDef { name, fields, loc })
    }

    fn function_rest(&mut self, ret: TypeName, name: String, loc: Loc) -> PResult<FuncDef> {
        if matches!(ret, TypeName::Struct(_)) {
            return Err(ParseError::new(
                loc,
                vec!["`int`, `unsigned char` or `void` return type".into()],
                ret.to_string(),
                "functions cannot return records",
            ));
        }
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if self.at(&Tok::Void) && matches!(self.peek_at(1), Tok::RParen) {
            self.bump();
        } else if !self.at(&Tok::RParen) {
            loop {
                let ploc = self.loc();
                let ty = self.type_name()?;
                if ty == TypeName::Void {
                    return Err(ParseError::new(ploc, vec!["parameter type".into()], "`void`", "void parameter"));
                }
                let (pname, _) = self.ident()?;
                let array = if self.eat(&Tok::LBracket) {
                    if self.eat(&Tok::RBracket) {
                        Some(ArrayLen::Unsized)
                    } else {
                        let n = self.array_len()?;
                        self.expect(Tok::RBracket)?;
                        Some(ArrayLen::Sized(n))
                    }
                } else {
                    None
                };
                params.push(Param { ty, name: pname, array, loc: ploc });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let body = if self.eat(&Tok::Semi) { None } else { Some(self.block()?) };
        Ok(FuncDef { ret, name, params, body, loc })
    }

    fn var_decl_rest(&mut self, ty: TypeName, name: String, loc: Loc) -> PResult<VarDecl> {
        if ty == TypeName::Void {
            return Err(ParseError::new(loc, vec!["variable type".into()], "`void`", "variables cannot be void"));
        }
        let array_len = if self.eat(&Tok::LBracket) {
            let n = self.array_len()?;
            self.expect(Tok::RBracket)?;
            Some(n)
        } else {
            None
        };
        let init = if self.eat(&Tok::Assign) {
            if array_len.is_some() || matches!(ty, TypeName::Struct(_)) {
                return Err(self.error(&["`;`"]));
            }
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        Ok(VarDecl { ty, name, array_len, init, loc })
    }

    fn block(&mut self) -> PResult<Block> {
        let loc = self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.at(&Tok::RBrace) {
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(Block { stmts, loc })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let kind = match self.peek().clone() {
            Tok::LBrace => StmtKind::Block(self.block()?),
            Tok::IntKw | Tok::Unsigned | Tok::Struct => {
                let ty = self.type_name()?;
                let (name, _) = self.ident()?;
                StmtKind::VarDecl(self.var_decl_rest(ty, name, loc)?)
            }
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_branch = Box::new(self.stmt()?);
                let else_branch = if self.eat(&Tok::Else) { Some(Box::new(self.stmt()?)) } else { None };
                StmtKind::If { cond, then_branch, else_branch }
            }
            Tok::While => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                StmtKind::While { cond, body: Box::new(self.stmt()?) }
            }
            Tok::Return => {
                self.bump();
                let value = if self.at(&Tok::Semi) { None } else { Some(self.expr()?) };
                self.expect(Tok::Semi)?;
                StmtKind::Return(value)
            }
            Tok::Assert => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StmtKind::Assert(cond)
            }
            Tok::Ident(name) => {
                if matches!(self.peek_at(1), Tok::LParen) {
                    let call = self.call()?;
                    self.expect(Tok::Semi)?;
                    StmtKind::Call(call)
                } else {
                    let target = self.lvalue(name)?;
                    self.expect(Tok::Assign)?;
                    let value = self.expr()?;
                    self.expect(Tok::Semi)?;
                    StmtKind::Assign { target, value }
                }
            }
            _ => return Err(self.error(&["statement"])),
        };
        Ok(Stmt { kind, loc })
    }

    fn lvalue(&mut self, name: String) -> PResult<LValue> {
        let loc = self.bump().loc;
        if self.eat(&Tok::Dot) {
            let (field, _) = self.ident()?;
            Ok(LValue::Field { base: name, field, loc })
        } else if self.eat(&Tok::LBracket) {
            let index = self.expr()?;
            self.expect(Tok::RBracket)?;
            Ok(LValue::Index { base: name, index: Box::new(index), loc })
        } else {
            Ok(LValue::Var { name, loc })
        }
    }

    fn call(&mut self) -> PResult<CallExpr> {
        let (name, loc) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                if self.at(&Tok::Amp) {
                    let aloc = self.bump().loc;
                    let (var, _) = self.ident()?;
                    args.push(Expr::new(ExprKind::AddrOf(var), aloc));
                } else {
                    args.push(self.expr()?);
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(CallExpr { name, args, loc })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        Some(match self.peek() {
            Tok::OrOr => BinaryOp::Or,
            Tok::AndAnd => BinaryOp::And,
            Tok::EqEq => BinaryOp::Eq,
            Tok::NotEq => BinaryOp::Ne,
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            Tok::Plus => BinaryOp::Add,
            Tok::Minus => BinaryOp::Sub,
            Tok::Slash => BinaryOp::Div,
            Tok::Percent => BinaryOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op().filter(|op| op.precedence() >= min_prec) {
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            let loc = lhs.loc;
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, loc);
        }
        if self.at(&Tok::Star) {
            // `*` is only ever a nondeterministic choice, never multiplication.
            return Err(self.error(&["operator", "`)`", "`;`"]));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let op = match self.peek() {
            Tok::Bang => UnaryOp::Not,
            Tok::Minus => UnaryOp::Neg,
            _ => return self.primary(),
        };
        self.bump();
        let operand = self.unary()?;
        Ok(Expr::new(ExprKind::Unary { op, operand: Box::new(operand) }, loc))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Int { value, radix } => {
                self.bump();
                Ok(Expr::new(ExprKind::IntLit { value, radix }, loc))
            }
            Tok::Star => {
                self.bump();
                Ok(Expr::new(ExprKind::Nondet, loc))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if matches!(self.peek_at(1), Tok::LParen) {
                    let call = self.call()?;
                    return Ok(Expr::new(ExprKind::Call(call), loc));
                }
                self.bump();
                if self.eat(&Tok::Dot) {
                    let (field, _) = self.ident()?;
                    Ok(Expr::new(ExprKind::Field { base: name, field }, loc))
                } else if self.eat(&Tok::LBracket) {
                    let index = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    Ok(Expr::new(ExprKind::Index { base: name, index: Box::new(index) }, loc))
                } else {
                    Ok(Expr::new(ExprKind::Var(name), loc))
                }
            }
            Tok::Amp => Err(ParseError::new(
                loc,
                vec!["expression".into()],
                "`&`",
                "`&` is only allowed on a call argument",
            )),
            _ => Err(self.error(&["expression"])),
        }
    }
}

/// Parses a single expression; used by tests and the spec tooling.
pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let e = parser.expr()?;
    if !parser.at(&Tok::Eof) {
        return Err(parser.error(&["end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SKELETON: &str = "void main()\n{\n  HAL_Init();\n  HAL_UART_Receive(*);\n  HAL_SPI_Transmit(*);\n}\n";

    #[test]
    fn skeleton_shape() {
        let p = parse_program(SKELETON, "skeleton.ecs").unwrap();
        assert_eq!(p.functions.len(), 1);
        let body = p.functions[0].body.as_ref().unwrap();
        assert_eq!(body.stmts.len(), 3);
        let mut nondets = 0;
        for s in &body.stmts {
            assert!(matches!(s.kind, StmtKind::Call(_)));
            for e in s.own_exprs() {
                e.walk(&mut |e| nondets += e.is_nondet() as usize);
            }
        }
        assert_eq!(nondets, 2);
    }

    #[test]
    fn empty_source_is_valid() {
        let p = parse_program("", "empty.ecs").unwrap();
        assert!(p.functions.is_empty());
    }

    #[test]
    fn missing_statement_reports_brace() {
        let err = parse_program("void main() { if (*) }", "bad.ecs").unwrap_err();
        let ProgramError::Parse(e) = err else { panic!("expected parse error") };
        assert_eq!(e.loc, Loc::new(1, 22));
        assert_eq!(e.expected, vec!["statement".to_string()]);
    }

    #[test]
    fn multiplication_is_rejected() {
        assert!(parse_program("void main() { int x = 2 * 3; }", "m.ecs").is_err());
        assert!(parse_expr("a * b").is_err());
    }

    #[test]
    fn addr_of_outside_call_is_rejected() {
        assert!(parse_program("void main() { int x; int y = &x; }", "a.ecs").is_err());
        assert!(parse_program("void main() { int x; f(&x); }", "a.ecs").is_ok());
    }

    #[test]
    fn declaration_then_definition_merges() {
        let p = parse_program("int f(int a);\nvoid main() { f(1); }\nint f(int a) { return a; }", "m.ecs").unwrap();
        assert_eq!(p.functions.len(), 2);
        assert!(p.is_defined("f"));
        assert_eq!(p.functions[0].name, "f");
    }

    #[test]
    fn duplicate_definition() {
        let err = parse_program("void f() {}\nvoid f() {}", "d.ecs").unwrap_err();
        assert!(matches!(err, ProgramError::DuplicateDefinition { .. }));
        let err = parse_program("struct s { int a; };\nstruct s { int b; };", "d.ecs").unwrap_err();
        assert!(matches!(err, ProgramError::DuplicateDefinition { .. }));
    }

    #[test]
    fn arity_mismatch() {
        let err = parse_program("void f(int a);\nvoid main() { f(); }", "a.ecs").unwrap_err();
        assert!(matches!(err, ProgramError::ArityMismatch { expected: 1, found: 0, .. }));
        // undeclared callees are not checked here
        assert!(parse_program("void main() { g(); g(1); }", "a.ecs").is_ok());
    }

    #[test]
    fn undefined_flag() {
        let p = parse_program("int HAL_Init();\nvoid main() { HAL_Init(); }", "u.ecs").unwrap();
        assert!(p.function("HAL_Init").unwrap().is_undefined());
        assert!(!p.function("main").unwrap().is_undefined());
    }

    #[test]
    fn precedence() {
        let e = parse_expr("a + 1 < b || !c && d == 0x1").unwrap();
        let ExprKind::Binary { op: BinaryOp::Or, lhs, rhs } = e.kind else { panic!() };
        assert!(matches!(lhs.kind, ExprKind::Binary { op: BinaryOp::Lt, .. }));
        assert!(matches!(rhs.kind, ExprKind::Binary { op: BinaryOp::And, .. }));
    }

    #[test]
    fn subtraction_is_left_associative() {
        let e = parse_expr("10 - 3 - 2").unwrap();
        assert_eq!(e.const_value(), Some(5));
    }
}
