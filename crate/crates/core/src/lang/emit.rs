//! Canonical ECS source emission: 4-space indent, one statement per line.

use super::ast::*;

const INDENT: &str = "    ";

/// Renders a program as ECS source that re-parses to the same AST.
pub fn emit_source(p: &Program) -> String {
    let mut items: Vec<String> = Vec::new();
    for r in &p.records {
        let mut s = format!("struct {} {{\n", r.name);
        for f in &r.fields {
            s.push_str(&format!("{INDENT}{} {};\n", f.ty, f.name));
        }
        s.push_str("};\n");
        items.push(s);
    }
    if !p.globals.is_empty() {
        let mut s = String::new();
        for g in &p.globals {
            s.push_str(&emit_decl(g));
            s.push('\n');
        }
        items.push(s);
    }
    for f in &p.functions {
        items.push(emit_function(f));
    }
    items.join("\n")
}

pub fn emit_function(f: &FuncDef) -> String {
    let params: Vec<String> = f.params.iter().map(emit_param).collect();
    let header = format!("{} {}({})", f.ret, f.name, params.join(", "));
    match &f.body {
        None => format!("{header};\n"),
        Some(body) => {
            let mut lines = vec![header, "{".to_string()];
            for s in &body.stmts {
                emit_stmt(s, 1, &mut lines);
            }
            lines.push("}".to_string());
            let mut out = lines.join("\n");
            out.push('\n');
            out
        }
    }
}

fn emit_param(p: &Param) -> String {
    match p.array {
        None => format!("{} {}", p.ty, p.name),
        Some(ArrayLen::Unsized) => format!("{} {}[]", p.ty, p.name),
        Some(ArrayLen::Sized(n)) => format!("{} {}[{n}]", p.ty, p.name),
    }
}

pub fn emit_decl(d: &VarDecl) -> String {
    let mut s = format!("{} {}", d.ty, d.name);
    if let Some(n) = d.array_len {
        s.push_str(&format!("[{n}]"));
    }
    if let Some(init) = &d.init {
        s.push_str(" = ");
        s.push_str(&emit_expr(init));
    }
    s.push(';');
    s
}

fn pad(depth: usize) -> String {
    INDENT.repeat(depth)
}

/// Renders a statement that fits on one line (everything except compound
/// statements, for which only the header is produced).
pub fn emit_stmt_header(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::VarDecl(d) => emit_decl(d),
        StmtKind::Assign { target, value } => format!("{} = {};", emit_lvalue(target), emit_expr(value)),
        StmtKind::Call(c) => format!("{};", emit_call(c)),
        StmtKind::If { cond, .. } => format!("if ({})", emit_expr(cond)),
        StmtKind::While { cond, .. } => format!("while ({})", emit_expr(cond)),
        StmtKind::Return(None) => "return;".to_string(),
        StmtKind::Return(Some(e)) => format!("return {};", emit_expr(e)),
        StmtKind::Assert(e) => format!("assert({});", emit_expr(e)),
        StmtKind::Block(_) => "{".to_string(),
    }
}

fn emit_stmt(s: &Stmt, depth: usize, out: &mut Vec<String>) {
    match &s.kind {
        StmtKind::If { then_branch, else_branch, .. } => {
            emit_if(s, then_branch, else_branch.as_deref(), depth, String::new(), out)
        }
        StmtKind::While { body, .. } => emit_body(format!("{}{}", pad(depth), emit_stmt_header(s)), body, depth, out),
        StmtKind::Block(b) => {
            out.push(format!("{}{{", pad(depth)));
            for inner in &b.stmts {
                emit_stmt(inner, depth + 1, out);
            }
            out.push(format!("{}}}", pad(depth)));
        }
        _ => out.push(format!("{}{}", pad(depth), emit_stmt_header(s))),
    }
}

/// `prefix` is prepended to the `if` keyword, used for `} else if`.
fn emit_if(s: &Stmt, then_branch: &Stmt, else_branch: Option<&Stmt>, depth: usize, prefix: String, out: &mut Vec<String>) {
    let header = if prefix.is_empty() {
        format!("{}{}", pad(depth), emit_stmt_header(s))
    } else {
        format!("{prefix}{}", emit_stmt_header(s))
    };
    emit_body(header, then_branch, depth, out);
    let Some(els) = else_branch else { return };
    let then_is_block = matches!(then_branch.kind, StmtKind::Block(_));
    let else_lead = if then_is_block {
        out.pop();
        format!("{}}} else", pad(depth))
    } else {
        format!("{}else", pad(depth))
    };
    match &els.kind {
        StmtKind::If { then_branch, else_branch, .. } => {
            emit_if(els, then_branch, else_branch.as_deref(), depth, format!("{else_lead} "), out)
        }
        _ => emit_body(else_lead, els, depth, out),
    }
}

fn emit_body(header: String, body: &Stmt, depth: usize, out: &mut Vec<String>) {
    match &body.kind {
        StmtKind::Block(b) => {
            out.push(format!("{header} {{"));
            for inner in &b.stmts {
                emit_stmt(inner, depth + 1, out);
            }
            out.push(format!("{}}}", pad(depth)));
        }
        _ => {
            out.push(header);
            emit_stmt(body, depth + 1, out);
        }
    }
}

pub fn emit_lvalue(l: &LValue) -> String {
    match l {
        LValue::Var { name, .. } => name.clone(),
        LValue::Field { base, field, .. } => format!("{base}.{field}"),
        LValue::Index { base, index, .. } => format!("{base}[{}]", emit_expr(index)),
    }
}

pub fn emit_call(c: &CallExpr) -> String {
    let args: Vec<String> = c.args.iter().map(emit_expr).collect();
    format!("{}({})", c.name, args.join(", "))
}

pub fn emit_literal(value: i64, radix: Radix) -> String {
    match radix {
        Radix::Decimal => value.to_string(),
        Radix::Hex => format!("0x{value:x}"),
    }
}

pub fn emit_expr(e: &Expr) -> String {
    emit_prec(e, 0)
}

const UNARY_PREC: u8 = 7;

fn emit_prec(e: &Expr, min: u8) -> String {
    match &e.kind {
        ExprKind::IntLit { value, radix } => emit_literal(*value, *radix),
        ExprKind::Nondet => "*".to_string(),
        ExprKind::Var(name) => name.clone(),
        ExprKind::Field { base, field } => format!("{base}.{field}"),
        ExprKind::Index { base, index } => format!("{base}[{}]", emit_expr(index)),
        ExprKind::Call(c) => emit_call(c),
        ExprKind::AddrOf(name) => format!("&{name}"),
        ExprKind::Unary { op, operand } => {
            let inner = emit_prec(operand, UNARY_PREC);
            // keep `- -x` from gluing into something that reads like `--x`
            if matches!(operand.kind, ExprKind::Unary { .. }) {
                format!("{}({inner})", op.symbol())
            } else {
                format!("{}{inner}", op.symbol())
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let s = format!("{} {} {}", emit_prec(lhs, p), op.symbol(), emit_prec(rhs, p + 1));
            if p < min {
                format!("({s})")
            } else {
                s
            }
        }
    }
}
