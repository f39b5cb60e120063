//! Assertion encoding of temporal dependencies.
//!
//! For each dependency `before -> after` a global flag `__idcc_state_<id>` is
//! declared, set to 1 by the first statement of `before` and asserted by the
//! first statement of `after`. Undefined functions get stub bodies so that the
//! inserted statements have somewhere to live.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::lang::{
    BinaryOp, Block, Expr, ExprKind, FuncDef, LValue, Loc, Param, Program, Radix, Stmt, StmtKind, TypeName, VarDecl,
};
use crate::spec::{DependencySpec, TemporalDependency};

pub const RESERVED_PREFIX: &str = "__idcc_";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstrumentError {
    #[error("`{name}` uses the reserved prefix `__idcc_` (already instrumented?)")]
    NameClash { name: String },
    #[error("dependency `{id}`: `{}` calls `{}` itself (call chain {}), so the flag cannot be set at entry", .path[0], .path[.path.len() - 1], .path.join(" -> "))]
    OrderingParadox { id: String, path: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrumentedDependency {
    pub dep: TemporalDependency,
    pub aux_name: String,
    /// Function receiving `aux = 1;`.
    pub assign_site: String,
    /// Function receiving `assert(aux == 1);`.
    pub assert_site: String,
    /// Whether stubs had to be synthesized for (before, after).
    pub stubbed: (bool, bool),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instrumentation {
    pub program: Program,
    pub deps: Vec<InstrumentedDependency>,
}

/// Flag variable names, one per dependency in spec order. Characters not
/// allowed in identifiers become `_`; clashes get a numeric suffix.
pub fn aux_names(spec: &DependencySpec) -> Vec<String> {
    let mut used = BTreeSet::new();
    spec.deps
        .iter()
        .map(|d| {
            let base: String = d.id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
            let base = format!("{RESERVED_PREFIX}state_{base}");
            let mut name = base.clone();
            let mut n = 2;
            while !used.insert(name.clone()) {
                name = format!("{base}_{n}");
                n += 1;
            }
            name
        })
        .collect()
}

pub fn instrument(p: &Program, spec: &DependencySpec) -> Result<Program, InstrumentError> {
    instrument_detailed(p, spec).map(|i| i.program)
}

pub fn instrument_detailed(p: &Program, spec: &DependencySpec) -> Result<Instrumentation, InstrumentError> {
    if let Some(name) = reserved_names(p).into_iter().next() {
        return Err(InstrumentError::NameClash { name });
    }
    for d in &spec.deps {
        if let Some(path) = call_path(p, &d.before, &d.after) {
            return Err(InstrumentError::OrderingParadox { id: d.id.clone(), path });
        }
    }
    let mut out = p.clone();
    if spec.is_empty() {
        return Ok(Instrumentation { program: out, deps: Vec::new() });
    }
    let names = aux_names(spec);
    let arities = call_arities(p);

    let mut asserts: BTreeMap<&str, Vec<Stmt>> = BTreeMap::new();
    let mut assigns: BTreeMap<&str, Vec<Stmt>> = BTreeMap::new();
    for (d, aux) in spec.deps.iter().zip(&names) {
        asserts.entry(d.after.as_str()).or_default().push(assert_stmt(aux));
        assigns.entry(d.before.as_str()).or_default().push(assign_stmt(aux));
        out.globals.push(VarDecl {
            ty: TypeName::Int,
            name: aux.clone(),
            array_len: None,
            init: Some(int(0)),
            loc: Loc::default(),
        });
    }

    let mut stubbed: BTreeSet<String> = BTreeSet::new();
    for name in spec.functions() {
        let mut inserted: Vec<Stmt> = asserts.remove(name).unwrap_or_default();
        inserted.extend(assigns.remove(name).unwrap_or_default());
        match out.functions.iter_mut().find(|f| f.name == name) {
            Some(f) => match &mut f.body {
                Some(body) => {
                    inserted.append(&mut body.stmts);
                    body.stmts = inserted;
                }
                None => {
                    f.body = Some(stub_body(&f.ret, inserted, f.loc));
                    stubbed.insert(name.to_string());
                }
            },
            None => {
                // never called and never declared: nothing can reach it
                let Some(&arity) = arities.get(name) else { continue };
                let params = (0..arity)
                    .map(|i| Param { ty: TypeName::Int, name: format!("p{i}"), array: None, loc: Loc::default() })
                    .collect();
                out.functions.push(FuncDef {
                    ret: TypeName::Int,
                    name: name.to_string(),
                    params,
                    body: Some(stub_body(&TypeName::Int, inserted, Loc::default())),
                    loc: Loc::default(),
                });
                stubbed.insert(name.to_string());
            }
        }
    }
    let deps = spec
        .deps
        .iter()
        .zip(names)
        .map(|(d, aux_name)| InstrumentedDependency {
            dep: d.clone(),
            aux_name,
            assign_site: d.before.clone(),
            assert_site: d.after.clone(),
            stubbed: (stubbed.contains(&d.before), stubbed.contains(&d.after)),
        })
        .collect();
    Ok(Instrumentation { program: out, deps })
}

fn int(v: i64) -> Expr {
    Expr::new(ExprKind::IntLit { value: v, radix: Radix::Decimal }, Loc::default())
}

fn assign_stmt(aux: &str) -> Stmt {
    Stmt::new(
        StmtKind::Assign { target: LValue::Var { name: aux.to_string(), loc: Loc::default() }, value: int(1) },
        Loc::default(),
    )
}

fn assert_stmt(aux: &str) -> Stmt {
    let cond = Expr::new(
        ExprKind::Binary {
            op: BinaryOp::Eq,
            lhs: Box::new(Expr::new(ExprKind::Var(aux.to_string()), Loc::default())),
            rhs: Box::new(int(1)),
        },
        Loc::default(),
    );
    Stmt::new(StmtKind::Assert(cond), Loc::default())
}

fn stub_body(ret: &TypeName, mut stmts: Vec<Stmt>, loc: Loc) -> Block {
    if *ret != TypeName::Void {
        stmts.push(Stmt::new(StmtKind::Return(Some(Expr::new(ExprKind::Nondet, loc))), loc));
    }
    Block { stmts, loc }
}

fn reserved_names(p: &Program) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    let mut check = |n: &str| {
        if n.starts_with(RESERVED_PREFIX) {
            names.push(n.to_string());
        }
    };
    for r in &p.records {
        check(&r.name);
        for f in &r.fields {
            check(&f.name);
        }
    }
    for g in &p.globals {
        check(&g.name);
    }
    for f in &p.functions {
        check(&f.name);
        for param in &f.params {
            check(&param.name);
        }
        if let Some(body) = &f.body {
            for s in &body.stmts {
                s.walk(&mut |s| {
                    if let StmtKind::VarDecl(d) = &s.kind {
                        check(&d.name);
                    }
                });
            }
        }
    }
    p.for_each_call(&mut |c| check(&c.name));
    names
}

/// Argument counts of calls to functions the program neither defines nor declares.
fn call_arities(p: &Program) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    p.for_each_call(&mut |c| {
        if p.function(&c.name).is_none() {
            out.entry(c.name.clone()).or_insert(c.args.len());
        }
    });
    out
}

/// A call chain `from -> ... -> to` through defined bodies, if one exists.
fn call_path(p: &Program, from: &str, to: &str) -> Option<Vec<String>> {
    let callees = |name: &str| -> Vec<String> {
        let mut out = Vec::new();
        if let Some(body) = p.function(name).and_then(|f| f.body.as_ref()) {
            for s in &body.stmts {
                s.for_each_call(&mut |c| {
                    if !out.contains(&c.name) {
                        out.push(c.name.clone());
                    }
                });
            }
        }
        out
    };
    let mut parent: BTreeMap<String, String> = BTreeMap::new();
    let mut queue = VecDeque::from([from.to_string()]);
    let mut seen = BTreeSet::from([from.to_string()]);
    while let Some(f) = queue.pop_front() {
        for c in callees(&f) {
            if c == to {
                let mut path = vec![to.to_string(), f.clone()];
                let mut cur = f;
                while let Some(prev) = parent.get(&cur) {
                    path.push(prev.clone());
                    cur = prev.clone();
                }
                path.reverse();
                return Some(path);
            }
            if seen.insert(c.clone()) {
                parent.insert(c.clone(), f.clone());
                queue.push_back(c);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{emit_function, emit_source, parse_program};
    use crate::spec::parse_spec;

    const HAL: &str = "int HAL_Init() { return 0; }\nint HAL_SPI_Transmit(int d) { return 0; }\n\
                       void main() { HAL_Init(); HAL_SPI_Transmit(1); }";

    #[test]
    fn flags_inserted_at_entry() {
        let p = parse_program(HAL, "hal.ecs").unwrap();
        let s = parse_spec("HAL_Init -> HAL_SPI_Transmit").unwrap();
        let text = emit_source(&instrument(&p, &s).unwrap());
        assert!(text.contains("int __idcc_state_d1 = 0;"));
        assert!(text.contains("int HAL_Init()\n{\n    __idcc_state_d1 = 1;\n    return 0;\n}"));
        assert!(text.contains("{\n    assert(__idcc_state_d1 == 1);\n    return 0;\n}"));
        parse_program(&text, "out.ecs").unwrap();
    }

    #[test]
    fn empty_spec_is_identity() {
        let p = parse_program(HAL, "hal.ecs").unwrap();
        assert_eq!(instrument(&p, &DependencySpec::default()).unwrap(), p);
    }

    #[test]
    fn stubs_for_undefined_functions() {
        let p = parse_program("int g(int a);\nvoid main() { g(1); f(2, 3); }", "t.ecs").unwrap();
        let s = parse_spec("f -> g").unwrap();
        let i = instrument_detailed(&p, &s).unwrap();
        assert_eq!(i.deps[0].stubbed, (true, true));
        let text = emit_source(&i.program);
        assert!(text.contains("int g(int a)\n{\n    assert(__idcc_state_d1 == 1);\n    return *;\n}"));
        assert!(text.contains("int f(int p0, int p1)\n{\n    __idcc_state_d1 = 1;\n    return *;\n}"));
    }

    #[test]
    fn untouched_functions_are_identical() {
        let src = "void helper() { int x = 1; }\nvoid main() { helper(); a(); b(); }";
        let p = parse_program(src, "t.ecs").unwrap();
        let out = instrument(&p, &parse_spec("a -> b").unwrap()).unwrap();
        assert_eq!(emit_function(out.function("helper").unwrap()), emit_function(p.function("helper").unwrap()));
        assert_eq!(emit_function(out.function("main").unwrap()), emit_function(p.function("main").unwrap()));
    }

    #[test]
    fn reinstrumenting_clashes() {
        let p = parse_program(HAL, "hal.ecs").unwrap();
        let s = parse_spec("HAL_Init -> HAL_SPI_Transmit").unwrap();
        let once = instrument(&p, &s).unwrap();
        assert!(matches!(instrument(&once, &s), Err(InstrumentError::NameClash { .. })));
    }

    #[test]
    fn ordering_paradox() {
        let p = parse_program("void a() { h(); }\nvoid h() { b(); }\nvoid main() { a(); }", "t.ecs").unwrap();
        let err = instrument(&p, &parse_spec("a -> b").unwrap()).unwrap_err();
        assert_eq!(err, InstrumentError::OrderingParadox { id: "d1".into(), path: vec!["a".into(), "h".into(), "b".into()] });
    }

    #[test]
    fn aux_names_are_identifiers() {
        let s = parse_spec("a-b: f -> g\na_b: g -> h").unwrap();
        assert_eq!(aux_names(&s), ["__idcc_state_a_b", "__idcc_state_a_b_2"]);
    }
}
