//! The Embedded-C-Subset (ECS) frontend: lexing, parsing, re-emission and lints.

pub mod ast;
mod emit;
mod lexer;
mod lint;
mod parser;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use emit::{emit_call, emit_decl, emit_expr, emit_function, emit_lvalue, emit_source, emit_stmt_header};
pub use lexer::is_identifier;
pub use lint::{lint_program, Lint, LintCode};
pub use parser::{parse_expr, parse_program};

/// A syntax error with the set of tokens that would have been accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub loc: Loc,
    pub expected: Vec<String>,
    pub found: String,
    pub message: String,
}

impl ParseError {
    pub fn new(loc: Loc, expected: Vec<String>, found: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError { loc, expected, found: found.into(), message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.loc, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("syntax error at {0}")]
    Parse(#[from] ParseError),
    #[error("{loc}: duplicate {kind} `{name}`")]
    DuplicateDefinition { kind: &'static str, name: String, loc: Loc },
    #[error("{loc}: `{callee}` takes {expected} argument(s) but {found} were given")]
    ArityMismatch { callee: String, expected: usize, found: usize, loc: Loc },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("`{name}` is defined both in the program and in the HAL model")]
    ConflictingDefinition { name: String },
    #[error("struct `{name}` is defined differently in the program and in the HAL model")]
    ConflictingRecord { name: String },
    #[error("global `{name}` is declared both in the program and in the HAL model")]
    ConflictingGlobal { name: String },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// Merges a HAL model into an application program. HAL definitions replace
/// application declarations; two bodies for the same function are an error.
pub fn merge_programs(app: &Program, hal: &Program) -> Result<Program, MergeError> {
    let mut out = app.clone();
    for r in &hal.records {
        match out.record(&r.name) {
            Some(existing) if existing.without_loc() != r.without_loc() => {
                return Err(MergeError::ConflictingRecord { name: r.name.clone() })
            }
            Some(_) => {}
            None => out.records.push(r.clone()),
        }
    }
    for g in &hal.globals {
        if out.globals.iter().any(|o| o.name == g.name) {
            return Err(MergeError::ConflictingGlobal { name: g.name.clone() });
        }
        out.globals.push(g.clone());
    }
    for f in &hal.functions {
        match out.functions.iter_mut().find(|o| o.name == f.name) {
            Some(existing) => {
                if existing.body.is_some() && f.body.is_some() {
                    return Err(MergeError::ConflictingDefinition { name: f.name.clone() });
                }
                parser::merge_function(existing, f.clone())?;
            }
            None => out.functions.push(f.clone()),
        }
    }
    parser::check_arities(&out)?;
    Ok(out)
}

impl RecordDef {
    fn without_loc(&self) -> Vec<(TypeName, String)> {
        self.fields.iter().map(|f| (f.ty.clone(), f.name.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hal_definitions_win() {
        let app = parse_program("int HAL_Init();\nvoid main() { HAL_Init(); }", "app.ecs").unwrap();
        let hal = parse_program("int HAL_Init() { return 0; }", "hal.ecs").unwrap();
        let merged = merge_programs(&app, &hal).unwrap();
        assert!(merged.is_defined("HAL_Init"));
        assert_eq!(merged.functions.len(), 2);
    }

    #[test]
    fn duplicate_bodies_conflict() {
        let app = parse_program("int HAL_Init() { return 1; }\nvoid main() { HAL_Init(); }", "app.ecs").unwrap();
        let hal = parse_program("int HAL_Init() { return 0; }", "hal.ecs").unwrap();
        assert!(matches!(merge_programs(&app, &hal), Err(MergeError::ConflictingDefinition { .. })));
    }

    #[test]
    fn merged_arity_is_checked() {
        let app = parse_program("void main() { HAL_Init(1); }", "app.ecs").unwrap();
        let hal = parse_program("int HAL_Init() { return 0; }", "hal.ecs").unwrap();
        assert!(matches!(
            merge_programs(&app, &hal),
            Err(MergeError::Program(ProgramError::ArityMismatch { .. }))
        ));
    }
}
