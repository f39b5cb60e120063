//! Shared test support: fixture loading, a seeded program generator and a
//! brute-force all-paths oracle that interprets the AST directly.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use idcc::lang::{eval_binary, eval_unary, parse_program, Expr, ExprKind, LValue, Program, Stmt, StmtKind};
use idcc::spec::{load_spec, DependencySpec, TemporalDependency};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn program(rel: &str) -> Program {
    parse_program(&read_fixture(rel), rel).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn spec(name: &str) -> DependencySpec {
    load_spec(&read_fixture(&format!("specs/{name}.tdep"))).unwrap()
}

/// Every shipped program fixture, sorted by file name.
pub fn program_fixtures() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixture("programs"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".ecs"))
        .collect();
    names.sort();
    names
}

pub const SPEC_FIXTURES: [&str; 4] = ["spi", "full_hal", "callbacks", "psoc_spi"];

pub const HAL_FUNCTIONS: [&str; 4] = ["hal_init", "hal_config", "hal_start", "hal_send"];

/// Knobs of the program generator.
#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    pub max_stmts: usize,
    /// Allow `x = *;` and comparisons on nondet-assigned variables.
    pub int_nondet: bool,
    pub max_loop_bound: i64,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { max_stmts: 30, int_nondet: false, max_loop_bound: 3 }
    }
}

/// A generated program with its specification.
pub struct Generated {
    pub source: String,
    pub program: Program,
    pub spec: DependencySpec,
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    opts: &'a GenOptions,
    stmts: usize,
    bool_nondets: usize,
    loops: usize,
    helpers: usize,
}

const VARS: [&str; 3] = ["x0", "x1", "x2"];

impl Gen<'_> {
    fn budget_left(&self) -> bool {
        self.stmts < self.opts.max_stmts
    }

    fn call(&mut self, out: &mut String, indent: &str) {
        let f = HAL_FUNCTIONS[self.rng.random_range(0..HAL_FUNCTIONS.len())];
        let arg = self.rng.random_range(0..4);
        out.push_str(&format!("{indent}{f}({arg});\n"));
    }

    fn block(&mut self, out: &mut String, indent: &str, depth: usize, first_helper: usize, max_len: usize) {
        let n = self.rng.random_range(1..=max_len);
        for _ in 0..n {
            if !self.budget_left() {
                break;
            }
            self.stmt(out, indent, depth, first_helper);
        }
    }

    fn stmt(&mut self, out: &mut String, indent: &str, depth: usize, first_helper: usize) {
        self.stmts += 1;
        let inner = format!("{indent}  ");
        let var = VARS[self.rng.random_range(0..VARS.len())];
        let k = self.rng.random_range(0..3);
        match self.rng.random_range(0..100) {
            0..=39 => self.call(out, indent),
            40..=51 if depth < 3 && self.bool_nondets < 4 => {
                self.bool_nondets += 1;
                out.push_str(&format!("{indent}if (*) {{\n"));
                self.block(out, &inner, depth + 1, first_helper, 3);
                if self.rng.random_bool(0.5) {
                    out.push_str(&format!("{indent}}} else {{\n"));
                    self.block(out, &inner, depth + 1, first_helper, 3);
                }
                out.push_str(&format!("{indent}}}\n"));
            }
            52..=61 if depth < 3 => {
                out.push_str(&format!("{indent}if ({var} == {k}) {{\n"));
                self.block(out, &inner, depth + 1, first_helper, 3);
                out.push_str(&format!("{indent}}}\n"));
            }
            62..=69 if depth < 2 && self.loops < 2 => {
                let c = format!("c{}", self.loops);
                self.loops += 1;
                let bound = self.rng.random_range(0..=self.opts.max_loop_bound);
                out.push_str(&format!("{indent}{c} = 0;\n{indent}while ({c} < {bound}) {{\n"));
                self.block(out, &inner, depth + 1, first_helper, 3);
                out.push_str(&format!("{inner}{c} = {c} + 1;\n{indent}}}\n"));
            }
            70..=79 => out.push_str(&format!("{indent}{var} = {k};\n")),
            80..=87 => out.push_str(&format!("{indent}{var} = {var} + 1;\n")),
            88..=93 if first_helper < self.helpers => {
                let h = self.rng.random_range(first_helper..self.helpers);
                out.push_str(&format!("{indent}helper{h}();\n"));
            }
            94..=99 if self.opts.int_nondet => out.push_str(&format!("{indent}{var} = *;\n")),
            _ => self.call(out, indent),
        }
    }
}

/// Generates a random program over [`HAL_FUNCTIONS`] and a random acyclic
/// spec over the same functions. Deterministic in `seed`.
pub fn generate(seed: u64, opts: &GenOptions) -> Generated {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), opts, stmts: 0, bool_nondets: 0, loops: 0, helpers: 0 };
    g.helpers = g.rng.random_range(0..=2);
    let mut source = String::from("int x0 = 0;\nint x1 = 0;\nint x2 = 0;\n\n");
    // helper i only calls helpers with a larger index, so there is no recursion
    let mut helpers = Vec::new();
    for h in (0..g.helpers).rev() {
        let mut body = String::new();
        g.loops = 0;
        g.block(&mut body, "  ", 1, h + 1, 3);
        helpers.push(format!("void helper{h}()\n{{\n  int c0 = 0;\n  int c1 = 0;\n{body}}}\n\n"));
    }
    g.loops = 0;
    helpers.reverse();
    for h in helpers {
        source.push_str(&h);
    }
    let mut body = String::new();
    g.block(&mut body, "  ", 0, 0, opts.max_stmts);
    source.push_str(&format!("void main()\n{{\n  int c0 = 0;\n  int c1 = 0;\n{body}}}\n"));
    let program = parse_program(&source, &format!("gen-{seed}.ecs")).expect("generated programs parse");

    let mut deps = Vec::new();
    let mut pairs = BTreeSet::new();
    let n = g.rng.random_range(1..=4);
    while deps.len() < n {
        let i = g.rng.random_range(0..HAL_FUNCTIONS.len() - 1);
        let j = g.rng.random_range(i + 1..HAL_FUNCTIONS.len());
        if pairs.insert((i, j)) {
            deps.push(TemporalDependency {
                id: format!("d{}", deps.len() + 1),
                before: HAL_FUNCTIONS[i].to_string(),
                after: HAL_FUNCTIONS[j].to_string(),
            });
        }
    }
    Generated { source, program, spec: DependencySpec { deps } }
}

/// Outcome of brute-force enumeration: for each dependency, whether some
/// path violates it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub violated: Vec<bool>,
    pub paths: usize,
}

struct Run<'a> {
    program: &'a Program,
    deps: &'a [TemporalDependency],
    choices: Vec<bool>,
    cursor: usize,
    globals: HashMap<String, i64>,
    called: BTreeSet<String>,
    violated: Vec<bool>,
}

enum Flow {
    Next,
    Return,
}

impl Run<'_> {
    fn choose(&mut self) -> bool {
        if self.cursor == self.choices.len() {
            self.choices.push(false);
        }
        self.cursor += 1;
        self.choices[self.cursor - 1]
    }

    fn eval(&mut self, e: &Expr, locals: &HashMap<String, i64>) -> i64 {
        match &e.kind {
            ExprKind::IntLit { value, .. } => *value,
            ExprKind::Nondet => self.choose() as i64,
            ExprKind::Var(n) => *locals.get(n).or_else(|| self.globals.get(n)).expect("declared variable"),
            ExprKind::Unary { op, operand } => eval_unary(*op, self.eval(operand, locals)),
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs, locals);
                let r = self.eval(rhs, locals);
                eval_binary(*op, l, r).expect("generated programs do not divide")
            }
            other => panic!("oracle does not support {other:?}"),
        }
    }

    fn call(&mut self, name: &str) {
        if let Some(f) = self.program.function(name).filter(|f| f.body.is_some()) {
            let mut locals = HashMap::new();
            for s in &f.body.as_ref().unwrap().stmts {
                if let Flow::Return = self.exec(s, &mut locals) {
                    break;
                }
            }
            return;
        }
        for (i, d) in self.deps.iter().enumerate() {
            if d.after == name && !self.called.contains(&d.before) {
                self.violated[i] = true;
            }
        }
        self.called.insert(name.to_string());
    }

    fn exec(&mut self, s: &Stmt, locals: &mut HashMap<String, i64>) -> Flow {
        match &s.kind {
            StmtKind::VarDecl(d) => {
                let v = d.init.as_ref().map_or(0, |e| self.eval(e, locals));
                locals.insert(d.name.clone(), v);
            }
            StmtKind::Assign { target: LValue::Var { name, .. }, value } => {
                let v = self.eval(value, locals);
                match locals.get_mut(name) {
                    Some(slot) => *slot = v,
                    None => {
                        self.globals.insert(name.clone(), v);
                    }
                }
            }
            StmtKind::Call(c) => {
                for a in &c.args {
                    self.eval(a, locals);
                }
                self.call(&c.name);
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                if self.eval(cond, locals) != 0 {
                    return self.exec(then_branch, locals);
                } else if let Some(e) = else_branch {
                    return self.exec(e, locals);
                }
            }
            StmtKind::While { cond, body } => {
                while self.eval(cond, locals) != 0 {
                    if let Flow::Return = self.exec(body, locals) {
                        return Flow::Return;
                    }
                }
            }
            StmtKind::Block(b) => {
                for s in &b.stmts {
                    if let Flow::Return = self.exec(s, locals) {
                        return Flow::Return;
                    }
                }
            }
            StmtKind::Return(_) => return Flow::Return,
            other => panic!("oracle does not support {other:?}"),
        }
        Flow::Next
    }
}

/// Enumerates every path of `main`, resolving each `*` to both 0 and 1.
/// Only boolean-position nondeterminism is meaningful here.
pub fn oracle(program: &Program, deps: &[TemporalDependency]) -> OracleResult {
    let main = program.function("main").expect("main");
    let mut violated = vec![false; deps.len()];
    let mut prefix: Vec<bool> = Vec::new();
    let mut paths = 0;
    loop {
        let mut run = Run {
            program,
            deps,
            choices: prefix.clone(),
            cursor: 0,
            globals: HashMap::new(),
            called: BTreeSet::new(),
            violated: vec![false; deps.len()],
        };
        for g in &program.globals {
            let v = g.init.as_ref().map_or(0, |e| run.eval(e, &HashMap::new()));
            run.globals.insert(g.name.clone(), v);
        }
        let mut locals = HashMap::new();
        for s in &main.body.as_ref().unwrap().stmts {
            if let Flow::Return = run.exec(s, &mut locals) {
                break;
            }
        }
        paths += 1;
        for (v, r) in violated.iter_mut().zip(&run.violated) {
            *v |= *r;
        }
        prefix = run.choices;
        prefix.truncate(run.cursor);
        while prefix.last() == Some(&true) {
            prefix.pop();
        }
        match prefix.last_mut() {
            Some(last) => *last = true,
            None => break,
        }
    }
    OracleResult { violated, paths }
}
