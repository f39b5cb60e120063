//! Temporal dependency specifications (`.tdep` files).
//!
//! One dependency per line, `[id:] before -> after`, with `#` comments. The
//! dependencies of a usable specification form a strict partial order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lang::is_identifier;

/// `before` must be called at least once before any call of `after`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TemporalDependency {
    pub id: String,
    pub before: String,
    pub after: String,
}

impl fmt::Display for TemporalDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.id, self.before, self.after)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencySpec {
    pub deps: Vec<TemporalDependency>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate dependency id `{id}`")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: `{name}` cannot depend on itself")]
    SelfDependency { name: String, line: usize },
    #[error("specification is not a strict partial order: {}", display_violations(.0))]
    Invalid(Vec<Violation>),
}

fn display_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// Function names along a cycle, first name repeated at the end.
    Cycle { path: Vec<String> },
    DuplicatePair { before: String, after: String, ids: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle { path } => write!(f, "cycle {}", path.join(" -> ")),
            Violation::DuplicatePair { before, after, ids } => {
                write!(f, "duplicate pair {before} -> {after} ({})", ids.join(", "))
            }
        }
    }
}

fn is_spec_id(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Parses `.tdep` text. Cycles and duplicate pairs are accepted here and
/// reported by [`validate_spec`]; see [`load_spec`] for both steps at once.
pub fn parse_spec(text: &str) -> Result<DependencySpec, SpecError> {
    let mut deps: Vec<TemporalDependency> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| SpecError::Syntax { line, message };
        let (id, edge) = match content.split_once(':') {
            Some((id, rest)) => {
                let id = id.trim();
                if !is_spec_id(id) {
                    return Err(syntax(format!("invalid dependency id `{id}`")));
                }
                (Some(id.to_string()), rest)
            }
            None => (None, content),
        };
        let Some((before, after)) = edge.split_once("->") else {
            return Err(syntax(format!("expected `before -> after`, found `{content}`")));
        };
        let (before, after) = (before.trim(), after.trim());
        for name in [before, after] {
            if !is_identifier(name) {
                return Err(syntax(format!("`{name}` is not a function name")));
            }
        }
        if before == after {
            return Err(SpecError::SelfDependency { name: before.to_string(), line });
        }
        let id = id.unwrap_or_else(|| format!("d{}", deps.len() + 1));
        if seen.insert(id.clone(), line).is_some() {
            return Err(SpecError::DuplicateId { id, line });
        }
        deps.push(TemporalDependency { id, before: before.to_string(), after: after.to_string() });
    }
    Ok(DependencySpec { deps })
}

/// Parses and validates in one step.
pub fn load_spec(text: &str) -> Result<DependencySpec, SpecError> {
    let spec = parse_spec(text)?;
    validate_spec(&spec).map_err(SpecError::Invalid)?;
    Ok(spec)
}

/// Checks that the dependency relation is duplicate-free and acyclic.
pub fn validate_spec(spec: &DependencySpec) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut pairs: BTreeMap<(&str, &str), Vec<String>> = BTreeMap::new();
    let mut order: Vec<(&str, &str)> = Vec::new();
    for d in &spec.deps {
        let key = (d.before.as_str(), d.after.as_str());
        let ids = pairs.entry(key).or_default();
        if ids.is_empty() {
            order.push(key);
        }
        ids.push(d.id.clone());
    }
    for key in order {
        let ids = &pairs[&key];
        if ids.len() > 1 {
            violations.push(Violation::DuplicatePair {
                before: key.0.to_string(),
                after: key.1.to_string(),
                ids: ids.clone(),
            });
        }
    }
    for path in spec.cycles() {
        violations.push(Violation::Cycle { path });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

impl DependencySpec {
    /// Function names in order of first mention.
    pub fn functions(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for d in &self.deps {
            for name in [d.before.as_str(), d.after.as_str()] {
                if seen.insert(name) {
                    out.push(name);
                }
            }
        }
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.deps.iter().any(|d| d.before == name || d.after == name)
    }

    pub fn get(&self, id: &str) -> Option<&TemporalDependency> {
        self.deps.iter().find(|d| d.id == id)
    }

    pub fn len(&self) -> usize {
        self.deps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deps.is_empty()
    }

    /// Canonical `.tdep` text; parses back to an equal specification.
    pub fn emit(&self) -> String {
        self.deps.iter().map(|d| format!("{}\n", d)).collect()
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.emit().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn successors(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for f in self.functions() {
            succ.entry(f).or_default();
        }
        for d in &self.deps {
            let list = succ.entry(d.before.as_str()).or_default();
            if !list.contains(&d.after.as_str()) {
                list.push(d.after.as_str());
            }
        }
        succ
    }

    /// A topological order of all mentioned functions, ties broken by name.
    /// `None` when the relation is cyclic.
    pub fn topological_order(&self) -> Option<Vec<String>> {
        let succ = self.successors();
        let mut indegree: BTreeMap<&str, usize> = succ.keys().map(|k| (*k, 0)).collect();
        for targets in succ.values() {
            for t in targets {
                *indegree.get_mut(t).expect("known node") += 1;
            }
        }
        let mut ready: BTreeSet<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        let mut order = Vec::new();
        while let Some(next) = ready.pop_first() {
            order.push(next.to_string());
            for t in &succ[next] {
                let d = indegree.get_mut(t).expect("known node");
                *d -= 1;
                if *d == 0 {
                    ready.insert(t);
                }
            }
        }
        (order.len() == indegree.len()).then_some(order)
    }

    /// One cycle per non-trivial strongly connected component.
    fn cycles(&self) -> Vec<Vec<String>> {
        let succ = self.successors();
        let nodes = self.functions();
        let sccs = strongly_connected(&nodes, &succ);
        let mut out = Vec::new();
        for scc in sccs.into_iter().filter(|c| c.len() > 1) {
            let members: BTreeSet<&str> = scc.iter().copied().collect();
            // start from the earliest-mentioned member and walk back to it
            let start = *nodes.iter().find(|n| members.contains(*n)).expect("non-empty");
            let mut prev: HashMap<&str, &str> = HashMap::new();
            let mut queue = std::collections::VecDeque::from([start]);
            let mut closing = None;
            'bfs: while let Some(n) = queue.pop_front() {
                for &t in &succ[n] {
                    if !members.contains(t) {
                        continue;
                    }
                    if t == start {
                        closing = Some(n);
                        break 'bfs;
                    }
                    if t != start && !prev.contains_key(t) {
                        prev.insert(t, n);
                        queue.push_back(t);
                    }
                }
            }
            let mut path = vec![start.to_string()];
            let mut cur = closing.expect("scc contains a cycle through start");
            let mut rev = vec![cur];
            while cur != start {
                cur = prev[cur];
                rev.push(cur);
            }
            rev.pop();
            path.extend(rev.into_iter().rev().map(str::to_string));
            path.push(start.to_string());
            out.push(path);
        }
        out
    }
}

fn strongly_connected<'a>(nodes: &[&'a str], succ: &BTreeMap<&'a str, Vec<&'a str>>) -> Vec<Vec<&'a str>> {
    // Kosaraju: finish order on the graph, then sweep the reverse graph.
    let mut visited = BTreeSet::new();
    let mut finish = Vec::new();
    for &n in nodes {
        if visited.contains(n) {
            continue;
        }
        let mut stack = vec![(n, 0usize)];
        visited.insert(n);
        while let Some((node, i)) = stack.pop() {
            if let Some(&next) = succ[node].get(i) {
                stack.push((node, i + 1));
                if visited.insert(next) {
                    stack.push((next, 0));
                }
            } else {
                finish.push(node);
            }
        }
    }
    let mut pred: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (from, targets) in succ {
        for t in targets {
            pred.entry(*t).or_default().push(*from);
        }
    }
    let mut assigned = BTreeSet::new();
    let mut out = Vec::new();
    for &root in finish.iter().rev() {
        if !assigned.insert(root) {
            continue;
        }
        let mut comp = vec![root];
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            for &p in pred.get(n).map(Vec::as_slice).unwrap_or(&[]) {
                if assigned.insert(p) {
                    comp.push(p);
                    stack.push(p);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Graphviz rendering: one node per function, one labelled edge per dependency.
pub fn spec_to_dot(spec: &DependencySpec) -> String {
    let mut out = String::from("digraph {\n");
    for f in spec.functions() {
        out.push_str(&format!("    \"{f}\";\n"));
    }
    for d in &spec.deps {
        out.push_str(&format!("    \"{}\" -> \"{}\" [label=\"{}\"];\n", d.before, d.after, d.id));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const DRIVER_GRAPH: &str = include_str!("../fixtures/specs/driver_graph.tdep");

    #[test]
    fn single_edge() {
        let s = parse_spec("init -> send").unwrap();
        assert_eq!(s.deps, vec![TemporalDependency { id: "d1".into(), before: "init".into(), after: "send".into() }]);
    }

    #[test]
    fn driver_graph_parses_and_validates() {
        let s = load_spec(DRIVER_GRAPH).unwrap();
        assert_eq!(s.len(), 13);
        assert_eq!(s.deps.iter().filter(|d| d.before == "init").count(), 12);
        assert_eq!(s.get("d13").unwrap().before, "register_callback");
        assert_eq!(s.topological_order().unwrap()[0], "init");
    }

    #[test]
    fn self_dependency_rejected() {
        assert!(matches!(parse_spec("f -> f"), Err(SpecError::SelfDependency { .. })));
    }

    #[test]
    fn explicit_ids_and_comments() {
        let s = parse_spec("# header\n\nboot: a -> b  # trailing\nb -> c\n").unwrap();
        assert_eq!(s.deps[0].id, "boot");
        assert_eq!(s.deps[1].id, "d2");
        assert!(matches!(parse_spec("x: a -> b\nx: b -> c"), Err(SpecError::DuplicateId { .. })));
        assert!(matches!(parse_spec("a => b"), Err(SpecError::Syntax { line: 1, .. })));
        assert!(matches!(parse_spec("a -> 1b"), Err(SpecError::Syntax { .. })));
    }

    #[test]
    fn three_cycle() {
        let s = parse_spec("a -> b\nb -> c\nc -> a").unwrap();
        let v = validate_spec(&s).unwrap_err();
        assert_eq!(v, vec![Violation::Cycle { path: vec!["a".into(), "b".into(), "c".into(), "a".into()] }]);
        assert!(s.topological_order().is_none());
    }

    #[test]
    fn duplicate_pair() {
        let s = parse_spec("a -> b\na -> b").unwrap();
        let v = validate_spec(&s).unwrap_err();
        assert!(matches!(&v[..], [Violation::DuplicatePair { .. }]));
        assert!(matches!(load_spec("a -> b\na -> b"), Err(SpecError::Invalid(_))));
    }

    #[test]
    fn dot_export() {
        assert_eq!(spec_to_dot(&DependencySpec::default()), "digraph {\n}\n");
        let dot = spec_to_dot(&parse_spec("init -> send").unwrap());
        assert_eq!(dot.matches(" -> ").count(), 1);
        assert_eq!(dot.lines().filter(|l| l.trim_end().ends_with("\";")).count(), 2);
        let dot = spec_to_dot(&load_spec(DRIVER_GRAPH).unwrap());
        assert_eq!(dot.matches(" -> ").count(), 13);
        assert_eq!(dot.matches("\"init\" -> ").count(), 12);
    }

    #[test]
    fn ties_broken_by_name() {
        let s = parse_spec("z -> y\nb -> y\na -> c").unwrap();
        assert_eq!(s.topological_order().unwrap(), vec!["a", "b", "c", "z", "y"]);
    }
}
