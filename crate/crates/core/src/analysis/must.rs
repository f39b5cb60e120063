//! Forward must-analysis: the set of functions called on every path to a node.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::cfg::{Graph, NodeId, NodeKind};
use crate::lang::Loc;
use crate::spec::TemporalDependency;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorklistOrder {
    Fifo,
    Lifo,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MustResult {
    /// `before` is called on every path to every `after` site. `vacuous`
    /// when there are no `after` sites at all.
    Proved { vacuous: bool },
    /// The first `after` site (in source order) the analysis cannot discharge.
    PotentialViolation { site: NodeId, loc: Loc },
}

/// `None` is the universal set, the initial value away from entry.
type Fact = Option<BTreeSet<usize>>;

fn meet(a: &Fact, b: &Fact) -> Fact {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(a), Some(b)) => Some(a.intersection(b).copied().collect()),
    }
}

/// Computes, for every node, the callee names called on all paths from entry
/// to the node (exclusive). Unreachable nodes keep the universal set, `None`.
pub fn must_called_before(g: &Graph, order: WorklistOrder) -> Vec<Option<BTreeSet<String>>> {
    let mut names: Vec<&str> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (_, callee) in g.call_nodes() {
        if !index.contains_key(callee) {
            index.insert(callee, names.len());
            names.push(callee);
        }
    }
    let callee_of: Vec<Option<usize>> = g
        .nodes
        .iter()
        .map(|n| match &n.kind {
            NodeKind::Call { callee, .. } => Some(index[callee.as_str()]),
            _ => None,
        })
        .collect();

    let mut facts: Vec<Fact> = vec![None; g.len()];
    facts[g.entry.index()] = Some(BTreeSet::new());
    let mut work: VecDeque<NodeId> = VecDeque::from([g.entry]);
    let mut queued = vec![false; g.len()];
    queued[g.entry.index()] = true;
    while let Some(id) = match order {
        WorklistOrder::Fifo => work.pop_front(),
        WorklistOrder::Lifo => work.pop_back(),
    } {
        queued[id.index()] = false;
        let mut out = facts[id.index()].clone();
        if let (Some(set), Some(c)) = (&mut out, callee_of[id.index()]) {
            set.insert(c);
        }
        for e in &g.node(id).succs {
            let t = e.to.index();
            let next = if t == g.entry.index() { facts[t].clone() } else { meet(&facts[t], &out) };
            if next != facts[t] {
                facts[t] = next;
                if !queued[t] {
                    queued[t] = true;
                    work.push_back(e.to);
                }
            }
        }
    }
    facts
        .into_iter()
        .map(|f| f.map(|s| s.into_iter().map(|i| names[i].to_string()).collect()))
        .collect()
}

/// Decides whether `dep.before` provably precedes every call of `dep.after`.
pub fn check_must(g: &Graph, dep: &TemporalDependency, order: WorklistOrder) -> MustResult {
    let sites: Vec<NodeId> = g.call_nodes().filter(|(_, c)| *c == dep.after).map(|(id, _)| id).collect();
    if sites.is_empty() {
        return MustResult::Proved { vacuous: true };
    }
    let facts = must_called_before(g, order);
    let mut failing: Vec<NodeId> = sites
        .into_iter()
        .filter(|s| facts[s.index()].as_ref().is_some_and(|set| !set.contains(&dep.before)))
        .collect();
    failing.sort_by_key(|id| (g.node(*id).loc, *id));
    match failing.first() {
        None => MustResult::Proved { vacuous: false },
        Some(&site) => MustResult::PotentialViolation { site, loc: g.node(site).loc },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{build_cfg, CfgConfig};
    use crate::lang::parse_program;

    fn dep(before: &str, after: &str) -> TemporalDependency {
        TemporalDependency { id: "d1".into(), before: before.into(), after: after.into() }
    }

    fn must(src: &str, before: &str, after: &str) -> MustResult {
        let c = build_cfg(&parse_program(src, "t.ecs").unwrap(), &CfgConfig::default()).unwrap();
        check_must(&c.main, &dep(before, after), WorklistOrder::Fifo)
    }

    #[test]
    fn straight_line() {
        let src = "void main() { HAL_Init(); HAL_UART_Receive(*); HAL_SPI_Transmit(*); }";
        assert_eq!(must(src, "HAL_Init", "HAL_SPI_Transmit"), MustResult::Proved { vacuous: false });
        assert!(matches!(must(src, "HAL_SPI_Transmit", "HAL_Init"), MustResult::PotentialViolation { .. }));
    }

    #[test]
    fn branches_meet() {
        let src = "void main() { if (*) { a(); } else { a(); } b(); if (*) { c(); } b(); }";
        assert_eq!(must(src, "a", "b"), MustResult::Proved { vacuous: false });
        assert!(matches!(must(src, "c", "b"), MustResult::PotentialViolation { loc, .. } if loc.column == 45));
    }

    #[test]
    fn loops_and_vacuity() {
        let src = "void main() { while (*) { b(); a(); } }";
        assert!(matches!(must(src, "a", "b"), MustResult::PotentialViolation { .. }));
        assert_eq!(must(src, "a", "zzz"), MustResult::Proved { vacuous: true });
    }

    #[test]
    fn calls_inside_inlined_helpers() {
        let src = "void setup() { HAL_Init(); }\nvoid main() { setup(); HAL_SPI_Transmit(1); }";
        assert_eq!(must(src, "HAL_Init", "HAL_SPI_Transmit"), MustResult::Proved { vacuous: false });
    }

    #[test]
    fn orders_agree() {
        let src = "void main() { int i = 0; while (i < 3) { if (*) { a(); } else { b(); a(); } i = i + 1; } c(); }";
        let c = build_cfg(&parse_program(src, "t.ecs").unwrap(), &CfgConfig::default()).unwrap();
        assert_eq!(must_called_before(&c.main, WorklistOrder::Fifo), must_called_before(&c.main, WorklistOrder::Lifo));
    }
}
