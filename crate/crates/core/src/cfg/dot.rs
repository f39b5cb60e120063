use std::fmt::Write;

use super::{Graph, NodeKind};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders a graph in Graphviz DOT. Back edges are dashed.
pub fn graph_to_dot(g: &Graph) -> String {
    let mut out = format!("digraph \"{}\" {{\n", escape(&g.function));
    for (i, n) in g.nodes.iter().enumerate() {
        let shape = match n.kind {
            NodeKind::Branch { .. } => "diamond",
            NodeKind::Entry | NodeKind::Exit => "oval",
            NodeKind::Call { .. } => "box",
            _ => "plaintext",
        };
        let _ = writeln!(out, "    n{i} [label=\"{}\", shape={shape}];", escape(&n.text));
    }
    for (i, n) in g.nodes.iter().enumerate() {
        for e in &n.succs {
            let mut attrs = Vec::new();
            if let Some(l) = e.label {
                attrs.push(format!("label=\"{l}\""));
            }
            if e.back {
                attrs.push("style=dashed".to_string());
            }
            if attrs.is_empty() {
                let _ = writeln!(out, "    n{i} -> n{};", e.to.0);
            } else {
                let _ = writeln!(out, "    n{i} -> n{} [{}];", e.to.0, attrs.join(", "));
            }
        }
    }
    out.push_str("}\n");
    out
}
