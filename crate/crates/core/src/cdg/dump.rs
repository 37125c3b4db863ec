use std::fmt::Write;

use serde_json::json;

use super::{Cdg, NodeKind};

fn node_name(cdg: &Cdg, id: usize) -> String {
    match cdg.nodes[id].kind {
        NodeKind::Start => "start".into(),
        NodeKind::End => "end".into(),
        _ => format!("n{id}"),
    }
}

/// DOT rendering; trimmed nodes appear dashed and unconnected.
pub fn cdg_to_dot(cdg: &Cdg) -> String {
    let mut out = String::from("digraph cdg {\n  node [shape=box, fontname=monospace];\n");
    for node in &cdg.nodes {
        let name = node_name(cdg, node.id);
        let label = match node.start_offset {
            Some(off) => format!("{name} @{off:#x} {:?}", node.kind),
            None => name.clone(),
        };
        let _ = writeln!(out, "  {name} [label=\"{label}\"];");
    }
    for (v, ss) in cdg.succ.iter().enumerate() {
        for &s in ss {
            let branch = cdg.branches.iter().find(|b| b.source == v && b.target == s);
            let attr = branch.map(|b| format!(" [label=\"b{}\"]", b.id)).unwrap_or_default();
            let _ = writeln!(out, "  {} -> {}{attr};", node_name(cdg, v), node_name(cdg, s));
        }
    }
    for t in &cdg.trimmed {
        let _ = writeln!(
            out,
            "  t{} [label=\"@{:#x} {:?}\", style=dashed];",
            t.id,
            t.start_offset.unwrap_or(0),
            t.kind
        );
    }
    out.push_str("}\n");
    out
}

pub fn cdg_to_json(cdg: &Cdg) -> serde_json::Value {
    json!({
        "start": cdg.start,
        "end": cdg.end,
        "nodes": cdg.nodes,
        "edges": cdg.succ,
        "branches": cdg.branches,
        "methods": cdg.methods,
        "trimmed": cdg.trimmed,
        "warnings": cdg.warnings,
    })
}
