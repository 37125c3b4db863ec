use std::fmt::Write;

use serde_json::json;

use super::Cfg;

pub fn cfg_to_dot(cfg: &Cfg) -> String {
    let mut out = String::from("digraph cfg {\n  node [shape=box, fontname=monospace];\n");
    for b in &cfg.blocks {
        let style = if b.reachable { "solid" } else { "dotted" };
        let mut label = String::new();
        for ins in &b.instructions {
            let _ = write!(label, "{ins}\\l");
        }
        let _ = writeln!(out, "  b{} [label=\"{label}\", style={style}];", b.id);
        for s in &b.successors {
            let _ = writeln!(out, "  b{} -> b{};", b.id, s);
        }
    }
    out.push_str("}\n");
    out
}

pub fn cfg_to_json(cfg: &Cfg) -> serde_json::Value {
    let blocks: Vec<_> = cfg
        .blocks
        .iter()
        .map(|b| {
            json!({
                "id": b.id,
                "start": b.start_offset,
                "end": b.end_offset(),
                "reachable": b.reachable,
                "unresolved_jump": b.unresolved_jump,
                "successors": b.successors,
                "predicate": cfg.predicate_of.get(&b.id),
            })
        })
        .collect();
    json!({ "entry": cfg.entry, "blocks": blocks })
}
