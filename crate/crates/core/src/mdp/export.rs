use std::fmt::Write;

use serde::Serialize;

use super::{MdpGraph, StateId};
use crate::ast::render;

const LABEL_WIDTH: usize = 48;

fn short(sql: &str) -> String {
    if sql.chars().count() <= LABEL_WIDTH {
        return sql.to_string();
    }
    let cut: String = sql.chars().take(LABEL_WIDTH - 3).collect();
    format!("{cut}...")
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: forward moves solid with their probability, backward
/// moves dashed, finals drawn as double circles.
pub fn to_dot(g: &MdpGraph) -> String {
    let mut out = String::from("digraph mdp {\n  rankdir=LR;\n  node [fontsize=10];\n");
    for s in &g.states {
        let shape = if s.is_final { "doublecircle" } else { "box" };
        let mut label = format!("s{}\\n{}\\nV={:.2}", s.id, escape(&short(&render(&s.display))), s.value);
        if s.is_final {
            let _ = write!(label, " R={:.0}", s.reward);
        }
        let _ = writeln!(out, "  s{} [shape={shape}, label=\"{label}\"];", s.id);
    }
    for (from, ts) in g.forward.iter().enumerate() {
        for t in ts {
            let _ = writeln!(out, "  s{from} -> s{} [label=\"{:.2}\"];", t.to, t.probability);
        }
    }
    for (from, back) in g.backward.iter().enumerate() {
        if let Some(p) = back {
            let _ = writeln!(out, "  s{from} -> s{p} [style=dashed, color=gray];");
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct JsonState {
    id: StateId,
    sql: String,
    label: String,
    is_final: bool,
    reward: f64,
    value: f64,
    support: u32,
    seeded: bool,
    forward: Vec<(StateId, f64)>,
    backward: Option<StateId>,
}

/// Compact JSON view of the graph (one object per state).
pub fn to_json(g: &MdpGraph) -> serde_json::Value {
    let states: Vec<JsonState> = g
        .states
        .iter()
        .map(|s| {
            let sql = render(&s.display);
            JsonState {
                id: s.id,
                label: short(&sql),
                sql,
                is_final: s.is_final,
                reward: s.reward,
                value: s.value,
                support: s.support,
                seeded: s.seeded,
                forward: g.forward[s.id].iter().map(|t| (t.to, t.probability)).collect(),
                backward: g.backward[s.id],
            }
        })
        .collect();
    serde_json::json!({ "gamma": g.gamma, "roots": g.roots, "states": states, "report": g.report })
}
