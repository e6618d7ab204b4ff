use serde_json::{json, Value};

use crate::ltl::Valuation;

use super::strategy::{CounterStrategy, Strategy};

fn label(v: &Valuation) -> String {
    let on: Vec<&str> = v.0.iter().filter(|(_, b)| **b).map(|(n, _)| n.as_str()).collect();
    if on.is_empty() {
        "-".to_string()
    } else {
        on.join(",")
    }
}

pub fn strategy_json(s: &Strategy) -> Value {
    let nodes: Vec<Value> = s
        .nodes
        .iter()
        .enumerate()
        .map(|(id, n)| {
            json!({
                "id": id,
                "valuation": s.valuation(id),
                "goal": n.goal,
                "next": n.next.iter().map(|(x, t)| json!({
                    "sensors": s.enc.decode_masked(*x, s.enc.sensor_mask),
                    "node": t,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "kind": "strategy", "initial": s.initial, "nodes": nodes })
}

pub fn counterstrategy_json(c: &CounterStrategy) -> Value {
    let nodes: Vec<Value> = c
        .nodes
        .iter()
        .enumerate()
        .map(|(id, n)| {
            json!({
                "id": id,
                "valuation": c.valuation(id),
                "level": n.level,
                "starving": n.starving,
                "env_goal": n.env_goal,
                "env_move": c.env_move(id),
                "next": n.next.iter().map(|(_, t)| *t).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "kind": "counterstrategy", "initial": c.initial, "nodes": nodes })
}

pub fn strategy_dot(s: &Strategy) -> String {
    let mut out = String::from("digraph strategy {\n");
    for (id, n) in s.nodes.iter().enumerate() {
        let shape = if s.initial.contains(&id) { "doublecircle" } else { "circle" };
        out.push_str(&format!("  n{id} [shape={shape}, label=\"{id}: {}\"];\n", label(&s.valuation(id))));
        for (x, t) in &n.next {
            let sensors = s.enc.decode_masked(*x, s.enc.sensor_mask);
            out.push_str(&format!("  n{id} -> n{t} [label=\"{}\"];\n", label(&sensors)));
        }
    }
    out.push_str("}\n");
    out
}

pub fn counterstrategy_dot(c: &CounterStrategy) -> String {
    let mut out = String::from("digraph counterstrategy {\n");
    for (id, n) in c.nodes.iter().enumerate() {
        let shape = if c.initial.contains(&id) { "doublecircle" } else { "circle" };
        out.push_str(&format!("  n{id} [shape={shape}, label=\"{id}: {}\"];\n", label(&c.valuation(id))));
        for (_, t) in &n.next {
            out.push_str(&format!("  n{id} -> n{t};\n"));
        }
    }
    out.push_str("}\n");
    out
}
