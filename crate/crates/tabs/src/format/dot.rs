//! Deterministic DOT renderings of automata and abstractions.

use std::fmt::Write;

use crate::abstraction::AbstractAutomaton;
use crate::model::{Polarity, TimedAutomaton};

use super::printer::render_term;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn emit_dot_automaton(a: &TimedAutomaton) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(&a.name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=ellipse];").unwrap();
    for l in &a.locations {
        let inv = l.effective_invariant();
        let mut label = l.id.clone();
        if !inv.is_empty() {
            label.push('\n');
            label.push_str(&inv.to_string());
        }
        let extra = if l.id == a.initial {
            ", peripheries=2"
        } else {
            ""
        };
        writeln!(
            out,
            "  \"{}\" [label=\"{}\"{}];",
            escape(&l.id),
            escape(&label).replace('\n', "\\n"),
            extra
        )
        .unwrap();
    }
    for t in &a.transitions {
        let mut parts = Vec::new();
        if let Some(e) = &t.event {
            let mark = match e.polarity {
                Polarity::Send => "!",
                Polarity::Receive => "?",
                Polarity::Internal => "",
            };
            parts.push(format!("{}{}", mark, e.channel));
        }
        if !t.guard.is_empty() {
            parts.push(format!("when {}", t.guard));
        }
        if !t.resets.is_empty() {
            let assigns: Vec<String> = t
                .resets
                .iter()
                .map(|(v, value)| format!("{} := {}", v.name, render_term(value)))
                .collect();
            parts.push(format!("do {}", assigns.join(", ")));
        }
        writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            escape(&t.source),
            escape(&t.target),
            escape(&parts.join("\n")).replace('\n', "\\n")
        )
        .unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}

/// Unreachable abstract states are drawn dashed.
pub fn emit_dot_abstraction(ab: &AbstractAutomaton) -> String {
    let mut out = String::new();
    writeln!(out, "digraph abstraction {{").unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=box];").unwrap();
    for (i, s) in ab.states.iter().enumerate() {
        let mut attrs = format!("label=\"{}\"", escape(&s.label(&ab.pool)));
        if !ab.reachable.contains(&i) {
            attrs.push_str(", style=dashed");
        }
        if ab.initial.contains(&i) {
            attrs.push_str(", peripheries=2");
        }
        writeln!(out, "  s{} [{}];", i, attrs).unwrap();
    }
    for (from, to) in &ab.transitions {
        writeln!(out, "  s{} -> s{};", from, to).unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::ConstraintSet;
    use crate::model::Location;

    #[test]
    fn single_location_automaton_renders_one_node_and_no_edges() {
        let a = TimedAutomaton {
            name: "A".into(),
            locations: vec![Location::new("l0", ConstraintSet::truth())],
            initial: "l0".into(),
            events: Default::default(),
            vars: vec![],
            transitions: vec![],
        };
        let dot = emit_dot_automaton(&a);
        assert_eq!(dot.matches("label=").count(), 1);
        assert!(!dot.contains("->"));
        assert_eq!(dot, emit_dot_automaton(&a));
    }
}
