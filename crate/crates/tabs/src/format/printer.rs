//! Pretty-printer for the `.ta` DSL. `parse(pretty_print(m))` is the
//! identity on models produced by `parse`.

use std::fmt::Write;

use crate::constraint::{LinearTerm, VarKind};
use crate::model::{Network, Polarity, TimedAutomaton};

/// Render a linear expression in the surface syntax.
pub fn render_term(t: &LinearTerm) -> String {
    let mut parts: Vec<(bool, String)> = Vec::new();
    for (v, c) in t.coeffs() {
        let mag = c.abs();
        let body = if mag == 1 {
            v.name.clone()
        } else {
            format!("{} * {}", mag, v.name)
        };
        parts.push((c < 0, body));
    }
    if t.constant != 0 || parts.is_empty() {
        parts.push((t.constant < 0, t.constant.abs().to_string()));
    }
    let mut out = String::new();
    for (i, (neg, body)) in parts.iter().enumerate() {
        if i == 0 {
            if *neg {
                out.push('-');
            }
        } else {
            out.push_str(if *neg { " - " } else { " + " });
        }
        out.push_str(body);
    }
    out
}

pub fn pretty_print(a: &TimedAutomaton) -> String {
    let mut out = String::new();
    writeln!(out, "automaton {} {{", a.name).unwrap();
    for (kw, kind) in [("clock", VarKind::Clock), ("int", VarKind::Int)] {
        let names: Vec<&str> = a
            .vars
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.name.as_str())
            .collect();
        if !names.is_empty() {
            writeln!(out, "  {} {};", kw, names.join(", ")).unwrap();
        }
    }
    writeln!(out, "  init {};", a.initial).unwrap();
    for l in &a.locations {
        // strengthened invariants, when present, are part of the model
        // this artifact describes
        let inv = l.effective_invariant();
        if inv.is_empty() {
            writeln!(out, "  location {};", l.id).unwrap();
        } else {
            writeln!(out, "  location {} inv {};", l.id, inv).unwrap();
        }
    }
    for t in &a.transitions {
        write!(out, "  {} -> {}", t.source, t.target).unwrap();
        if let Some(e) = &t.event {
            let mark = match e.polarity {
                Polarity::Send => "!",
                Polarity::Receive => "?",
                Polarity::Internal => "",
            };
            write!(out, " on {}{}", mark, e.channel).unwrap();
        }
        if !t.guard.is_empty() {
            write!(out, " when {}", t.guard).unwrap();
        }
        if !t.resets.is_empty() {
            let assigns: Vec<String> = t
                .resets
                .iter()
                .map(|(v, value)| format!("{} := {}", v.name, render_term(value)))
                .collect();
            write!(out, " do {}", assigns.join(", ")).unwrap();
        }
        writeln!(out, ";").unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}

pub fn pretty_print_network(n: &Network) -> String {
    n.components
        .iter()
        .map(pretty_print)
        .collect::<Vec<_>>()
        .join("\n")
}
