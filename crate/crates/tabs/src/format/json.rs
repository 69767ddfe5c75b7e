//! Canonical JSON reports. `serde_json` maps are ordered by key, so
//! repeated emission is byte-identical.

use serde_json::{json, Map, Value};

use crate::abstraction::AbstractAutomaton;
use crate::cipm::{CipmResult, IdleReason, NetworkCipmResult};
use crate::model::TimedAutomaton;

fn reason_str(r: &IdleReason) -> &'static str {
    match r {
        IdleReason::UnsatisfiableGuard => "unsatisfiable guard",
        IdleReason::GuardContradictsSourceInvariant => "guard contradicts source invariant",
        IdleReason::PostViolatesTargetInvariant => "post-state violates target invariant",
    }
}

fn component_report(r: &CipmResult) -> Value {
    let mut invariants = Map::new();
    for (loc, inv) in &r.new_invariants {
        invariants.insert(loc.clone(), Value::String(inv.to_string()));
    }
    let removed: Vec<Value> = r
        .removed
        .iter()
        .map(|rt| {
            json!({
                "id": rt.transition.id,
                "source": rt.transition.source,
                "target": rt.transition.target,
                "reason": reason_str(&rt.reason),
            })
        })
        .collect();
    let warnings: Vec<Value> = r
        .warnings
        .iter()
        .map(|w| Value::String(w.message.clone()))
        .collect();
    json!({
        "automaton": r.pruned.name,
        "invariants": Value::Object(invariants),
        "pruned_transitions": removed,
        "warnings": warnings,
    })
}

/// Per-component invariant tables and pruning lists. A single-component
/// network reports at top level.
pub fn cipm_report(r: &NetworkCipmResult) -> Value {
    if r.components.len() == 1 {
        component_report(&r.components[0])
    } else {
        json!({
            "components": r.components.iter().map(component_report).collect::<Vec<_>>(),
        })
    }
}

pub fn abstraction_report(ab: &AbstractAutomaton, compare_naive: bool) -> Value {
    let mut m = Map::new();
    m.insert("abstract_states".into(), ab.stats.abstract_states.into());
    m.insert("reachable".into(), ab.stats.reachable.into());
    m.insert(
        "abstract_transitions".into(),
        (ab.transitions.len() as u64).into(),
    );
    m.insert(
        "pruned_transitions".into(),
        ab.stats.pruned_transitions.into(),
    );
    if compare_naive {
        m.insert("naive_paired".into(), ab.stats.naive_paired.into());
        m.insert("naive_unfiltered".into(), ab.stats.naive_unfiltered.into());
    }
    Value::Object(m)
}

pub fn stats_report(components: &[TimedAutomaton]) -> Value {
    let per: Vec<Value> = components
        .iter()
        .map(|a| {
            json!({
                "name": a.name,
                "locations": a.locations.len(),
                "transitions": a.transitions.len(),
                "clocks": a.clocks().count(),
                "ints": a.vars.len() - a.clocks().count(),
                "channels": a.events.len(),
                "max_constant": a.max_constant(),
            })
        })
        .collect();
    json!({ "automata": per })
}

/// One row per oracle cross-check; `passed` is null for inconclusive.
pub fn validation_report(rows: &[(String, Option<bool>)]) -> Value {
    let checks: Vec<Value> = rows
        .iter()
        .map(|(name, verdict)| {
            json!({
                "check": name,
                "passed": verdict.map(Value::Bool).unwrap_or(Value::Null),
            })
        })
        .collect();
    json!({ "checks": checks })
}

pub fn emit_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialization");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emission_is_deterministic_and_sorted() {
        let v = json!({"b": 1, "a": 2});
        let text = emit_json(&v);
        assert_eq!(text, emit_json(&v));
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
    }

    #[test]
    fn empty_report_counts_are_zero() {
        let v = stats_report(&[]);
        assert_eq!(v["automata"].as_array().unwrap().len(), 0);
    }
}
