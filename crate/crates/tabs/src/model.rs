//! Core data model for timed automata and networks, independent of
//! parsing and the algorithms that run over them. Values are immutable
//! after construction; algorithms produce new values.

use std::collections::{BTreeMap, BTreeSet};

use crate::constraint::{ConstraintSet, LinearTerm, Var, VarKind};
use crate::scalar::Scalar;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Severity {
    Error,
    Warning,
}

/// A well-formedness finding; an empty list of these means valid.
#[derive(Clone, Debug)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn warning(message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("empty network")]
    EmptyNetwork,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Polarity {
    Send,
    Receive,
    Internal,
}

/// Channel use on a transition: `!a`, `?a`, or a plain internal label.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Event {
    pub channel: String,
    pub polarity: Polarity,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Location {
    pub id: String,
    /// The invariant as written in the model.
    pub original_invariant: ConstraintSet,
    /// The strengthened invariant, filled in after invariant propagation.
    pub new_invariant: Option<ConstraintSet>,
}

impl Location {
    pub fn new(id: impl Into<String>, invariant: ConstraintSet) -> Location {
        Location {
            id: id.into(),
            original_invariant: invariant,
            new_invariant: None,
        }
    }

    /// Strengthened invariant when available, otherwise the original.
    pub fn effective_invariant(&self) -> &ConstraintSet {
        self.new_invariant
            .as_ref()
            .unwrap_or(&self.original_invariant)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transition {
    /// Stable identity; preserved by pruning so reachability diffs can
    /// correlate transitions across automaton versions.
    pub id: usize,
    pub source: String,
    pub target: String,
    pub event: Option<Event>,
    pub guard: ConstraintSet,
    pub resets: Vec<(Var, LinearTerm)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TimedAutomaton {
    pub name: String,
    pub locations: Vec<Location>,
    pub initial: String,
    pub events: BTreeSet<String>,
    pub vars: Vec<Var>,
    pub transitions: Vec<Transition>,
}

impl TimedAutomaton {
    pub fn location(&self, id: &str) -> Option<&Location> {
        self.locations.iter().find(|l| l.id == id)
    }

    pub fn location_index(&self, id: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.id == id)
    }

    pub fn clocks(&self) -> impl Iterator<Item = &Var> {
        self.vars.iter().filter(|v| v.is_clock())
    }

    pub fn outgoing<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.source == id)
    }

    pub fn incoming<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.target == id)
    }

    /// Largest constant magnitude in any guard, invariant, or reset.
    pub fn max_constant(&self) -> i64 {
        let mut m = 0;
        fn scan(m: &mut i64, s: &ConstraintSet) {
            for a in s.atoms() {
                *m = (*m).max(a.term.constant.abs());
            }
        }
        for l in &self.locations {
            scan(&mut m, &l.original_invariant);
            if let Some(inv) = &l.new_invariant {
                scan(&mut m, inv);
            }
        }
        for t in &self.transitions {
            scan(&mut m, &t.guard);
            for (_, value) in &t.resets {
                m = m.max(value.constant.abs());
            }
        }
        m
    }

    /// All violations of the structural invariants; empty iff well-formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let declared: BTreeSet<&Var> = self.vars.iter().collect();

        let mut names = BTreeSet::new();
        for v in &self.vars {
            if !names.insert(&v.name) {
                out.push(Diagnostic::error(format!(
                    "automaton {}: duplicate variable `{}`",
                    self.name, v.name
                )));
            }
        }
        let mut ids = BTreeSet::new();
        for l in &self.locations {
            if !ids.insert(&l.id) {
                out.push(Diagnostic::error(format!(
                    "automaton {}: duplicate location `{}`",
                    self.name, l.id
                )));
            }
        }
        if self.location(&self.initial).is_none() {
            out.push(Diagnostic::error(format!(
                "automaton {}: initial location `{}` is not declared",
                self.name, self.initial
            )));
        }

        let mut check_constraint = |what: String, s: &ConstraintSet| {
            for atom in s.atoms() {
                for v in atom.vars() {
                    if !declared.contains(v) {
                        out.push(Diagnostic::error(format!(
                            "{}: undeclared variable `{}`",
                            what, v.name
                        )));
                    }
                }
                let clock_coeffs: Vec<i64> = atom
                    .term
                    .coeffs()
                    .filter(|(v, _)| v.is_clock())
                    .map(|(_, c)| c)
                    .collect();
                if clock_coeffs.iter().any(|c| c.abs() != 1)
                    || clock_coeffs.iter().filter(|c| **c > 0).count() > 1
                    || clock_coeffs.iter().filter(|c| **c < 0).count() > 1
                {
                    out.push(Diagnostic::error(format!(
                        "{}: clock terms must be bare clocks (atom `{}`)",
                        what, atom
                    )));
                }
            }
        };
        for l in &self.locations {
            check_constraint(
                format!("automaton {}, location {}", self.name, l.id),
                &l.original_invariant,
            );
        }
        for t in &self.transitions {
            check_constraint(
                format!(
                    "automaton {}, transition {} -> {}",
                    self.name, t.source, t.target
                ),
                &t.guard,
            );
        }

        for t in &self.transitions {
            let what = format!(
                "automaton {}, transition {} -> {}",
                self.name, t.source, t.target
            );
            if self.location(&t.source).is_none() {
                out.push(Diagnostic::error(format!(
                    "{}: unknown source location",
                    what
                )));
            }
            if self.location(&t.target).is_none() {
                out.push(Diagnostic::error(format!(
                    "{}: unknown target location",
                    what
                )));
            }
            let mut reset_once = BTreeSet::new();
            for (v, value) in &t.resets {
                if !declared.contains(v) {
                    out.push(Diagnostic::error(format!(
                        "{}: undeclared variable `{}` in reset",
                        what, v.name
                    )));
                }
                if !reset_once.insert(v) {
                    out.push(Diagnostic::error(format!(
                        "{}: variable `{}` reset more than once",
                        what, v.name
                    )));
                }
                if v.is_clock() {
                    if !value.is_constant() {
                        out.push(Diagnostic::error(format!(
                            "{}: clock `{}` must be reset to a constant",
                            what, v.name
                        )));
                    } else if value.constant < 0 {
                        out.push(Diagnostic::error(format!(
                            "{}: negative clock reset `{} := {}`",
                            what, v.name, value.constant
                        )));
                    }
                }
                for rv in value.vars() {
                    if !declared.contains(rv) {
                        out.push(Diagnostic::error(format!(
                            "{}: undeclared variable `{}` in reset value",
                            what, rv.name
                        )));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Network {
    pub components: Vec<TimedAutomaton>,
}

impl Network {
    pub fn single(automaton: TimedAutomaton) -> Network {
        Network {
            components: vec![automaton],
        }
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for a in &self.components {
            out.extend(a.validate());
        }
        // component variable sets must be pairwise disjoint
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for a in &self.components {
            for v in &a.vars {
                if let Some(first) = owner.get(v.name.as_str()) {
                    out.push(Diagnostic::error(format!(
                        "variable `{}` is declared in both `{}` and `{}`",
                        v.name, first, a.name
                    )));
                } else {
                    owner.insert(&v.name, &a.name);
                }
            }
        }
        // unmatched sends are suspicious but legal
        let mut sends = BTreeSet::new();
        let mut receives = BTreeSet::new();
        for a in &self.components {
            for t in &a.transitions {
                if let Some(e) = &t.event {
                    match e.polarity {
                        Polarity::Send => {
                            sends.insert(e.channel.clone());
                        }
                        Polarity::Receive => {
                            receives.insert(e.channel.clone());
                        }
                        Polarity::Internal => {}
                    }
                }
            }
        }
        for ch in sends.difference(&receives) {
            out.push(Diagnostic::warning(format!(
                "channel `{}` is sent but never received",
                ch
            )));
        }
        out
    }

    /// Per-component location orderings with the initial location first.
    fn component_orders(&self) -> Vec<Vec<&str>> {
        self.components
            .iter()
            .map(|a| {
                let mut order: Vec<&str> = vec![a.initial.as_str()];
                order.extend(
                    a.locations
                        .iter()
                        .map(|l| l.id.as_str())
                        .filter(|id| *id != a.initial),
                );
                order
            })
            .collect()
    }

    /// Cartesian product of the component location sets; the first vector
    /// is the initial location vector.
    pub fn product_locations(&self) -> Result<Vec<Vec<String>>, ModelError> {
        if self.components.is_empty() {
            return Err(ModelError::EmptyNetwork);
        }
        let orders = self.component_orders();
        let mut out: Vec<Vec<String>> = vec![Vec::new()];
        for order in &orders {
            let mut next = Vec::with_capacity(out.len() * order.len());
            for prefix in &out {
                for id in order {
                    let mut v = prefix.clone();
                    v.push((*id).to_string());
                    next.push(v);
                }
            }
            out = next;
        }
        Ok(out)
    }

    pub fn initial_vector(&self) -> Vec<String> {
        self.components.iter().map(|a| a.initial.clone()).collect()
    }

    pub fn max_constant(&self) -> i64 {
        self.components
            .iter()
            .map(|a| a.max_constant())
            .max()
            .unwrap_or(0)
    }
}

/// Join a product location vector into a single location id.
pub fn product_id(ids: &[String]) -> String {
    ids.join(".")
}

/// Expand a network into one timed automaton over product locations.
///
/// Invariants are conjoined component-wise (strengthened invariants when
/// present). Send/receive pairs on the same channel across two distinct
/// components merge into one joint transition; unmatched send or receive
/// transitions block and do not appear.
pub fn compose_product(network: &Network) -> Result<TimedAutomaton, ModelError> {
    if network.components.is_empty() {
        return Err(ModelError::EmptyNetwork);
    }
    let vectors = network.product_locations()?;
    let comps = &network.components;

    let mut locations = Vec::with_capacity(vectors.len());
    for vec in &vectors {
        let mut original = ConstraintSet::truth();
        let mut effective = ConstraintSet::truth();
        for (a, id) in comps.iter().zip(vec) {
            let l = a.location(id).expect("product vector uses declared ids");
            original = original.conjoin(&l.original_invariant);
            effective = effective.conjoin(l.effective_invariant());
        }
        locations.push(Location {
            id: product_id(vec),
            original_invariant: original,
            new_invariant: Some(effective),
        });
    }

    let mut transitions = Vec::new();
    let mut next_id = 0;
    let mut push = |transitions: &mut Vec<Transition>, mut t: Transition| {
        t.id = next_id;
        next_id += 1;
        transitions.push(t);
    };

    for vec in &vectors {
        let source_id = product_id(vec);
        // interleaved transitions of one component
        for (i, a) in comps.iter().enumerate() {
            for t in a.outgoing(&vec[i]) {
                let syncing = matches!(
                    t.event.as_ref().map(|e| e.polarity),
                    Some(Polarity::Send) | Some(Polarity::Receive)
                );
                if syncing {
                    continue;
                }
                let mut target = vec.clone();
                target[i] = t.target.clone();
                push(
                    &mut transitions,
                    Transition {
                        id: 0,
                        source: source_id.clone(),
                        target: product_id(&target),
                        event: t.event.clone(),
                        guard: t.guard.clone(),
                        resets: t.resets.clone(),
                    },
                );
            }
        }
        // rendez-vous pairs
        for (i, ai) in comps.iter().enumerate() {
            for (j, aj) in comps.iter().enumerate() {
                if i == j {
                    continue;
                }
                for ts in ai.outgoing(&vec[i]) {
                    let Some(es) = &ts.event else { continue };
                    if es.polarity != Polarity::Send {
                        continue;
                    }
                    for tr in aj.outgoing(&vec[j]) {
                        let Some(er) = &tr.event else { continue };
                        if er.polarity != Polarity::Receive || er.channel != es.channel {
                            continue;
                        }
                        let mut target = vec.clone();
                        target[i] = ts.target.clone();
                        target[j] = tr.target.clone();
                        let mut resets = ts.resets.clone();
                        resets.extend(tr.resets.iter().cloned());
                        push(
                            &mut transitions,
                            Transition {
                                id: 0,
                                source: source_id.clone(),
                                target: product_id(&target),
                                event: Some(Event {
                                    channel: es.channel.clone(),
                                    polarity: Polarity::Internal,
                                }),
                                guard: ts.guard.conjoin(&tr.guard),
                                resets,
                            },
                        );
                    }
                }
            }
        }
    }

    let name = comps
        .iter()
        .map(|a| a.name.as_str())
        .collect::<Vec<_>>()
        .join("_");
    Ok(TimedAutomaton {
        name,
        initial: product_id(&network.initial_vector()),
        locations,
        events: comps
            .iter()
            .flat_map(|a| a.events.iter().cloned())
            .collect(),
        vars: comps.iter().flat_map(|a| a.vars.iter().cloned()).collect(),
        transitions,
    })
}

/// A configuration of the concrete semantics: one location per component
/// plus a valuation of every variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ConcreteState<S> {
    pub locs: Vec<String>,
    pub valuation: BTreeMap<Var, S>,
}

impl<S: Scalar> ConcreteState<S> {
    /// The all-zero initial state of a network.
    pub fn initial(network: &Network) -> ConcreteState<S> {
        let valuation = network
            .components
            .iter()
            .flat_map(|a| a.vars.iter())
            .map(|v| (v.clone(), S::zero()))
            .collect();
        ConcreteState {
            locs: network.initial_vector(),
            valuation,
        }
    }
}

/// Convenience constructor used across tests and the fuzz harness.
pub fn decl(kind: VarKind, name: &str) -> Var {
    Var {
        name: name.to_string(),
        kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::Atom;

    fn simple(name: &str, n_locs: usize) -> TimedAutomaton {
        TimedAutomaton {
            name: name.to_string(),
            locations: (0..n_locs)
                .map(|i| Location::new(format!("{}{}", "l", i), ConstraintSet::truth()))
                .collect(),
            initial: "l0".to_string(),
            events: BTreeSet::new(),
            vars: vec![],
            transitions: vec![],
        }
    }

    #[test]
    fn validate_flags_undeclared_guard_variable() {
        let mut a = simple("A", 2);
        a.vars = vec![Var::clock("x")];
        a.transitions.push(Transition {
            id: 0,
            source: "l0".into(),
            target: "l1".into(),
            event: None,
            guard: ConstraintSet::from_atoms([Atom::lt(
                LinearTerm::var(Var::clock("z")),
                LinearTerm::var(Var::clock("x")),
            )]),
            resets: vec![],
        });
        let diags = a.validate();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("`z`"));
    }

    #[test]
    fn validate_flags_negative_clock_reset() {
        let mut a = simple("A", 1);
        a.vars = vec![Var::clock("x")];
        a.transitions.push(Transition {
            id: 0,
            source: "l0".into(),
            target: "l0".into(),
            event: None,
            guard: ConstraintSet::truth(),
            resets: vec![(Var::clock("x"), LinearTerm::constant(-1))],
        });
        let diags = a.validate();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("negative clock reset"));
    }

    #[test]
    fn product_locations_counts() {
        let n = Network {
            components: vec![simple("A", 3), simple("B", 2)],
        };
        let prod = n.product_locations().unwrap();
        assert_eq!(prod.len(), 6);
        assert_eq!(prod[0], vec!["l0".to_string(), "l0".to_string()]);

        let single = Network::single(simple("A", 3));
        let prod = single.product_locations().unwrap();
        assert_eq!(prod.len(), 3);
        assert!(prod.iter().all(|v| v.len() == 1));

        let five_by_three = Network {
            components: vec![simple("A", 5), simple("B", 3)],
        };
        assert_eq!(five_by_three.product_locations().unwrap().len(), 15);
    }

    #[test]
    fn product_locations_rejects_empty_network() {
        let n = Network { components: vec![] };
        assert!(matches!(
            n.product_locations(),
            Err(ModelError::EmptyNetwork)
        ));
    }

    #[test]
    fn shared_variable_is_reported() {
        let mut a = simple("A", 1);
        a.vars = vec![Var::clock("x")];
        let mut b = simple("B", 1);
        b.vars = vec![Var::clock("x")];
        let n = Network {
            components: vec![a, b],
        };
        let diags = n.validate();
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Error && d.message.contains("`x`")));
    }
}
