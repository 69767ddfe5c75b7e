//! Invariant strengthening and idle-transition pruning.
//!
//! The entry point is [`cipm`]: a worklist fixpoint that repeatedly
//! removes transitions that can never be enabled and strengthens each
//! location's invariant with the constraints imposed by its incoming
//! transitions. Strengthening is monotone; an iteration bound with a
//! weakening fallback guards against propagation cycles that keep
//! producing strictly stronger bounds (a weaker invariant is still an
//! invariant, so the fallback is sound).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::constraint::{Atom, ConstraintSet, EngineError, LinearTerm, Rel};
use crate::model::{Diagnostic, Network, TimedAutomaton, Transition};

/// Why a transition can never fire.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IdleReason {
    UnsatisfiableGuard,
    GuardContradictsSourceInvariant,
    PostViolatesTargetInvariant,
}

#[derive(Clone, Debug)]
pub struct RemovedTransition {
    pub transition: Transition,
    pub reason: IdleReason,
}

#[derive(Clone, Debug)]
pub struct CipmResult {
    /// The input automaton minus idle transitions, with strengthened
    /// invariants recorded on each location.
    pub pruned: TimedAutomaton,
    pub new_invariants: BTreeMap<String, ConstraintSet>,
    pub removed: Vec<RemovedTransition>,
    pub warnings: Vec<Diagnostic>,
}

/// Decide whether `t` is idle under the given source/target invariants.
pub fn is_idle(
    t: &Transition,
    src_inv: &ConstraintSet,
    tgt_inv: &ConstraintSet,
) -> Result<Option<IdleReason>, EngineError> {
    if !t.guard.satisfiable()? {
        return Ok(Some(IdleReason::UnsatisfiableGuard));
    }
    let enabled = src_inv.conjoin(&t.guard);
    if !enabled.satisfiable()? {
        return Ok(Some(IdleReason::GuardContradictsSourceInvariant));
    }
    let post = enabled.apply_reset(&t.resets)?;
    if !post.conjoin(tgt_inv).satisfiable()? {
        return Ok(Some(IdleReason::PostViolatesTargetInvariant));
    }
    Ok(None)
}

/// The constraint imposed on the target location by entering through `t`
/// and then letting time pass.
pub fn propagate(t: &Transition, src_inv: &ConstraintSet) -> Result<ConstraintSet, EngineError> {
    let post = src_inv.conjoin(&t.guard).apply_reset(&t.resets)?;
    Ok(post.delay_closure())
}

/// Strengthen `original` with the atoms common to every incoming
/// propagation: an atom survives only if each propagation (and the
/// initial condition, when given) entails it.
pub fn location_invariant(
    propagations: &[ConstraintSet],
    original: &ConstraintSet,
    initial_condition: Option<&ConstraintSet>,
) -> Result<ConstraintSet, EngineError> {
    let mut entries: Vec<&ConstraintSet> = propagations.iter().collect();
    if let Some(init) = initial_condition {
        entries.push(init);
    }
    if entries.is_empty() {
        return Ok(original.clone());
    }
    let mut out = original.clone();
    let candidates: BTreeSet<Atom> = entries.iter().flat_map(|s| s.atoms().cloned()).collect();
    'next: for atom in candidates {
        let singleton = ConstraintSet::from_atoms([atom.clone()]);
        for entry in &entries {
            if !entry.entails(&singleton)? {
                continue 'next;
            }
        }
        out.insert(atom);
    }
    Ok(out)
}

/// The delay closure of the all-clocks-zero initial valuation.
fn initial_condition(a: &TimedAutomaton) -> ConstraintSet {
    ConstraintSet::from_atoms(
        a.clocks()
            .map(|v| Atom::new(LinearTerm::var(v.clone()), Rel::Eq)),
    )
    .delay_closure()
}

fn iteration_bound(a: &TimedAutomaton) -> usize {
    let mut atoms = 0;
    for l in &a.locations {
        atoms += l.original_invariant.len();
    }
    for t in &a.transitions {
        atoms += t.guard.len() + t.resets.len();
    }
    a.locations.len() * (1 + atoms)
}

/// Run the full pruning/strengthening fixpoint over one automaton.
pub fn cipm(a: &TimedAutomaton) -> Result<CipmResult, EngineError> {
    let mut inv: BTreeMap<String, ConstraintSet> = a
        .locations
        .iter()
        .map(|l| (l.id.clone(), l.original_invariant.clone()))
        .collect();
    let init_cond = initial_condition(a);
    let mut removed_ids: BTreeSet<usize> = BTreeSet::new();
    let mut removed: Vec<RemovedTransition> = Vec::new();
    let mut warnings: Vec<Diagnostic> = Vec::new();

    let mut queue: VecDeque<String> = a.locations.iter().map(|l| l.id.clone()).collect();
    let mut queued: BTreeSet<String> = queue.iter().cloned().collect();
    let bound = iteration_bound(a);
    let mut iterations = 0usize;
    let mut unstable: BTreeSet<String> = BTreeSet::new();

    while let Some(loc) = queue.pop_front() {
        queued.remove(&loc);
        iterations += 1;
        if iterations > bound {
            // propagation did not settle; fall back to the original
            // invariants for everything still in flight
            unstable.insert(loc.clone());
            unstable.extend(queue.drain(..));
            break;
        }

        // prune idle incoming transitions first
        let incoming: Vec<&Transition> = a
            .incoming(&loc)
            .filter(|t| !removed_ids.contains(&t.id))
            .collect();
        let mut live = Vec::new();
        for t in incoming {
            match is_idle(t, &inv[&t.source], &inv[&loc])? {
                Some(reason) => {
                    removed_ids.insert(t.id);
                    removed.push(RemovedTransition {
                        transition: t.clone(),
                        reason,
                    });
                }
                None => live.push(t),
            }
        }

        let props = live
            .iter()
            .map(|t| propagate(t, &inv[&t.source]))
            .collect::<Result<Vec<_>, _>>()?;
        let init = (loc == a.initial).then_some(&init_cond);
        let original = &a
            .location(&loc)
            .expect("declared location")
            .original_invariant;
        let strengthened = location_invariant(&props, original, init)?;

        // only genuinely new consequences count as change
        let current = inv[&loc].clone();
        let mut changed = false;
        let mut next = current.clone();
        for atom in strengthened.atoms() {
            let singleton = ConstraintSet::from_atoms([atom.clone()]);
            if !current.entails(&singleton)? {
                next.insert(atom.clone());
                changed = true;
            }
        }
        if !changed {
            continue;
        }
        inv.insert(loc.clone(), next);

        // a stronger invariant can idle outgoing transitions and changes
        // what this location propagates onward
        for t in a.outgoing(&loc) {
            if removed_ids.contains(&t.id) {
                continue;
            }
            if let Some(reason) = is_idle(t, &inv[&loc], &inv[&t.target])? {
                removed_ids.insert(t.id);
                removed.push(RemovedTransition {
                    transition: t.clone(),
                    reason,
                });
            }
            if queued.insert(t.target.clone()) {
                queue.push_back(t.target.clone());
            }
        }
    }

    for loc in unstable {
        let original = a.location(&loc).expect("declared location");
        inv.insert(loc.clone(), original.original_invariant.clone());
        warnings.push(Diagnostic::warning(format!(
            "automaton {}: invariant propagation for `{}` did not stabilize within {} iterations; keeping the original invariant",
            a.name, loc, bound
        )));
    }

    let mut pruned = a.clone();
    pruned.transitions.retain(|t| !removed_ids.contains(&t.id));
    for l in &mut pruned.locations {
        l.new_invariant = Some(inv[&l.id].clone());
    }
    for l in &pruned.locations {
        if l.id != pruned.initial && pruned.incoming(&l.id).next().is_none() {
            warnings.push(Diagnostic::warning(format!(
                "automaton {}: location `{}` has no incoming transitions left and is unreachable",
                pruned.name, l.id
            )));
        }
    }

    Ok(CipmResult {
        pruned,
        new_invariants: inv,
        removed,
        warnings,
    })
}

#[derive(Clone, Debug)]
pub struct NetworkCipmResult {
    pub components: Vec<CipmResult>,
    pub pruned: Network,
    /// Invariant of each product location vector, the component-wise
    /// conjunction of the strengthened invariants.
    pub product_invariants: BTreeMap<Vec<String>, ConstraintSet>,
}

impl NetworkCipmResult {
    /// View the pruned network as one product automaton with its
    /// strengthened invariants, ready for abstraction.
    pub fn product(&self) -> Result<CipmResult, crate::model::ModelError> {
        let product = crate::model::compose_product(&self.pruned)?;
        let new_invariants = product
            .locations
            .iter()
            .map(|l| (l.id.clone(), l.effective_invariant().clone()))
            .collect();
        let removed = self
            .components
            .iter()
            .flat_map(|c| c.removed.iter().cloned())
            .collect();
        Ok(CipmResult {
            pruned: product,
            new_invariants,
            removed,
            warnings: Vec::new(),
        })
    }
}

/// Component-wise CIPM over a network.
pub fn cipm_network(n: &Network) -> Result<NetworkCipmResult, EngineError> {
    let components: Vec<CipmResult> = n.components.iter().map(cipm).collect::<Result<_, _>>()?;
    let pruned = Network {
        components: components.iter().map(|c| c.pruned.clone()).collect(),
    };
    let mut product_invariants = BTreeMap::new();
    if let Ok(vectors) = pruned.product_locations() {
        for vec in vectors {
            let mut conj = ConstraintSet::truth();
            for (c, id) in components.iter().zip(&vec) {
                conj = conj.conjoin(&c.new_invariants[id]);
            }
            product_invariants.insert(vec, conj);
        }
    }
    Ok(NetworkCipmResult {
        components,
        pruned,
        product_invariants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::Var;
    use crate::model::Location;

    fn x() -> Var {
        Var::clock("x")
    }
    fn y() -> Var {
        Var::clock("y")
    }
    fn tv(v: Var) -> LinearTerm {
        LinearTerm::var(v)
    }
    fn tc(c: i64) -> LinearTerm {
        LinearTerm::constant(c)
    }

    fn transition(guard: ConstraintSet, resets: Vec<(Var, LinearTerm)>) -> Transition {
        Transition {
            id: 0,
            source: "l0".into(),
            target: "l1".into(),
            event: None,
            guard,
            resets,
        }
    }

    #[test]
    fn idle_when_guard_contradicts_source_invariant() {
        let t = transition(
            ConstraintSet::from_atoms([Atom::le(tv(x()), tv(y()))]),
            vec![],
        );
        let src = ConstraintSet::from_atoms([Atom::lt(tv(y()).add(&tc(3)), tv(x()))]);
        let reason = is_idle(&t, &src, &ConstraintSet::truth()).unwrap();
        assert_eq!(reason, Some(IdleReason::GuardContradictsSourceInvariant));
    }

    #[test]
    fn idle_nothing_to_contradict() {
        let t = transition(ConstraintSet::truth(), vec![]);
        let reason = is_idle(&t, &ConstraintSet::truth(), &ConstraintSet::truth()).unwrap();
        assert_eq!(reason, None);
    }

    #[test]
    fn idle_unsatisfiable_guard() {
        let t = transition(
            ConstraintSet::from_atoms([Atom::lt(tv(x()), tv(x()))]),
            vec![],
        );
        let reason = is_idle(&t, &ConstraintSet::truth(), &ConstraintSet::truth()).unwrap();
        assert_eq!(reason, Some(IdleReason::UnsatisfiableGuard));
    }

    #[test]
    fn propagate_examples() {
        let guard = ConstraintSet::from_atoms([Atom::lt(tv(y()), tv(x()))]);
        let t = transition(guard.clone(), vec![]);
        assert_eq!(propagate(&t, &ConstraintSet::truth()).unwrap(), guard);

        let t = transition(ConstraintSet::truth(), vec![(x(), tc(0))]);
        assert_eq!(
            propagate(&t, &ConstraintSet::truth()).unwrap(),
            ConstraintSet::truth()
        );

        let src = ConstraintSet::from_atoms([Atom::le(tv(x()), tv(y()))]);
        let t = transition(ConstraintSet::truth(), vec![(x(), tc(0))]);
        assert_eq!(propagate(&t, &src).unwrap(), ConstraintSet::truth());
    }

    #[test]
    fn location_invariant_examples() {
        let guard = ConstraintSet::from_atoms([Atom::lt(tv(y()), tv(x()))]);
        let out = location_invariant(std::slice::from_ref(&guard), &ConstraintSet::truth(), None).unwrap();
        assert_eq!(out, guard);

        let original = ConstraintSet::from_atoms([Atom::le(tv(y()), tc(1))]);
        let out = location_invariant(&[], &original, None).unwrap();
        assert_eq!(out, original);

        let a = ConstraintSet::from_atoms([Atom::le(tv(x()), tv(y()))]);
        let b = ConstraintSet::from_atoms([
            Atom::le(tv(x()), tv(y())),
            Atom::eq(tv(Var::int("n")), tc(3)),
        ]);
        let out = location_invariant(&[a.clone(), b], &ConstraintSet::truth(), None).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn cipm_is_a_fixpoint_for_unconstrained_automata() {
        let a = TimedAutomaton {
            name: "A".into(),
            locations: vec![
                Location::new("l0", ConstraintSet::truth()),
                Location::new("l1", ConstraintSet::truth()),
            ],
            initial: "l0".into(),
            events: Default::default(),
            vars: vec![x()],
            transitions: vec![transition(ConstraintSet::truth(), vec![])],
        };
        let r = cipm(&a).unwrap();
        assert!(r.removed.is_empty());
        for l in &a.locations {
            assert_eq!(r.new_invariants[&l.id], l.original_invariant);
        }
    }

    #[test]
    fn cipm_removes_unsatisfiable_guard_transition() {
        let mut a = TimedAutomaton {
            name: "A".into(),
            locations: vec![
                Location::new("l0", ConstraintSet::truth()),
                Location::new("l1", ConstraintSet::truth()),
            ],
            initial: "l0".into(),
            events: Default::default(),
            vars: vec![x()],
            transitions: vec![
                transition(ConstraintSet::truth(), vec![]),
                transition(
                    ConstraintSet::from_atoms([Atom::lt(tv(x()), tv(x()))]),
                    vec![],
                ),
            ],
        };
        a.transitions[1].id = 1;
        let r = cipm(&a).unwrap();
        assert_eq!(r.removed.len(), 1);
        assert_eq!(r.removed[0].reason, IdleReason::UnsatisfiableGuard);
        assert_eq!(r.pruned.transitions.len(), 1);
        assert_eq!(r.pruned.transitions[0].id, 0);
    }
}
