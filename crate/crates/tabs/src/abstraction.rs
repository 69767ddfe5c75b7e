//! Cube-based predicate abstraction over CIPM invariants.
//!
//! Abstract states pair a location with a cube over the predicates the
//! location does not already own as invariant atoms. A transition
//! between abstract states exists iff one combined satisfiability query
//! over a shared pre-state vector has a witness: for discrete steps the
//! target conjunct is pulled back through the resets, for delay steps
//! every clock in the target conjunct is shifted by a fresh nonnegative
//! delay amount. Conjunctive linear constraint sets are convex, so
//! endpoint satisfaction of the location invariant discharges the
//! whole-interval requirement of delay transitions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::cipm::CipmResult;
use crate::constraint::{Atom, ConstraintSet, Cube, EngineError, LinearTerm, Rel, Var, VarKind};
use crate::model::{product_id, ConcreteState, TimedAutomaton};
use crate::oracle::OracleResult;
use crate::Rat;

/// The global predicate set `I` with per-location ownership.
#[derive(Clone, Debug)]
pub struct PredicatePool {
    pub predicates: Vec<Atom>,
    pub names: Vec<String>,
    pub per_location: BTreeMap<String, BTreeSet<usize>>,
}

impl PredicatePool {
    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.predicates.iter().position(|p| p == atom)
    }

    /// Predicate indices not owned by `location`, ascending.
    pub fn free_for(&self, location: &str) -> Vec<usize> {
        let owned = self.per_location.get(location);
        (0..self.predicates.len())
            .filter(|i| owned.is_none_or(|o| !o.contains(i)))
            .collect()
    }
}

/// Collect `I` as the union of all strengthened invariant atoms, in
/// location-declaration order, deduplicated under the normal form.
pub fn predicate_pool(r: &CipmResult) -> PredicatePool {
    let mut predicates = Vec::new();
    let mut per_location = BTreeMap::new();
    for l in &r.pruned.locations {
        let mut owned = BTreeSet::new();
        for atom in r.new_invariants[&l.id].atoms() {
            let idx = match predicates.iter().position(|p| p == atom) {
                Some(idx) => idx,
                None => {
                    predicates.push(atom.clone());
                    predicates.len() - 1
                }
            };
            owned.insert(idx);
        }
        per_location.insert(l.id.clone(), owned);
    }
    let names = (0..predicates.len()).map(|i| format!("p{}", i)).collect();
    PredicatePool {
        predicates,
        names,
        per_location,
    }
}

/// One abstract state `[l, q]`: a location plus a signed assignment to
/// every predicate the location does not own.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AbstractState {
    pub location: String,
    pub cube: Vec<(usize, bool)>,
}

impl AbstractState {
    pub fn cube_constraints(&self, pool: &PredicatePool) -> ConstraintSet {
        Cube::new(
            self.cube
                .iter()
                .map(|(i, sign)| (pool.predicates[*i].clone(), *sign))
                .collect(),
        )
        .to_constraints()
    }

    /// `Ia(l) ∧ q`, the concretization formula of this state.
    pub fn formula(
        &self,
        pool: &PredicatePool,
        invariants: &BTreeMap<String, ConstraintSet>,
    ) -> ConstraintSet {
        invariants[&self.location].conjoin(&self.cube_constraints(pool))
    }

    pub fn label(&self, pool: &PredicatePool) -> String {
        let cube = self
            .cube
            .iter()
            .map(|(i, sign)| {
                if *sign {
                    pool.names[*i].clone()
                } else {
                    format!("!{}", pool.names[*i])
                }
            })
            .collect::<Vec<_>>()
            .join(" ");
        if cube.is_empty() {
            format!("({})", self.location)
        } else {
            format!("({}, {})", self.location, cube)
        }
    }
}

impl fmt::Display for AbstractState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.location)?;
        for (i, sign) in &self.cube {
            write!(f, " {}{}", if *sign { "+" } else { "-" }, i)?;
        }
        write!(f, "]")
    }
}

/// All cubes over `I \ Ia(l)` whose conjunction with `Ia(l)` is
/// satisfiable, in deterministic enumeration order (all-positive first).
pub fn feasible_cubes(
    location: &str,
    invariant: &ConstraintSet,
    pool: &PredicatePool,
) -> Result<Vec<Vec<(usize, bool)>>, EngineError> {
    let free = pool.free_for(location);
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << free.len()) {
        let cube: Vec<(usize, bool)> = free
            .iter()
            .enumerate()
            .map(|(bit, idx)| (*idx, mask & (1 << bit) == 0))
            .collect();
        let state = AbstractState {
            location: location.to_string(),
            cube,
        };
        if invariant
            .conjoin(&state.cube_constraints(pool))
            .satisfiable()?
        {
            out.push(state.cube);
        }
    }
    Ok(out)
}

/// Every feasible abstract state, grouped by location declaration order.
pub fn abstract_states(
    r: &CipmResult,
    pool: &PredicatePool,
) -> Result<Vec<AbstractState>, EngineError> {
    let mut out = Vec::new();
    for l in &r.pruned.locations {
        for cube in feasible_cubes(&l.id, &r.new_invariants[&l.id], pool)? {
            out.push(AbstractState {
                location: l.id.clone(),
                cube,
            });
        }
    }
    Ok(out)
}

fn delay_var() -> Var {
    // '#' cannot appear in parsed identifiers
    Var {
        name: "#delay".to_string(),
        kind: VarKind::Int,
    }
}

/// Decide whether the abstraction has an edge from `src` to `dst`,
/// using the transitions of `a` plus the delay rule.
pub fn abstract_transition_exists(
    src: &AbstractState,
    dst: &AbstractState,
    a: &TimedAutomaton,
    pool: &PredicatePool,
    invariants: &BTreeMap<String, ConstraintSet>,
) -> Result<bool, EngineError> {
    let src_formula = src.formula(pool, invariants);
    let dst_formula = dst.formula(pool, invariants);

    // discrete case: one query per connecting transition, with the
    // target conjunct pulled back through the resets
    for t in a.outgoing(&src.location) {
        if t.target != dst.location {
            continue;
        }
        let reset_map: BTreeMap<Var, LinearTerm> = t.resets.iter().cloned().collect();
        let pulled = dst_formula.subst(&reset_map);
        let query = src_formula.conjoin(&t.guard).conjoin(&pulled);
        if query.satisfiable()? {
            return Ok(true);
        }
    }

    // delay case: shift every clock in the target conjunct by d >= 0
    if src.location == dst.location {
        let d = delay_var();
        let shift: BTreeMap<Var, LinearTerm> = a
            .clocks()
            .map(|v| {
                (
                    v.clone(),
                    LinearTerm::var(v.clone()).add(&LinearTerm::var(d.clone())),
                )
            })
            .collect();
        let mut query = src_formula.conjoin(&dst_formula.subst(&shift));
        query.insert(Atom::new(LinearTerm::var(d).neg(), Rel::Le));
        if query.satisfiable()? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The successor set of `s` among `states`.
pub fn next_states<'a>(
    s: &AbstractState,
    states: &'a [AbstractState],
    a: &TimedAutomaton,
    pool: &PredicatePool,
    invariants: &BTreeMap<String, ConstraintSet>,
) -> Result<BTreeSet<&'a AbstractState>, EngineError> {
    let mut out = BTreeSet::new();
    for candidate in states {
        if abstract_transition_exists(s, candidate, a, pool, invariants)? {
            out.insert(candidate);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Stats {
    pub abstract_states: u64,
    pub reachable: u64,
    /// Satisfiable cubes over all of `I` times the location count: the
    /// abstraction one would get without pairing locations with their
    /// own invariants.
    pub naive_paired: u64,
    /// `|L| * 2^|I|`: no pairing and no satisfiability filter.
    pub naive_unfiltered: u64,
    pub pruned_transitions: u64,
}

#[derive(Clone, Debug)]
pub struct AbstractAutomaton {
    pub states: Vec<AbstractState>,
    pub initial: Vec<usize>,
    pub transitions: BTreeSet<(usize, usize)>,
    pub reachable: BTreeSet<usize>,
    pub stats: Stats,
    pub pool: PredicatePool,
    pub invariants: BTreeMap<String, ConstraintSet>,
}

impl AbstractAutomaton {
    pub fn index_of(&self, state: &AbstractState) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    /// The abstract image of a concrete valuation at `location`, by
    /// direct evaluation of every free predicate.
    pub fn image_of(&self, location: &str, valuation: &BTreeMap<Var, Rat>) -> AbstractState {
        let cube = self
            .pool
            .free_for(location)
            .into_iter()
            .map(|i| (i, self.pool.predicates[i].eval(valuation)))
            .collect();
        AbstractState {
            location: location.to_string(),
            cube,
        }
    }
}

fn count_naive(r: &CipmResult, pool: &PredicatePool) -> Result<(u64, u64), EngineError> {
    let n_locs = r.pruned.locations.len() as u64;
    let n_preds = pool.predicates.len() as u32;
    let unfiltered = n_locs.saturating_mul(1u64 << n_preds.min(63));
    let mut sat_cubes = 0u64;
    for mask in 0u64..(1u64 << n_preds) {
        let cube = Cube::new(
            pool.predicates
                .iter()
                .enumerate()
                .map(|(bit, p)| (p.clone(), mask & (1 << bit) == 0))
                .collect(),
        );
        if cube.to_constraints().satisfiable()? {
            sat_cubes += 1;
        }
    }
    Ok((n_locs * sat_cubes, unfiltered))
}

/// Assemble the full abstraction of `a` under the invariants of `r`.
///
/// `a` is usually `r.pruned`; passing the unpruned original instead
/// yields the abstraction of the input model for equivalence checks.
pub fn build_abstraction(
    r: &CipmResult,
    a: &TimedAutomaton,
) -> Result<AbstractAutomaton, EngineError> {
    let pool = predicate_pool(r);
    let states = abstract_states(r, &pool)?;
    let invariants = r.new_invariants.clone();

    let zero_clocks = ConstraintSet::from_atoms(
        a.clocks()
            .map(|v| Atom::new(LinearTerm::var(v.clone()), Rel::Eq)),
    );
    let mut initial = Vec::new();
    for (i, s) in states.iter().enumerate() {
        if s.location != a.initial {
            continue;
        }
        if s.formula(&pool, &invariants)
            .conjoin(&zero_clocks)
            .satisfiable()?
        {
            initial.push(i);
        }
    }

    let mut transitions = BTreeSet::new();
    for (i, si) in states.iter().enumerate() {
        for (j, sj) in states.iter().enumerate() {
            if abstract_transition_exists(si, sj, a, &pool, &invariants)? {
                transitions.insert((i, j));
            }
        }
    }

    let mut reachable: BTreeSet<usize> = initial.iter().copied().collect();
    let mut frontier: VecDeque<usize> = initial.iter().copied().collect();
    while let Some(i) = frontier.pop_front() {
        for (from, to) in transitions.range((i, 0)..=(i, usize::MAX)) {
            debug_assert_eq!(*from, i);
            if reachable.insert(*to) {
                frontier.push_back(*to);
            }
        }
    }

    let (naive_paired, naive_unfiltered) = count_naive(r, &pool)?;
    let stats = Stats {
        abstract_states: states.len() as u64,
        reachable: reachable.len() as u64,
        naive_paired,
        naive_unfiltered,
        pruned_transitions: r.removed.len() as u64,
    };

    Ok(AbstractAutomaton {
        states,
        initial,
        transitions,
        reachable,
        stats,
        pool,
        invariants,
    })
}

/// Findings of the concrete-to-abstract simulation check.
#[derive(Clone, Debug, Default)]
pub struct SimulationReport {
    /// Concrete states violating their location's strengthened invariant.
    pub invariant_violations: Vec<String>,
    /// Concrete states whose abstract image is not a listed state.
    pub missing_states: Vec<String>,
    /// Concrete states whose abstract image is not reachable.
    pub unreachable_images: Vec<String>,
    /// Witnessed concrete steps without an abstract counterpart edge.
    pub missing_transitions: Vec<String>,
}

impl SimulationReport {
    pub fn is_clean(&self) -> bool {
        self.invariant_violations.is_empty()
            && self.missing_states.is_empty()
            && self.unreachable_images.is_empty()
            && self.missing_transitions.is_empty()
    }
}

fn describe_state(s: &ConcreteState<Rat>) -> String {
    let vals = s
        .valuation
        .iter()
        .map(|(v, x)| format!("{}={}", v.name, x))
        .collect::<Vec<_>>()
        .join(", ");
    format!("<{}; {}>", s.locs.join(","), vals)
}

/// Check that every oracle-reachable configuration and every witnessed
/// concrete step has a reachable counterpart in the abstraction.
pub fn simulate_check(abst: &AbstractAutomaton, oracle: &OracleResult) -> SimulationReport {
    let mut report = SimulationReport::default();
    let index: BTreeMap<&AbstractState, usize> = abst
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();

    let image_index = |s: &ConcreteState<Rat>, report: &mut SimulationReport| -> Option<usize> {
        let lid = product_id(&s.locs);
        if !abst.invariants[&lid].eval(&s.valuation) {
            report.invariant_violations.push(format!(
                "{} violates invariant of {}",
                describe_state(s),
                lid
            ));
            return None;
        }
        let image = abst.image_of(&lid, &s.valuation);
        match index.get(&image) {
            Some(i) => Some(*i),
            None => {
                report.missing_states.push(format!(
                    "{} maps to unlisted abstract state {}",
                    describe_state(s),
                    image
                ));
                None
            }
        }
    };

    for s in &oracle.reachable {
        if let Some(i) = image_index(s, &mut report) {
            if !abst.reachable.contains(&i) {
                report.unreachable_images.push(format!(
                    "{} maps to unreachable abstract state {}",
                    describe_state(s),
                    abst.states[i].label(&abst.pool)
                ));
            }
        }
    }

    for (from, to, kind) in &oracle.witnessed_steps {
        let (Some(i), Some(j)) = (image_index(from, &mut report), image_index(to, &mut report))
        else {
            continue;
        };
        if !abst.transitions.contains(&(i, j)) {
            report.missing_transitions.push(format!(
                "{:?} step {} -> {} has no abstract edge {} -> {}",
                kind,
                describe_state(from),
                describe_state(to),
                abst.states[i].label(&abst.pool),
                abst.states[j].label(&abst.pool)
            ));
        }
    }
    report
}
