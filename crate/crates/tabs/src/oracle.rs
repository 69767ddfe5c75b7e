//! Brute-force discretized explorer of the concrete semantics.
//!
//! Time is sampled at a fixed granularity and exploration never takes a
//! delay step that would push a clock past the ceiling, so every state
//! in the result is reached by a genuine timed execution (a finite
//! under-approximation of dense time). Atoms are evaluated by direct
//! arithmetic on rational valuations, deliberately not routed through
//! the constraint engine, so the two can cross-validate each other.

use std::collections::{BTreeSet, VecDeque};

use crate::model::{ConcreteState, Network, Polarity, TimedAutomaton, Transition};
use crate::Rat;

#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    /// Time step; 1/2 suffices for integer constants.
    pub granularity: Rat,
    /// No delay step may push a clock beyond this value.
    pub clock_ceiling: Rat,
    /// Integer variables saturate at +/- this bound.
    pub int_bound: i64,
    /// Explored-state ceiling; exceeding it truncates the result.
    pub step_bound: usize,
}

impl OracleConfig {
    /// Defaults derived from the model's largest constant.
    pub fn for_network(n: &Network) -> OracleConfig {
        let m = n.max_constant();
        OracleConfig {
            granularity: Rat::new(1, 2),
            clock_ceiling: Rat::from_integer(m + 2),
            int_bound: m + 2,
            step_bound: 100_000,
        }
    }
}

/// Identity of a fired transition: component index plus transition id.
pub type TransitionId = (usize, usize);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum StepKind {
    Delay,
    Discrete(TransitionId),
    Sync(TransitionId, TransitionId),
}

impl StepKind {
    pub fn transition_ids(&self) -> Vec<TransitionId> {
        match self {
            StepKind::Delay => vec![],
            StepKind::Discrete(t) => vec![*t],
            StepKind::Sync(s, r) => vec![*s, *r],
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct OracleResult {
    pub reachable: BTreeSet<ConcreteState<Rat>>,
    pub fired: BTreeSet<TransitionId>,
    pub witnessed_steps: BTreeSet<(ConcreteState<Rat>, ConcreteState<Rat>, StepKind)>,
    /// Exploration hit the step bound; downstream checks must treat the
    /// result as inconclusive, never as a pass.
    pub truncated: bool,
    /// An integer variable hit its saturation bound.
    pub int_saturated: bool,
}

#[derive(Debug, thiserror::Error)]
#[error("oracle exploration truncated; result is inconclusive")]
pub struct Inconclusive;

fn invariants_hold(n: &Network, state: &ConcreteState<Rat>) -> bool {
    n.components.iter().zip(&state.locs).all(|(a, loc)| {
        a.location(loc)
            .map(|l| l.original_invariant.eval(&state.valuation))
            .unwrap_or(false)
    })
}

/// Apply the resets of one or two transitions to a valuation, with
/// integer saturation. Returns the new valuation and whether saturation
/// was hit.
fn apply_resets(
    state: &ConcreteState<Rat>,
    transitions: &[&Transition],
    cfg: &OracleConfig,
) -> (
    std::collections::BTreeMap<crate::constraint::Var, Rat>,
    bool,
) {
    let mut out = state.valuation.clone();
    let mut saturated = false;
    for t in transitions {
        for (v, value) in &t.resets {
            let mut new = value.eval(&state.valuation);
            if !v.is_clock() {
                let bound = Rat::from_integer(cfg.int_bound);
                if new > bound {
                    new = bound;
                    saturated = true;
                } else if new < -bound {
                    new = -bound;
                    saturated = true;
                }
            }
            out.insert(v.clone(), new);
        }
    }
    (out, saturated)
}

/// Breadth-first exploration of the discretized semantics.
pub fn explore(n: &Network, cfg: &OracleConfig) -> OracleResult {
    let mut result = OracleResult::default();
    let initial: ConcreteState<Rat> = ConcreteState::initial(n);
    if !invariants_hold(n, &initial) {
        return result;
    }

    let mut frontier = VecDeque::new();
    result.reachable.insert(initial.clone());
    frontier.push_back(initial);

    while let Some(state) = frontier.pop_front() {
        if result.reachable.len() >= cfg.step_bound {
            result.truncated = true;
            break;
        }
        let mut successors: Vec<(ConcreteState<Rat>, StepKind)> = Vec::new();

        // delay by one granularity, skipped at the ceiling
        let fits = state
            .valuation
            .iter()
            .filter(|(v, _)| v.is_clock())
            .all(|(_, x)| *x + cfg.granularity <= cfg.clock_ceiling);
        if fits {
            let mut delayed = state.clone();
            for (v, x) in delayed.valuation.iter_mut() {
                if v.is_clock() {
                    *x += cfg.granularity;
                }
            }
            if invariants_hold(n, &delayed) {
                successors.push((delayed, StepKind::Delay));
            }
        }

        // discrete steps of one component
        for (i, a) in n.components.iter().enumerate() {
            for t in a.outgoing(&state.locs[i]) {
                let syncing = matches!(
                    t.event.as_ref().map(|e| e.polarity),
                    Some(Polarity::Send) | Some(Polarity::Receive)
                );
                if syncing || !t.guard.eval(&state.valuation) {
                    continue;
                }
                let (valuation, saturated) = apply_resets(&state, &[t], cfg);
                result.int_saturated |= saturated;
                let mut locs = state.locs.clone();
                locs[i] = t.target.clone();
                let next = ConcreteState { locs, valuation };
                if invariants_hold(n, &next) {
                    successors.push((next, StepKind::Discrete((i, t.id))));
                }
            }
        }

        // rendez-vous synchronization between two distinct components
        for (i, ai) in n.components.iter().enumerate() {
            for (j, aj) in n.components.iter().enumerate() {
                if i == j {
                    continue;
                }
                for ts in ai.outgoing(&state.locs[i]) {
                    let Some(es) = &ts.event else { continue };
                    if es.polarity != Polarity::Send || !ts.guard.eval(&state.valuation) {
                        continue;
                    }
                    for tr in aj.outgoing(&state.locs[j]) {
                        let Some(er) = &tr.event else { continue };
                        if er.polarity != Polarity::Receive
                            || er.channel != es.channel
                            || !tr.guard.eval(&state.valuation)
                        {
                            continue;
                        }
                        let (valuation, saturated) = apply_resets(&state, &[ts, tr], cfg);
                        result.int_saturated |= saturated;
                        let mut locs = state.locs.clone();
                        locs[i] = ts.target.clone();
                        locs[j] = tr.target.clone();
                        let next = ConcreteState { locs, valuation };
                        if invariants_hold(n, &next) {
                            successors.push((next, StepKind::Sync((i, ts.id), (j, tr.id))));
                        }
                    }
                }
            }
        }

        for (next, kind) in successors {
            result.fired.extend(kind.transition_ids());
            result
                .witnessed_steps
                .insert((state.clone(), next.clone(), kind));
            if result.reachable.insert(next.clone()) {
                frontier.push_back(next);
            }
        }
    }
    result
}

/// Explore a single automaton as a one-component network.
pub fn explore_automaton(a: &TimedAutomaton, cfg: &OracleConfig) -> OracleResult {
    explore(&Network::single(a.clone()), cfg)
}

/// True iff the two networks reach the same states and witness the same
/// steps over the transitions they have in common.
pub fn diff_reachability_networks(
    n1: &Network,
    n2: &Network,
    cfg: &OracleConfig,
) -> Result<bool, Inconclusive> {
    let r1 = explore(n1, cfg);
    let r2 = explore(n2, cfg);
    if r1.truncated || r2.truncated {
        return Err(Inconclusive);
    }
    if r1.reachable != r2.reachable {
        return Ok(false);
    }
    let ids = |n: &Network| -> BTreeSet<TransitionId> {
        n.components
            .iter()
            .enumerate()
            .flat_map(|(i, a)| a.transitions.iter().map(move |t| (i, t.id)))
            .collect()
    };
    let shared: BTreeSet<TransitionId> = ids(n1).intersection(&ids(n2)).copied().collect();
    let filter = |r: &OracleResult| -> BTreeSet<_> {
        r.witnessed_steps
            .iter()
            .filter(|(_, _, kind)| kind.transition_ids().iter().all(|id| shared.contains(id)))
            .cloned()
            .collect()
    };
    Ok(filter(&r1) == filter(&r2))
}

/// Single-automaton view of [`diff_reachability_networks`].
pub fn diff_reachability(
    a1: &TimedAutomaton,
    a2: &TimedAutomaton,
    cfg: &OracleConfig,
) -> Result<bool, Inconclusive> {
    diff_reachability_networks(
        &Network::single(a1.clone()),
        &Network::single(a2.clone()),
        cfg,
    )
}
