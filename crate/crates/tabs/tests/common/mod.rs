#![allow(dead_code)]

//! Shared random-model generator for the integration suites.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tabs::constraint::{Atom, ConstraintSet, LinearTerm, Rel, Var};
use tabs::model::{Location, TimedAutomaton, Transition};

pub fn gen_atom(rng: &mut ChaCha8Rng, clocks: &[Var], ints: &[Var]) -> Atom {
    let rel = match rng.gen_range(0..4) {
        0 => Rel::Le,
        1 => Rel::Lt,
        2 => Rel::Le,
        _ => Rel::Lt,
    };
    let c = LinearTerm::constant(rng.gen_range(-4..=4));
    match rng.gen_range(0..5) {
        // clock upper bound
        0 | 1 if !clocks.is_empty() => {
            let x = &clocks[rng.gen_range(0..clocks.len())];
            let c = LinearTerm::constant(rng.gen_range(0..=4));
            Atom::new(LinearTerm::var(x.clone()).sub(&c), rel)
        }
        // clock lower bound
        2 if !clocks.is_empty() => {
            let x = &clocks[rng.gen_range(0..clocks.len())];
            let c = LinearTerm::constant(rng.gen_range(0..=4));
            Atom::new(c.sub(&LinearTerm::var(x.clone())), rel)
        }
        // clock difference
        3 if clocks.len() >= 2 => {
            let x = LinearTerm::var(clocks[0].clone());
            let y = LinearTerm::var(clocks[1].clone());
            Atom::new(x.sub(&y).sub(&c), rel)
        }
        // integer bound
        _ if !ints.is_empty() => {
            let n = &ints[0];
            let rel = if rng.gen_range(0..8) == 0 {
                Rel::Eq
            } else {
                rel
            };
            Atom::new(LinearTerm::var(n.clone()).sub(&c), rel)
        }
        _ => Atom::new(LinearTerm::constant(0), Rel::Le),
    }
}

pub fn gen_automaton(rng: &mut ChaCha8Rng, idx: usize) -> TimedAutomaton {
    let n_locs = rng.gen_range(1..=4);
    let n_clocks = rng.gen_range(0..=2);
    let n_ints = rng.gen_range(0..=1);
    let clocks: Vec<Var> = (0..n_clocks).map(|i| Var::clock(format!("x{i}"))).collect();
    let ints: Vec<Var> = (0..n_ints).map(|i| Var::int(format!("n{i}"))).collect();
    let mut vars = clocks.clone();
    vars.extend(ints.clone());

    let locations: Vec<Location> = (0..n_locs)
        .map(|i| {
            let n_atoms = rng.gen_range(0..=1);
            let inv =
                ConstraintSet::from_atoms((0..n_atoms).map(|_| gen_atom(rng, &clocks, &ints)));
            Location::new(format!("l{i}"), inv)
        })
        .collect();

    let n_trans = rng.gen_range(0..=4);
    let transitions: Vec<Transition> = (0..n_trans)
        .map(|id| {
            let guard = ConstraintSet::from_atoms(
                (0..rng.gen_range(0..=1)).map(|_| gen_atom(rng, &clocks, &ints)),
            );
            let mut resets = Vec::new();
            for x in &clocks {
                if rng.gen_range(0..3) == 0 {
                    resets.push((x.clone(), LinearTerm::constant(rng.gen_range(0..=2))));
                }
            }
            for n in &ints {
                if rng.gen_range(0..3) == 0 {
                    let value = if rng.gen_range(0..2) == 0 {
                        LinearTerm::constant(rng.gen_range(-2..=2))
                    } else {
                        LinearTerm::var(n.clone()).add(&LinearTerm::constant(rng.gen_range(-2..=2)))
                    };
                    resets.push((n.clone(), value));
                }
            }
            Transition {
                id,
                source: format!("l{}", rng.gen_range(0..n_locs)),
                target: format!("l{}", rng.gen_range(0..n_locs)),
                event: None,
                guard,
                resets,
            }
        })
        .collect();

    let a = TimedAutomaton {
        name: format!("F{idx}"),
        locations,
        initial: "l0".into(),
        events: BTreeSet::new(),
        vars,
        transitions,
    };
    assert!(
        a.validate()
            .iter()
            .all(|d| d.severity != tabs::model::Severity::Error),
        "generator produced an invalid automaton"
    );
    a
}

pub fn corpus() -> Vec<TimedAutomaton> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1A0_0001);
    (0..200).map(|i| gen_automaton(&mut rng, i)).collect()
}

/// One deterministic automaton per seed, for property tests.
pub fn automaton_for_seed(seed: u64) -> TimedAutomaton {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_automaton(&mut rng, 0)
}

/// One deterministic constraint set per seed, over two clocks and one
/// integer variable.
pub fn constraint_set_for_seed(seed: u64) -> ConstraintSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clocks = [Var::clock("x"), Var::clock("y")];
    let ints = [Var::int("n")];
    ConstraintSet::from_atoms((0..rng.gen_range(1..=4)).map(|_| gen_atom(&mut rng, &clocks, &ints)))
}
