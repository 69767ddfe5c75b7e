//! Property-based invariants of the constraint engine, the delay
//! closure, cubes, and the surface syntax.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use common::{automaton_for_seed, constraint_set_for_seed};
use tabs::constraint::{cube_to_constraints, Cube, Var};
use tabs::format::{parse, pretty_print_network};
use tabs::model::Network;
use tabs::Rat;

fn grid_points(vars: &[Var]) -> Vec<BTreeMap<Var, Rat>> {
    let mut points = vec![BTreeMap::new()];
    for v in vars {
        let values: Vec<Rat> = if v.is_clock() {
            (0..=12).map(|k| Rat::new(k, 2)).collect()
        } else {
            (-4..=4).map(Rat::from_integer).collect()
        };
        points = points
            .into_iter()
            .flat_map(|p: BTreeMap<Var, Rat>| {
                values.iter().map(move |q| {
                    let mut p = p.clone();
                    p.insert(v.clone(), *q);
                    p
                })
            })
            .collect();
    }
    points
}

fn all_vars() -> Vec<Var> {
    vec![Var::clock("x"), Var::clock("y"), Var::int("n")]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complement_is_an_involution(seed in any::<u64>()) {
        let set = constraint_set_for_seed(seed);
        for atom in set.atoms() {
            prop_assert_eq!(&atom.complement().complement(), atom);
        }
    }

    #[test]
    fn atom_and_complement_partition_every_point(seed in any::<u64>()) {
        let set = constraint_set_for_seed(seed);
        for point in grid_points(&all_vars()) {
            for atom in set.atoms() {
                prop_assert!(atom.eval(&point) != atom.complement().eval(&point));
            }
        }
    }

    #[test]
    fn entailment_is_reflexive_and_covers_subsets(seed in any::<u64>()) {
        let set = constraint_set_for_seed(seed);
        prop_assert!(set.entails(&set).unwrap());
        let first = set.atoms().next().cloned();
        if let Some(first) = first {
            let subset = tabs::ConstraintSet::from_atoms([first]);
            prop_assert!(set.entails(&subset).unwrap());
        }
    }

    #[test]
    fn delay_closure_is_stable_under_time_passing(seed in any::<u64>()) {
        let set = constraint_set_for_seed(seed);
        let closed = set.delay_closure();
        for point in grid_points(&all_vars()) {
            if !set.eval(&point) {
                continue;
            }
            for d in [Rat::new(1, 2), Rat::from_integer(1), Rat::from_integer(3)] {
                let mut shifted = point.clone();
                for (v, x) in shifted.iter_mut() {
                    if v.is_clock() {
                        *x += d;
                    }
                }
                prop_assert!(
                    closed.eval(&shifted),
                    "{} + {} escapes delay closure {}",
                    set, d, closed
                );
            }
        }
    }

    #[test]
    fn elimination_projects_every_satisfying_point(seed in any::<u64>(), pick in 0usize..3) {
        let set = constraint_set_for_seed(seed);
        let victim = all_vars()[pick].clone();
        let eliminated = set.eliminate(&victim).unwrap();
        for point in grid_points(&all_vars()) {
            if set.eval(&point) {
                prop_assert!(eliminated.eval(&point));
            }
        }
    }

    #[test]
    fn cubes_partition_the_space(seed in any::<u64>()) {
        let set = constraint_set_for_seed(seed);
        let predicates: Vec<_> = set.atoms().cloned().collect();
        for point in grid_points(&all_vars()).into_iter().step_by(97) {
            let mut holders = 0;
            for mask in 0u32..(1 << predicates.len()) {
                let cube = Cube::new(
                    predicates
                        .iter()
                        .enumerate()
                        .map(|(i, p)| (p.clone(), mask & (1 << i) == 0))
                        .collect(),
                );
                if cube_to_constraints(&cube).eval(&point) {
                    holders += 1;
                }
            }
            prop_assert_eq!(holders, 1);
        }
    }

    #[test]
    fn parse_print_parse_is_identity(seed in any::<u64>()) {
        let a = automaton_for_seed(seed);
        let network = Network::single(a);
        let printed = pretty_print_network(&network);
        let reparsed = parse(&printed, "prop.ta").unwrap().network;
        prop_assert_eq!(&network, &reparsed, "printed form:\n{}", printed);
        let printed_again = pretty_print_network(&reparsed);
        prop_assert_eq!(printed, printed_again);
    }

    #[test]
    fn satisfiability_is_deterministic(seed in any::<u64>()) {
        let set = constraint_set_for_seed(seed);
        let first = set.satisfiable().unwrap();
        for _ in 0..3 {
            prop_assert_eq!(set.satisfiable().unwrap(), first);
        }
    }
}
