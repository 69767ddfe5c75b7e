//! Conjunctive linear constraints over clocks and integer variables.
//!
//! Atoms are kept in the normal form `term rel 0` with `rel` one of
//! `<=`, `<`, `==` (plus `!=`, which only arises from negating an
//! equality inside a cube). Satisfiability is decided over the rationals
//! by Fourier-Motzkin elimination with strict/non-strict bookkeeping;
//! clocks are implicitly nonnegative. UNSAT over the rationals implies
//! UNSAT over the integers, so pruning decisions based on this engine
//! stay sound for integer-valued variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;

use crate::scalar::Scalar;

/// Atom-count ceiling for Fourier-Motzkin intermediate results.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_atoms: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_atoms: 1_000_000,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("constraint blow-up: {atoms} atoms exceed the ceiling of {ceiling}")]
    ResourceExceeded { atoms: usize, ceiling: usize },
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum VarKind {
    Clock,
    Int,
}

/// A declared variable. The kind rides along in the identity so that
/// constraint operations know which variables advance with time.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
}

impl Var {
    pub fn clock(name: impl Into<String>) -> Var {
        Var {
            name: name.into(),
            kind: VarKind::Clock,
        }
    }

    pub fn int(name: impl Into<String>) -> Var {
        Var {
            name: name.into(),
            kind: VarKind::Int,
        }
    }

    pub fn is_clock(&self) -> bool {
        self.kind == VarKind::Clock
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `constant + sum of coeff * var` with integer coefficients.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct LinearTerm {
    pub constant: i64,
    coeffs: BTreeMap<Var, i64>,
}

impl LinearTerm {
    pub fn zero() -> LinearTerm {
        LinearTerm::default()
    }

    pub fn constant(c: i64) -> LinearTerm {
        LinearTerm {
            constant: c,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn var(v: Var) -> LinearTerm {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, 1);
        LinearTerm {
            constant: 0,
            coeffs,
        }
    }

    pub fn scaled_var(c: i64, v: Var) -> LinearTerm {
        let mut t = LinearTerm::zero();
        t.add_coeff(v, c);
        t
    }

    pub fn coeff(&self, v: &Var) -> i64 {
        self.coeffs.get(v).copied().unwrap_or(0)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Var, i64)> {
        self.coeffs.iter().map(|(v, c)| (v, *c))
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.coeffs.contains_key(v)
    }

    fn add_coeff(&mut self, v: Var, c: i64) {
        if c == 0 {
            return;
        }
        match self.coeffs.entry(v) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0 {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &LinearTerm) -> LinearTerm {
        let mut out = self.clone();
        out.constant += other.constant;
        for (v, c) in other.coeffs() {
            out.add_coeff(v.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &LinearTerm) -> LinearTerm {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, k: i64) -> LinearTerm {
        if k == 0 {
            return LinearTerm::zero();
        }
        LinearTerm {
            constant: self.constant * k,
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, c)| (v.clone(), c * k))
                .collect(),
        }
    }

    pub fn neg(&self) -> LinearTerm {
        self.scale(-1)
    }

    /// Remove `v` and return its former coefficient.
    fn drop_var(&mut self, v: &Var) -> i64 {
        self.coeffs.remove(v).unwrap_or(0)
    }

    /// Simultaneous substitution of variables by terms.
    pub fn subst(&self, map: &BTreeMap<Var, LinearTerm>) -> LinearTerm {
        let mut out = LinearTerm::constant(self.constant);
        for (v, c) in self.coeffs() {
            match map.get(v) {
                Some(t) => out = out.add(&t.scale(c)),
                None => out.add_coeff(v.clone(), c),
            }
        }
        out
    }

    pub fn eval<S: Scalar>(&self, val: &BTreeMap<Var, S>) -> S {
        let mut acc = S::from_int(self.constant);
        for (v, c) in self.coeffs() {
            let value = val.get(v).cloned().unwrap_or_else(S::zero);
            acc = acc + value * S::from_int(c);
        }
        acc
    }

    /// Sum of the coefficients of clock variables; the rate at which the
    /// term grows when all clocks advance by one time unit.
    pub fn clock_rate(&self) -> i64 {
        self.coeffs()
            .filter(|(v, _)| v.is_clock())
            .map(|(_, c)| c)
            .sum()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Rel {
    Le,
    Lt,
    Eq,
    Ne,
}

/// An atomic constraint `term rel 0`, gcd-normalized.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub term: LinearTerm,
    pub rel: Rel,
}

impl Atom {
    pub fn new(term: LinearTerm, rel: Rel) -> Atom {
        let mut term = term;
        let mut g = term.constant.abs();
        for (_, c) in term.coeffs() {
            g = g.gcd(&c.abs());
        }
        if g > 1 {
            term = LinearTerm {
                constant: term.constant / g,
                coeffs: term
                    .coeffs
                    .iter()
                    .map(|(v, c)| (v.clone(), c / g))
                    .collect(),
            };
        }
        // sign-canonical form for the symmetric relations
        if matches!(rel, Rel::Eq | Rel::Ne) {
            let leading = term
                .coeffs()
                .next()
                .map(|(_, c)| c)
                .unwrap_or(term.constant);
            if leading < 0 {
                term = term.neg();
            }
        }
        Atom { term, rel }
    }

    /// `lhs <= rhs`
    pub fn le(lhs: LinearTerm, rhs: LinearTerm) -> Atom {
        Atom::new(lhs.sub(&rhs), Rel::Le)
    }

    /// `lhs < rhs`
    pub fn lt(lhs: LinearTerm, rhs: LinearTerm) -> Atom {
        Atom::new(lhs.sub(&rhs), Rel::Lt)
    }

    /// `lhs == rhs`
    pub fn eq(lhs: LinearTerm, rhs: LinearTerm) -> Atom {
        Atom::new(lhs.sub(&rhs), Rel::Eq)
    }

    /// The single-atom complement: `!(t <= 0)` is `-t < 0`, `!(t < 0)` is
    /// `-t <= 0`, and the complement of an equality is a disequality.
    pub fn complement(&self) -> Atom {
        match self.rel {
            Rel::Le => Atom::new(self.term.neg(), Rel::Lt),
            Rel::Lt => Atom::new(self.term.neg(), Rel::Le),
            Rel::Eq => Atom::new(self.term.clone(), Rel::Ne),
            Rel::Ne => Atom::new(self.term.clone(), Rel::Eq),
        }
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.term.mentions(v)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.term.vars()
    }

    pub fn subst(&self, map: &BTreeMap<Var, LinearTerm>) -> Atom {
        Atom::new(self.term.subst(map), self.rel)
    }

    pub fn eval<S: Scalar>(&self, val: &BTreeMap<Var, S>) -> bool {
        let v = self.term.eval(val);
        let zero = S::zero();
        match self.rel {
            Rel::Le => v <= zero,
            Rel::Lt => v < zero,
            Rel::Eq => v == zero,
            Rel::Ne => v != zero,
        }
    }

    /// A ground atom evaluates without any variables.
    fn ground_truth(&self) -> Option<bool> {
        if !self.term.is_constant() {
            return None;
        }
        let c = self.term.constant;
        Some(match self.rel {
            Rel::Le => c <= 0,
            Rel::Lt => c < 0,
            Rel::Eq => c == 0,
            Rel::Ne => c != 0,
        })
    }
}

fn fmt_side(f: &mut fmt::Formatter<'_>, parts: &[String]) -> fmt::Result {
    if parts.is_empty() {
        return f.write_str("0");
    }
    f.write_str(&parts.join(" + "))
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        for (v, c) in self.term.coeffs() {
            let (side, c) = if c > 0 { (&mut lhs, c) } else { (&mut rhs, -c) };
            if c == 1 {
                side.push(v.name.clone());
            } else {
                side.push(format!("{} * {}", c, v.name));
            }
        }
        let c = self.term.constant;
        if c > 0 {
            lhs.push(c.to_string());
        } else if c < 0 {
            rhs.push((-c).to_string());
        }
        fmt_side(f, &lhs)?;
        let rel = match self.rel {
            Rel::Le => " <= ",
            Rel::Lt => " < ",
            Rel::Eq => " == ",
            Rel::Ne => " != ",
        };
        f.write_str(rel)?;
        fmt_side(f, &rhs)
    }
}

/// A duplicate-free conjunction of atoms; empty means `true`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct ConstraintSet {
    atoms: BTreeSet<Atom>,
}

impl ConstraintSet {
    pub fn truth() -> ConstraintSet {
        ConstraintSet::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> ConstraintSet {
        ConstraintSet {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, atom: Atom) {
        self.atoms.insert(atom);
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.atoms.iter().flat_map(|a| a.vars().cloned()).collect()
    }

    pub fn conjoin(&self, other: &ConstraintSet) -> ConstraintSet {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        ConstraintSet { atoms }
    }

    pub fn subst(&self, map: &BTreeMap<Var, LinearTerm>) -> ConstraintSet {
        ConstraintSet::from_atoms(self.atoms.iter().map(|a| a.subst(map)))
    }

    pub fn eval<S: Scalar>(&self, val: &BTreeMap<Var, S>) -> bool {
        self.atoms.iter().all(|a| a.eval(val))
    }

    pub fn satisfiable(&self) -> Result<bool, EngineError> {
        self.satisfiable_with(&Limits::default())
    }

    /// Rational satisfiability with clocks constrained to be nonnegative.
    pub fn satisfiable_with(&self, limits: &Limits) -> Result<bool, EngineError> {
        let mut atoms: Vec<Atom> = self.atoms.iter().cloned().collect();
        for v in self.vars() {
            if v.is_clock() {
                atoms.push(Atom::new(LinearTerm::var(v).neg(), Rel::Le));
            }
        }
        sat_rec(atoms, limits)
    }

    /// True iff every atom of `other` is a rational consequence of `self`.
    pub fn entails(&self, other: &ConstraintSet) -> Result<bool, EngineError> {
        self.entails_with(other, &Limits::default())
    }

    pub fn entails_with(
        &self,
        other: &ConstraintSet,
        limits: &Limits,
    ) -> Result<bool, EngineError> {
        for atom in other.atoms() {
            let mut probe = self.clone();
            probe.insert(atom.complement());
            if probe.satisfiable_with(limits)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Fourier-Motzkin projection of `v`. Disequalities mentioning `v`
    /// are dropped (they never reach this path in the pipeline).
    pub fn eliminate(&self, v: &Var) -> Result<ConstraintSet, EngineError> {
        self.eliminate_with(v, &Limits::default())
    }

    pub fn eliminate_with(&self, v: &Var, limits: &Limits) -> Result<ConstraintSet, EngineError> {
        let atoms: Vec<Atom> = self.atoms.iter().cloned().collect();
        let out = eliminate_var(atoms, v, limits)?;
        Ok(ConstraintSet::from_atoms(out))
    }

    /// Strongest post-image under a simultaneous reset: old values of the
    /// reset variables are projected away and the reset equalities added.
    pub fn apply_reset(&self, resets: &[(Var, LinearTerm)]) -> Result<ConstraintSet, EngineError> {
        self.apply_reset_with(resets, &Limits::default())
    }

    pub fn apply_reset_with(
        &self,
        resets: &[(Var, LinearTerm)],
        limits: &Limits,
    ) -> Result<ConstraintSet, EngineError> {
        if resets.is_empty() {
            return Ok(self.clone());
        }
        let pre = pre_state_map(resets);
        let mut out = self.subst(&pre);
        for atom in reset_atoms(resets).atoms() {
            out.insert(atom.clone());
        }
        for t in pre.values() {
            let pre_var = t.vars().next().expect("pre map holds single vars").clone();
            out = out.eliminate_with(&pre_var, limits)?;
        }
        Ok(out)
    }

    /// The subset of atoms stable under advancing all clocks uniformly,
    /// with atoms already implied by clock nonnegativity dropped.
    /// Equalities are split so a delay-stable half survives on its own.
    pub fn delay_closure(&self) -> ConstraintSet {
        let mut kept = Vec::new();
        for atom in self.atoms() {
            let rate = atom.term.clock_rate();
            match atom.rel {
                Rel::Le | Rel::Lt if rate <= 0 => kept.push(atom.clone()),
                Rel::Eq | Rel::Ne if rate == 0 => kept.push(atom.clone()),
                Rel::Eq => {
                    for half in [
                        Atom::new(atom.term.clone(), Rel::Le),
                        Atom::new(atom.term.neg(), Rel::Le),
                    ] {
                        if half.term.clock_rate() <= 0 {
                            kept.push(half);
                        }
                    }
                }
                _ => {}
            }
        }
        kept.retain(|a| !implied_by_clock_nonneg(a));
        ConstraintSet::from_atoms(kept)
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        f.write_str(&parts.join(" && "))
    }
}

fn implied_by_clock_nonneg(atom: &Atom) -> bool {
    let probe = ConstraintSet::from_atoms([atom.complement()]);
    // on a resource error keep the atom; keeping is always sound
    matches!(probe.satisfiable(), Ok(false))
}

/// Fresh pre-state stand-ins for the variables touched by a reset.
fn pre_state_map(resets: &[(Var, LinearTerm)]) -> BTreeMap<Var, LinearTerm> {
    resets
        .iter()
        .map(|(v, _)| {
            let pre = Var {
                name: format!("{}#pre", v.name),
                kind: v.kind,
            };
            (v.clone(), LinearTerm::var(pre))
        })
        .collect()
}

/// The equality atoms induced by a reset list, with right-hand sides
/// referring to the pre-state copies of the reset variables.
pub fn reset_atoms(resets: &[(Var, LinearTerm)]) -> ConstraintSet {
    let pre = pre_state_map(resets);
    ConstraintSet::from_atoms(
        resets
            .iter()
            .map(|(v, value)| Atom::eq(LinearTerm::var(v.clone()), value.subst(&pre))),
    )
}

fn sat_rec(atoms: Vec<Atom>, limits: &Limits) -> Result<bool, EngineError> {
    // case-split disequalities into the two strict half-spaces
    if let Some(pos) = atoms.iter().position(|a| a.rel == Rel::Ne) {
        let mut rest = atoms;
        let ne = rest.remove(pos);
        let mut left = rest.clone();
        left.push(Atom::new(ne.term.clone(), Rel::Lt));
        if sat_rec(left, limits)? {
            return Ok(true);
        }
        let mut right = rest;
        right.push(Atom::new(ne.term.neg(), Rel::Lt));
        return sat_rec(right, limits);
    }

    let mut atoms = atoms;
    loop {
        // ground atoms decide or disappear
        let mut contradiction = false;
        atoms.retain(|a| match a.ground_truth() {
            Some(true) => false,
            Some(false) => {
                contradiction = true;
                true
            }
            None => true,
        });
        if contradiction {
            return Ok(false);
        }
        let var = match pick_var(&atoms) {
            Some(v) => v,
            None => return Ok(true),
        };
        atoms = eliminate_var(atoms, &var, limits)?;
    }
}

/// Prefer a variable bound by an equality, otherwise the one with the
/// smallest upper-by-lower product.
fn pick_var(atoms: &[Atom]) -> Option<Var> {
    let mut vars: BTreeMap<&Var, (usize, usize, bool)> = BTreeMap::new();
    for a in atoms {
        for (v, c) in a.term.coeffs() {
            let entry = vars.entry(v).or_insert((0, 0, false));
            if a.rel == Rel::Eq {
                entry.2 = true;
            } else if c > 0 {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
    }
    vars.iter()
        .min_by_key(|(_, (up, lo, eq))| if *eq { 0 } else { 1 + up * lo })
        .map(|(v, _)| (*v).clone())
}

fn eliminate_var(atoms: Vec<Atom>, v: &Var, limits: &Limits) -> Result<Vec<Atom>, EngineError> {
    // use an equality on v as a substitution when one exists
    if let Some(pos) = atoms.iter().position(|a| a.rel == Rel::Eq && a.mentions(v)) {
        let mut rest = atoms;
        let eq = rest.remove(pos);
        let out = rest
            .into_iter()
            .map(|a| subst_with_eq(a, &eq.term, v))
            .collect();
        return Ok(out);
    }

    let mut kept = Vec::new();
    let mut uppers = Vec::new();
    let mut lowers = Vec::new();
    for a in atoms {
        let c = a.term.coeff(v);
        if c == 0 {
            kept.push(a);
        } else if a.rel == Rel::Ne {
            // dense domain: a lone disequality never blocks existence
        } else if c > 0 {
            uppers.push(a);
        } else {
            lowers.push(a);
        }
    }
    let produced = uppers.len() * lowers.len();
    if kept.len() + produced > limits.max_atoms {
        return Err(EngineError::ResourceExceeded {
            atoms: kept.len() + produced,
            ceiling: limits.max_atoms,
        });
    }
    for up in &uppers {
        for lo in &lowers {
            let cu = up.term.coeff(v);
            let cl = lo.term.coeff(v);
            let term = up.term.scale(-cl).add(&lo.term.scale(cu));
            let rel = if up.rel == Rel::Lt || lo.rel == Rel::Lt {
                Rel::Lt
            } else {
                Rel::Le
            };
            kept.push(Atom::new(term, rel));
        }
    }
    Ok(kept)
}

/// Substitute `v` away in `atom` using the equality `eq_term == 0`.
fn subst_with_eq(atom: Atom, eq_term: &LinearTerm, v: &Var) -> Atom {
    let d = atom.term.coeff(v);
    if d == 0 {
        return atom;
    }
    let c = eq_term.coeff(v);
    debug_assert!(c != 0);
    let mut rest_eq = eq_term.clone();
    rest_eq.drop_var(v);
    let mut scaled = atom.term.scale(c.abs());
    scaled.drop_var(v);
    let term = scaled.add(&rest_eq.scale(-d * c.signum()));
    Atom::new(term, atom.rel)
}

/// A signed conjunction over a predicate set; each predicate occurs once.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Cube {
    literals: Vec<(Atom, bool)>,
}

impl Cube {
    pub fn new(literals: Vec<(Atom, bool)>) -> Cube {
        debug_assert!({
            let mut seen = BTreeSet::new();
            literals.iter().all(|(a, _)| seen.insert(a.clone()))
        });
        Cube { literals }
    }

    pub fn literals(&self) -> impl Iterator<Item = (&Atom, bool)> {
        self.literals.iter().map(|(a, s)| (a, *s))
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// Positive literals stay; negative literals flip to their complement.
    pub fn to_constraints(&self) -> ConstraintSet {
        ConstraintSet::from_atoms(self.literals.iter().map(|(a, sign)| {
            if *sign {
                a.clone()
            } else {
                a.complement()
            }
        }))
    }
}

/// Free-function aliases for the operation names used around the crate.
pub fn conjoin(a: &ConstraintSet, b: &ConstraintSet) -> ConstraintSet {
    a.conjoin(b)
}

pub fn cube_to_constraints(q: &Cube) -> ConstraintSet {
    q.to_constraints()
}
