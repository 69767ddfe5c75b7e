//! Analysis toolkit for networks of timed automata with integer
//! variables: invariant strengthening with idle-transition pruning, a
//! cube-based predicate abstraction over the strengthened invariants,
//! and a discretized concrete-semantics explorer used to cross-check
//! both.

pub mod abstraction;
pub mod cipm;
pub mod constraint;
pub mod format;
pub mod model;
pub mod oracle;
pub mod scalar;

/// Exact scalar used throughout the symbolic engine.
pub type Rat = num_rational::Rational64;

pub use abstraction::{build_abstraction, simulate_check, AbstractAutomaton, AbstractState};
pub use cipm::{cipm, cipm_network, CipmResult, IdleReason, NetworkCipmResult};
pub use constraint::{Atom, ConstraintSet, Cube, EngineError, Limits, LinearTerm, Rel, Var};
pub use model::{Network, TimedAutomaton};
pub use oracle::{diff_reachability, explore, OracleConfig, OracleResult};
pub use scalar::Scalar;
