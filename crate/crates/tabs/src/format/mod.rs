//! Concrete syntax: the `.ta` DSL parser, a pretty-printer that
//! round-trips with it, and DOT/JSON emitters.

mod dot;
mod json;
mod parser;
mod printer;

pub use dot::{emit_dot_abstraction, emit_dot_automaton};
pub use json::{abstraction_report, cipm_report, emit_json, stats_report, validation_report};
pub use parser::{parse, ParseDiagnostic, Parsed, SourceSpan};
pub use printer::{pretty_print, pretty_print_network, render_term};
