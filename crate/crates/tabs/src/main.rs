use std::io::{IsTerminal, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tabs::format::{
    abstraction_report, cipm_report, emit_dot_abstraction, emit_dot_automaton, emit_json, parse,
    pretty_print_network, stats_report, validation_report, ParseDiagnostic,
};
use tabs::model::{Network, Severity};
use tabs::oracle::{diff_reachability_networks, explore, OracleConfig};
use tabs::{build_abstraction, cipm_network, simulate_check, NetworkCipmResult, Rat};

/// Exit codes: 0 success, 1 diagnostics or failed checks, 2 internal
/// errors, 3 inconclusive validation.
const EXIT_OK: u8 = 0;
const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_INTERNAL: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "tabs",
    about = "Invariant strengthening, pruning, and predicate abstraction for timed-automaton networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Strengthen invariants, prune idle transitions, and print the
    /// pruned model.
    Cipm {
        input: PathBuf,
        /// Write the invariant/pruning report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write the pruned product automaton as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write the pruned model here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the cube abstraction of the pruned model.
    Abstract {
        input: PathBuf,
        /// Write the abstract automaton as DOT (unreachable states dashed).
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write abstraction statistics as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Also report naive state counts without invariant pairing.
        #[arg(long)]
        compare_naive: bool,
    },
    /// Cross-check invariants, pruning, and the abstraction against a
    /// discretized exploration of the concrete semantics.
    Validate {
        input: PathBuf,
        /// Time step, e.g. `1/2` or `1`.
        #[arg(long)]
        granularity: Option<String>,
        /// Clock ceiling; delays stop once a clock would pass it.
        #[arg(long)]
        ceiling: Option<i64>,
        /// Explored-state bound before giving up as inconclusive.
        #[arg(long)]
        steps: Option<usize>,
        /// Write the verdict table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print model size statistics.
    Stats {
        input: PathBuf,
        /// Write the statistics as JSON instead of standard output.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn color_enabled() -> bool {
    match std::env::var("TABS_COLOR").as_deref() {
        Ok("always") => true,
        Ok("never") => false,
        _ => std::io::stderr().is_terminal(),
    }
}

fn report_diagnostics(diags: &[ParseDiagnostic]) {
    let color = color_enabled();
    let mut err = std::io::stderr().lock();
    for d in diags {
        let (label, code) = match d.severity {
            Severity::Error => ("error", "31"),
            Severity::Warning => ("warning", "33"),
        };
        let _ = if color {
            writeln!(
                err,
                "{}: \x1b[{}m{}\x1b[0m: {}",
                d.span, code, label, d.message
            )
        } else {
            writeln!(err, "{}: {}: {}", d.span, label, d.message)
        };
    }
}

fn internal(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_INTERNAL
}

fn load(input: &Path) -> Result<Network, u8> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| internal(format_args!("cannot read {}: {}", input.display(), e)))?;
    match parse(&text, &input.display().to_string()) {
        Ok(parsed) => {
            report_diagnostics(&parsed.warnings);
            Ok(parsed.network)
        }
        Err(diags) => {
            report_diagnostics(&diags);
            Err(EXIT_DIAGNOSTICS)
        }
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), u8> {
    std::fs::write(path, text)
        .map_err(|e| internal(format_args!("cannot write {}: {}", path.display(), e)))
}

fn run_cipm(network: &Network) -> Result<NetworkCipmResult, u8> {
    cipm_network(network).map_err(internal)
}

fn cmd_cipm(
    input: &Path,
    json: Option<&Path>,
    dot: Option<&Path>,
    out: Option<&Path>,
) -> Result<u8, u8> {
    let network = load(input)?;
    let result = run_cipm(&network)?;
    let rendered = pretty_print_network(&result.pruned);
    match out {
        Some(path) => write_out(path, &rendered)?,
        None => print!("{rendered}"),
    }
    if let Some(path) = json {
        write_out(path, &emit_json(&cipm_report(&result)))?;
    }
    if let Some(path) = dot {
        let product = result.product().map_err(internal)?;
        write_out(path, &emit_dot_automaton(&product.pruned))?;
    }
    Ok(EXIT_OK)
}

fn cmd_abstract(
    input: &Path,
    dot: Option<&Path>,
    json: Option<&Path>,
    compare_naive: bool,
) -> Result<u8, u8> {
    let network = load(input)?;
    let result = run_cipm(&network)?;
    let product = result.product().map_err(internal)?;
    let abst = build_abstraction(&product, &product.pruned).map_err(internal)?;
    println!(
        "abstract states: {} ({} reachable)",
        abst.stats.abstract_states, abst.stats.reachable
    );
    if compare_naive {
        println!(
            "naive: {} with invariant pairing dropped, {} unfiltered",
            abst.stats.naive_paired, abst.stats.naive_unfiltered
        );
    }
    if let Some(path) = json {
        write_out(path, &emit_json(&abstraction_report(&abst, compare_naive)))?;
    }
    if let Some(path) = dot {
        write_out(path, &emit_dot_abstraction(&abst))?;
    }
    Ok(EXIT_OK)
}

fn parse_granularity(s: &str) -> Result<Rat, u8> {
    let parsed = match s.split_once('/') {
        Some((n, d)) => match (n.trim().parse::<i64>(), d.trim().parse::<i64>()) {
            (Ok(n), Ok(d)) if d > 0 => Some(Rat::new(n, d)),
            _ => None,
        },
        None => s.trim().parse::<i64>().ok().map(Rat::from_integer),
    };
    match parsed {
        Some(g) if g > Rat::from_integer(0) => Ok(g),
        _ => Err(internal(format_args!("invalid granularity `{s}`"))),
    }
}

fn cmd_validate(
    input: &Path,
    granularity: Option<&str>,
    ceiling: Option<i64>,
    steps: Option<usize>,
    json: Option<&Path>,
) -> Result<u8, u8> {
    let network = load(input)?;
    let result = run_cipm(&network)?;

    let mut cfg = OracleConfig::for_network(&network);
    if let Some(g) = granularity {
        cfg.granularity = parse_granularity(g)?;
    }
    if let Some(c) = ceiling {
        cfg.clock_ceiling = Rat::from_integer(c);
    }
    if let Some(s) = steps {
        cfg.step_bound = s;
    }

    let oracle = explore(&result.pruned, &cfg);
    let mut rows: Vec<(String, Option<bool>)> = Vec::new();

    // every reachable configuration satisfies the strengthened invariants
    let invariance = if oracle.truncated {
        None
    } else {
        Some(oracle.reachable.iter().all(|s| {
            result
                .components
                .iter()
                .zip(&s.locs)
                .all(|(c, loc)| c.new_invariants[loc].eval(&s.valuation))
        }))
    };
    rows.push(("invariance".into(), invariance));

    // pruning removed only transitions that never fire
    let equivalence = diff_reachability_networks(&network, &result.pruned, &cfg).ok();
    rows.push(("pruning equivalence".into(), equivalence));

    // the abstraction simulates every witnessed concrete behavior
    let simulation = if oracle.truncated {
        None
    } else {
        let product = result.product().map_err(internal)?;
        let abst = build_abstraction(&product, &product.pruned).map_err(internal)?;
        Some(simulate_check(&abst, &oracle).is_clean())
    };
    rows.push(("simulation".into(), simulation));

    for (name, verdict) in &rows {
        let text = match verdict {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INCONCLUSIVE",
        };
        println!("{name:<20} {text}");
    }
    if let Some(path) = json {
        write_out(path, &emit_json(&validation_report(&rows)))?;
    }
    if rows.iter().any(|(_, v)| v.is_none()) {
        eprintln!("inconclusive: oracle exploration truncated; raise --steps");
        return Ok(EXIT_INCONCLUSIVE);
    }
    if rows.iter().all(|(_, v)| *v == Some(true)) {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_DIAGNOSTICS)
    }
}

fn cmd_stats(input: &Path, json: Option<&Path>) -> Result<u8, u8> {
    let network = load(input)?;
    let report = emit_json(&stats_report(&network.components));
    match json {
        Some(path) => write_out(path, &report)?,
        None => print!("{report}"),
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.cmd {
        Cmd::Cipm {
            input,
            json,
            dot,
            out,
        } => cmd_cipm(input, json.as_deref(), dot.as_deref(), out.as_deref()),
        Cmd::Abstract {
            input,
            dot,
            json,
            compare_naive,
        } => cmd_abstract(input, dot.as_deref(), json.as_deref(), *compare_naive),
        Cmd::Validate {
            input,
            granularity,
            ceiling,
            steps,
            json,
        } => cmd_validate(
            input,
            granularity.as_deref(),
            *ceiling,
            *steps,
            json.as_deref(),
        ),
        Cmd::Stats { input, json } => cmd_stats(input, json.as_deref()),
    };
    ExitCode::from(code.unwrap_or_else(|e| e))
}
