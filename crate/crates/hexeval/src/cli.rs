//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{HexError, Result};
use crate::oracle::OracleRegistry;
use crate::parser::{parse_atom, parse_program};
use crate::pipeline::{
    evaluate, generate_instance, verify, EvaluationOptions, InstanceSpec, Mode,
};
use crate::solve::Engine;
use crate::syntax::{OrdinaryAtom, Program};
use crate::ufs::{find_unfounded_set, UfsQuery};

#[derive(Parser)]
#[command(
    name = "hexeval",
    version,
    about = "Ground HEX-program evaluator with dependency-based unfounded-set check minimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonInput {
    /// Program file (UTF-8, '%' line comments)
    file: PathBuf,

    /// Table-oracle definition files, registered in addition to the builtins
    #[arg(long = "oracles", value_name = "FILE")]
    oracles: Vec<PathBuf>,
}

#[derive(Args, Clone)]
struct CapArgs {
    /// Atom cap for exhaustive enumeration and the brute-force oracle
    #[arg(long, default_value_t = 24)]
    exhaustive_cap: usize,

    /// Atom cap for a single unfounded-set search domain
    #[arg(long, default_value_t = crate::ufs::DEFAULT_UFS_DOMAIN_CAP)]
    ufs_cap: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Compute answer sets; prints one sorted set per line
    Solve {
        #[command(flatten)]
        input: CommonInput,

        /// Evaluation mode: full, no-decomposition, no-criterion, brute
        #[arg(long, default_value = "full")]
        mode: Mode,

        /// Answer-set engine: exhaustive or propagate
        #[arg(long, default_value = "propagate")]
        engine: Engine,

        /// Stop after this many answer sets
        #[arg(long)]
        max_answers: Option<usize>,

        /// Write evaluation counters as JSON to this path
        #[arg(long, value_name = "PATH")]
        stats_json: Option<PathBuf>,

        /// Disable the cyclic-input-atom restriction of the search
        #[arg(long)]
        no_ca_restriction: bool,

        #[command(flatten)]
        caps: CapArgs,
    },
    /// Print the dependency-analysis report for a program
    Analyze {
        #[command(flatten)]
        input: CommonInput,

        /// Emit the report as JSON instead of text
        #[arg(long)]
        json: bool,
    },
    /// Search an unfounded set for a given interpretation
    CheckUfs {
        #[command(flatten)]
        input: CommonInput,

        /// Comma-separated true atoms, e.g. "p,q,r" or "p(a),q(b)"
        #[arg(long)]
        interpretation: String,

        #[command(flatten)]
        caps: CapArgs,
    },
    /// Cross-validate the full pipeline against the brute-force oracle
    Verify {
        #[command(flatten)]
        input: CommonInput,

        #[arg(long, default_value = "propagate")]
        engine: Engine,

        #[command(flatten)]
        caps: CapArgs,
    },
    /// Generate a benchmark instance and compare modes on it
    Bench {
        /// Instance spec, e.g. "m=8,k=1,s=3,seed=0"
        #[arg(long)]
        spec: String,

        /// Comma-separated modes to run
        #[arg(long, default_value = "full,no-decomposition,no-criterion")]
        modes: String,

        #[arg(long, default_value = "propagate")]
        engine: Engine,

        /// Write one counters object per mode as a JSON array
        #[arg(long, value_name = "PATH")]
        stats_json: Option<PathBuf>,
    },
}

fn load_registry(oracle_files: &[PathBuf]) -> Result<OracleRegistry> {
    let mut registry = OracleRegistry::with_builtins();
    for path in oracle_files {
        let text = std::fs::read_to_string(path)?;
        registry.load_table_oracle(&text)?;
    }
    Ok(registry)
}

fn load_program(input: &CommonInput, registry: &OracleRegistry) -> Result<Program> {
    let text = std::fs::read_to_string(&input.file)?;
    let parsed = parse_program(&text, registry)?;
    let rewritten = parsed.rewrite_strong_negation()?;
    if rewritten.is_ground() {
        Ok(rewritten)
    } else {
        let constants = rewritten.constants().to_vec();
        rewritten.instantiate(&constants)
    }
}

fn format_set(names: &[String]) -> String {
    format!("{{{}}}", names.join(", "))
}

fn run_solve(
    input: &CommonInput,
    mode: Mode,
    engine: Engine,
    max_answers: Option<usize>,
    stats_json: Option<&PathBuf>,
    no_ca_restriction: bool,
    caps: &CapArgs,
) -> Result<i32> {
    let registry = load_registry(&input.oracles)?;
    let program = load_program(input, &registry)?;
    let options = EvaluationOptions {
        mode,
        engine,
        ca_restriction: !no_ca_restriction,
        max_answers,
        exhaustive_cap: caps.exhaustive_cap,
        ufs_domain_cap: caps.ufs_cap,
        flip_criterion: false,
    };
    let report = evaluate(&program, &registry, &options)?;
    for set in &report.answer_set_list {
        println!("{}", format_set(set));
    }
    eprintln!(
        "{} answer set(s), {} compatible set(s), {} UFS search(es) run, {} skipped",
        report.answer_sets,
        report.compatible_sets,
        report.ufs_searches_run,
        report.ufs_searches_skipped
    );
    if let Some(path) = stats_json {
        std::fs::write(path, serde_json::to_string_pretty(&report.stats_json())?)?;
    }
    Ok(if report.answer_sets == 0 { 1 } else { 0 })
}

fn run_analyze(input: &CommonInput, json: bool) -> Result<i32> {
    let registry = load_registry(&input.oracles)?;
    let program = load_program(input, &registry)?;
    let report = crate::depgraph::analyze(&program)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{report}");
    }
    Ok(0)
}

fn parse_interpretation(program: &Program, text: &str) -> Result<Vec<OrdinaryAtom>> {
    let mut atoms = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for ch in text.chars().chain([',']) {
        match ch {
            '(' => {
                depth += 1;
                current.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(ch);
            }
            ',' if depth == 0 => {
                let tok = current.trim();
                if !tok.is_empty() {
                    let atom = parse_atom(tok)?;
                    if program.atom_id(&atom).is_none() {
                        return Err(HexError::UnknownAtom(atom.to_string()));
                    }
                    atoms.push(atom);
                }
                current.clear();
            }
            _ => current.push(ch),
        }
    }
    Ok(atoms)
}

fn run_check_ufs(input: &CommonInput, interpretation: &str, caps: &CapArgs) -> Result<i32> {
    let registry = load_registry(&input.oracles)?;
    let program = load_program(input, &registry)?;
    let atoms = parse_interpretation(&program, interpretation)?;
    let interp =
        crate::interp::Interpretation::from_true_atoms(program.universe().clone(), atoms.iter())?;
    let mut query = UfsQuery::global(&program, &interp);
    query.domain_cap = caps.ufs_cap;
    let outcome = find_unfounded_set(&query, &registry)?;
    match outcome.witness {
        Some(witness) => {
            let names: Vec<String> = witness.iter().map(|a| a.to_string()).collect();
            println!("{}", format_set(&names));
        }
        None => println!("none"),
    }
    Ok(0)
}

fn run_verify(input: &CommonInput, engine: Engine, caps: &CapArgs) -> Result<i32> {
    let registry = load_registry(&input.oracles)?;
    let program = load_program(input, &registry)?;
    let options = EvaluationOptions {
        engine,
        exhaustive_cap: caps.exhaustive_cap,
        ufs_domain_cap: caps.ufs_cap,
        ..Default::default()
    };
    let discrepancies = verify(&program, &registry, &options)?;
    if discrepancies.is_empty() {
        println!("ok: pipeline and brute-force answer sets agree");
        Ok(0)
    } else {
        for d in &discrepancies {
            let side = if d.in_full { "pipeline only" } else { "brute only" };
            println!("discrepancy ({side}): {}", format_set(&d.answer_set));
        }
        Ok(1)
    }
}

fn run_bench(
    spec_text: &str,
    modes_text: &str,
    engine: Engine,
    stats_json: Option<&PathBuf>,
) -> Result<i32> {
    let spec = InstanceSpec::parse(spec_text)?;
    let program = generate_instance(&spec)?;
    let registry = OracleRegistry::with_builtins();
    let modes: Vec<Mode> = modes_text
        .split(',')
        .map(|m| m.trim().parse::<Mode>().map_err(HexError::InvalidInstanceSpec))
        .collect::<Result<_>>()?;

    println!(
        "instance: m={} k={} s={} seed={} ({} atoms, {} rules)",
        spec.components,
        spec.e_cyclic,
        spec.atoms_per_component,
        spec.seed,
        program.universe().len(),
        program.rules().len()
    );
    println!(
        "{:<18} {:>8} {:>10} {:>8} {:>9} {:>12} {:>10} {:>9}",
        "mode", "answers", "compatible", "run", "skipped", "expansions", "tested", "ms"
    );
    let mut stats = Vec::new();
    for mode in modes {
        let options = EvaluationOptions {
            mode,
            engine,
            exhaustive_cap: 24,
            ufs_domain_cap: program.universe().len().max(crate::ufs::DEFAULT_UFS_DOMAIN_CAP),
            ..Default::default()
        };
        let report = evaluate(&program, &registry, &options)?;
        println!(
            "{:<18} {:>8} {:>10} {:>8} {:>9} {:>12} {:>10} {:>9.1}",
            report.mode,
            report.answer_sets,
            report.compatible_sets,
            report.ufs_searches_run,
            report.ufs_searches_skipped,
            report.search_node_expansions,
            report.ufs_candidates_tested,
            report.phase_times_ms.total_ms
        );
        stats.push(report.stats_json());
    }
    if let Some(path) = stats_json {
        std::fs::write(path, serde_json::to_string_pretty(&serde_json::Value::Array(stats))?)?;
    }
    Ok(0)
}

/// Entry point; returns the process exit code (0 success, 1 empty result or
/// discrepancies, 2 error).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with success status
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve {
            input,
            mode,
            engine,
            max_answers,
            stats_json,
            no_ca_restriction,
            caps,
        } => run_solve(
            input,
            *mode,
            *engine,
            *max_answers,
            stats_json.as_ref(),
            *no_ca_restriction,
            caps,
        ),
        Command::Analyze { input, json } => run_analyze(input, *json),
        Command::CheckUfs {
            input,
            interpretation,
            caps,
        } => run_check_ufs(input, interpretation, caps),
        Command::Verify { input, engine, caps } => run_verify(input, *engine, caps),
        Command::Bench {
            spec,
            modes,
            engine,
            stats_json,
        } => run_bench(spec, modes, *engine, stats_json.as_ref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
