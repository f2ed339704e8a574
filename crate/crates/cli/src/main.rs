use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use zonecheck_core::harness::{self, Engine, Overrides, RunRecord, Suite};
use zonecheck_core::model::{fixtures, parse_model, parse_property, render_model, EngineConfig};
use zonecheck_core::{EngineError, Pta};

const EXIT_USAGE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_ENGINE: u8 = 4;

#[derive(Parser)]
#[command(name = "zonecheck", version, about = "Probabilistic timed automata model checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the probability of a property.
    Check {
        /// Model file, or the name of a built-in fixture.
        model: String,
        /// Property in compact syntax, or a file holding one.
        property: String,
        #[arg(long, default_value = "backwards")]
        engine: Engine,
        /// Duration threshold of the divergence analysis (minimum queries).
        #[arg(long)]
        c: Option<i64>,
        /// Value-iteration residual.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Run a benchmark suite and write CSV.
    Bench {
        suite: PathBuf,
        /// Replace every entry's c values.
        #[arg(long, value_delimiter = ',')]
        c_sweep: Option<Vec<i64>>,
        /// Replace every entry's deadlines.
        #[arg(long, value_delimiter = ',')]
        deadline_sweep: Option<Vec<i64>>,
        /// Write to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace timing columns with `*`.
        #[arg(long)]
        mask_timing: bool,
    },
    /// Summarise a model.
    Info { model: String },
    /// Print a built-in fixture as model JSON.
    Export {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(fixtures::NAMES))]
        fixture: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Csv,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

fn input(message: impl ToString) -> Failure {
    Failure { code: EXIT_INPUT, message: message.to_string() }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Model(_) | EngineError::InitialInvariant(_) => EXIT_INPUT,
            EngineError::Config(_) => EXIT_USAGE,
            _ => EXIT_ENGINE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn load_model(arg: &str) -> Result<Pta, Failure> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(p) = fixtures::by_name(arg) {
            return Ok(p);
        }
    }
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("{arg}: {e}")))?;
    parse_model(&text).map_err(|e| input(format!("{arg}: {e}")))
}

fn property_text(arg: &str) -> Result<String, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        return std::fs::read_to_string(path).map_err(|e| input(format!("{arg}: {e}")));
    }
    Ok(arg.to_string())
}

fn check(model: &str, property: &str, engine: Engine, c: Option<i64>, epsilon: f64, format: Format) -> Result<(), Failure> {
    let p = load_model(model)?;
    let text = property_text(property)?;
    let prop = parse_property(&text, &p).map_err(|e| input(format!("property: {e}")))?;
    let cfg = EngineConfig { c, epsilon, ..EngineConfig::default() };
    cfg.check()?;
    let r = engine.check(&p, &prop, &cfg)?;
    let mut row = RunRecord {
        model: model.to_string(),
        property: prop.to_string(),
        engine: Some(engine),
        deadline: prop.bound.as_ref().map(|b| b.value),
        lambda: prop.threshold.as_ref().map(|t| zonecheck_core::scalar::format_rational(&t.value)),
        epsilon,
        ..RunRecord::default()
    };
    row.c = r.stats.c;
    row.fill(prop.opt, &r);
    match format {
        Format::Csv => print!("{}", harness::to_csv(&[row])),
        Format::Json => {
            let v = json!({
                "model": row.model,
                "property": row.property,
                "engine": engine.to_string(),
                "c": row.c,
                "D": row.deadline,
                "lambda": row.lambda,
                "epsilon": epsilon,
                "probability": r.probability,
                "verdict": r.verdict,
                "states_max": r.stats.states_max,
                "states_min": r.stats.states_min,
                "iter_maxv": r.stats.iter_maxv,
                "iter_maxu1": r.stats.iter_maxu1,
                "digital_states": r.stats.digital_states,
                "transitions": r.stats.transitions,
                "sweeps": r.stats.sweeps,
                "time_explore": r.stats.time_explore.as_secs_f64(),
                "time_qualitative": r.stats.time_qualitative.as_secs_f64(),
                "time_value_iteration": r.stats.time_value_iteration.as_secs_f64(),
            });
            println!("{}", serde_json::to_string_pretty(&v).expect("plain values"));
        }
        Format::Human => {
            println!("property: {}", row.property);
            println!("engine: {engine}");
            println!("probability: {}", r.probability);
            if let Some(v) = r.verdict {
                println!("verdict: {v}");
            }
            let s = &r.stats;
            let counts = [
                ("states (max)", s.states_max),
                ("states (min)", s.states_min),
                ("digital states", s.digital_states),
                ("MaxV iterations", s.iter_maxv),
                ("MaxU iterations", s.iter_maxu1),
            ];
            for (name, v) in counts {
                if let Some(v) = v {
                    println!("{name}: {v}");
                }
            }
            if let Some(c) = row.c {
                println!("c: {c}");
            }
            println!("value iteration sweeps: {}", s.sweeps);
        }
    }
    Ok(())
}

fn bench(
    suite: &Path,
    c_sweep: Option<Vec<i64>>,
    deadline_sweep: Option<Vec<i64>>,
    out: Option<PathBuf>,
    mask: bool,
) -> Result<(), Failure> {
    let text = std::fs::read_to_string(suite).map_err(|e| input(format!("{}: {e}", suite.display())))?;
    let suite_data = Suite::parse(&text).map_err(input)?;
    let base = suite.parent().unwrap_or(Path::new("."));
    let overrides = Overrides { c: c_sweep, deadlines: deadline_sweep };
    let rows = harness::run_suite(&suite_data, base, &overrides);
    let mut csv = harness::to_csv(&rows);
    if mask {
        csv = harness::mask_timing(&csv);
    }
    match out {
        Some(path) => std::fs::write(&path, csv).map_err(|e| input(format!("{}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn info(model: &str) -> Result<(), Failure> {
    let p = load_model(model)?;
    let report = p.validate();
    println!("clocks: {}", p.clocks().join(", "));
    println!("locations: {}", p.locations().len());
    println!("edges: {}", p.edges().len());
    println!("initial: {}", p.locations()[p.initial()].name);
    println!("closed: {}", report.closed);
    println!("diagonal-free: {}", report.diagonal_free);
    let constants: Vec<String> = report.max_constants.iter().map(|(c, k)| format!("{c}={k}")).collect();
    println!("max constants: {}", constants.join(", "));
    if !report.initial_invariant_holds {
        return Err(input("the initial valuation violates the initial invariant"));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { model, property, engine, c, epsilon, format } => {
            check(&model, &property, engine, c, epsilon, format)
        }
        Command::Bench { suite, c_sweep, deadline_sweep, out, mask_timing } => {
            bench(&suite, c_sweep, deadline_sweep, out, mask_timing)
        }
        Command::Info { model } => info(&model),
        Command::Export { fixture } => {
            print!("{}", render_model(&fixtures::by_name(&fixture).expect("validated by clap")));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
