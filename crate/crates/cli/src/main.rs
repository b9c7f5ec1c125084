//! `distillq`: generate adder schedules, emulate distilled-state buffers,
//! derive and solve their DTMCs, sweep buffer capacities, and compare
//! against the embedded reference table.
//!
//! Exit codes: 0 success, 2 input/parse/config error, 3 non-ergodic chain
//! under `--strict-ergodic`. The `DISTILLQ_SEED` environment variable is
//! reserved; the whole pipeline is deterministic and never reads it.

mod config;
mod export;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use distillq_core::{
    build_chain, check_ergodic, default_calibration, emulate, generate_adder, steady_state,
    sweep_buffers, table1_row, AdderProfile, Circuit, ProfileShape, Rational, ReferenceTable,
    SweepConfig,
};

use config::{parse_capacity_list, parse_rational, ConfigArgs, EffectiveConfig};
use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "distillq",
    version,
    about = "Distilled-state buffer emulation and DTMC queueing analysis",
    after_help = "Exit codes: 0 ok, 2 input/config error, 3 non-ergodic with --strict-ergodic.\n\
                  DISTILLQ_SEED is reserved and unused; every run is deterministic."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a carry-ripple adder gate list (.ctq).
    GenAdder(GenAdderArgs),
    /// Emulate a circuit and export the occupancy trace.
    Emulate(EmulateArgs),
    /// Build the DTMC transition matrix of an emulation.
    Chain(ChainArgs),
    /// Solve the steady state of a chain (from a matrix file or a circuit).
    Steady(SteadyArgs),
    /// Re-emulate over a range of buffer capacities.
    Sweep(SweepArgs),
    /// Grid-search rates and profile shapes against the reference table.
    Calibrate(CalibrateArgs),
    /// Emit the reference-schema table for the embedded qubit counts.
    Table1(Table1Args),
}

#[derive(Args)]
struct GenAdderArgs {
    /// Number of adder qubits (>= 2).
    #[arg(short = 'n', long = "qubits")]
    qubits: u32,
    /// T-gate layout: uniform, burst, or tapered.
    #[arg(long, default_value = "uniform")]
    profile: String,
    /// Emit n stages instead of n-1 (T-count 4n).
    #[arg(long)]
    extra_stage: bool,
    /// Output file; stdout when omitted.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmulateArgs {
    /// Circuit file (.ctq).
    #[arg(short = 'c', long = "circuit")]
    circuit: PathBuf,
    /// Buffer capacity: integer or `inf` (default inf).
    #[arg(long, value_name = "CAP")]
    buffer: Option<String>,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(short = 'c', long = "circuit")]
    circuit: PathBuf,
    /// Buffer capacity: integer or `inf` (default inf).
    #[arg(long, value_name = "CAP")]
    buffer: Option<String>,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SteadyArgs {
    /// Matrix JSON file (fields: states, counts, probs).
    #[arg(long, conflicts_with = "circuit")]
    matrix: Option<PathBuf>,
    /// Circuit file: emulate + chain first, then solve.
    #[arg(short = 'c', long = "circuit")]
    circuit: Option<PathBuf>,
    /// Buffer capacity for the circuit pipeline.
    #[arg(long, value_name = "CAP")]
    buffer: Option<String>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Exit with status 3 when the chain is not ergodic.
    #[arg(long)]
    strict_ergodic: bool,
    #[arg(long, default_value = "text", value_parser = ["text", "json"])]
    format: String,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(short = 'c', long = "circuit")]
    circuit: PathBuf,
    /// Capacities: comma-separated integers, inclusive ranges `a..b`, and
    /// `inf` (default `0..8,inf`).
    #[arg(long, default_value = "0..8,inf")]
    buffers: String,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Candidate rates, comma-separated (`p/q` or decimal).
    #[arg(long, default_value = "1/5,2/9,1/4,16/63,1/3")]
    rates: String,
    /// Candidate shapes, comma-separated.
    #[arg(long, default_value = "uniform,burst,tapered")]
    shapes: String,
    /// Reference qubit counts to score against.
    #[arg(long, default_value = "16,32,64,128,256")]
    ns: String,
    #[arg(long, default_value = "json", value_parser = ["csv", "json"])]
    format: String,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Table1Args {
    /// Qubit counts; defaults to the embedded reference set.
    #[arg(long)]
    ns: Option<String>,
    /// Emit the embedded reference rows instead of computing.
    #[arg(long)]
    reference: bool,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenAdder(args) => gen_adder(args),
        Command::Emulate(args) => cmd_emulate(args),
        Command::Chain(args) => cmd_chain(args),
        Command::Steady(args) => cmd_steady(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Table1(args) => cmd_table1(args),
    }
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading circuit {}", path.display()))?;
    let mut circuit =
        Circuit::parse(&text).with_context(|| format!("parsing circuit {}", path.display()))?;
    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
        circuit.label = stem.to_string();
    }
    Ok(circuit)
}

/// Writes to the output file (plus its manifest) or stdout.
fn emit(out: Option<&PathBuf>, content: &str, manifest: RunManifest) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content)
                .with_context(|| format!("writing {}", path.display()))?;
            manifest.write_beside(path)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn manifest_inputs(paths: &[Option<&PathBuf>]) -> Vec<PathBuf> {
    paths.iter().flatten().map(|p| (*p).clone()).collect()
}

fn gen_adder(args: GenAdderArgs) -> Result<ExitCode> {
    let shape = ProfileShape::from_name(&args.profile)
        .ok_or_else(|| anyhow!("unknown profile: {}", args.profile))?;
    let profile = AdderProfile {
        extra_stage: args.extra_stage,
        ..AdderProfile::for_shape(shape)
    };
    let circuit = generate_adder(args.qubits, &profile).map_err(|e| anyhow!("{e}"))?;

    #[derive(Serialize)]
    struct Effective<'a> {
        qubits: u32,
        profile: &'a str,
        extra_stage: bool,
    }
    let manifest = RunManifest::new(
        "gen-adder",
        &Effective {
            qubits: args.qubits,
            profile: shape.name(),
            extra_stage: args.extra_stage,
        },
        vec![],
        args.out.iter().cloned().collect(),
    )?;
    emit(args.out.as_ref(), &circuit.serialize(), manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_emulate(args: EmulateArgs) -> Result<ExitCode> {
    let circuit = load_circuit(&args.circuit)?;
    let config = args.config.resolve(args.buffer.as_deref())?;
    let trace = emulate(&circuit.sequentialize(), &config);
    let content = match args.format.as_str() {
        "json" => export::trace_json(&trace)?,
        _ => export::trace_csv(&trace),
    };
    let manifest = RunManifest::new(
        "emulate",
        &EffectiveConfig::from(&config),
        manifest_inputs(&[Some(&args.circuit), args.config.config.as_ref()]),
        args.out.iter().cloned().collect(),
    )?;
    emit(args.out.as_ref(), &content, manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_chain(args: ChainArgs) -> Result<ExitCode> {
    let circuit = load_circuit(&args.circuit)?;
    let config = args.config.resolve(args.buffer.as_deref())?;
    let trace = emulate(&circuit.sequentialize(), &config);
    let chain = build_chain(&trace).map_err(|e| anyhow!("{e}"))?;
    let manifest = RunManifest::new(
        "chain",
        &EffectiveConfig::from(&config),
        manifest_inputs(&[Some(&args.circuit), args.config.config.as_ref()]),
        args.out.iter().cloned().collect(),
    )?;
    emit(args.out.as_ref(), &export::matrix_json(&chain)?, manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_steady(args: SteadyArgs) -> Result<ExitCode> {
    let (chain, inputs) = match (&args.matrix, &args.circuit) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading matrix {}", path.display()))?;
            (export::matrix_from_json(&text)?, vec![path.clone()])
        }
        (None, Some(path)) => {
            let circuit = load_circuit(path)?;
            let config = args.config.resolve(args.buffer.as_deref())?;
            let trace = emulate(&circuit.sequentialize(), &config);
            (
                build_chain(&trace).map_err(|e| anyhow!("{e}"))?,
                vec![path.clone()],
            )
        }
        _ => bail!("steady needs exactly one of --matrix or --circuit"),
    };
    let report = check_ergodic(&chain);
    let nu = steady_state(&chain).map_err(|e| anyhow!("{e}"))?;
    let content = match args.format.as_str() {
        "json" => export::steady_json(&chain, &report, &nu)?,
        _ => export::steady_text(&chain, &report, &nu),
    };

    #[derive(Serialize)]
    struct Effective {
        strict_ergodic: bool,
        states: usize,
    }
    let manifest = RunManifest::new(
        "steady",
        &Effective {
            strict_ergodic: args.strict_ergodic,
            states: chain.num_states(),
        },
        inputs,
        args.out.iter().cloned().collect(),
    )?;
    emit(args.out.as_ref(), &content, manifest)?;
    if args.strict_ergodic && !report.ergodic {
        eprintln!("error: chain is not ergodic (--strict-ergodic)");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let circuit = load_circuit(&args.circuit)?;
    let base = args.config.resolve(None)?;
    let capacities = parse_capacity_list(&args.buffers)?;
    let sweep_config = SweepConfig {
        capacities: capacities.clone(),
        base: base.clone(),
    };
    let report = sweep_buffers(&circuit, &sweep_config).map_err(|e| anyhow!("{e}"))?;
    let content = match args.format.as_str() {
        "json" => export::sweep_json(&report)?,
        _ => export::sweep_csv(&report),
    };

    #[derive(Serialize)]
    struct Effective {
        config: EffectiveConfig,
        buffers: Vec<String>,
    }
    let manifest = RunManifest::new(
        "sweep",
        &Effective {
            config: EffectiveConfig::from(&base),
            buffers: capacities.iter().map(|c| c.to_string()).collect(),
        },
        manifest_inputs(&[Some(&args.circuit), args.config.config.as_ref()]),
        args.out.iter().cloned().collect(),
    )?;
    emit(args.out.as_ref(), &content, manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_ns(text: &str) -> Result<Vec<u32>> {
    text.split(',')
        .map(|t| t.trim().parse::<u32>().with_context(|| format!("bad qubit count: {t}")))
        .collect()
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<ExitCode> {
    let rates: Vec<Rational> = args
        .rates
        .split(',')
        .map(|t| parse_rational(t.trim()))
        .collect::<Result<_>>()?;
    let shapes: Vec<ProfileShape> = args
        .shapes
        .split(',')
        .map(|t| {
            ProfileShape::from_name(t.trim()).ok_or_else(|| anyhow!("unknown shape: {t}"))
        })
        .collect::<Result<_>>()?;
    let ns = parse_ns(&args.ns)?;
    let reference = ReferenceTable::embedded();
    let result = distillq_core::calibrate(&reference, &rates, &shapes, &ns)
        .map_err(|e| anyhow!("{e}"))?;
    let content = match args.format.as_str() {
        "csv" => export::calibration_csv(&result),
        _ => export::calibration_json(&result)?,
    };

    #[derive(Serialize)]
    struct Effective {
        rates: Vec<String>,
        shapes: Vec<String>,
        ns: Vec<u32>,
    }
    let manifest = RunManifest::new(
        "calibrate",
        &Effective {
            rates: rates.iter().map(|r| config::format_rational(*r)).collect(),
            shapes: shapes.iter().map(|s| s.name().to_string()).collect(),
            ns: ns.clone(),
        },
        vec![],
        args.out.iter().cloned().collect(),
    )?;
    emit(args.out.as_ref(), &content, manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_table1(args: Table1Args) -> Result<ExitCode> {
    let reference = ReferenceTable::embedded();
    let ns = match &args.ns {
        Some(text) => parse_ns(text)?,
        None => reference.qubit_counts(),
    };

    #[derive(Serialize)]
    struct Effective {
        ns: Vec<u32>,
        reference: bool,
    }
    let manifest = RunManifest::new(
        "table1",
        &Effective {
            ns: ns.clone(),
            reference: args.reference,
        },
        vec![],
        args.out.iter().cloned().collect(),
    )?;

    if args.reference {
        let rows: Vec<_> = ns
            .iter()
            .map(|&n| {
                reference
                    .row(n)
                    .copied()
                    .ok_or_else(|| anyhow!("no reference row for {n} qubits"))
            })
            .collect::<Result<_>>()?;
        emit(args.out.as_ref(), &export::reference_csv(&rows), manifest)?;
        return Ok(ExitCode::SUCCESS);
    }

    let calibration = default_calibration(&reference);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        rows.push(table1_row(n, &calibration).map_err(|e| anyhow!("{e}"))?);
    }
    let content = match args.format.as_str() {
        "json" => export::table1_json(&calibration, &rows)?,
        _ => export::table1_csv(&rows),
    };
    emit(args.out.as_ref(), &content, manifest)?;
    Ok(ExitCode::SUCCESS)
}
