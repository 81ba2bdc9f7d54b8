//! `qam`: store binary patterns, retrieve them with Grover-style searches and compare costs.
//!
//! Bit strings are written with the highest qubit first: `0110` is basis index 6.

mod pattern_file;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qam_core::analysis::compare;
use qam_core::encode_pt::{build_pt_encoding, AddressMap, PtEncoding, PtOptions};
use qam_core::encode_vm::{build_vm_circuit, memory_register, VmLayout};
use qam_core::reduce::{build_reduced_encoding, plan_reduction};
use qam_core::retrieval::{
    build_oracle, grover_retrieve, pt_retrieve, vm_retrieve, OracleSpec, Readout, RetrievalReport,
};
use qam_core::{BinaryPattern, Circuit, MeasurementOutcome, PatternSet, QamError, StateVector};

const OUT_DIR_ENV: &str = "QAM_OUT_DIR";

#[derive(Parser)]
#[command(name = "qam", version, about = "Quantum associative memory simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prepare the stored superposition and print its amplitudes as JSON.
    Encode(EncodeArgs),
    /// Run a retrieval and print the report as JSON.
    Retrieve(RetrieveArgs),
    /// Print predicted and measured costs of every method.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodeMethod {
    Vm,
    Pt,
    PtReduced,
}

#[derive(Clone, Copy, ValueEnum)]
enum RetrieveMethod {
    Grover,
    Vm,
    Pt,
    PtReduced,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Pattern file: one bit string per line, `#` comments.
    file: PathBuf,
    /// Directory for relative artifact paths.
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "pt-reduced")]
    method: EncodeMethod,
    /// Address map file (`address -> pattern` per line) for the `pt` method.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Write the storage circuit in text form to this path.
    #[arg(long)]
    emit_circuit: Option<PathBuf>,
    /// Print the reduction walkthrough to stderr (`pt-reduced` only).
    #[arg(long)]
    explain_plan: bool,
}

#[derive(Args)]
struct RetrieveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "pt-reduced")]
    method: RetrieveMethod,
    /// Query bit string.
    #[arg(long)]
    query: String,
    /// Mark stored patterns within this Hamming distance of the query.
    #[arg(long, default_value_t = 0)]
    epsilon: u32,
    /// Override the default rotation count.
    #[arg(long)]
    rotations: Option<usize>,
    /// Sample the outcome with this seed instead of taking the most likely state.
    #[arg(long)]
    seed: Option<u64>,
    /// Address map file for the `pt` method.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Include every rotation's full state in the report.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 0)]
    epsilon: u32,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// The oracle marks no stored pattern.
#[derive(Debug)]
struct NoSolution(String);

impl std::fmt::Display for NoSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NoSolution {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<NoSolution>()) {
        return 3;
    }
    match err.chain().find_map(|e| e.downcast_ref::<QamError>()) {
        Some(QamError::Oracle(_)) => 3,
        Some(QamError::Plan(_) | QamError::Consistency(_) | QamError::Normalization(_)) => 4,
        _ => 2,
    }
}

fn artifact_path(out_dir: Option<&Path>, path: &Path) -> PathBuf {
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn write_artifact(out_dir: Option<&Path>, path: &Path, contents: &str) -> Result<()> {
    let path = artifact_path(out_dir, path);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn read_map(path: &Path, patterns: &PatternSet) -> Result<AddressMap> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let map: AddressMap = text.parse().with_context(|| format!("in {}", path.display()))?;
    let mut want = patterns.indices();
    let mut got = map.patterns().indices();
    want.sort_unstable();
    got.sort_unstable();
    if want != got {
        return Err(QamError::Input(format!(
            "address map {} does not hold the same patterns as the pattern file",
            path.display()
        ))
        .into());
    }
    Ok(map)
}

fn pt_encoding(patterns: &PatternSet, map: Option<&Path>) -> Result<PtEncoding> {
    let map = match map {
        Some(path) => read_map(path, patterns)?,
        None => AddressMap::naive(patterns)?,
    };
    Ok(build_pt_encoding(&map, PtOptions::default())?)
}

fn print_json<T: Serialize>(value: &T, pretty: bool) -> Result<()> {
    let mut out = io::stdout().lock();
    if pretty {
        serde_json::to_writer_pretty(&mut out, value)?;
    } else {
        serde_json::to_writer(&mut out, value)?;
    }
    writeln!(out)?;
    Ok(())
}

fn cmd_encode(args: EncodeArgs) -> Result<()> {
    let patterns = pattern_file::read(&args.common.file)?;
    let (circuit, state): (Circuit, StateVector) = match args.method {
        EncodeMethod::Vm => {
            let circuit = build_vm_circuit(&patterns)?;
            let full = circuit.run()?;
            let layout = VmLayout::new(patterns.dim())?;
            (circuit, memory_register(&full, layout, 1e-10)?)
        }
        EncodeMethod::Pt => {
            let enc = pt_encoding(&patterns, args.map.as_deref())?;
            (enc.circuit(), enc.data_state()?)
        }
        EncodeMethod::PtReduced => {
            let plan = plan_reduction(&patterns)?;
            if args.explain_plan {
                eprint!("{}", plan.explain());
            }
            let enc = build_reduced_encoding(&plan)?;
            (enc.circuit(), enc.data_state()?)
        }
    };
    if args.explain_plan && !matches!(args.method, EncodeMethod::PtReduced) {
        eprintln!("note: --explain-plan only applies to --method pt-reduced");
    }
    if let Some(path) = &args.emit_circuit {
        write_artifact(args.common.out_dir.as_deref(), path, &circuit.to_text())?;
    }
    // one [re, im] pair per basis state, index order
    print_json(&state, false)
}

/// The retrieval report as printed; snapshots only with `--trace`.
#[derive(Serialize)]
struct ReportOut<'a> {
    method: &'static str,
    query: String,
    epsilon: u32,
    outcome: MeasurementOutcome,
    outcome_pattern: String,
    success_probability: f64,
    rotations: usize,
    oracle_calls: u64,
    marked_sets: &'a [std::collections::BTreeSet<usize>],
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshots: Option<&'a [StateVector]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    address_snapshots: Option<&'a [StateVector]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<&'a str>,
}

fn parse_query(text: &str, patterns: &PatternSet) -> Result<BinaryPattern> {
    let q: BinaryPattern = text.parse().with_context(|| format!("bad query {text:?}"))?;
    if q.dim() != patterns.dim() {
        return Err(QamError::Input(format!(
            "query has {} bits, patterns have {}",
            q.dim(),
            patterns.dim()
        ))
        .into());
    }
    Ok(q)
}

fn resolve_oracle(patterns: &PatternSet, query: &str, epsilon: u32) -> Result<OracleSpec> {
    let oracle = build_oracle(patterns, parse_query(query, patterns)?, epsilon)?;
    if oracle.marked.is_empty() {
        return Err(NoSolution(format!(
            "no ε-similar stored pattern within distance {epsilon} of {query}"
        ))
        .into());
    }
    Ok(oracle)
}

fn cmd_retrieve(args: RetrieveArgs) -> Result<()> {
    let patterns = pattern_file::read(&args.common.file)?;
    let oracle = resolve_oracle(&patterns, &args.query, args.epsilon)?;
    let readout = args.seed.map_or(Readout::Argmax, Readout::Sample);
    let (name, report): (&str, RetrievalReport) = match args.method {
        RetrieveMethod::Grover => ("grover", grover_retrieve(&patterns, &oracle, args.rotations, readout)?),
        RetrieveMethod::Vm => ("vm", vm_retrieve(&patterns, &oracle, args.rotations, readout)?),
        RetrieveMethod::Pt => {
            let enc = pt_encoding(&patterns, args.map.as_deref())?;
            ("pt", pt_retrieve(&enc, &oracle, args.rotations, readout)?)
        }
        RetrieveMethod::PtReduced => {
            let enc = build_reduced_encoding(&plan_reduction(&patterns)?)?;
            ("pt-reduced", pt_retrieve(&enc, &oracle, args.rotations, readout)?)
        }
    };
    let trace = &report.trace;
    let out = ReportOut {
        method: name,
        query: oracle.query.to_string(),
        epsilon: oracle.epsilon,
        outcome: report.outcome,
        outcome_pattern: report.outcome_pattern.to_string(),
        success_probability: report.success_probability,
        rotations: trace.rotations,
        oracle_calls: trace.oracle_calls,
        marked_sets: &trace.marked_sets,
        snapshots: args.trace.then_some(trace.snapshots.as_slice()),
        address_snapshots: (args.trace && !trace.address_snapshots.is_empty())
            .then_some(trace.address_snapshots.as_slice()),
        warning: report.warning.as_deref(),
    };
    print_json(&out, true)?;
    eprintln!("{}", report.outcome_pattern);
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let patterns = pattern_file::read(&args.common.file)?;
    let oracle = resolve_oracle(&patterns, &args.query, args.epsilon)?;
    let report = compare(&patterns, &oracle)?;
    match args.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Csv => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Retrieve(a) => cmd_retrieve(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
