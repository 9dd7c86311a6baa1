//! Command-line surface: scenario-driven protocol runs, the static spectrum,
//! transform verification, and engine-vs-oracle comparison.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical failure
//! (tolerance breach), 3 I/O error.

mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use report::{emit_timeseries, input_hash, EngineMeta, Format, RunReport, TimeSeriesRecord};
use selspin_core::oracle::{verify_block_structure, verify_block_structure_reversed};
use selspin_core::oracle::random_scenario;
use selspin_core::scenario::{emit_scenario, parse_scenario, Protocol};
use selspin_core::subspace::spectrum_entries;
use selspin_core::{
    compare, run_cooling, run_ghz, Error, Method, PropagatorOptions, Result,
};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "selspin",
    version,
    about = "Exact decomposed dynamics of N-wise coupled spin-1/2 systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    MidpointExponential,
    Rk4,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::MidpointExponential => Method::MidpointExponential,
            MethodArg::Rk4 => Method::Rk4,
        }
    }
}

#[derive(Args)]
struct EngineArgs {
    /// Integration substeps per shortest dynamical period
    #[arg(long, default_value_t = 256)]
    steps_per_period: u32,
    #[arg(long, value_enum, default_value_t = MethodArg::MidpointExponential)]
    method: MethodArg,
    /// Norm-drift / comparison tolerance
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

impl EngineArgs {
    fn options(&self) -> PropagatorOptions {
        PropagatorOptions {
            method: self.method.into(),
            steps_per_period: self.steps_per_period,
            norm_tolerance: self.tol.max(1e-12),
        }
    }

    fn meta(&self) -> EngineMeta {
        EngineMeta {
            method: match self.method {
                MethodArg::MidpointExponential => "midpoint-exponential".into(),
                MethodArg::Rk4 => "rk4".into(),
            },
            steps_per_period: self.steps_per_period,
            tolerance: self.tol,
        }
    }

    fn hash_parts(&self) -> Vec<String> {
        vec![
            self.steps_per_period.to_string(),
            format!("{:?}", self.method),
            format!("{:.17e}", self.tol),
        ]
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Trajectory output path
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Cross-check against the dense oracle (N within the dense cap)
    #[arg(long)]
    oracle: bool,
    /// Write the run report here instead of stdout
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Evaluation time for the (static) Hamiltonian
    #[arg(long)]
    at: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChainOrder {
    /// Nearest-neighbor composition (the operative definition)
    Chain,
    /// Reversed composition, kept as a falsification control
    Reversed,
}

#[derive(Args)]
struct VerifyArgs {
    /// Spin count
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    draws: u64,
    #[arg(long, default_value_t = 0x5e1f)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ChainOrder::Chain)]
    order: ChainOrder,
    /// Residual threshold
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Run the GHZ-generation / inversion protocol
    RunGhz(RunArgs),
    /// Run the selective-interaction cooling protocol
    RunCooling(RunArgs),
    /// Static spectrum from the per-subspace diagonalizations
    Spectrum(SpectrumArgs),
    /// Residual check of the block-diagonalizing chain
    VerifyTransform(VerifyArgs),
    /// Decomposed engine vs dense oracle on one scenario
    Compare(CompareArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let class = match e.kind_code() {
                1 => "validation",
                2 => "numerical",
                _ => "io",
            };
            eprintln!("error[{class}]: {e}");
            ExitCode::from(e.kind_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RunGhz(args) => cmd_run_ghz(args),
        Command::RunCooling(args) => cmd_run_cooling(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::VerifyTransform(args) => cmd_verify_transform(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_run_ghz(args: RunArgs) -> Result<()> {
    let parsed = parse_scenario(&args.scenario)?;
    let Some(Protocol::Ghz(scenario)) = parsed.protocol else {
        return Err(Error::Usage(
            "run-ghz needs a scenario with a ghz protocol section".into(),
        ));
    };
    let opts = args.engine.options();
    let ghz = run_ghz(&scenario, &opts, args.oracle)?;

    let records: Vec<TimeSeriesRecord> = ghz
        .samples
        .iter()
        .map(|s| TimeSeriesRecord {
            t: s.t,
            tau: Some(s.tau),
            observables: [
                ("p_minus".to_string(), s.p_minus),
                ("ghz_fidelity".to_string(), s.ghz_fidelity),
                ("leakage".to_string(), s.leakage),
            ]
            .into_iter()
            .collect(),
        })
        .collect();
    let probability_columns: BTreeSet<String> = ["p_minus", "ghz_fidelity", "leakage"]
        .into_iter()
        .map(String::from)
        .collect();
    let mut clamped = 0;
    let mut outputs = Vec::new();
    if let Some(out) = &args.out {
        clamped = emit_timeseries(&records, args.format, out, &probability_columns)?;
        outputs.push(path_string(out));
    }

    let echo = emit_scenario(&parsed.echo)?;
    let mut hash_parts = vec!["run-ghz".to_string(), echo.clone()];
    hash_parts.extend(args.engine.hash_parts());
    RunReport {
        command: "run-ghz".into(),
        engine: args.engine.meta(),
        seed: None,
        scenario: Some(echo),
        input_sha256: input_hash(&hash_parts.iter().map(String::as_str).collect::<Vec<_>>()),
        results: serde_json::to_value(&ghz).expect("report serializes"),
        clamped_display_values: clamped,
        outputs,
    }
    .write(args.report.as_deref())?;
    Ok(())
}

fn cmd_run_cooling(args: RunArgs) -> Result<()> {
    let parsed = parse_scenario(&args.scenario)?;
    let Some(Protocol::Cooling(scenario)) = parsed.protocol else {
        return Err(Error::Usage(
            "run-cooling needs a scenario with a cooling protocol section".into(),
        ));
    };
    let opts = args.engine.options();
    let cooling = run_cooling(&scenario, &opts, args.oracle)?;
    eprintln!(
        "run-cooling: wall {:.3}s, {} output intervals, {} substeps each",
        cooling.wall.as_secs_f64(),
        cooling.samples.len().saturating_sub(1),
        cooling.substeps_per_interval
    );

    let records: Vec<TimeSeriesRecord> = cooling
        .samples
        .iter()
        .map(|s| TimeSeriesRecord {
            t: s.t,
            // the coupling amplitude rotates, so no dimensionless γ_x t axis
            tau: None,
            observables: [
                ("p_spin1_minus".to_string(), s.p_spin1_minus),
                ("selected_transfer".to_string(), s.selected_transfer),
            ]
            .into_iter()
            .collect(),
        })
        .collect();
    let probability_columns: BTreeSet<String> = ["p_spin1_minus", "selected_transfer"]
        .into_iter()
        .map(String::from)
        .collect();
    let mut clamped = 0;
    let mut outputs = Vec::new();
    if let Some(out) = &args.out {
        clamped = emit_timeseries(&records, args.format, out, &probability_columns)?;
        outputs.push(path_string(out));
    }

    let echo = emit_scenario(&parsed.echo)?;
    let mut hash_parts = vec!["run-cooling".to_string(), echo.clone()];
    hash_parts.extend(args.engine.hash_parts());
    RunReport {
        command: "run-cooling".into(),
        engine: args.engine.meta(),
        seed: None,
        scenario: Some(echo),
        input_sha256: input_hash(&hash_parts.iter().map(String::as_str).collect::<Vec<_>>()),
        results: serde_json::to_value(&cooling).expect("report serializes"),
        clamped_display_values: clamped,
        outputs,
    }
    .write(args.report.as_deref())?;
    Ok(())
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<()> {
    let parsed = parse_scenario(&args.scenario)?;
    let entries = spectrum_entries(&parsed.config, args.at)?;

    let mut outputs = Vec::new();
    if let Some(out) = &args.out {
        match args.format {
            Format::Csv => {
                let mut text = String::from(
                    "index,label_bits,eigenvalue,basis_up,basis_down,amp_up_re,amp_up_im,amp_down_re,amp_down_im\n",
                );
                for (i, e) in entries.iter().enumerate() {
                    text.push_str(&format!(
                        "{i},{},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                        e.label_bits,
                        e.eigenvalue,
                        e.basis_up,
                        e.basis_down,
                        e.amp_up.0,
                        e.amp_up.1,
                        e.amp_down.0,
                        e.amp_down.1,
                    ));
                }
                std::fs::write(out, text)?;
            }
            Format::Json => {
                let mut text =
                    serde_json::to_string_pretty(&entries).expect("entries serialize");
                text.push('\n');
                std::fs::write(out, text)?;
            }
        }
        outputs.push(path_string(out));
    }

    let echo = emit_scenario(&parsed.echo)?;
    RunReport {
        command: "spectrum".into(),
        engine: EngineMeta {
            method: "analytic per-subspace diagonalization".into(),
            steps_per_period: 0,
            tolerance: 0.0,
        },
        seed: None,
        scenario: Some(echo.clone()),
        input_sha256: input_hash(&["spectrum", &echo, &format!("{:.17e}", args.at)]),
        results: serde_json::to_value(&entries).expect("entries serialize"),
        clamped_display_values: 0,
        outputs,
    }
    .write(args.report.as_deref())?;
    Ok(())
}

const CHAIN_DEFINITION_NOTE: &str = "chain definition: ordered nearest-neighbor \
controlled-flip pairs (N-1,N)...(2,3)(1,2), acting as the prefix-XOR basis \
permutation; the closed-form product with shifted z-indices is not evaluable \
at the chain head (index out of range) and is recorded here rather than \
patched silently. The reversed composition is available as a falsification \
control and must fail this check for N >= 3.";

fn cmd_verify_transform(args: VerifyArgs) -> Result<()> {
    if args.n < 2 {
        return Err(Error::Usage(format!(
            "verify-transform needs n >= 2, got {}",
            args.n
        )));
    }
    println!("{CHAIN_DEFINITION_NOTE}");
    println!(
        "verify-transform: n={}, {} draws, seed {:#x}, order {:?}",
        args.n, args.draws, args.seed, args.order
    );
    println!("draw        t   max_commutator   max_off_block   max_block_dev");
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for draw in 0..args.draws {
        let cfg = random_scenario(args.n, args.seed, draw);
        let t = 0.37 * cfg.time.t1;
        let residuals = match args.order {
            ChainOrder::Chain => verify_block_structure(&cfg, t)?,
            ChainOrder::Reversed => verify_block_structure_reversed(&cfg, t)?,
        };
        let max_comm = residuals
            .commutator_residuals
            .iter()
            .copied()
            .fold(0.0, f64::max);
        println!(
            "{draw:4} {t:8.4}   {max_comm:14.3e}  {:14.3e}  {:14.3e}",
            residuals.max_off_block, residuals.max_block_deviation
        );
        worst = worst.max(residuals.worst());
        rows.push(residuals);
    }
    println!("worst residual: {worst:.3e} (threshold {:.1e})", args.tol);

    let report = RunReport {
        command: "verify-transform".into(),
        engine: EngineMeta {
            method: "dense conjugation by the chain permutation".into(),
            steps_per_period: 0,
            tolerance: args.tol,
        },
        seed: Some(args.seed),
        scenario: None,
        input_sha256: input_hash(&[
            "verify-transform",
            &args.n.to_string(),
            &args.draws.to_string(),
            &args.seed.to_string(),
            &format!("{:?}", args.order),
        ]),
        results: serde_json::json!({
            "definition_note": CHAIN_DEFINITION_NOTE,
            "order": format!("{:?}", args.order),
            "draws": rows,
            "worst": worst,
        }),
        clamped_display_values: 0,
        outputs: Vec::new(),
    };
    if let Some(path) = &args.report {
        report.write(Some(path))?;
    }
    if worst > args.tol {
        return Err(Error::Numerical(format!(
            "block-structure residual {worst:.3e} exceeds {:.1e}",
            args.tol
        )));
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let parsed = parse_scenario(&args.scenario)?;
    let opts = args.engine.options();
    let rep = compare(
        &parsed.config,
        &parsed.config.initial.clone(),
        &opts,
        args.engine.tol,
    )?;

    let echo = emit_scenario(&parsed.echo)?;
    let mut hash_parts = vec!["compare".to_string(), echo.clone()];
    hash_parts.extend(args.engine.hash_parts());
    let breached = rep.max_gap > args.engine.tol || rep.sub_resolved;
    RunReport {
        command: "compare".into(),
        engine: args.engine.meta(),
        seed: None,
        scenario: Some(echo),
        input_sha256: input_hash(&hash_parts.iter().map(String::as_str).collect::<Vec<_>>()),
        results: serde_json::to_value(&rep).expect("report serializes"),
        clamped_display_values: 0,
        outputs: Vec::new(),
    }
    .write(args.report.as_deref())?;
    if breached {
        return Err(Error::Numerical(format!(
            "engine-oracle gap {:.3e} (refinement estimate {:.3e}) breaches tolerance {:.1e}",
            rep.max_gap, rep.refinement_estimate, args.engine.tol
        )));
    }
    Ok(())
}
