//! `unicert`: certification of graph states from uniform single-qubit
//! measurements, plus the supporting simulations, as a command-line tool.
//!
//! Exit codes are a stable contract: 0 means the scientific verdict was
//! positive (Certified / target confirmed), 2 means the verdict was negative
//! (Failed / not the target), and 1 means a usage or data error. Every
//! seeded command is bit-reproducible on one platform, and every file
//! artifact is written atomically together with a `<out>.manifest.json`
//! describing the resolved configuration and output digests.

mod output;

use std::error::Error;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use unicert::certify::{
    certify, certify_records, monte_carlo_validation, CertificationConfig, CertificationReport,
    EnsembleSampler, FidelityRegime, MonteCarloPoint, MonteCarloRow,
};
use unicert::pauli::count_independent_operators;
use unicert::promise::{certify_under_promise, evaluate_conditions, PromiseVerdict};
use unicert::rydberg::{
    measure_observables, PreparationMode, RotationMode, RydbergChainConfig, RydbergRun, SimOptions,
};
use unicert::stabilizer::{GraphSpec, StabilizerTableau};
use unicert::statevector::{MeasurementRecord, MixedStateEnsemble, NoiseModel, StateVector};

use output::ArtifactSet;

#[derive(Parser)]
#[command(
    name = "unicert",
    version,
    about = "Graph-state certification from uniform single-qubit measurements",
    long_about = "Graph-state certification from uniform single-qubit measurements.\n\
        Exit codes: 0 = positive verdict, 2 = negative verdict, 1 = usage or data error.\n\
        The UNICERT_THREADS environment variable is validated and reserved for kernels\n\
        that can parallelize; the numerical kernels in this build run sequentially."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the certification protocol against a target graph state.
    Certify(CertifyArgs),
    /// Tabulate Certified rates over a seeded trial grid.
    Montecarlo(MontecarloArgs),
    /// Simulate the protocol on a Rydberg chain at pulse level.
    #[command(name = "rydberg-sim")]
    RydbergSim(RydbergArgs),
    /// Print the number of independent symmetric operators on N qubits.
    Count(CountArgs),
    /// Decide the exact stabilizer-promise conditions for a generator list.
    #[command(name = "promise-check")]
    PromiseCheck(PromiseArgs),
}

#[derive(clap::Args)]
struct CertifyArgs {
    /// Graph edge list: first line the vertex count, then one 1-indexed
    /// "u v" pair per line ('#' starts a comment).
    #[arg(long)]
    graph: PathBuf,
    /// Fidelity gap to certify against; must lie in (0, 1/(64 N^2)).
    #[arg(long)]
    epsilon: f64,
    /// Simulated state: "ideal" or a noise spec "depolarizing:P",
    /// "zrot:P:ANGLE", "orthogonal:P" applied to the ideal state.
    #[arg(long, default_value = "ideal", conflicts_with = "records")]
    state: String,
    /// Measurement record files (binary format), one per scheduled basis;
    /// repeat the flag. Replaces simulation.
    #[arg(long)]
    records: Vec<PathBuf>,
    /// Shots per basis, overriding ceil(32 ln 12 / (25 epsilon^2)).
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    High,
    Low,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct MontecarloArgs {
    /// Comma-separated qubit counts, e.g. "3,5,7". Targets are path graphs.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Fidelity gap, or "auto" for 1/(128 N^2) per point.
    #[arg(long, default_value = "auto")]
    epsilon: String,
    /// Which side(s) of the guarantee to probe.
    #[arg(long, value_enum, default_value_t = RegimeArg::Both)]
    regime: RegimeArg,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output table path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RydbergMode {
    /// Finite-duration pulses under the full 1/r^6 interaction.
    Pulses,
    /// Instantaneous rotations with nearest-neighbour-only interaction.
    Ideal,
}

#[derive(clap::Args)]
struct RydbergArgs {
    /// Number of chain sites (odd).
    #[arg(long, default_value_t = 9)]
    n: usize,
    /// Detuning scale(s); comma-separate for a sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    h: Vec<f64>,
    #[arg(long, value_enum, default_value_t = RydbergMode::Pulses)]
    mode: RydbergMode,
    /// Output path.
    #[arg(long)]
    out: PathBuf,
    /// Defaults to json for a single scale and csv for a sweep.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(clap::Args)]
struct CountArgs {
    /// Number of qubits.
    #[arg(long)]
    n: usize,
}

#[derive(clap::Args)]
struct PromiseArgs {
    /// Stabilizer generator list: one signed Pauli string (e.g. "+XZI") per
    /// line; '#' comments allowed.
    #[arg(long)]
    generators: PathBuf,
    /// Optional JSON artifact path; the report always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Clap would exit with its own status; route usage problems to
            // the documented data-error code instead.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(message) = validate_thread_env() {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    let outcome = match cli.command {
        Command::Certify(args) => cmd_certify(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::RydbergSim(args) => cmd_rydberg(args),
        Command::Count(args) => cmd_count(args),
        Command::PromiseCheck(args) => cmd_promise_check(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn validate_thread_env() -> Result<(), String> {
    match std::env::var("UNICERT_THREADS") {
        Ok(raw) => match raw.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(()),
            _ => Err(format!(
                "UNICERT_THREADS must be a positive integer, got {raw:?}"
            )),
        },
        Err(_) => Ok(()),
    }
}

fn read_to_string(path: &Path) -> Result<String, Box<dyn Error>> {
    std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()).into())
}

fn parse_noise_spec(spec: &str) -> Result<NoiseModel, Box<dyn Error>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| -> Result<f64, Box<dyn Error>> {
        s.parse::<f64>()
            .map_err(|e| format!("invalid number {s:?} in noise spec {spec:?}: {e}").into())
    };
    match parts.as_slice() {
        ["depolarizing", p] => Ok(NoiseModel::Depolarizing { p: parse(p)? }),
        ["zrot", p, angle] => Ok(NoiseModel::UniformZRotation {
            p: parse(p)?,
            angle: parse(angle)?,
        }),
        ["orthogonal", p] => Ok(NoiseModel::ReplaceWithOrthogonal { p: parse(p)? }),
        _ => Err(format!(
            "unknown state spec {spec:?}; expected \"ideal\", \"depolarizing:P\", \
             \"zrot:P:ANGLE\" or \"orthogonal:P\""
        )
        .into()),
    }
}

fn cmd_certify(args: CertifyArgs) -> Result<ExitCode, Box<dyn Error>> {
    let started = Instant::now();
    let graph = GraphSpec::parse_edge_list(&read_to_string(&args.graph)?)?;
    let config = CertificationConfig {
        target: graph.clone(),
        epsilon: args.epsilon,
        shots_per_basis: args.shots,
        seed: args.seed,
    };
    let report: CertificationReport = if args.records.is_empty() {
        let ideal = MixedStateEnsemble::pure(StateVector::graph_state(&graph)?);
        let ensemble = if args.state == "ideal" {
            ideal
        } else {
            ideal.apply_noise(&parse_noise_spec(&args.state)?)?
        };
        let mut sampler = EnsembleSampler { ensemble };
        certify(&mut sampler, &config)?
    } else {
        let mut records = Vec::with_capacity(args.records.len());
        for path in &args.records {
            let bytes = std::fs::read(path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            records.push(MeasurementRecord::from_binary_bytes(&bytes)?);
        }
        let borrowed: Vec<&MeasurementRecord> = records.iter().collect();
        certify_records(&config, &borrowed)?
    };

    let mut artifacts = ArtifactSet::new();
    artifacts.add_json(&args.out, &report)?;
    let resolved = json!({
        "graph": graph.to_edge_list_string(),
        "epsilon": args.epsilon,
        "state": if args.records.is_empty() { args.state.clone() } else { "records".to_owned() },
        "records": args.records,
        "shots_per_basis": report.shots_per_basis,
        "out": args.out,
    });
    artifacts.write_with_manifest("certify", Some(args.seed), resolved, started)?;
    Ok(verdict_exit(report.verdict == unicert::certify::Verdict::Certified))
}

fn verdict_exit(positive: bool) -> ExitCode {
    if positive {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn montecarlo_csv(rows: &[MonteCarloRow]) -> String {
    let mut csv = String::from("N,epsilon,fidelity,trials,certified_rate,wilson_lo,wilson_hi\n");
    for row in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.n_qubits,
            row.epsilon,
            row.target_fidelity,
            row.trials,
            row.certified_rate,
            row.wilson_low,
            row.wilson_high
        );
    }
    csv
}

fn cmd_montecarlo(args: MontecarloArgs) -> Result<ExitCode, Box<dyn Error>> {
    let started = Instant::now();
    if args.n.is_empty() {
        return Err("the trial grid is empty; pass at least one qubit count via --n".into());
    }
    let regimes: &[FidelityRegime] = match args.regime {
        RegimeArg::High => &[FidelityRegime::High],
        RegimeArg::Low => &[FidelityRegime::Low],
        RegimeArg::Both => &[FidelityRegime::High, FidelityRegime::Low],
    };
    let mut points = Vec::new();
    for &n in &args.n {
        let epsilon = if args.epsilon == "auto" {
            1.0 / (128.0 * (n * n) as f64)
        } else {
            args.epsilon
                .parse::<f64>()
                .map_err(|e| format!("invalid --epsilon {:?}: {e}", args.epsilon))?
        };
        for &regime in regimes {
            points.push(MonteCarloPoint {
                n_qubits: n,
                epsilon,
                regime,
            });
        }
    }
    let rows = monte_carlo_validation(&points, args.trials, args.seed)?;

    let mut artifacts = ArtifactSet::new();
    match args.format {
        OutputFormat::Csv => artifacts.add_text(&args.out, montecarlo_csv(&rows)),
        OutputFormat::Json => artifacts.add_json(&args.out, &rows)?,
    }
    let resolved = json!({
        "n": args.n,
        "epsilon": args.epsilon,
        "regime": regimes.iter().map(|r| format!("{r:?}")).collect::<Vec<_>>(),
        "trials": args.trials,
        "format": match args.format { OutputFormat::Csv => "csv", OutputFormat::Json => "json" },
        "out": args.out,
    });
    artifacts.write_with_manifest("montecarlo", Some(args.seed), resolved, started)?;
    Ok(ExitCode::SUCCESS)
}

fn rydberg_csv(runs: &[RydbergRun]) -> String {
    let n = runs.first().map_or(0, |r| r.n_sites);
    let mut csv = String::from("h,fidelity");
    for i in 1..=n {
        let _ = write!(csv, ",m_{i}");
    }
    csv.push_str(",u_x\n");
    for run in runs {
        let _ = write!(csv, "{},{}", run.h, run.fidelity);
        for v in &run.m_values {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    csv
}

fn cmd_rydberg(args: RydbergArgs) -> Result<ExitCode, Box<dyn Error>> {
    let started = Instant::now();
    if args.h.is_empty() {
        return Err("pass at least one detuning scale via --h".into());
    }
    let (cutoff, options) = match args.mode {
        RydbergMode::Pulses => (
            None,
            SimOptions {
                rotations: RotationMode::FinitePulse,
                preparation: PreparationMode::Pulses,
            },
        ),
        RydbergMode::Ideal => (
            Some(1),
            SimOptions {
                rotations: RotationMode::Instantaneous,
                preparation: PreparationMode::Pulses,
            },
        ),
    };
    let mut runs = Vec::with_capacity(args.h.len());
    for &h in &args.h {
        let cfg = RydbergChainConfig::new(args.n, h)?.with_interaction_cutoff(cutoff)?;
        runs.push(measure_observables(&cfg, &options)?);
    }
    let format = args.format.unwrap_or(if args.h.len() == 1 {
        OutputFormat::Json
    } else {
        OutputFormat::Csv
    });

    let mut artifacts = ArtifactSet::new();
    match format {
        OutputFormat::Json if runs.len() == 1 => artifacts.add_json(&args.out, &runs[0])?,
        OutputFormat::Json => artifacts.add_json(&args.out, &runs)?,
        OutputFormat::Csv => artifacts.add_text(&args.out, rydberg_csv(&runs)),
    }
    let resolved = json!({
        "n": args.n,
        "h": args.h,
        "mode": match args.mode { RydbergMode::Pulses => "pulses", RydbergMode::Ideal => "ideal" },
        "interaction_cutoff": cutoff,
        "format": match format { OutputFormat::Csv => "csv", OutputFormat::Json => "json" },
        "out": args.out,
    });
    artifacts.write_with_manifest("rydberg-sim", None, resolved, started)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_count(args: CountArgs) -> Result<ExitCode, Box<dyn Error>> {
    let count = count_independent_operators(args.n)?;
    println!("{count}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct PromiseReport {
    conditions: unicert::promise::PromiseConditionSet,
    verdict: PromiseVerdict,
}

fn cmd_promise_check(args: PromiseArgs) -> Result<ExitCode, Box<dyn Error>> {
    let started = Instant::now();
    let tableau = StabilizerTableau::parse_generator_list(&read_to_string(&args.generators)?)?;
    let report = PromiseReport {
        conditions: evaluate_conditions(&tableau)?,
        verdict: certify_under_promise(&tableau)?,
    };
    let rendered = serde_json::to_string_pretty(&report)?;
    println!("{rendered}");
    if let Some(out) = &args.out {
        let mut artifacts = ArtifactSet::new();
        artifacts.add_text(out, format!("{rendered}\n"));
        let resolved = json!({
            "generators": args.generators,
            "out": out,
        });
        artifacts.write_with_manifest("promise-check", None, resolved, started)?;
    }
    Ok(verdict_exit(report.verdict == PromiseVerdict::IsTargetGraphState))
}
