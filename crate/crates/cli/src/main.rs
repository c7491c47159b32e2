#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bryant;
mod config;
mod decay;
mod output;
mod report;
mod verify;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, Parser, Subcommand};

use config::{normalize_key, parse_config, Settings};

/// Residual suites, decay fits and Bryant profiles for steady gradient Ricci
/// solitons.
#[derive(Parser, Debug)]
#[command(name = "soliton-lab", version)]
struct Cli {
    /// `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate identity residuals at seeded sample points.
    Verify(VerifyArgs),
    /// Fit decay exponents along radial rays and tabulate exponent formulas.
    Decay(DecayArgs),
    /// Integrate the Bryant profile and dump it as CSV.
    Bryant(BryantArgs),
    /// Re-render a JSON report as CSV.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Comma-separated models: cigar, cigarxr, bryant, euclidean, flat-spheres, perturbed.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated identity ids (default: all).
    #[arg(long)]
    identities: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Radial sampling range `lo,hi`.
    #[arg(long, allow_negative_numbers = true)]
    region: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    sigmas: Option<String>,
    #[arg(long)]
    fd_step: Option<String>,
    /// intrinsic or ambient.
    #[arg(long)]
    interpretation: Option<String>,
    #[arg(long)]
    tol_soliton: Option<String>,
    #[arg(long)]
    tol_lemma1: Option<String>,
    #[arg(long)]
    tol_lsf: Option<String>,
    #[arg(long)]
    tol_evolution: Option<String>,
    #[arg(long)]
    tol_main_u0: Option<String>,
    #[arg(long)]
    min_order: Option<String>,
    /// Bryant profile extent and accuracy.
    #[arg(long)]
    bryant_rmax: Option<String>,
    #[arg(long)]
    bryant_tol: Option<String>,
    #[arg(long)]
    json: Option<String>,
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args, Debug)]
struct DecayArgs {
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated quantities: R, L22_mag, grad_lambda_norm, hess_lambda_norm, U_sigma(<s>), H, grad_norm_sq.
    #[arg(long)]
    quantity: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    rmin: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    rmax: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Tabulate sigma, e1, e2 and term orders over the (a, b) grid.
    #[arg(long)]
    table_exponents: bool,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<String>,
    /// Slack on fitted exponents against predicted bounds.
    #[arg(long, allow_negative_numbers = true)]
    consistency_tol: Option<String>,
    /// Comparison-ODE constant and initial value.
    #[arg(long, allow_negative_numbers = true)]
    comparison_c: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    comparison_u0: Option<String>,
    #[arg(long)]
    bryant_tol: Option<String>,
    #[arg(long)]
    json: Option<String>,
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args, Debug)]
struct BryantArgs {
    #[arg(long, allow_negative_numbers = true)]
    rmax: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<String>,
    /// Profile CSV path (default: stdout).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// JSON report written by `verify` or `decay`.
    #[arg(long)]
    input: Option<String>,
    /// CSV path (default: stdout).
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config; exit 2.
    Usage(String),
    /// Evaluation or I/O failure; exit 1.
    Runtime(String),
}

impl From<soliton_lab::Error> for CliError {
    fn from(e: soliton_lab::Error) -> Self {
        match e {
            soliton_lab::Error::InvalidInput(m) => CliError::Usage(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Whether all checks passed.
pub type Outcome = Result<bool, CliError>;

/// Values given explicitly on the command line, keyed like config entries.
fn explicit_flags(m: &ArgMatches) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for id in m.ids() {
        let id = id.as_str();
        if id == "config" || m.value_source(id) != Some(ValueSource::CommandLine) {
            continue;
        }
        // arg groups show up in `ids()` too and carry no value
        let value = match (m.try_get_one::<String>(id), m.try_get_one::<bool>(id)) {
            (Ok(Some(v)), _) => v.clone(),
            (_, Ok(Some(b))) => b.to_string(),
            _ => continue,
        };
        out.insert(normalize_key(id), value);
    }
    out
}

fn settings_for(
    name: &str,
    sub: &ArgMatches,
    config: Option<&PathBuf>,
) -> Result<Settings, CliError> {
    let file = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    let cmd = Cli::command();
    let valid: Vec<String> = cmd
        .find_subcommand(name)
        .map(|c| {
            c.get_arguments()
                .map(|a| normalize_key(a.get_id().as_str()))
                .filter(|k| k != "config")
                .collect()
        })
        .unwrap_or_default();
    Settings::merge(file, explicit_flags(sub), &valid)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SOLITON_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Usage(format!("SOLITON_LAB_THREADS must be a count, got `{raw}`"))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn run(matches: &ArgMatches) -> Outcome {
    configure_threads()?;
    let config = matches.get_one::<PathBuf>("config");
    let (name, sub) = matches
        .subcommand()
        .ok_or_else(|| CliError::Usage("missing command".into()))?;
    let mut settings = settings_for(name, sub, config)?;
    match name {
        "verify" => verify::run(&mut settings),
        "decay" => decay::run(&mut settings),
        "bryant" => bryant::run(&mut settings),
        "report" => report::run(&settings),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&matches) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
