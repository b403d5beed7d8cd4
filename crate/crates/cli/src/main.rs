use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lrr_cli::commands;
use lrr_cli::config::{Format, RunConfig};
use lrr_cli::error::CliError;
use lrr_cli::records::write_records;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Parser)]
#[command(name = "lrr", version, about = "Latency-reliability co-design for remote state estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file; overrides [output].path. Stdout when neither is set.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output format; overrides [output].format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Monte Carlo seed; required by `simulate` and empirical sweeps.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    parallel: Option<usize>,
}

const POINT_COLUMNS: &str = "Columns: dim, mode, r, zeta, n, d, p_e, theta, growth, stable, \
single_shot_bound, steady_state_bound, empirical_error, empirical_se.\n\
theta and growth are per-mode maxima for vector plants. steady_state_bound is \"unbounded\" \
when the loop is unstable; p_e, theta and growth are empty when the code rate is not below \
capacity.";

#[derive(Debug, Subcommand)]
enum Command {
    /// Stability verdict and error bounds for one configuration.
    #[command(after_help = POINT_COLUMNS)]
    Analyze,
    /// Cartesian sweep over the [sweep] axes, one row per point.
    #[command(after_help = POINT_COLUMNS)]
    Sweep,
    /// Blocklength minimizing the steady-state bound, plus the heuristic choice.
    #[command(after_help = "Columns: dim, r, zeta, t_samp, pe_model, n_lo, n_hi, feasible_min, \
feasible_max, n_star, bound_star, n_heuristic, bound_heuristic, bound_at_n_hi.\n\
Exits with status 2 when no scanned blocklength gives a finite bound.")]
    Optimize,
    /// Monte Carlo run; per-round table on the output, summary on stderr.
    #[command(after_help = "Columns: round, mean_error, error_se, mean_width, width_se, expected_width.")]
    Simulate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.parallel {
        if threads == 0 {
            return Err(CliError::Usage("--parallel must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let path = cli.config.ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let cfg = RunConfig::load(&path)?;
    let out = cli.out.or_else(|| cfg.output.path.clone());
    let format = match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Jsonl) => Format::Jsonl,
        None => cfg.output.format.unwrap_or_default(),
    };
    let out = out.as_deref();
    match cli.command {
        Command::Analyze => {
            let rec = commands::analyze(&cfg)?;
            write_records(&[rec], format, out)
        }
        Command::Sweep => write_records(&commands::sweep(&cfg, cli.seed)?, format, out),
        Command::Optimize => {
            let rec = commands::optimize(&cfg)?;
            write_records(&[rec], format, out)
        }
        Command::Simulate => {
            let seed = cli.seed.ok_or_else(|| CliError::Usage("simulate needs --seed".into()))?;
            let (report, rows) = commands::simulate(&cfg, seed)?;
            eprint!("{}", commands::summary(&report));
            write_records(&rows, format, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
