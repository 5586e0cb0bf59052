use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adb_relay::experiments::{self, ExperimentKind, Overrides};
use adb_relay::selftest;

#[derive(Parser)]
#[command(name = "adb-relay", version, about = "Throughput sweeps for buffer-aided multi-relay networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Throughput versus P_S/P_R (default SNR 10 dB, L=4, m=2).
    Fig3(SweepArgs),
    /// Maximum throughput versus SNR.
    Fig4(SweepArgs),
    /// Maximum ADB throughput versus group size m.
    Fig5(SweepArgs),
    /// Maximum throughput versus relay count.
    Fig6(SweepArgs),
    /// A single operating point for each scheme.
    Point(SweepArgs),
    /// Runs the built-in oracle checks.
    Selftest,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (CSV, or JSON lines with --json); stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated slots per evaluation (even).
    #[arg(long)]
    slots: Option<u64>,
    /// Worker threads for grid points.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    relays: Option<usize>,
    #[arg(long = "group-size")]
    group_size: Option<usize>,
    /// Comma-separated subset of crs, sfd-mmrs, df, adb.
    #[arg(long)]
    schemes: Option<String>,
    /// Comma-separated sweep values replacing the default grid.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Fixed P_S/P_R for `point`; optimized when absent.
    #[arg(long)]
    ratio: Option<f64>,
    /// Coarse grid size of the power-split search.
    #[arg(long = "grid-points")]
    grid_points: Option<usize>,
    /// Skip Monte Carlo; emit ADB closed-form rows only.
    #[arg(long = "analytic-only")]
    analytic_only: bool,
    /// Emit JSON lines instead of CSV.
    #[arg(long)]
    json: bool,
}

impl SweepArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            slots: self.slots,
            workers: self.workers,
            snr_db: self.snr_db,
            relays: self.relays,
            group_size: self.group_size,
            schemes: self.schemes.clone(),
            grid: self.grid.clone(),
            ratio: self.ratio,
            grid_points: self.grid_points,
            analytic_only: self.analytic_only,
            json: self.json,
        }
    }
}

fn run_sweep(kind: ExperimentKind, args: &SweepArgs) -> adb_relay::Result<()> {
    let spec = experiments::load_spec(kind, args.config.as_deref(), &args.overrides())?;
    log::info!("running {kind:?} with {} grid points, {} slots", spec.grid.len(), spec.n_slots);
    let output = experiments::run(&spec)?;
    experiments::emit(&spec, &output)
}

fn run_selftest() -> ExitCode {
    let results = selftest::run_all();
    for r in &results {
        println!("{r}");
    }
    if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Fig3(a) => (ExperimentKind::RatioSweep, a),
        Command::Fig4(a) => (ExperimentKind::SnrSweep, a),
        Command::Fig5(a) => (ExperimentKind::GroupingSweep, a),
        Command::Fig6(a) => (ExperimentKind::RelayCountSweep, a),
        Command::Point(a) => (ExperimentKind::SinglePoint, a),
        Command::Selftest => return run_selftest(),
    };
    match run_sweep(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
