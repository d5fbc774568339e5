use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pdgc::synthetic::ScenarioParams;
use pdgc_cli::lattice_cmd::lattice_listing;
use pdgc_cli::{run_analysis, simulate_to_file, write_outputs, CliError, CliResult, ConfigFile, Settings};

/// Partial decomposition of spectral Granger causality.
#[derive(Parser)]
#[command(name = "pdgc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit, decompose and test one target/driver configuration.
    Analyze(AnalyzeArgs),
    /// Write a simulated benchmark scenario as CSV.
    Simulate(SimulateArgs),
    /// List the redundancy lattice for N sources.
    Lattice(LatticeArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Key-value (TOML) settings file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated driver channel names.
    #[arg(long)]
    drivers: Option<String>,
    /// Sampling frequency in Hz.
    #[arg(long)]
    fs: Option<f64>,
    /// Bands as name=lo:hi in Hz, comma-separated.
    #[arg(long)]
    bands: Option<String>,
    #[arg(long)]
    order_min: Option<usize>,
    #[arg(long)]
    order_max: Option<usize>,
    /// Number of frequency grid points on [0, fs/2].
    #[arg(long)]
    nfreq: Option<usize>,
    /// Number of IAAFT surrogates (0 skips the test).
    #[arg(long)]
    surrogates: Option<usize>,
    #[arg(long)]
    percentile: Option<f64>,
    #[arg(long)]
    iaaft_max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Detrending cutoff in cycles/sample.
    #[arg(long)]
    detrend_cutoff: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl AnalyzeArgs {
    fn settings(self) -> CliResult<Settings> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            input: self.input,
            fs: self.fs,
            target: self.target,
            drivers: self.drivers,
            bands: self.bands,
            order_min: self.order_min,
            order_max: self.order_max,
            nfreq: self.nfreq,
            surrogates: self.surrogates,
            percentile: self.percentile,
            iaaft_max_iter: self.iaaft_max_iter,
            seed: self.seed,
            detrend_cutoff: self.detrend_cutoff,
            out: self.out,
        };
        Settings::resolve(file.overridden_by(flags))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 250)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
    /// Sampling frequency recorded with the series.
    #[arg(long, default_value_t = 1.0)]
    fs: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LatticeArgs {
    /// Number of sources (1 to 4).
    #[arg(long)]
    n: usize,
    #[arg(long)]
    json: bool,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(args) => {
            let settings = args.settings()?;
            let out = run_analysis(&settings)?;
            write_outputs(&out, &settings.out)?;
            eprintln!(
                "order {}; full GC (whole band) {:.6} nats; wrote {}",
                out.report.model.order,
                out.report.decomposition.full.get(pdgc::spectral::WHOLE_BAND).copied().unwrap_or(f64::NAN),
                settings.out.display()
            );
        }
        Command::Simulate(args) => {
            if args.length < 16 {
                return Err(CliError::Config(format!("length must be at least 16, got {}", args.length)));
            }
            if !(args.fs > 0.0 && args.fs.is_finite()) {
                return Err(CliError::Config(format!("fs must be positive, got {}", args.fs)));
            }
            let params = ScenarioParams {
                len: args.length,
                burn_in: args.burn_in,
                fs: args.fs,
            };
            simulate_to_file(&args.scenario, params, args.seed, &args.out)?;
        }
        Command::Lattice(args) => {
            let listing = lattice_listing(args.n)?;
            if args.json {
                println!("{}", serde_json::to_string_pretty(&listing).expect("serializable"));
            } else {
                print!("{}", listing.to_text());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pdgc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
