use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use auctionsim::cli::{
    cmd_fit, cmd_ingest, cmd_simulate, cmd_validate, parse_band, parse_sizes, CliError, RunConfig,
};

/// Auction price simulation: kernel density fit, polynomial target and
/// Metropolis-Hastings scenario sampling.
#[derive(Parser)]
#[command(name = "auctionsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the KDE and polynomial target, write density.csv.
    Fit(CommonArgs),
    /// Run the scenario grid, write samples, histograms and report files.
    Simulate(CommonArgs),
    /// Rerun deterministically and check the outputs; exit 2 on failure.
    Validate(CommonArgs),
    /// Parse and deflate the input, echo price series statistics.
    Ingest(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Auction price CSV (header: year,price_brl_mwh,auction_id).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Deflator CSV (header: year,factor).
    #[arg(long)]
    deflator: Option<PathBuf>,
    /// Base year the prices are deflated to.
    #[arg(long)]
    base_year: Option<i32>,
    /// gaussian | epanechnikov.
    #[arg(long)]
    kernel: Option<String>,
    /// Positive bandwidth, or `auto` for Silverman's rule.
    #[arg(long)]
    bandwidth: Option<String>,
    /// Polynomial degree of the fitted target.
    #[arg(long)]
    degree: Option<usize>,
    /// Number of grid points for the least-squares fit.
    #[arg(long)]
    fit_grid: Option<usize>,
    /// Number of independent scenarios.
    #[arg(long)]
    scenarios: Option<u32>,
    /// Comma list of post-burn-in sample sizes.
    #[arg(long)]
    sizes: Option<String>,
    /// Steps discarded before recording states.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Base seed; per-chain seeds are derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Price band as LO:HI.
    #[arg(long)]
    band: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Operational(format!("cannot read {}: {e}", path.display()))
            })?;
            cfg.apply_config_file(&text, path)?;
        }
        if let Some(v) = &self.input {
            cfg.input_path = v.clone();
        }
        if let Some(v) = &self.deflator {
            cfg.deflator_path = v.clone();
        }
        if let Some(v) = self.base_year {
            cfg.base_year = v;
        }
        if let Some(v) = &self.kernel {
            cfg.kernel = v.parse().map_err(CliError::Operational)?;
        }
        if let Some(v) = &self.bandwidth {
            cfg.apply_key("bandwidth", v).map_err(CliError::Operational)?;
        }
        if let Some(v) = self.degree {
            cfg.degree = v;
        }
        if let Some(v) = self.fit_grid {
            cfg.fit_grid = v;
        }
        if let Some(v) = self.scenarios {
            cfg.n_scenarios = v;
        }
        if let Some(v) = &self.sizes {
            cfg.sizes = parse_sizes(v).map_err(CliError::Operational)?;
        }
        if let Some(v) = self.burn_in {
            cfg.burn_in = v;
        }
        if let Some(v) = self.seed {
            cfg.base_seed = v;
        }
        if let Some(v) = &self.band {
            let (lo, hi) = parse_band(v).map_err(CliError::Operational)?;
            cfg.band_lo = lo;
            cfg.band_hi = hi;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        Ok(cfg)
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Fit(args) => cmd_fit(&args.resolve()?),
        Command::Simulate(args) => cmd_simulate(&args.resolve()?).map(|_| ()),
        Command::Validate(args) => cmd_validate(&args.resolve()?),
        Command::Ingest(args) => cmd_ingest(&args.resolve()?),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
