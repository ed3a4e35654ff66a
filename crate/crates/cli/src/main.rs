use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liouville_lab::harness::{emit, num, run_campaign, ExperimentConfig, Format};

/// Simulation campaigns for Liouville Brownian motion on regularized
/// Gaussian multiplicative chaos.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on error.
/// Field replicas are cached in the directory named by LBM_CACHE_DIR.
#[derive(Parser)]
#[command(name = "lbm-lab", version)]
struct Cli {
    #[command(subcommand)]
    campaign: Campaign,
}

#[derive(Subcommand)]
enum Campaign {
    /// Sample fields and compare covariances with the layered kernel.
    FieldSample(Common),
    /// Mean mass, moment scaling and Hölder statistics of the measure.
    MeasureScaling(Common),
    /// Exit-time means and inverse moments.
    ExitMoments(Common),
    /// Exit-time tail probabilities.
    ExitTails(Common),
    /// Spectral vs Monte Carlo heat kernel, eigenvalues, Green function.
    HeatKernel(Common),
    /// On-diagonal heat kernel profile.
    Ondiag(Common),
    /// Off-diagonal heat kernel decay.
    Offdiag(Common),
    /// Harmonic measure and far-field decay of P_x[Y_t ∈ D_R].
    FellerScan(Common),
    /// All campaigns at γ = 0 against exact oracles.
    GammaZeroSuite(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
    Both,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
    /// Table formats to write.
    #[arg(long, value_enum, default_value = "both")]
    format: OutputFormat,
}

impl Campaign {
    fn split(self) -> (&'static str, Common) {
        match self {
            Campaign::FieldSample(c) => ("field-sample", c),
            Campaign::MeasureScaling(c) => ("measure-scaling", c),
            Campaign::ExitMoments(c) => ("exit-moments", c),
            Campaign::ExitTails(c) => ("exit-tails", c),
            Campaign::HeatKernel(c) => ("heat-kernel", c),
            Campaign::Ondiag(c) => ("ondiag", c),
            Campaign::Offdiag(c) => ("offdiag", c),
            Campaign::FellerScan(c) => ("feller-scan", c),
            Campaign::GammaZeroSuite(c) => ("gamma-zero-suite", c),
        }
    }
}

fn run(name: &str, args: Common) -> liouville_lab::Result<bool> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if config.campaign != name && args.config.is_some() {
        eprintln!("note: configuration names campaign `{}`; running `{name}`", config.campaign);
    }
    config.campaign = name.to_string();
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = args.out {
        config.output = out;
    }
    config.validate()?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| liouville_lab::Error::Config(format!("thread pool: {e}")))?;
    }
    let result = run_campaign(&config)?;
    let formats = match args.format {
        OutputFormat::Csv => vec![Format::Csv],
        OutputFormat::Json => vec![Format::Json],
        OutputFormat::Both => vec![Format::Csv, Format::Json],
    };
    let files = emit(&result, &config, &config.output, &formats)?;
    for w in &result.summary.warnings {
        eprintln!("warning: {w}");
    }
    for c in &result.summary.checks {
        println!(
            "{} {}: {} (target {})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            num(c.value),
            c.target
        );
    }
    println!(
        "{name}: {} files in {} ({:.1} s, config {})",
        files.len(),
        config.output.display(),
        result.wall_clock,
        &result.config_hash[..12]
    );
    Ok(result.passed())
}

fn main() -> ExitCode {
    let (name, args) = Cli::parse().campaign.split();
    match run(name, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
