mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, CliResult, Context};
use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "metastab", version, about = "Metastability of mean-field Glauber dynamics with coupling disorder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 or absent uses all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides output.dir in the config (default ".").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the generated_at field so repeated runs are byte-identical.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Critical points of the limit landscape (JSON) and the T(K) curve (CSV).
    Landscape(Common),
    /// Critical field h_c for every beta of the sweep.
    PhaseDiagram(Common),
    /// Mean crossover time prediction at system size n.
    Predict(Common),
    /// Lumped-chain simulation of crossover times with an exponential-law test.
    Simulate(Common),
    /// Exact, simulated and predicted mean times for each n in n_values.
    Validate(Common),
    /// Gaussian fluctuation of the barrier under disorder, with a Monte Carlo histogram.
    Fluctuations(Common),
    /// T(K), T'(K), T''(K) at 2000 points.
    Tcurve(Common),
}

fn load(common: &Common) -> CliResult<Context> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", common.config.display())))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out_dir = match (&common.out, &config.output.dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => PathBuf::from("."),
    };
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    if let Some(t) = common.threads.filter(|&t| t > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(Context { config, out_dir, timestamp: !common.no_timestamp })
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let (common, f): (&Common, fn(&Context) -> CliResult<Vec<PathBuf>>) = match &cli.command {
        Command::Landscape(c) => (c, commands::landscape),
        Command::PhaseDiagram(c) => (c, commands::phase_diagram),
        Command::Predict(c) => (c, commands::predict),
        Command::Simulate(c) => (c, commands::simulate),
        Command::Validate(c) => (c, commands::validate),
        Command::Fluctuations(c) => (c, commands::fluctuations),
        Command::Tcurve(c) => (c, commands::tcurve),
    };
    let ctx = load(common)?;
    f(&ctx)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
