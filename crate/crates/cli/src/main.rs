use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rbf_lab_cli::{commands, exit_code, ExperimentConfig};

#[derive(Parser)]
#[command(name = "rbf-lab", version, about = "Kernel interpolation experiments")]
struct Cli {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "RBF_LAB_THREADS")]
    threads: Option<usize>,
    /// Greedy start index on the candidate grid; random seed elsewhere.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Farthest-point sampling with per-prefix fill and separation.
    Greedy,
    /// Convergence study and smoothness verdict.
    Rates,
    /// Nested subsampling sequence.
    Subsample,
    /// The six equidistant studies on [0, 1] with slope summary.
    ReproduceFigure2 {
        /// Largest node count.
        #[arg(long, default_value_t = 8193)]
        max_n: usize,
    },
    /// Nystrom spectrum and Mercer truncation errors.
    SpectralDump,
}

fn run(cli: Cli) -> rbf_lab::Result<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| rbf_lab::Error::Usage(e.to_string()))?;
    }
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    let out = cli
        .out
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Greedy => commands::cmd_greedy(&config, &out),
        Command::Rates => commands::cmd_rates(&config, &out),
        Command::Subsample => commands::cmd_subsample(&config, &out),
        Command::ReproduceFigure2 { max_n } => commands::cmd_reproduce_figure2(&out, max_n),
        Command::SpectralDump => commands::cmd_spectral_dump(&config, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
