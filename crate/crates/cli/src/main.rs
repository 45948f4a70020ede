use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cli::{run_classify, run_fit, run_gatecount, run_price, CliError, ExperimentConfig, OutputDir};

#[derive(Parser)]
#[command(name = "qexp", version, about = "Unary option pricing and data re-uploading experiments")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// JSON config file; missing sections use defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweep points.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "QEXP_OUT", default_value = "qexp-out")]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Noisy unary pricing with iterative amplitude estimation over an eps and M grid.
    Price,
    /// Unary vs binary gate counts and their crossover.
    Gatecount,
    /// Regression fits of target functions over a layer sweep.
    Fit,
    /// Classifier training over a layer sweep.
    Classify,
}

fn run(args: &Args) -> Result<(), CliError> {
    let cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(j) = args.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let out = OutputDir::create(&args.out)?;
    let summary = match args.command {
        Cmd::Price => serde_json::to_value(run_price(&cfg.price.unwrap_or_default(), seed, &out)?.files)?,
        Cmd::Gatecount => serde_json::to_value(run_gatecount(&cfg.gatecount.unwrap_or_default(), seed, &out)?.files)?,
        Cmd::Fit => serde_json::to_value(run_fit(&cfg.fit.unwrap_or_default(), seed, &out)?.files)?,
        Cmd::Classify => serde_json::to_value(run_classify(&cfg.classify.unwrap_or_default(), seed, &out)?.files)?,
    };
    if let Some(files) = summary.as_array() {
        for f in files.iter().filter_map(|f| f.as_str()) {
            println!("{}", out.path().join(f).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qexp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
