use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gbadmm::cli::config::{load_config_with, ExperimentKind, RunConfig, SolverChoice};
use gbadmm::cli::run;

#[derive(Parser, Debug)]
#[command(name = "gbadmm", version, about = "Grain-boundary dislocation structures by multi-block ADMM")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Misorientation angle in degrees.
    #[arg(long = "theta-deg", global = true)]
    theta_deg: Option<f64>,

    #[arg(long, global = true, value_parser = ["admm", "alm", "penalty", "all"])]
    solver: Option<String>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for grid scans.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Check the sufficient-decrease inequality along the ADMM run.
    #[arg(long, global = true)]
    audit: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Six-family {111} twist boundary with ADMM, ALM and the penalty method.
    Twist6,
    /// Three-family reduction: ADMM against brute-force minimization.
    Reduced3,
    /// Grid certificate of quasi-convexity on the disk.
    Certify,
    /// Smallest certified regularization.
    Epsilon0,
    /// Spectral radius and recursion of the divergent three-block example.
    Counterexample,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Twist6 => ExperimentKind::Twist6,
            Command::Reduced3 => ExperimentKind::Reduced3,
            Command::Certify => ExperimentKind::Certify,
            Command::Epsilon0 => ExperimentKind::Epsilon0,
            Command::Counterexample => ExperimentKind::Counterexample,
        }
    }
}

fn build_config(cli: &Cli) -> gbadmm::Result<RunConfig> {
    let kind = cli.command.kind();
    let mut cfg = match &cli.config {
        Some(path) => load_config_with(path, Some(kind))?,
        None => RunConfig::new(kind),
    };
    if let Some(t) = cli.theta_deg {
        cfg.theta_deg = t;
    }
    if let Some(s) = &cli.solver {
        cfg.solver = s.parse::<SolverChoice>().expect("clap restricts the values");
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    cfg.audit |= cli.audit;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cfg) {
        Ok(report) => {
            print!("{}", report.render());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
