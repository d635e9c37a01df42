use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use taxgrowth::cli::{parse_config, run, JobKind, JobSpec};
use taxgrowth::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Verb {
    Analytic,
    Simulate,
    Agents,
    Sweep,
    OptimalTax,
    Classify,
}

impl From<Verb> for JobKind {
    fn from(v: Verb) -> Self {
        match v {
            Verb::Analytic => JobKind::Analytic,
            Verb::Simulate => JobKind::Simulate,
            Verb::Agents => JobKind::Agents,
            Verb::Sweep => JobKind::Sweep,
            Verb::OptimalTax => JobKind::OptimalTax,
            Verb::Classify => JobKind::Classify,
        }
    }
}

/// Growth, optimal wealth tax and inequality in a stochastic two-sector economy.
#[derive(Debug, Parser)]
#[command(name = "taxgrowth", version)]
struct Args {
    /// Job to run.
    verb: Verb,
    /// Job configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `[output] dir`; default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides `[sim] seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(args: &Args) -> Result<String, Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = args.seed {
        config.sim.seed = seed;
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::Config {
                line: None,
                msg: "--threads must be >= 1".into(),
            });
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let dir = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let job = JobSpec {
        kind: args.verb.into(),
        config,
    };
    Ok(run(&job, &dir)?.report)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
