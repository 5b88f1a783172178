//! `detac` command line: `train`, `verify`, `bandit-suite`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use detac::harness::{
    finals_csv, run_bandit_suite, run_experiment, run_verification, BanditSuiteConfig, ExperimentConfig, Suite,
};
use detac::Error;

#[derive(Parser)]
#[command(name = "detac", version, about = "Deterministic-policy actor-critic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent per seed and write learning-curve CSVs.
    Train {
        /// key=value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "seed-offset")]
        seed_offset: Option<u64>,
        /// Extra key=value overrides, applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run a verification suite; exit status 1 if any check fails.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
    },
    /// Tune and compare SPG, DPG and CACLA on quadratic bandits.
    BanditSuite {
        /// Evaluation seeds per rule.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "seed-offset")]
        seed_offset: Option<u64>,
        /// Episodes per run.
        #[arg(long)]
        episodes: Option<usize>,
        /// Comma-separated action dimensions.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        /// Fit the SPG/DPG compatible critic by least squares over this many
        /// recent samples instead of SGD.
        #[arg(long = "ls-window")]
        ls_window: Option<usize>,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse::<Suite>()
        .map_err(|_| format!("expected one of lemma1, lemma2, theorem1, gradcheck, all; got `{s}`"))
}

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

fn report(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        Error::Config(_) | Error::Parse { .. } => ExitCode::from(USAGE),
        _ => ExitCode::from(FAILURE),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Train {
            config,
            seeds,
            out,
            seed_offset,
            set,
        } => {
            let mut overrides = set;
            if let Some(n) = seeds {
                overrides.push(format!("seeds={n}"));
            }
            if let Some(dir) = out {
                overrides.push(format!("out={}", dir.display()));
            }
            if let Some(k) = seed_offset {
                overrides.push(format!("seed_offset={k}"));
            }
            let config = match ExperimentConfig::load(config.as_deref(), overrides.iter().map(String::as_str)) {
                Ok(c) => c,
                Err(e) => return report(e),
            };
            match run_experiment(&config) {
                Ok(output) => {
                    for path in &output.seed_files {
                        println!("{}", path.display());
                    }
                    println!("{}", output.aggregate_file.display());
                    ExitCode::SUCCESS
                }
                Err(e) => report(e),
            }
        }
        Command::Verify { suite } => match run_verification(suite) {
            Ok(outcome) => {
                print!("{outcome}");
                ExitCode::from(outcome.exit_code() as u8)
            }
            Err(e) => report(e),
        },
        Command::BanditSuite {
            seeds,
            out,
            seed_offset,
            episodes,
            dims,
            ls_window,
        } => {
            let mut config = BanditSuiteConfig::default();
            if let Some(n) = seeds {
                config.eval_seeds = n;
            }
            if let Some(k) = seed_offset {
                config.seed_offset = k;
            }
            if let Some(e) = episodes {
                config.episodes = e;
            }
            if !dims.is_empty() {
                config.dims = dims;
            }
            config.ls_window = ls_window;
            if config.eval_seeds == 0 || config.dims.contains(&0) || ls_window == Some(0) {
                eprintln!("error: seeds, dims and ls-window must be positive");
                return ExitCode::from(USAGE);
            }
            let results = match run_bandit_suite(&config) {
                Ok(r) => r,
                Err(e) => return report(e),
            };
            for r in &results {
                print!("{r}");
            }
            if let Some(dir) = out {
                let path = dir.join("bandit_suite.csv");
                let written = std::fs::create_dir_all(&dir)
                    .and_then(|_| std::fs::write(&path, finals_csv(&results, config.seed_offset)));
                if let Err(e) = written {
                    return report(Error::Io { path, source: e });
                }
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
    }
}
