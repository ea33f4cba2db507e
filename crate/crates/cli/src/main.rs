use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use tilt_cli::config::{self, ConfigError};
use tilt_cli::exit;
use tilt_cli::output;
use tilt_cli::pipelines::{self, RunError};

#[derive(Parser)]
#[command(
    name = "tilt",
    version,
    about = "Change-of-measure limit theorem experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and list every problem found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the smoothing constant c.
    Constant {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config_failure(e: &ConfigError) -> ExitCode {
    eprintln!("config error:\n{e}");
    ExitCode::from(exit::CONFIG as u8)
}

fn run_failure(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    let code = match e {
        RunError::Resource(_) => exit::RESOURCE,
        _ => exit::RUN_ERROR,
    };
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match config::load(&config) {
            Ok(cfg) => {
                println!(
                    "ok: {} experiment, {} sample(s), n_list {:?}",
                    cfg.kind, cfg.samples, cfg.n_list
                );
                ExitCode::SUCCESS
            }
            Err(e) => config_failure(&e),
        },
        Command::Constant { out } => {
            let outcome = match pipelines::run_constant() {
                Ok(o) => o,
                Err(e) => return run_failure(&e),
            };
            println!("{}", outcome.report["esseen_constant"]);
            if let Some(dir) = out {
                let report = serde_json::json!({ "kind": "constant", "results": outcome.report });
                if let Err(e) = output::write_all(&dir, &outcome, &report) {
                    return run_failure(&e);
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            seed,
            workers,
            out,
        } => {
            let mut cfg = match config::load(&config) {
                Ok(c) => c,
                Err(e) => return config_failure(&e),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output = o;
            }
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
                .max(1);
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(p) => p,
                Err(e) => return run_failure(&RunError::Resource(e.to_string())),
            };
            let start = Instant::now();
            let outcome = match pool.install(|| pipelines::run(&cfg)) {
                Ok(o) => o,
                Err(e) => return run_failure(&e),
            };
            let report =
                output::report_line(&cfg, &outcome, workers, start.elapsed().as_secs_f64());
            if let Err(e) = output::write_all(&cfg.output, &outcome, &report) {
                return run_failure(&e);
            }
            if let Err(e) =
                std::fs::write(cfg.output.join("config.toml"), output::config_toml(&cfg))
            {
                return run_failure(&RunError::Io(e.to_string()));
            }
            eprintln!(
                "wrote {} table(s) and report.jsonl to {}",
                outcome.tables.len(),
                cfg.output.display()
            );
            if outcome.check_failed {
                eprintln!("a dominance check failed");
                return ExitCode::from(exit::CHECK_FAILED as u8);
            }
            ExitCode::SUCCESS
        }
    }
}
