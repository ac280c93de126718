//! `corrrb`: run correlated RB experiments from a JSON config or a bundled preset.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.
//! Log verbosity comes from `CORRRB_LOG` (default `info`); logs go to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use corrrb::error::Error;
use corrrb::experiment::{cmd_echo_compare, cmd_inject, cmd_run, Artifacts, ExperimentConfig, PRESETS};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "corrrb", version, about = "Correlated randomized benchmarking on a simulated device")]
struct Cli {
    /// JSON experiment config
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// bundled config: noiseless, paper4q (alias fig1), inject4, echo59
    #[arg(long, global = true)]
    preset: Option<String>,
    /// master seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// full corrRB: report.json, decays.csv, epsilon_bar.svg, decay_curves.svg
    Run,
    /// corrRB with random bit-flip injection after every Clifford layer
    Inject {
        /// comma-separated qubits receiving the flips
        #[arg(long, value_delimiter = ',')]
        qubits: Option<Vec<usize>>,
        /// flip probability per layer
        #[arg(long)]
        p: Option<f64>,
    },
    /// echo and control schedules on identical sequences
    EchoCompare,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_config() { EXIT_CONFIG } else { EXIT_RUNTIME };
        Self { code, message: e.to_string() }
    }
}

fn config_error(message: String) -> Failure {
    Failure { code: EXIT_CONFIG, message }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), None) => ExperimentConfig::load(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => return Err(config_error(format!("one of --config or --preset is required (presets: {})", PRESETS.join(", ")))),
        (Some(_), Some(_)) => unreachable!("clap rejects --config with --preset"),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config_error("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: EXIT_RUNTIME, message: e.to_string() })?;
    }
    let cfg = load_config(cli)?;
    let files: Artifacts = match &cli.command {
        Command::Run => cmd_run(&cfg)?.1,
        Command::Inject { qubits, p } => {
            let (report, files) = cmd_inject(&cfg, qubits.clone(), *p)?;
            if let Some(inj) = &report.injection {
                log::info!(
                    "injected pattern {}: eps = {:.5} +- {:.5} (expected {:.5}), eta = {:.5}",
                    inj.pattern,
                    inj.eps,
                    inj.eps_stderr,
                    inj.expected_eps,
                    inj.eta
                );
            }
            files
        }
        Command::EchoCompare => {
            let (report, files) = cmd_echo_compare(&cfg)?;
            log::info!("eta control = {:.5}, eta echo = {:.5}", report.eta_control, report.eta_echo);
            files
        }
    };
    let dir = cfg.output_dir();
    for path in files.write(&dir).map_err(|e| Failure { code: EXIT_RUNTIME, message: format!("writing {}: {e}", dir.display()) })? {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CORRRB_LOG", "info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
