use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use moeliga_cli::{cmd_compare, cmd_run, cmd_sweep, CliError, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "moeliga", version, about = "Multi-objective genetic feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Overrides the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "MOELIGA_THREADS")]
    threads: Option<usize>,

    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replicated runs; writes per-replication fronts and traces plus summary.json.
    Run { config: PathBuf },
    /// MOELIGA against mutual-information ranking and forward selection.
    Compare { config: PathBuf },
    /// Every combination of the [grid] values, each as a full experiment.
    Sweep { config: PathBuf },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.into()))?;
    }
    let path = match &cli.command {
        Command::Run { config } | Command::Compare { config } | Command::Sweep { config } => config,
    };
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = cli.out_dir {
        cfg.out_dir = dir;
    }
    match cli.command {
        Command::Run { .. } => {
            let s = cmd_run(&cfg)?;
            println!(
                "median r1hat {:.4} (std {:.4}), median test uar {:.4}, median features {}",
                s.median_r1hat, s.std_r1hat, s.median_uar, s.median_n_selected
            );
        }
        Command::Compare { .. } => {
            for row in cmd_compare(&cfg)? {
                println!(
                    "{:<8} uar {:.4}  features {:>5}  {:.2}s",
                    row.method, row.median_uar_test, row.median_n_selected, row.median_wall_seconds
                );
            }
        }
        Command::Sweep { .. } => {
            for row in cmd_sweep(&cfg)? {
                let values: Vec<String> = row.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("cell {:>3} [{}] median r1hat {:.4}", row.cell, values.join(", "), row.summary.median_r1hat);
            }
        }
    }
    println!("artifacts in {}", cfg.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
