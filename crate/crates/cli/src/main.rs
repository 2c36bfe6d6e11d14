use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use price_protection::figures::{self, FigureOptions};
use price_protection::{run_experiment, verify, write_experiment, Error, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ppsim", version, about = "Dynamic pricing under price protection: experiments and checks")]
struct Cli {
    /// Worker threads for replications (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Master seed; overrides the config's `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a JSON experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regenerate the CSVs behind one figure.
    Figures {
        /// One of fig4, fig6, fig7, fig8, fig9, fig10.
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = figures::DEFAULT_REPLICATIONS)]
        reps: u64,
        #[arg(long)]
        out: PathBuf,
        /// Replace the preset's horizon grid (comma-separated), for quick runs.
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<u64>>,
    },
    /// Check the refund ledger and episode invariants; exits 1 on failure.
    Verify,
}

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn threads(requested: Option<usize>) -> usize {
    requested
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let threads = threads(cli.threads);
    match cli.command {
        Command::Run { config } => {
            let mut exp = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(seed) = cli.seed {
                exp.master_seed = seed;
            }
            let output = run_experiment(&exp, threads)?;
            write_experiment(&output, &exp.output_dir)?;
            eprintln!(
                "wrote {} rows and {} traces to {}",
                output.rows.len(),
                output.traces.len(),
                exp.output_dir.display()
            );
            Ok(true)
        }
        Command::Figures {
            preset,
            reps,
            out,
            t_grid,
        } => {
            if reps == 0 {
                return Err(Error::Config("--reps must be at least 1".into()).into());
            }
            let opts = FigureOptions {
                replications: reps,
                master_seed: cli.seed.unwrap_or(0),
                threads,
                t_grid,
            };
            for path in figures::write_preset(&preset, &opts, &out)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::Verify => {
            let outcomes = verify::run_checks();
            print!("{}", verify::format_table(&outcomes));
            Ok(outcomes.iter().all(|o| o.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_USAGE),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_config));
            ExitCode::from(if config_error { EXIT_USAGE } else { EXIT_RUNTIME })
        }
    }
}
