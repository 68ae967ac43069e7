use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qnes::harness::{parse_override, run_experiment, summarize_files, ExperimentConfig};
use qnes::Error;

#[derive(Parser)]
#[command(
    name = "qnes",
    version,
    about = "Natural evolution strategies for parameterized quantum circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML file.
    Run {
        config: PathBuf,
        /// Run only this seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; replaces the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace a configuration value, e.g. `nes.population=8`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Per-iteration mean, min and max loss across trace files.
    Summarize {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            overrides,
        } => {
            let mut pairs = overrides
                .iter()
                .map(|o| parse_override(o))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(s) = seed {
                pairs.push(("seeds".into(), format!("[{s}]")));
            }
            let mut config = ExperimentConfig::load(&config, &pairs)?;
            if let Some(dir) = out {
                config.set_output_dir(dir);
            }
            let report = run_experiment(&config)?;
            for note in &report.notes {
                println!("{note}");
            }
            for file in &report.files {
                println!("wrote {}", file.display());
            }
        }
        Command::Summarize { traces, out } => {
            summarize_files(&traces, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
