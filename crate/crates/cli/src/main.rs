use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use eahm_cli::{run_command, Command, Scenario};

#[derive(Debug, Parser)]
#[command(version, about = "Evaluate, classify and verify extended additive hazard models")]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Scenario TOML file
    #[arg(long)]
    scenario: PathBuf,

    /// Output directory (overrides `output.dir`; default `eahm-out`)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for every randomized step (overrides the file)
    #[arg(long)]
    seed: Option<u64>,

    /// Number of x-grid points (overrides the file)
    #[arg(long)]
    grid_points: Option<usize>,

    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = Scenario::from_path(&cli.scenario).and_then(|mut scenario| {
        if let Some(seed) = cli.seed {
            scenario.seed = seed;
        }
        if let Some(n) = cli.grid_points {
            scenario.x_grid.points = n;
            scenario.validate()?;
        }
        let out = cli
            .out
            .clone()
            .or_else(|| scenario.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("eahm-out"));
        run_command(cli.command, &scenario, &out)
    });
    match result {
        Ok(run) => {
            if !cli.quiet {
                print!("{}", run.summary);
                println!("elapsed {:.3} s", started.elapsed().as_secs_f64());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
