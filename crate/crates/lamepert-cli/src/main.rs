use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lamepert_cli::config::{ExperimentConfig, Kind};
use lamepert_cli::run::{run, write_outputs};
use lamepert_cli::Result;

#[derive(Debug, Parser)]
#[command(name = "lamepert", version, about = "Shape-perturbation convergence experiments for elastic inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (JSON); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for results.csv, report.json and emt_table.csv.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the node count of the config.
    #[arg(long, global = true)]
    nodes: Option<usize>,

    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Base transmission solve with interface and far-field checks.
    Solve,
    /// Displacement, density and operator expansion sweeps.
    Expand,
    /// Traction–displacement identity sweeps.
    Traction,
    /// Moment tensor table and moment expansion sweeps.
    Emt,
    /// The three headline expansion sweeps.
    SweepAll,
}

impl Command {
    fn kind(&self) -> Kind {
        match self {
            Command::Solve => Kind::Solve,
            Command::Expand => Kind::Expand,
            Command::Traction => Kind::Traction,
            Command::Emt => Kind::Emt,
            Command::SweepAll => Kind::SweepAll,
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = cli.nodes {
        config.nodes = n;
    }
    let prepared = config.validate(cli.command.kind())?;
    let outcome = run(&config, &prepared)?;
    let written = write_outputs(&outcome, &cli.out)?;
    if !cli.quiet {
        let report = &outcome.report;
        for note in &report.notes {
            println!("note: {note}");
        }
        for row in report.rows.iter().filter(|r| r.pass.is_some()) {
            let verdict = if row.pass == Some(true) { "PASS" } else { "FAIL" };
            match row.slope {
                Some(s) => println!("{verdict} {} slope={s:.3}", row.check),
                None => println!("{verdict} {} value={:.3e}", row.check, row.value),
            }
        }
        for p in written {
            println!("wrote {}", p.display());
        }
    }
    Ok(outcome.report.all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
