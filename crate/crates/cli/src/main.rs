use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use currents::{emit_plotdata, oracle_scenario, run_scenario, PlotKind, RunOptions, Scenario};

#[derive(Parser)]
#[command(
    name = "currents",
    version,
    about = "Flat norms, penalized selection and stability experiments on chain complexes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its results bundle.
    Run {
        config: PathBuf,
        /// Bundle directory; defaults to `$CURRENTS_OUT_DIR/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "CURRENTS_OUT_DIR", default_value = "results", hide_env_values = true)]
        out_root: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        verbose: bool,
    },
    /// Print a plot-ready table from a results bundle.
    Plot {
        bundle: PathBuf,
        #[arg(long, value_enum)]
        what: What,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Cross-check a scenario's selection stage against brute-force searches.
    Oracle { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Profile,
    Spectrum,
    LambdaSweep,
}

impl From<What> for PlotKind {
    fn from(w: What) -> Self {
        match w {
            What::Profile => PlotKind::Profile,
            What::Spectrum => PlotKind::Spectrum,
            What::LambdaSweep => PlotKind::LambdaSweep,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Run {
            config,
            out,
            out_root,
            jobs,
            verbose,
        } => {
            let scenario = Scenario::load(&config)?;
            let bundle = run_scenario(&scenario, &RunOptions { jobs, verbose })?;
            let dir = out.unwrap_or_else(|| out_root.join(&scenario.name));
            bundle
                .write(&dir)
                .with_context(|| format!("writing bundle to {}", dir.display()))?;
            if verbose {
                for line in &bundle.log {
                    eprintln!("{line}");
                }
            }
            for a in &bundle.summary.assertions {
                println!("{} {}: {}", if a.pass { "PASS" } else { "FAIL" }, a.name, a.detail);
            }
            println!("{}: bundle written to {}", scenario.name, dir.display());
            Ok(bundle.summary.pass)
        }
        Command::Plot { bundle, what, output } => {
            let table = emit_plotdata(&bundle, what.into())?;
            match output {
                Some(path) => std::fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{table}"),
            }
            Ok(true)
        }
        Command::Oracle { config } => {
            let scenario = Scenario::load(&config)?;
            let report = oracle_scenario(&scenario)?;
            for s in &report.skipped {
                println!("SKIP {s}");
            }
            for m in &report.mismatches {
                println!("MISMATCH {m}");
            }
            println!("{} checks, {} mismatches", report.checks, report.mismatches.len());
            Ok(report.pass())
        }
    }
}
