use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use otfs_outage_cli::{run_op_curve, run_pdf_fit, run_validate, CliError, LinkChoice, McOverrides};

/// Trial count for offline replication at the scale of published curves.
const FULL_SCALE_TRIALS: usize = 10_000_000;

#[derive(Parser)]
#[command(name = "otfs-outage", version, about = "Outage analysis of an OTFS satellite-relay link")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytical and Monte Carlo outage versus average SNR, as CSV.
    OpCurve {
        /// Scenario file.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Override mc.trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Override mc.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override mc.workers; output does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
        /// Run 10^7 trials (overrides --trials).
        #[arg(long)]
        full_scale: bool,
    },
    /// Histograms of the simulated noise enhancement against the fitted laws.
    PdfFit {
        /// Scenario file.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// 1, 2 or both.
        #[arg(long, default_value = "both")]
        link: LinkChoice,
        /// Override mc.trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Override mc.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override mc.workers; output does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Oracle and property checks; exits 1 if any fails.
    Validate {
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1.0, hide = true)]
        tolerance_scale: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::OpCurve {
            config,
            out,
            trials,
            seed,
            workers,
            full_scale,
        } => {
            let trials = if full_scale { Some(FULL_SCALE_TRIALS) } else { trials };
            let curve = run_op_curve(&config, &out, &McOverrides { trials, seed, workers })?;
            let g = curve.max_gaps();
            println!(
                "{} points, {} trials, max |analytical - mc|: link1 {:.3e}, link2 {:.3e}, e2e {:.3e}",
                curve.rows.len(),
                curve.trials,
                g[0],
                g[1],
                g[2]
            );
        }
        Command::PdfFit {
            config,
            out,
            link,
            trials,
            seed,
            workers,
        } => {
            let report = run_pdf_fit(&config, &out, link, &McOverrides { trials, seed, workers })?;
            println!("{}", report.summary());
        }
        Command::Validate { seed, tolerance_scale } => {
            run_validate(seed, tolerance_scale)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
