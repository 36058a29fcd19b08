use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eit_cli::config::{preset, ExperimentConfig};
use eit_cli::pipeline::{oracle_check, run_experiment};
use eit_cli::CliError;

#[derive(Parser)]
#[command(
    name = "eit",
    version,
    about = "Monotonicity-constrained linearized EIT reconstructions"
)]
#[command(
    after_help = "Relative output directories are placed under $EIT_OUTPUT_ROOT when it is set."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write artifacts.
    Run { config: PathBuf },
    /// Print or save a preset configuration (figure1, figure3, concentric).
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
    /// Compare FEM data against the analytic values for a centered disk.
    OracleCheck { config: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg)?;
            let r = &out.report;
            println!("output: {}", cfg.resolved_output_dir().display());
            println!("pixels: {}", r.pixels.len());
            println!(
                "||V||_F = {:.6e}, delta_abs = {:.6e}",
                r.v_frobenius_norm, r.delta_abs
            );
            println!(
                "objective = {:.6e}, iterations = {}, converged = {}, kkt = {:.3e}",
                r.objective, r.iterations, r.converged, r.kkt_residual
            );
            println!("total time: {:.2} s", r.timings.total);
        }
        Command::Preset { name, out } => {
            let json = preset(&name)?.to_json() + "\n";
            match out {
                Some(path) => fs::write(&path, json).map_err(|e| CliError::io(&path, e))?,
                None => print!("{json}"),
            }
        }
        Command::Validate { config } => {
            ExperimentConfig::load(&config)?;
            println!("{}: ok", config.display());
        }
        Command::OracleCheck { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rep = oracle_check(&cfg)?;
            println!(
                "rho = {}, sigma1 = {}, R = {}",
                rep.rho, rep.sigma1, rep.mesh_refinement
            );
            println!(
                "{:>3} {:>6} {:>14} {:>14} {:>10}",
                "j", "kind", "fem", "analytic", "rel_err"
            );
            for row in &rep.rows {
                println!(
                    "{:>3} {:>6} {:>14.6e} {:>14.6e} {:>10.3e}",
                    row.j, row.kind, row.fem, row.analytic, row.rel_error
                );
            }
            println!("max rel error: {:.3e}", rep.max_rel_error);
            println!("max off-diagonal / ||V||_F: {:.3e}", rep.max_offdiag_rel);
            println!("{}", if rep.pass { "PASS" } else { "FAIL" });
            if !rep.pass {
                return Err(CliError::Numerical {
                    stage: eit_cli::Stage::Forward,
                    source: eit_core::Error::Domain(format!(
                        "oracle tolerance exceeded (rel {:.3e}, off-diagonal {:.3e})",
                        rep.max_rel_error, rep.max_offdiag_rel
                    )),
                });
            }
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
