//! Command-line front end.
//!
//! Exit codes: 0 on success (converged, all properties pass), 1 on invalid
//! input, 2 on non-convergence or a failed property.

pub mod commands;
pub mod config;
pub mod table;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::penalty::SpinMode;
use crate::scf::InitialGuess;

use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "magslab", version = commands::BUILD, about = "Reduced Hartree-Fock slabs in a magnetic field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the penalty F(b, g) with its bounds and one-sided slopes.
    PenaltyTable {
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        g_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long)]
        spin: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run one self-consistent solve from a TOML config.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Start from a random potential with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Force the Zeeman-split ladder regardless of the config.
        #[arg(long)]
        spin: bool,
    },
    /// Run randomized property suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve over a list of field strengths, plus the b = 0 reference.
    SweepB {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated field strengths; defaults to `sweep.b` of the config.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        b: Option<Vec<f64>>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        spin: bool,
    },
}

/// Outcome of a command: an exit code, or an error with its code.
enum Failure {
    Invalid(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Failed(format!("cannot write {}: {e}", path.display()))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn load(config: &Path, spin: bool) -> Result<RunConfig, Failure> {
    let mut run = RunConfig::load(config)?;
    if spin {
        run.model.spin = true;
    }
    Ok(run)
}

fn dispatch(command: Command) -> Result<i32, Failure> {
    match command {
        Command::PenaltyTable {
            b,
            g_max,
            steps,
            spin,
            out,
        } => {
            let (table, touch) = commands::penalty_table(b, g_max, steps, SpinMode::from_flag(spin))?;
            std::fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
            let path = out.join("penalty_table.tsv");
            table.write(&path).map_err(|e| io_failure(&path, e))?;
            let path = out.join("penalty_touch_points.tsv");
            touch.write(&path).map_err(|e| io_failure(&path, e))?;
            println!("wrote {} rows to {}", table.rows.len(), out.join("penalty_table.tsv").display());
            Ok(EXIT_OK)
        }
        Command::Solve {
            config,
            out,
            seed,
            spin,
        } => {
            let run = load(&config, spin)?;
            let mut cfg = run.scf_config(None)?;
            if let Some(seed) = seed {
                let amplitude = run.solver.amplitude;
                cfg.initial = InitialGuess::RandomPotential { seed, amplitude };
            }
            let result = crate::scf::scf_solve(&cfg).map_err(|e| Failure::Failed(e.to_string()))?;
            let bundle = commands::solve_bundle(&cfg, &result);
            bundle.write(&out).map_err(|e| io_failure(&out, e))?;
            print!("{}", bundle.summary);
            if result.converged {
                Ok(EXIT_OK)
            } else {
                eprintln!("not converged after {} iterations; best iterate written", result.iterations);
                Ok(EXIT_FAILURE)
            }
        }
        Command::Verify { suite, seed, out } => {
            let checks = verify::run_suite(&suite, seed)?;
            let table = commands::verify_table(&checks, seed);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
                let path = dir.join("verify_report.tsv");
                table.write(&path).map_err(|e| io_failure(&path, e))?;
            }
            print!("{}", table.render());
            Ok(if checks.iter().all(|c| c.passed()) {
                EXIT_OK
            } else {
                EXIT_FAILURE
            })
        }
        Command::SweepB { config, b, out, spin } => {
            let run = load(&config, spin)?;
            let bs = b.unwrap_or_else(|| run.sweep.b.clone());
            let entries = commands::sweep(&run, &bs)?;
            std::fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
            let mut all_ok = true;
            for e in &entries {
                match &e.outcome {
                    Ok(r) => {
                        all_ok &= r.converged;
                        let dir = commands::sweep_dir(&out, e);
                        commands::solve_bundle(&e.config, r)
                            .write(&dir)
                            .map_err(|err| io_failure(&dir, err))?;
                    }
                    Err(_) => all_ok = false,
                }
            }
            let table = commands::sweep_table(&entries);
            let path = out.join("sweep.tsv");
            table.write(&path).map_err(|e| io_failure(&path, e))?;
            print!("{}", table.render());
            Ok(if all_ok { EXIT_OK } else { EXIT_FAILURE })
        }
    }
}
