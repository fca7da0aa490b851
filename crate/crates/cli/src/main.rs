//! `mtorus`: spectra, invariants, flows and probes for mapping tori.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod report;

use config::{Overrides, RunConfig};
use report::Sink;

#[derive(Parser, Debug)]
#[command(name = "mtorus", version, about = "Geodesic flows on suspensions of toral automorphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Monodromy matrix, rows separated by `;`, e.g. "2,1;1,1".
    #[arg(long, global = true, allow_hyphen_values = true)]
    matrix: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Integrator tolerance, in [1e-14, 1e-4].
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Time horizon.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Sample count for sampling commands.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Exit with code 5 when a checked threshold is violated.
    #[arg(long, global = true)]
    verify: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Spectrum, Jordan structure and entropy bound.
    Analyze,
    /// Q, G_k, J_k and the smooth first-integral family.
    Invariants,
    /// Integrate the quotient flow and export the trajectory.
    Integrate,
    /// Lyapunov spectrum (default start on V+).
    Lyapunov,
    /// Orbit type of a state, or a histogram over sampled states.
    Classify,
    /// Pairwise Poisson brackets of the first integrals.
    Involution,
    /// Entropy bound against the measured top exponent.
    Entropy,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use mapping_torus::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::NotUnimodular { .. } | E::NotSquare { .. } | E::Empty | E::DimensionTooLarge { .. }) => 2,
        Some(
            E::ToleranceOutOfRange(_)
            | E::InvalidInput(_)
            | E::DimensionMismatch { .. }
            | E::NotUnitBundle { .. }
            | E::NotOnInvariantSubmanifold,
        ) => 2,
        Some(
            E::MixedSpectrumUnsupported { .. }
            | E::SignPairingUnsupported(_)
            | E::UnitEigenvalueUnsupported(_)
            | E::NotRealSpectrum
            | E::NotRotation
            | E::NotFiniteOrderRotation { .. }
            | E::NonPositiveSpectrum(_)
            | E::SolveFailure { .. },
        ) => 3,
        Some(E::StepSizeUnderflow { .. } | E::TooManySteps(_)) => 4,
        _ => 1,
    }
}

fn run(cli: &Cli) -> anyhow::Result<commands::Outcome> {
    let overrides = Overrides {
        matrix: cli.matrix.as_deref().map(config::parse_matrix).transpose()?,
        seed: cli.seed,
        out: cli.out.clone(),
        tol: cli.tol,
        horizon: cli.horizon,
        samples: cli.samples,
        verify: cli.verify,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let mut sink = Sink::new(&cfg)?;
    let outcome = match cli.command {
        Command::Analyze => commands::analyze(&cfg, &mut sink),
        Command::Invariants => commands::invariants(&cfg, &mut sink),
        Command::Integrate => commands::integrate(&cfg, &mut sink),
        Command::Lyapunov => commands::lyapunov(&cfg, &mut sink),
        Command::Classify => commands::classify(&cfg, &mut sink),
        Command::Involution => commands::involution(&cfg, &mut sink),
        Command::Entropy => commands::entropy(&cfg, &mut sink),
    }?;
    for p in &sink.written {
        println!("wrote {}", p.display());
    }
    if !cfg.verify {
        return Ok(commands::Outcome { violations: Vec::new(), ..outcome });
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            println!("{}", o.summary);
            if o.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                for v in &o.violations {
                    eprintln!("verification failed: {v}");
                }
                ExitCode::from(5)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
