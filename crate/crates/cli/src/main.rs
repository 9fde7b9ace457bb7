//! `hqsp`: approximate, synthesize, simulate and estimate from one config file.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_qsp::compiler::HeraldPolicy;
use hybrid_qsp::Exec;

use crate::config::{parse_labels, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Invalid input; exit code 2.
    Validation(String),
    /// Numerical failure; exit code 3.
    Numerical(String),
}

impl From<hybrid_qsp::Error> for CliError {
    fn from(e: hybrid_qsp::Error) -> Self {
        use hybrid_qsp::Error as E;
        match e {
            E::InvalidConfig(_) | E::DimensionMismatch(_) | E::Dataset(_) | E::Io { .. } | E::Parse { .. } | E::OutOfRange { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hqsp", version, about = "Oscillator-qubit QSP compiler and vibronic dynamics verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fourier series and degree selection for each anharmonic potential.
    Approximate(Overrides),
    /// Phase angles, residuals and fidelities for one nonlinear phase gate.
    Synthesize(Overrides),
    /// Compiled-circuit dynamics against matrix oracles.
    Simulate(Overrides),
    /// Gate counts, success probability and the depth versus shot trade-off.
    Estimate(Overrides),
}

/// Flags override the corresponding config entries.
#[derive(Args, Debug)]
struct Overrides {
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Dataset TOML file.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Comma-separated mode labels or `all`.
    #[arg(long)]
    modes: Option<String>,
    /// Comma-separated state labels or `all`.
    #[arg(long)]
    states: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fock dimension per mode.
    #[arg(long)]
    dim: Option<usize>,
    /// Fourier sup-norm target.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Time step in fs for approximate and synthesize.
    #[arg(long)]
    delta_t: Option<f64>,
    /// Fixed Fourier degree for synthesize and estimate.
    #[arg(long)]
    degree: Option<usize>,
    /// Skip angle refinement.
    #[arg(long)]
    no_refine: bool,
    /// Write Wigner grids in synthesize.
    #[arg(long)]
    wigner: bool,
    /// Trotter layer count.
    #[arg(long)]
    p: Option<usize>,
    /// Total simulated time in fs.
    #[arg(long)]
    t_total: Option<f64>,
    /// Initial electronic state label.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long, value_parser = parse_policy)]
    herald: Option<HeraldPolicy>,
    /// Run everything on one thread.
    #[arg(long)]
    sequential: bool,
}

fn parse_policy(s: &str) -> Result<HeraldPolicy, String> {
    match s {
        "project" => Ok(HeraldPolicy::Project),
        "abort" => Ok(HeraldPolicy::Abort),
        "resample" => Ok(HeraldPolicy::Resample),
        other => Err(format!("unknown herald policy '{other}' (project, abort or resample)")),
    }
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.out {
            c.output_dir = v.clone();
        }
        if let Some(v) = &self.dataset {
            c.dataset = Some(v.clone());
        }
        if let Some(v) = &self.modes {
            c.modes = parse_labels(v);
        }
        if let Some(v) = &self.states {
            c.states = parse_labels(v);
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.dim {
            c.fock_dim = v;
        }
        if let Some(v) = self.epsilon {
            c.fourier.epsilon = v;
        }
        if let Some(v) = self.delta_t {
            c.fourier.delta_t = v;
        }
        if let Some(v) = self.degree {
            c.synthesize.degree = Some(v);
            c.estimate.degree = Some(v);
        }
        if self.no_refine {
            c.synthesize.refine = false;
        }
        if self.wigner {
            c.synthesize.wigner = true;
        }
        if let Some(v) = self.p {
            c.simulate.p = Some(v);
            c.estimate.p = Some(v);
        }
        if let Some(v) = self.t_total {
            c.simulate.t_total = v;
        }
        if let Some(v) = &self.initial {
            c.simulate.initial_state = v.clone();
        }
        if let Some(v) = self.herald {
            c.simulate.herald = v;
        }
        if self.sequential {
            c.exec = Exec::Sequential;
        }
        c.validate()?;
        Ok(c)
    }
}

type Stage = fn(&RunConfig, &mut commands::Outputs) -> Result<String, CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (overrides, stage): (&Overrides, Stage) = match &cli.command {
        Command::Approximate(o) => (o, commands::cmd_approximate),
        Command::Synthesize(o) => (o, commands::cmd_synthesize),
        Command::Simulate(o) => (o, commands::cmd_simulate),
        Command::Estimate(o) => (o, commands::cmd_estimate),
    };
    let cfg = overrides.resolve()?;
    let mut out = commands::Outputs::new(&cfg)?;
    out.text("config.toml", "effective run configuration", &cfg.to_toml())?;
    let report = stage(&cfg, &mut out)?;
    print!("{report}");
    for p in out.written() {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hqsp: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
