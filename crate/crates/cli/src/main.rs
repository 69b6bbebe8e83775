//! `stochvec` command-line driver.
//!
//! Exit codes: 0 success, 1 invalid configuration or arguments, 2 a
//! comparison exceeded its tolerance, 3 internal error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::PdeMode;
use config::{ExperimentConfig, Overrides};
use output::RunDir;

pub const SEED_ENV: &str = "STOCHVEC_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] stochvec::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use stochvec::Error as E;
        match self {
            CliError::Config(_) => 1,
            CliError::Core(E::InvalidConfig(_) | E::KernelUnderresolved { .. } | E::DimensionMismatch { .. }) => 1,
            CliError::Core(E::TolExceeded { .. }) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stochvec", version, about = "Stochastic vector advection experiments")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Clear a nonempty output directory instead of refusing to run.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides both the config file and the STOCHVEC_SEED variable.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "V")]
    V,
    #[value(name = "moments")]
    Moments,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the SPDE along characteristics and estimate V = E[B e_f].
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Solve the expected-value equation or the second-moment system.
    Pde {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "V")]
        mode: Mode,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Compare the Monte-Carlo and PDE values of V.
    Duality {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Discretization allowance added to three standard errors.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Check the operator coefficients, adjoint, coercivity and interpolation constants.
    VerifyOperator {
        #[command(flatten)]
        common: Common,
    },
    /// Compare Monte-Carlo second moments with the moment system.
    Moments {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

impl Command {
    fn parts(&self) -> (&'static str, &Common, Overrides) {
        let mut o = Overrides::default();
        let (name, common) = match self {
            Command::Simulate { common, t, samples, dt } => {
                (o.horizon, o.samples, o.dt) = (*t, *samples, *dt);
                ("simulate", common)
            }
            Command::Pde { common, f, t, .. } => {
                (o.control, o.horizon) = (f.clone(), *t);
                ("pde", common)
            }
            Command::Duality {
                common,
                f,
                t,
                samples,
                tol,
            } => {
                (o.control, o.horizon, o.samples, o.allowance) = (f.clone(), *t, *samples, *tol);
                ("duality", common)
            }
            Command::VerifyOperator { common } => ("verify-operator", common),
            Command::Moments {
                common,
                t,
                samples,
                tol,
            } => {
                (o.horizon, o.samples, o.allowance) = (*t, *samples, *tol);
                ("moments", common)
            }
        };
        (name, common, o)
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| CliError::Config(format!("{SEED_ENV}={s:?}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn dispatch<const D: usize>(
    command: &Command,
    cfg: &ExperimentConfig,
    out: &mut RunDir,
) -> Result<(serde_json::Value, stochvec::Result<()>), CliError> {
    let ok = |v| Ok((v, Ok(())));
    match command {
        Command::Simulate { .. } => ok(commands::simulate::<D>(cfg, out)?),
        Command::Pde { mode, .. } => {
            let mode = match mode {
                Mode::V => PdeMode::V,
                Mode::Moments => PdeMode::Moments,
            };
            ok(commands::pde::<D>(cfg, mode, out)?)
        }
        Command::Duality { .. } => commands::duality::<D>(cfg, out),
        Command::VerifyOperator { .. } => ok(commands::verify_operator::<D>(cfg, out)?),
        Command::Moments { .. } => commands::moments::<D>(cfg, out),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let (name, common, mut overrides) = cli.command.parts();
    if let Command::Pde {
        mode: Mode::Moments,
        f: Some(_),
        ..
    } = &cli.command
    {
        return Err(CliError::Config("--f has no effect with --mode moments".into()));
    }
    overrides.seed = common.seed.or(env_seed()?);
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.apply(&overrides)?;
    cfg.validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", common.config.display())))?;

    let mut out = RunDir::prepare(&common.out, cli.force, cfg.seed)?;
    let (summary, verdict) = match cfg.dim {
        2 => dispatch::<2>(&cli.command, &cfg, &mut out)?,
        _ => dispatch::<3>(&cli.command, &cfg, &mut out)?,
    };
    out.finish(name, &cfg, summary)?;
    Ok(verdict?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
