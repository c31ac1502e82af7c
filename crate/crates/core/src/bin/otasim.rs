use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use otasim::harness::{
    constellation_panels, emit_csv, emit_panels, run_campaign, RunOptions, SimulationConfig, Simulator, SweepParam,
};
use otasim::{Error, Result};

/// Monte Carlo simulator for digital over-the-air computation.
#[derive(Parser)]
#[command(name = "otasim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write one CSV row.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run one configuration per value of a swept parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Swept parameter: radius_m or n_cps.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Dump the alphabet and combined constellations of one channel draw.
    Constellation {
        /// Configuration file (`key = value` lines).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Trial whose channel draw is used.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `sim.trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Record elapsed time in the `wallclock_s` column instead of 0.
    #[arg(long)]
    wallclock: bool,
}

fn load(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SimulationConfig::parse(&text)
}

fn load_common(c: &Common) -> Result<(SimulationConfig, RunOptions)> {
    let mut cfg = load(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = c.trials {
        if trials == 0 {
            return Err(Error::Config("--trials must be positive".into()));
        }
        cfg.n_trials = trials;
    }
    if c.workers == 0 {
        return Err(Error::Config("--workers must be positive".into()));
    }
    Ok((
        cfg,
        RunOptions {
            workers: c.workers,
            wallclock: c.wallclock,
        },
    ))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common } => {
            let (cfg, options) = load_common(&common)?;
            let param = cfg.default_param();
            let value = cfg.param_value(param).unwrap_or(f64::NAN);
            let results = run_campaign(&cfg, param, &[value], options)?;
            emit_csv(&results, &common.out)
        }
        Command::Sweep { common, param, values } => {
            let (cfg, options) = load_common(&common)?;
            let param = SweepParam::parse(&param)?;
            let results = run_campaign(&cfg, param, &values, options)?;
            emit_csv(&results, &common.out)
        }
        Command::Constellation { config, out, trial } => {
            let sim = Simulator::new(load(&config)?, 0)?;
            emit_panels(&constellation_panels(&sim, trial)?, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
