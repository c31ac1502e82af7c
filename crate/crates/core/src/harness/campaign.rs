//! Sweeps, NMSE aggregation and CSV output.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Scenario, Scheme, SimulationConfig, SweepParam};
use super::trial::{Simulator, TrialOutcome};
use crate::cellfree::{fronthaul_per_trial, Processing};
use crate::error::{Error, Result};

/// `Σ|f − f̂|² / (N_s·(f_max − f_min)²)`.
pub fn nmse(pairs: &[(f64, f64)], f_min: f64, f_max: f64) -> Result<f64> {
    let range = f_max - f_min;
    if !(range > 0.0) {
        return Err(Error::DegenerateRange(range));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no trials to average".into()));
    }
    let sq: f64 = pairs.iter().map(|(f, g)| (f - g) * (f - g)).sum();
    Ok(sq / (pairs.len() as f64 * range * range))
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct NmseResult {
    pub sweep_param: SweepParam,
    pub sweep_value: f64,
    pub scenario: &'static str,
    pub processing: &'static str,
    pub weighting: &'static str,
    pub function: &'static str,
    pub policy: &'static str,
    pub k: usize,
    pub q: usize,
    pub c: usize,
    pub n_antennas: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub nmse: f64,
    pub nmse_stderr_proxy: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub fronthaul_complex_per_trial: usize,
    pub wallclock_s: f64,
    pub config_digest: String,
    /// Trial-CP pairs whose required gain exceeded `A_RM`. Logged, not
    /// written to the CSV.
    pub gain_limit_hits: u64,
}

/// Execution knobs that do not affect results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    /// Record real elapsed time. Off keeps the CSV a pure function of the
    /// configuration.
    pub wallclock: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 1,
            wallclock: false,
        }
    }
}

/// Runs every trial of one sweep point and returns the outcomes in trial order.
pub fn run_trials(sim: &Simulator, workers: usize) -> Result<Vec<TrialOutcome>> {
    let n = sim.config().n_trials;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| (0..n as u64).into_par_iter().map(|t| sim.run_trial(t)).collect())
}

/// Runs one sweep point.
pub fn run_point(
    config: &SimulationConfig,
    param: SweepParam,
    sweep_index: u64,
    options: RunOptions,
) -> Result<NmseResult> {
    let started = Instant::now();
    let sim = Simulator::new(config.clone(), sweep_index)?;
    let outcomes = run_trials(&sim, options.workers)?;
    let (f_min, f_max) = sim.f_range();
    let pairs: Vec<(f64, f64)> = outcomes.iter().map(|o| (o.f, o.f_hat)).collect();
    let value = nmse(&pairs, f_min, f_max)?;
    let gain_limit_hits = outcomes.iter().map(|o| o.gain_limit_hits as u64).sum();
    if gain_limit_hits > 0 {
        log::warn!(
            "{} = {}: required gain exceeded the limit in {gain_limit_hits} CP decodes",
            param.name(),
            config.param_value(param).unwrap_or(f64::NAN)
        );
    }
    let k = config.function.n_nodes();
    let (scenario, processing, weighting, c, n_antennas, fronthaul) = match (&config.scenario, config.scheme) {
        (Scenario::Cellular { n_antennas, .. }, Scheme::Digital) => {
            ("cellular", "single_cp", "none", 1, *n_antennas, 0)
        }
        (Scenario::Cellular { n_antennas, .. }, Scheme::Analog { .. }) => {
            ("cellular", "analog", "none", 1, *n_antennas, 0)
        }
        (
            Scenario::CellFree {
                n_cps,
                total_antennas,
                processing,
                ..
            },
            _,
        ) => {
            let per_cp = total_antennas / n_cps;
            let fh = fronthaul_per_trial(*processing, *n_cps, k, per_cp);
            match processing {
                Processing::Fcp => ("cellfree", "fcp", "none", *n_cps, per_cp, fh),
                Processing::Lpcv(w) => ("cellfree", "lpcv", w.name(), *n_cps, per_cp, fh),
            }
        }
    };
    let n_trials = config.n_trials;
    Ok(NmseResult {
        sweep_param: param,
        sweep_value: config.param_value(param).unwrap_or(f64::NAN),
        scenario,
        processing,
        weighting,
        function: config.function.kind().name(),
        policy: config.policy.kind.name(),
        k,
        q: config.constellation.q(),
        c,
        n_antennas,
        n_trials,
        seed: config.seed,
        nmse: value,
        nmse_stderr_proxy: value / (n_trials as f64).sqrt(),
        f_min,
        f_max,
        fronthaul_complex_per_trial: fronthaul,
        wallclock_s: if options.wallclock {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        },
        config_digest: config.digest(),
        gain_limit_hits,
    })
}

/// Runs one point per sweep value. Sweep point `i` draws from streams keyed
/// by sweep index `i`.
pub fn run_campaign(
    config: &SimulationConfig,
    param: SweepParam,
    values: &[f64],
    options: RunOptions,
) -> Result<Vec<NmseResult>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| run_point(&config.with_param(param, v)?, param, i as u64, options))
        .collect()
}

pub const CSV_HEADER: [&str; 20] = [
    "sweep_param",
    "sweep_value",
    "scenario",
    "processing",
    "weighting",
    "function",
    "policy",
    "K",
    "Q",
    "C",
    "n_antennas",
    "n_trials",
    "seed",
    "nmse",
    "nmse_stderr_proxy",
    "f_min",
    "f_max",
    "fronthaul_complex_per_trial",
    "wallclock_s",
    "config_digest",
];

fn row(r: &NmseResult) -> [String; 20] {
    [
        r.sweep_param.name().to_string(),
        r.sweep_value.to_string(),
        r.scenario.to_string(),
        r.processing.to_string(),
        r.weighting.to_string(),
        r.function.to_string(),
        r.policy.to_string(),
        r.k.to_string(),
        r.q.to_string(),
        r.c.to_string(),
        r.n_antennas.to_string(),
        r.n_trials.to_string(),
        r.seed.to_string(),
        r.nmse.to_string(),
        r.nmse_stderr_proxy.to_string(),
        r.f_min.to_string(),
        r.f_max.to_string(),
        r.fronthaul_complex_per_trial.to_string(),
        r.wallclock_s.to_string(),
        r.config_digest.clone(),
    ]
}

/// Writes the header and one row per result.
pub fn emit_csv(results: &[NmseResult], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in results {
        w.write_record(row(r)).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
