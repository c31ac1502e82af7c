//! One Monte Carlo trial: topology, fading, estimation, transmission and
//! decoding.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{Scenario, Scheme, SimulationConfig};
use super::rng::{stream_rng, Stream};
use super::topology::{sample_topology, Topology};
use crate::airlink::{amplify, superpose, transmit_coeff, PolicyKind, ReceivedSample};
use crate::cellfree::{fcp_aggregate, lpcv_local_decode, weight_sc, weighted_vote, Processing};
use crate::channel::{path_loss_linear, pilot_receive, CVector, ChannelRealization, ExponentialCorrelation, PilotBook};
use crate::constellation::ModulationAlphabet;
use crate::demod::{
    amplification_factor, decode, eval_function, CombinationTable, CombinedConstellation, Decoded, FunctionKind,
    FunctionSpec, SortedIndex,
};
use crate::error::{Error, Result};

/// Constellations at or above this size are decoded through a [`SortedIndex`].
const INDEXED_DECODE_MIN_POINTS: usize = 512;

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub f: f64,
    pub f_hat: f64,
    /// Number of CPs whose required gain exceeded `A_RM`.
    pub gain_limit_hits: u32,
}

/// Per-node input draw: level indices and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct Inputs {
    pub levels: Vec<usize>,
    pub values: Vec<f64>,
}

/// Draws each node's input uniformly from its level set.
pub fn sample_inputs<R: Rng + ?Sized>(function: &FunctionSpec, rng: &mut R) -> Inputs {
    let levels: Vec<usize> = function
        .input_levels()
        .iter()
        .map(|set| rng.random_range(0..set.len()))
        .collect();
    let values = levels
        .iter()
        .zip(function.input_levels())
        .map(|(&q, set)| set[q])
        .collect();
    Inputs { levels, values }
}

/// Channels and estimates of one trial.
#[derive(Debug, Clone)]
pub struct LinkState {
    pub channels: ChannelRealization,
    /// Antenna-summed estimates, indexed `[cp][node]`.
    pub h_hat_sum: Vec<Vec<Complex64>>,
}

/// Everything shared by the trials of one sweep point.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimulationConfig,
    sweep_index: u64,
    table: Arc<CombinationTable>,
    kit: ExponentialCorrelation,
    f_range: (f64, f64),
}

impl Simulator {
    pub fn new(config: SimulationConfig, sweep_index: u64) -> Result<Self> {
        let alphabet = ModulationAlphabet::from_spec(&config.constellation)?;
        let k = config.function.n_nodes();
        let table = Arc::new(CombinationTable::new(
            &vec![alphabet; k],
            &config.function,
            config.max_points,
        )?);
        let n_antennas = match &config.scenario {
            Scenario::Cellular { n_antennas, .. } => *n_antennas,
            Scenario::CellFree {
                n_cps, total_antennas, ..
            } => {
                if *n_cps == 0 || total_antennas % n_cps != 0 {
                    return Err(Error::Config(format!("{total_antennas} antennas over {n_cps} CPs")));
                }
                total_antennas / n_cps
            }
        };
        let kit = ExponentialCorrelation::new(config.correlation_model(n_antennas)?)?;
        let f_range = config.function.range(config.max_points)?;
        Ok(Simulator {
            config,
            sweep_index,
            table,
            kit,
            f_range,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn table(&self) -> &Arc<CombinationTable> {
        &self.table
    }

    /// `(f_min, f_max)` over all input combinations.
    pub fn f_range(&self) -> (f64, f64) {
        self.f_range
    }

    fn rng(&self, trial: u64, stream: Stream) -> rand_chacha::ChaCha8Rng {
        stream_rng(self.config.seed, self.sweep_index, trial, stream)
    }

    pub fn topology(&self, trial: u64) -> Result<Topology> {
        sample_topology(&self.config, &mut self.rng(trial, Stream::Topology))
    }

    /// Draws the trial's topology and runs it.
    pub fn run_trial(&self, trial: u64) -> Result<TrialOutcome> {
        let topology = self.topology(trial)?;
        self.run_trial_with_topology(trial, &topology)
    }

    /// Runs a trial on a given placement; every other draw comes from the
    /// trial's streams.
    pub fn run_trial_with_topology(&self, trial: u64, topology: &Topology) -> Result<TrialOutcome> {
        if topology.antennas_per_cp != self.kit.n_antennas() {
            return Err(Error::InvalidInput(format!(
                "topology has {} antennas per CP, simulator expects {}",
                topology.antennas_per_cp,
                self.kit.n_antennas()
            )));
        }
        let link = self.link_state(trial, topology)?;
        let inputs = sample_inputs(&self.config.function, &mut self.rng(trial, Stream::Inputs));
        let f = eval_function(&self.config.function, &inputs.values);
        let mut noise_rng = self.rng(trial, Stream::DataNoise);
        match (self.config.scheme, &self.config.scenario) {
            (Scheme::Analog { eta, sharpness }, _) => {
                let f_hat = self.analog(&link, &inputs, eta, sharpness, &mut noise_rng)?;
                Ok(TrialOutcome {
                    f,
                    f_hat,
                    gain_limit_hits: 0,
                })
            }
            (Scheme::Digital, Scenario::Cellular { .. }) => self.cellular(&link, &inputs, f, &mut noise_rng),
            (Scheme::Digital, Scenario::CellFree { processing, .. }) => {
                self.cellfree(&link, &inputs, f, *processing, &mut noise_rng)
            }
        }
    }

    /// Large-scale gains, fading draws and channel estimates for every
    /// `(node, cp)` pair.
    pub fn link_state(&self, trial: u64, topology: &Topology) -> Result<LinkState> {
        let cfg = &self.config;
        let k = topology.nodes.len();
        let n_cps = topology.cps.len();
        let mut shadow_rng = self.rng(trial, Stream::Shadowing);
        let mut fading_rng = self.rng(trial, Stream::Fading);
        let mut beta = Vec::with_capacity(n_cps);
        let mut h = Vec::with_capacity(n_cps);
        for cp in 0..n_cps {
            let mut row_b = Vec::with_capacity(k);
            let mut row_h = Vec::with_capacity(k);
            for node in 0..k {
                let z: f64 = shadow_rng.sample(StandardNormal);
                let b = path_loss_linear(
                    &cfg.large_scale,
                    topology.horizontal_distance(node, cp),
                    z * cfg.large_scale.shadow_sigma_db,
                );
                row_h.push(self.kit.draw(b, &mut fading_rng));
                row_b.push(b);
            }
            beta.push(row_b);
            h.push(row_h);
        }
        let channels = ChannelRealization::new(h, beta)?;

        let h_hat_sum = if cfg.perfect_csi {
            (0..n_cps)
                .map(|cp| channels.at_cp(cp).iter().map(|v| v.sum()).collect())
                .collect()
        } else {
            let pilots = if cfg.orthogonal_pilots {
                PilotBook::orthogonal(k, cfg.tau_p, cfg.pilot_power_mw)?
            } else {
                PilotBook::random(
                    k,
                    cfg.tau_p,
                    cfg.pilot_power_mw,
                    &mut self.rng(trial, Stream::PilotAssignment),
                )?
            };
            let mut pilot_rng = self.rng(trial, Stream::PilotNoise);
            let mut out = Vec::with_capacity(n_cps);
            for cp in 0..n_cps {
                let received = pilot_receive(&channels, &pilots, cp, cfg.noise_var_mw, &mut pilot_rng)?;
                let mut row = Vec::with_capacity(k);
                for (node, r) in received.iter().enumerate() {
                    let load: f64 = pilots
                        .sharing(node)
                        .into_iter()
                        .map(|i| pilots.power(i) * channels.beta(i, cp))
                        .sum();
                    let est: CVector = self.kit.estimate(
                        r,
                        channels.beta(node, cp),
                        pilots.power(node),
                        load,
                        pilots.tau_p(),
                        cfg.noise_var_mw,
                    )?;
                    row.push(est.sum());
                }
                out.push(row);
            }
            out
        };
        Ok(LinkState { channels, h_hat_sum })
    }

    /// Combined constellation at the gain the receiver would pick.
    fn constellation(&self, h_hat: &[Complex64]) -> Result<(CombinedConstellation, bool)> {
        let cfg = &self.config;
        let base = CombinedConstellation::new(self.table.clone(), h_hat, &cfg.policy, 1.0)?;
        let (a_r, hit) = match cfg.fixed_a_r {
            Some(a) => (a, false),
            None => {
                let amp = amplification_factor(base.d_e(), cfg.d_r, cfg.a_rm)?;
                (amp.a_r, amp.exceeds_limit)
            }
        };
        if a_r == 1.0 {
            return Ok((base, hit));
        }
        Ok((
            CombinedConstellation::new(self.table.clone(), h_hat, &cfg.policy, a_r)?,
            hit,
        ))
    }

    fn symbols(&self, inputs: &Inputs) -> Vec<Complex64> {
        inputs
            .levels
            .iter()
            .enumerate()
            .map(|(k, &q)| self.table.symbol(k, q))
            .collect()
    }

    fn cellular<R: Rng + ?Sized>(
        &self,
        link: &LinkState,
        inputs: &Inputs,
        f: f64,
        rng: &mut R,
    ) -> Result<TrialOutcome> {
        let cfg = &self.config;
        let h_hat = &link.h_hat_sum[0];
        let (cc, hit) = self.constellation(h_hat)?;
        let b = h_hat
            .iter()
            .map(|&h| transmit_coeff(&cfg.policy, h))
            .collect::<Result<Vec<_>>>()?;
        let r = superpose(&b, &self.symbols(inputs), link.channels.at_cp(0), cfg.noise_var_mw, rng)?;
        let sample = amplify(r, cc.a_r())?;
        Ok(TrialOutcome {
            f,
            f_hat: nearest(&cc, &sample)?.f_value,
            gain_limit_hits: hit as u32,
        })
    }

    fn cellfree<R: Rng + ?Sized>(
        &self,
        link: &LinkState,
        inputs: &Inputs,
        f: f64,
        processing: Processing,
        rng: &mut R,
    ) -> Result<TrialOutcome> {
        let cfg = &self.config;
        if cfg.policy.kind != PolicyKind::TypeII {
            return Err(Error::Config(
                "the cell-free scenario supports only the type2 policy".into(),
            ));
        }
        let n_cps = link.channels.n_cps();
        let x = self.symbols(inputs);
        let b = vec![Complex64::new(cfg.policy.p_t_mw.sqrt(), 0.0); x.len()];
        let raw = (0..n_cps)
            .map(|cp| superpose(&b, &x, link.channels.at_cp(cp), cfg.noise_var_mw, rng))
            .collect::<Result<Vec<_>>>()?;
        match processing {
            Processing::Fcp => {
                let k = x.len();
                let combined: Vec<Complex64> = (0..k)
                    .map(|node| (0..n_cps).map(|cp| link.h_hat_sum[cp][node]).sum())
                    .collect();
                let (cc, hit) = self.constellation(&combined)?;
                let sample = fcp_aggregate(&raw, cc.a_r())?;
                Ok(TrialOutcome {
                    f,
                    f_hat: nearest(&cc, &sample)?.f_value,
                    gain_limit_hits: hit as u32,
                })
            }
            Processing::Lpcv(weighting) => {
                let mut votes = Vec::with_capacity(n_cps);
                let mut hits = 0;
                for (cp, r) in raw.iter().enumerate() {
                    let (cc, hit) = self.constellation(&link.h_hat_sum[cp])?;
                    hits += hit as u32;
                    let sample = amplify(*r, cc.a_r())?;
                    let f_c = if cc.len() >= INDEXED_DECODE_MIN_POINTS {
                        SortedIndex::new(&cc).decode(&cc, &sample)?.f_value
                    } else {
                        lpcv_local_decode(&sample, &cc)?
                    };
                    votes.push((f_c, weight_sc(&link.h_hat_sum[cp])));
                }
                Ok(TrialOutcome {
                    f,
                    f_hat: weighted_vote(&votes, weighting)?,
                    gain_limit_hits: hits,
                })
            }
        }
    }

    /// Analog reference: nodes pre-process their value, invert the channel
    /// estimate with `sqrt(η)·ĥ*/|ĥ|²` (scaled down to respect `P_t`), and
    /// the CP post-processes the real part of the superposition.
    fn analog<R: Rng + ?Sized>(
        &self,
        link: &LinkState,
        inputs: &Inputs,
        eta: f64,
        sharpness: f64,
        rng: &mut R,
    ) -> Result<f64> {
        let cfg = &self.config;
        let kind = cfg.function.kind();
        let weights = cfg.function.weights();
        let pre = inputs
            .values
            .iter()
            .zip(weights)
            .map(|(&v, &g)| analog_pre(kind, g, v, sharpness))
            .collect::<Result<Vec<f64>>>()?;
        let gain = eta.sqrt();
        let mut b = Vec::with_capacity(pre.len());
        for (&h, &u) in link.h_hat_sum[0].iter().zip(&pre) {
            let mag = h.norm();
            if !(mag > 0.0) {
                return Err(Error::ZeroChannelPhase);
            }
            let mut coeff = h.conj() / (mag * mag) * gain;
            let limit = cfg.policy.p_t_mw.sqrt();
            if (coeff * u).norm() > limit {
                coeff *= limit / (coeff * u).norm();
            }
            b.push(coeff);
        }
        let x: Vec<Complex64> = pre.iter().map(|&u| Complex64::new(u, 0.0)).collect();
        let r = superpose(&b, &x, link.channels.at_cp(0), cfg.noise_var_mw, rng)?;
        Ok(analog_post(kind, r.re / gain, sharpness, self.f_range.0))
    }
}

fn nearest(cc: &CombinedConstellation, sample: &ReceivedSample) -> Result<Decoded> {
    if cc.len() >= INDEXED_DECODE_MIN_POINTS {
        SortedIndex::new(cc).decode(cc, sample)
    } else {
        decode(cc, sample)
    }
}

/// Value node `k` transmits under the analog scheme.
pub fn analog_pre(kind: FunctionKind, weight: f64, value: f64, sharpness: f64) -> Result<f64> {
    let w = weight * value;
    Ok(match kind {
        FunctionKind::Sum => w,
        FunctionKind::SumOfSquares => weight * value * value,
        FunctionKind::Product => {
            if !(w > 0.0) {
                return Err(Error::NonpositiveInput(w));
            }
            w.ln()
        }
        FunctionKind::Max => (sharpness * w).exp(),
    })
}

/// Maps the aggregated analog value back to a function estimate.
pub fn analog_post(kind: FunctionKind, aggregate: f64, sharpness: f64, floor: f64) -> f64 {
    match kind {
        FunctionKind::Sum | FunctionKind::SumOfSquares => aggregate,
        FunctionKind::Product => aggregate.exp(),
        FunctionKind::Max => {
            if aggregate > 0.0 {
                aggregate.ln() / sharpness
            } else {
                floor
            }
        }
    }
}
