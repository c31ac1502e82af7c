//! Simulation configuration and its flat `key = value` file format.
//!
//! One setting per line, dotted section prefixes, `#` starts a comment.
//! Unknown or repeated keys are errors. Missing keys take the defaults
//! listed in [`KEYS`]. Powers can be given in dBm (`*_dbm`) or mW
//! (`*_mw`) and are stored in mW.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::airlink::{PolicyKind, TransmitPolicy};
use crate::cellfree::{CellFreeLayout, Processing, VoteWeighting};
use crate::channel::{dbm_to_mw, LargeScaleParams, SpatialCorrelationModel};
use crate::constellation::ConstellationSpec;
use crate::demod::{FunctionKind, FunctionSpec};
use crate::error::{Error, Result};

/// Every accepted key with its default value.
pub const KEYS: &[(&str, &str)] = &[
    ("scenario.kind", "cellular"),
    ("scenario.radius_m", "500"),
    ("scenario.n_antennas", "144"),
    ("scenario.area_m", "1000"),
    ("scenario.n_cps", "4"),
    ("scenario.total_antennas", "144"),
    ("scenario.processing", "fcp"),
    ("scenario.weighting", "uniform"),
    ("scheme.kind", "digital"),
    ("analog.eta", "1"),
    ("analog.sharpness", "10"),
    ("constellation.a1", "1"),
    ("constellation.a2", "1"),
    ("constellation.q1", "3"),
    ("constellation.q2", "3"),
    ("constellation.theta", "pi/3"),
    ("constellation.q", "8"),
    ("constellation.center_odd_symmetric", "false"),
    ("function.kind", "sum"),
    ("function.k", "4"),
    ("function.weights", "uniform"),
    ("function.levels", "0,1,2,3,4,5,6,7"),
    ("policy.kind", "type2"),
    ("policy.p_t_dbm", "20"),
    ("policy.p_t_mw", ""),
    ("large_scale.beta0_db", "-30.5"),
    ("large_scale.alpha", "3.67"),
    ("large_scale.shadow_sigma_db", "4"),
    ("large_scale.h_cp_m", "20"),
    ("large_scale.l0_m", "1"),
    ("channel.rho", "0.8"),
    ("channel.noise_dbm", "-96"),
    ("channel.noise_mw", ""),
    ("pilots.tau_p", "K"),
    ("pilots.orthogonal", "false"),
    ("pilots.power_dbm", ""),
    ("pilots.power_mw", ""),
    ("estimation.perfect_csi", "false"),
    ("receiver.d_r", "0.001"),
    ("receiver.a_rm", "1000"),
    ("receiver.fixed_a_r", ""),
    ("sim.trials", "10000"),
    ("sim.seed", "1"),
    ("sim.max_points", "1048576"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Cellular {
        radius_m: f64,
        n_antennas: usize,
    },
    CellFree {
        area_m: f64,
        n_cps: usize,
        total_antennas: usize,
        processing: Processing,
    },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Cellular { .. } => "cellular",
            Scenario::CellFree { .. } => "cellfree",
        }
    }
}

/// Digital channel-aware decoding, or the analog reference scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Digital,
    /// `eta` scales the inversion coefficients `sqrt(η)·ĥ*/|ĥ|²`; `sharpness`
    /// is the log-sum-exp parameter used for `max`.
    Analog {
        eta: f64,
        sharpness: f64,
    },
}

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    RadiusM,
    NCps,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::RadiusM => "radius_m",
            SweepParam::NCps => "n_cps",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "radius_m" => Ok(SweepParam::RadiusM),
            "n_cps" => Ok(SweepParam::NCps),
            other => Err(Error::Config(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    pub scheme: Scheme,
    pub constellation: ConstellationSpec,
    pub function: FunctionSpec,
    pub policy: TransmitPolicy,
    pub large_scale: LargeScaleParams,
    pub correlation_rho: f64,
    pub noise_var_mw: f64,
    pub tau_p: usize,
    pub orthogonal_pilots: bool,
    pub pilot_power_mw: f64,
    pub perfect_csi: bool,
    pub d_r: f64,
    pub a_rm: f64,
    /// Forces the receiver gain instead of deriving it from `d_E`.
    pub fixed_a_r: Option<f64>,
    pub n_trials: usize,
    pub seed: u64,
    pub max_points: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self::from_pairs(std::iter::empty()).expect("defaults are valid")
    }
}

impl SimulationConfig {
    /// Parses the text of a config file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    /// Builds a config from key/value pairs over the defaults.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut given: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in pairs {
            if !KEYS.iter().any(|(name, _)| *name == k) {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
            if given.insert(k.clone(), v).is_some() {
                return Err(Error::Config(format!("key `{k}` given twice")));
            }
        }
        let table = Settings { given };
        table.build()
    }

    /// Canonical `key = value` rendering; parsing it back yields the same config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.canonical_pairs() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of [`Self::to_text`].
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_text().as_bytes());
        hex::encode(&hash[..8])
    }

    fn canonical_pairs(&self) -> Vec<(&'static str, String)> {
        let mut v: Vec<(&'static str, String)> = Vec::new();
        let f = |x: f64| format!("{x}");
        match &self.scenario {
            Scenario::Cellular { radius_m, n_antennas } => {
                v.push(("scenario.kind", "cellular".into()));
                v.push(("scenario.radius_m", f(*radius_m)));
                v.push(("scenario.n_antennas", n_antennas.to_string()));
            }
            Scenario::CellFree {
                area_m,
                n_cps,
                total_antennas,
                processing,
            } => {
                v.push(("scenario.kind", "cellfree".into()));
                v.push(("scenario.area_m", f(*area_m)));
                v.push(("scenario.n_cps", n_cps.to_string()));
                v.push(("scenario.total_antennas", total_antennas.to_string()));
                match processing {
                    Processing::Fcp => v.push(("scenario.processing", "fcp".into())),
                    Processing::Lpcv(w) => {
                        v.push(("scenario.processing", "lpcv".into()));
                        v.push(("scenario.weighting", w.name().into()));
                    }
                }
            }
        }
        match self.scheme {
            Scheme::Digital => v.push(("scheme.kind", "digital".into())),
            Scheme::Analog { eta, sharpness } => {
                v.push(("scheme.kind", "analog".into()));
                v.push(("analog.eta", f(eta)));
                v.push(("analog.sharpness", f(sharpness)));
            }
        }
        let c = &self.constellation;
        v.push(("constellation.a1", f(c.a1())));
        v.push(("constellation.a2", f(c.a2())));
        v.push(("constellation.q1", c.q1().to_string()));
        v.push(("constellation.q2", c.q2().to_string()));
        v.push(("constellation.theta", f(c.theta())));
        v.push(("constellation.q", c.q().to_string()));
        v.push((
            "constellation.center_odd_symmetric",
            c.center_odd_symmetric().to_string(),
        ));
        v.push(("function.kind", self.function.kind().name().into()));
        v.push(("function.k", self.function.n_nodes().to_string()));
        v.push(("function.weights", join(self.function.weights())));
        // Per-node level sets are equal by construction of the parser.
        v.push(("function.levels", join(&self.function.input_levels()[0])));
        v.push(("policy.kind", self.policy.kind.name().into()));
        v.push(("policy.p_t_mw", f(self.policy.p_t_mw)));
        let l = &self.large_scale;
        v.push(("large_scale.beta0_db", f(l.beta0_db)));
        v.push(("large_scale.alpha", f(l.alpha)));
        v.push(("large_scale.shadow_sigma_db", f(l.shadow_sigma_db)));
        v.push(("large_scale.h_cp_m", f(l.h_cp_m)));
        v.push(("large_scale.l0_m", f(l.l0_m)));
        v.push(("channel.rho", f(self.correlation_rho)));
        v.push(("channel.noise_mw", f(self.noise_var_mw)));
        v.push(("pilots.tau_p", self.tau_p.to_string()));
        v.push(("pilots.orthogonal", self.orthogonal_pilots.to_string()));
        v.push(("pilots.power_mw", f(self.pilot_power_mw)));
        v.push(("estimation.perfect_csi", self.perfect_csi.to_string()));
        v.push(("receiver.d_r", f(self.d_r)));
        v.push(("receiver.a_rm", f(self.a_rm)));
        if let Some(a) = self.fixed_a_r {
            v.push(("receiver.fixed_a_r", f(a)));
        }
        v.push(("sim.trials", self.n_trials.to_string()));
        v.push(("sim.seed", self.seed.to_string()));
        v.push(("sim.max_points", self.max_points.to_string()));
        v
    }

    /// Copy with the swept parameter set to `value`.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match (param, &mut out.scenario) {
            (SweepParam::RadiusM, Scenario::Cellular { radius_m, .. }) => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::Config(format!("invalid radius {value}")));
                }
                *radius_m = value;
            }
            (
                SweepParam::NCps,
                Scenario::CellFree {
                    n_cps,
                    area_m,
                    total_antennas,
                    ..
                },
            ) => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!(
                        "number of CPs must be a positive integer, got {value}"
                    )));
                }
                *n_cps = value as usize;
                CellFreeLayout::square_grid(*area_m, *n_cps, *total_antennas)?;
            }
            (p, s) => {
                return Err(Error::Config(format!(
                    "cannot sweep {} in a {} scenario",
                    p.name(),
                    s.name()
                )))
            }
        }
        Ok(out)
    }

    /// Current value of a sweepable parameter.
    pub fn param_value(&self, param: SweepParam) -> Option<f64> {
        match (param, &self.scenario) {
            (SweepParam::RadiusM, Scenario::Cellular { radius_m, .. }) => Some(*radius_m),
            (SweepParam::NCps, Scenario::CellFree { n_cps, .. }) => Some(*n_cps as f64),
            _ => None,
        }
    }

    /// The natural sweep parameter of the scenario.
    pub fn default_param(&self) -> SweepParam {
        match self.scenario {
            Scenario::Cellular { .. } => SweepParam::RadiusM,
            Scenario::CellFree { .. } => SweepParam::NCps,
        }
    }

    pub fn correlation_model(&self, n_antennas: usize) -> Result<SpatialCorrelationModel> {
        SpatialCorrelationModel::new(self.correlation_rho, n_antennas)
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}

struct Settings {
    given: BTreeMap<String, String>,
}

impl Settings {
    fn raw(&self, key: &str) -> Option<&str> {
        self.given.get(key).map(String::as_str).filter(|s| !s.is_empty())
    }

    fn str(&self, key: &str) -> &str {
        self.raw(key).unwrap_or_else(|| {
            KEYS.iter()
                .find(|(k, _)| *k == key)
                .map(|(_, d)| *d)
                .expect("known key")
        })
    }

    fn f64(&self, key: &str) -> Result<f64> {
        parse_real(self.str(key)).ok_or_else(|| bad(key, self.str(key)))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        self.str(key).parse().map_err(|_| bad(key, self.str(key)))
    }

    fn bool(&self, key: &str) -> Result<bool> {
        self.str(key).parse().map_err(|_| bad(key, self.str(key)))
    }

    /// Power given either in dBm or mW, never both.
    fn power_mw(&self, dbm_key: &str, mw_key: &str) -> Result<Option<f64>> {
        match (self.raw(dbm_key), self.raw(mw_key)) {
            (Some(_), Some(_)) => Err(Error::Config(format!("give only one of `{dbm_key}` and `{mw_key}`"))),
            (None, Some(_)) => Ok(Some(self.f64(mw_key)?)),
            (Some(_), None) => Ok(Some(dbm_to_mw(self.f64(dbm_key)?))),
            (None, None) => {
                let default = self.str(dbm_key);
                if default.is_empty() {
                    Ok(None)
                } else {
                    Ok(Some(dbm_to_mw(self.f64(dbm_key)?)))
                }
            }
        }
    }

    fn build(&self) -> Result<SimulationConfig> {
        let processing = match self.str("scenario.processing") {
            "fcp" => Processing::Fcp,
            "lpcv" => Processing::Lpcv(match self.str("scenario.weighting") {
                "uniform" => VoteWeighting::Uniform,
                "channel_aware" => VoteWeighting::ChannelAware,
                other => return Err(bad("scenario.weighting", other)),
            }),
            other => return Err(bad("scenario.processing", other)),
        };
        let scenario = match self.str("scenario.kind") {
            "cellular" => Scenario::Cellular {
                radius_m: self.f64("scenario.radius_m")?,
                n_antennas: self.usize("scenario.n_antennas")?,
            },
            "cellfree" => Scenario::CellFree {
                area_m: self.f64("scenario.area_m")?,
                n_cps: self.usize("scenario.n_cps")?,
                total_antennas: self.usize("scenario.total_antennas")?,
                processing,
            },
            other => return Err(bad("scenario.kind", other)),
        };
        match &scenario {
            Scenario::Cellular { radius_m, n_antennas } => {
                if !(*radius_m >= 0.0 && radius_m.is_finite()) || *n_antennas == 0 {
                    return Err(Error::Config(
                        "cellular scenario needs radius >= 0 and at least one antenna".into(),
                    ));
                }
            }
            Scenario::CellFree {
                area_m,
                n_cps,
                total_antennas,
                ..
            } => {
                CellFreeLayout::square_grid(*area_m, *n_cps, *total_antennas)?;
            }
        }
        let scheme = match self.str("scheme.kind") {
            "digital" => Scheme::Digital,
            "analog" => {
                let eta = self.f64("analog.eta")?;
                let sharpness = self.f64("analog.sharpness")?;
                if !(eta > 0.0) || !(sharpness > 0.0) {
                    return Err(Error::Config("analog eta and sharpness must be positive".into()));
                }
                if !matches!(scenario, Scenario::Cellular { .. }) {
                    return Err(Error::Config(
                        "the analog scheme is only defined for the cellular scenario".into(),
                    ));
                }
                Scheme::Analog { eta, sharpness }
            }
            other => return Err(bad("scheme.kind", other)),
        };

        let constellation = ConstellationSpec::new(
            self.f64("constellation.a1")?,
            self.f64("constellation.a2")?,
            self.usize("constellation.q1")?,
            self.usize("constellation.q2")?,
            self.f64("constellation.theta")?,
            self.usize("constellation.q")?,
        )?
        .with_center_odd_symmetric(self.bool("constellation.center_odd_symmetric")?);

        let k = self.usize("function.k")?;
        if k == 0 {
            return Err(bad("function.k", "0"));
        }
        let kind = match self.str("function.kind") {
            "sum" => FunctionKind::Sum,
            "product" => FunctionKind::Product,
            "max" => FunctionKind::Max,
            "sum_of_squares" => FunctionKind::SumOfSquares,
            other => return Err(bad("function.kind", other)),
        };
        let levels = parse_list(self.str("function.levels"))
            .ok_or_else(|| bad("function.levels", self.str("function.levels")))?;
        if levels.len() > constellation.q() {
            return Err(Error::Config(format!(
                "{} input levels do not fit a modulation of order {}",
                levels.len(),
                constellation.q()
            )));
        }
        let weights = match self.str("function.weights") {
            "uniform" => vec![1.0; k],
            "ramp" => (1..=k).map(|i| i as f64 / k as f64).collect(),
            list => {
                let w = parse_list(list).ok_or_else(|| bad("function.weights", list))?;
                if w.len() != k {
                    return Err(Error::Config(format!(
                        "function.weights has {} entries, K = {k}",
                        w.len()
                    )));
                }
                w
            }
        };
        let function = FunctionSpec::new(kind, weights, vec![levels; k])?;

        let p_t_mw = self.power_mw("policy.p_t_dbm", "policy.p_t_mw")?.expect("default");
        let policy_kind = match self.str("policy.kind") {
            "type1" => PolicyKind::TypeI,
            "type2" => PolicyKind::TypeII,
            other => return Err(bad("policy.kind", other)),
        };
        if matches!(scenario, Scenario::CellFree { .. }) && policy_kind == PolicyKind::TypeI {
            return Err(Error::Config(
                "the cell-free scenario supports only the type2 policy".into(),
            ));
        }
        let policy = TransmitPolicy::new(policy_kind, p_t_mw)?;

        let large_scale = LargeScaleParams {
            beta0_db: self.f64("large_scale.beta0_db")?,
            alpha: self.f64("large_scale.alpha")?,
            shadow_sigma_db: self.f64("large_scale.shadow_sigma_db")?,
            h_cp_m: self.f64("large_scale.h_cp_m")?,
            l0_m: self.f64("large_scale.l0_m")?,
        };
        large_scale.validate()?;
        let correlation_rho = self.f64("channel.rho")?;
        SpatialCorrelationModel::new(correlation_rho, 1)?;
        let noise_var_mw = self
            .power_mw("channel.noise_dbm", "channel.noise_mw")?
            .expect("default");
        if !(noise_var_mw >= 0.0) {
            return Err(Error::Config("noise variance must be nonnegative".into()));
        }
        let tau_p = match self.str("pilots.tau_p") {
            "K" => k,
            other => other.parse().map_err(|_| bad("pilots.tau_p", other))?,
        };
        if tau_p == 0 {
            return Err(bad("pilots.tau_p", "0"));
        }
        let orthogonal_pilots = self.bool("pilots.orthogonal")?;
        if orthogonal_pilots && tau_p < k {
            return Err(Error::Config(format!(
                "orthogonal pilots need tau_p >= K ({tau_p} < {k})"
            )));
        }
        let pilot_power_mw = self.power_mw("pilots.power_dbm", "pilots.power_mw")?.unwrap_or(p_t_mw);
        if !(pilot_power_mw >= 0.0) {
            return Err(Error::Config("pilot power must be nonnegative".into()));
        }
        let d_r = self.f64("receiver.d_r")?;
        let a_rm = self.f64("receiver.a_rm")?;
        if !(d_r > 0.0) || !(a_rm >= 1.0) {
            return Err(Error::Config("receiver needs d_r > 0 and a_rm >= 1".into()));
        }
        let fixed_a_r = match self.raw("receiver.fixed_a_r") {
            None => None,
            Some(_) => {
                let a = self.f64("receiver.fixed_a_r")?;
                if !(a >= 1.0) {
                    return Err(Error::Config("receiver.fixed_a_r must be >= 1".into()));
                }
                Some(a)
            }
        };
        let n_trials = self.usize("sim.trials")?;
        if n_trials == 0 {
            return Err(bad("sim.trials", "0"));
        }
        Ok(SimulationConfig {
            scenario,
            scheme,
            constellation,
            function,
            policy,
            large_scale,
            correlation_rho,
            noise_var_mw,
            tau_p,
            orthogonal_pilots,
            pilot_power_mw,
            perfect_csi: self.bool("estimation.perfect_csi")?,
            d_r,
            a_rm,
            fixed_a_r,
            n_trials,
            seed: self
                .str("sim.seed")
                .parse()
                .map_err(|_| bad("sim.seed", self.str("sim.seed")))?,
            max_points: self.usize("sim.max_points")?,
        })
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value `{value}` for `{key}`"))
}

/// Reals, plus `pi`, `pi/N` and `N*pi` for angles.
fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    if s == "pi" {
        return Some(PI);
    }
    if let Some(d) = s.strip_prefix("pi/") {
        return d.trim().parse::<f64>().ok().map(|d| PI / d);
    }
    if let Some(m) = s.strip_suffix("*pi") {
        return m.trim().parse::<f64>().ok().map(|m| m * PI);
    }
    None
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    let v: Option<Vec<f64>> = s.split(',').map(|t| t.trim().parse().ok()).collect();
    v.filter(|v| !v.is_empty())
}
