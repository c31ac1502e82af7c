//! Large-scale fading, spatially correlated Rayleigh channels, pilot
//! transmission and MMSE channel estimation.
//!
//! Two routes compute the same quantities. The general functions
//! ([`correlation_matrix`], [`draw_channel`], [`mmse_estimate`]) work on
//! arbitrary covariance matrices through Cholesky factorizations. The
//! [`ExponentialCorrelation`] kit exploits that every covariance in the
//! simulator is a scaled copy of one fixed Toeplitz matrix `T_{ij} = ρ^|i−j|`,
//! so one eigendecomposition serves every node, CP and trial.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Path loss and shadowing parameters. Gains are in dB, lengths in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleParams {
    pub beta0_db: f64,
    pub alpha: f64,
    pub shadow_sigma_db: f64,
    pub h_cp_m: f64,
    pub l0_m: f64,
}

impl Default for LargeScaleParams {
    fn default() -> Self {
        LargeScaleParams {
            beta0_db: -30.5,
            alpha: 3.67,
            shadow_sigma_db: 4.0,
            h_cp_m: 20.0,
            l0_m: 1.0,
        }
    }
}

impl LargeScaleParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.shadow_sigma_db >= 0.0
            && self.h_cp_m >= 0.0
            && self.l0_m > 0.0
            && self.beta0_db.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid large-scale parameters {self:?}")))
        }
    }
}

/// Linear power gain `10^{(β0 − 10α·log10(l/l0) + S)/10}` at horizontal
/// distance `horizontal_dist_m`, with `l = sqrt(d² + h_cp²)`.
pub fn path_loss_linear(params: &LargeScaleParams, horizontal_dist_m: f64, shadow_db: f64) -> f64 {
    let mut l = horizontal_dist_m.hypot(params.h_cp_m);
    if l <= 0.0 {
        l = params.l0_m;
    }
    let db = params.beta0_db - 10.0 * params.alpha * (l / params.l0_m).log10() + shadow_db;
    10f64.powf(db / 10.0)
}

/// Converts dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Exponential antenna correlation `[Y]_{ij} = β·ρ^|i−j|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialCorrelationModel {
    rho: f64,
    n_antennas: usize,
}

impl SpatialCorrelationModel {
    pub fn new(rho: f64, n_antennas: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) || n_antennas == 0 {
            return Err(Error::Config(format!(
                "correlation needs 0 <= rho < 1 and at least one antenna, got rho={rho}, N_A={n_antennas}"
            )));
        }
        Ok(SpatialCorrelationModel { rho, n_antennas })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    fn toeplitz(&self) -> DMatrix<f64> {
        let n = self.n_antennas;
        DMatrix::from_fn(n, n, |i, j| self.rho.powi(i.abs_diff(j) as i32))
    }
}

pub fn correlation_matrix(beta_linear: f64, model: &SpatialCorrelationModel) -> CMatrix {
    model.toeplitz().map(|t| Complex64::new(beta_linear * t, 0.0))
}

/// One draw from `CN(0, 1)`.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `h ~ CN(0, Y)` as `L·w`, where `L` is the Cholesky factor of `Y`
/// (retried with a diagonal jitter of `1e-12·tr(Y)/N` when needed).
pub fn draw_channel<R: Rng + ?Sized>(y: &CMatrix, rng: &mut R) -> Result<CVector> {
    let n = y.nrows();
    let w = CVector::from_fn(n, |_, _| standard_complex_normal(rng));
    let trace: f64 = (0..n).map(|i| y[(i, i)].re).sum();
    if y.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Ok(CVector::zeros(n));
    }
    if !(trace > 0.0) {
        return Err(Error::NotPsd);
    }
    let l = match cholesky_factor(y.clone()) {
        Some(l) => l,
        None => {
            let jitter = 1e-12 * trace / n as f64;
            let jittered = y + CMatrix::identity(n, n) * Complex64::new(jitter, 0.0);
            cholesky_factor(jittered).ok_or(Error::NotPsd)?
        }
    };
    Ok(l * w)
}

/// Lower Cholesky factor of a Hermitian matrix, or `None` unless the
/// factorization yields a real positive diagonal.
fn cholesky_factor(y: CMatrix) -> Option<CMatrix> {
    let l = y.cholesky()?.unpack();
    let valid = l.diagonal().iter().all(|d| d.re > 0.0 && d.im.abs() <= 1e-12 * d.re);
    valid.then_some(l)
}

/// True channels of one trial, indexed by `(cp, node)`.
#[derive(Debug, Clone, Default)]
pub struct ChannelRealization {
    h: Vec<Vec<CVector>>,
    beta: Vec<Vec<f64>>,
}

impl ChannelRealization {
    /// `h[c][k]` is the vector from node `k` to CP `c`, `beta[c][k]` its gain.
    pub fn new(h: Vec<Vec<CVector>>, beta: Vec<Vec<f64>>) -> Result<Self> {
        if h.len() != beta.len() || h.iter().zip(&beta).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::InvalidInput("channel and gain tables disagree in shape".into()));
        }
        for row in &h {
            if let Some(first) = row.first() {
                if row.iter().any(|v| v.len() != first.len()) {
                    return Err(Error::InvalidInput(
                        "channel vectors at one CP must share the antenna count".into(),
                    ));
                }
            }
        }
        Ok(ChannelRealization { h, beta })
    }

    pub fn h(&self, node: usize, cp: usize) -> &CVector {
        &self.h[cp][node]
    }

    pub fn beta(&self, node: usize, cp: usize) -> f64 {
        self.beta[cp][node]
    }

    pub fn n_cps(&self) -> usize {
        self.h.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.h.first().map_or(0, Vec::len)
    }

    /// Channel vectors of every node at one CP.
    pub fn at_cp(&self, cp: usize) -> &[CVector] {
        &self.h[cp]
    }
}

/// Pilot assignment: node `k` uses pilot `assignment[k]` out of `tau_p`
/// mutually orthogonal sequences of squared norm `tau_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    tau_p: usize,
    assignment: Vec<usize>,
    pilot_power_mw: Vec<f64>,
}

impl PilotBook {
    pub fn new(tau_p: usize, assignment: Vec<usize>, pilot_power_mw: Vec<f64>) -> Result<Self> {
        if tau_p == 0 {
            return Err(Error::Config("pilot length must be at least 1".into()));
        }
        if assignment.len() != pilot_power_mw.len() {
            return Err(Error::InvalidInput("one pilot power per node".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&p| p >= tau_p) {
            return Err(Error::InvalidInput(format!("pilot index {bad} >= tau_p {tau_p}")));
        }
        if pilot_power_mw.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidInput("pilot powers must be nonnegative".into()));
        }
        Ok(PilotBook {
            tau_p,
            assignment,
            pilot_power_mw,
        })
    }

    /// Each node picks one of `tau_p` pilots uniformly at random.
    pub fn random<R: Rng + ?Sized>(n_nodes: usize, tau_p: usize, power_mw: f64, rng: &mut R) -> Result<Self> {
        if tau_p == 0 {
            return Err(Error::Config("pilot length must be at least 1".into()));
        }
        let assignment = (0..n_nodes).map(|_| rng.random_range(0..tau_p)).collect();
        Self::new(tau_p, assignment, vec![power_mw; n_nodes])
    }

    /// Node `k` gets pilot `k`; requires `tau_p ≥ K`.
    pub fn orthogonal(n_nodes: usize, tau_p: usize, power_mw: f64) -> Result<Self> {
        if tau_p < n_nodes {
            return Err(Error::Config(format!(
                "orthogonal pilots need tau_p >= K, got tau_p={tau_p}, K={n_nodes}"
            )));
        }
        Self::new(tau_p, (0..n_nodes).collect(), vec![power_mw; n_nodes])
    }

    pub fn tau_p(&self) -> usize {
        self.tau_p
    }

    pub fn pilot_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn power(&self, node: usize) -> f64 {
        self.pilot_power_mw[node]
    }

    pub fn n_nodes(&self) -> usize {
        self.assignment.len()
    }

    /// Nodes sharing node `k`'s pilot, including `k`.
    pub fn sharing(&self, node: usize) -> Vec<usize> {
        let p = self.assignment[node];
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == p)
            .collect()
    }
}

/// Despread pilot observation at CP `cp` for every node:
/// `Σ_{i∈P_k} sqrt(p_i τ_p)·h_i + z`, with `z ~ CN(0, δ²I)`. Nodes sharing a
/// pilot observe the same despread vector, noise included.
pub fn pilot_receive<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    pilots: &PilotBook,
    cp: usize,
    noise_var_mw: f64,
    rng: &mut R,
) -> Result<Vec<CVector>> {
    let k = channels.n_nodes();
    if pilots.n_nodes() != k {
        return Err(Error::InvalidInput(format!(
            "pilot book covers {} nodes, channel has {k}",
            pilots.n_nodes()
        )));
    }
    let hs = channels.at_cp(cp);
    let n = hs.first().map_or(0, |h| h.len());
    let tau = pilots.tau_p() as f64;
    let sigma = noise_var_mw.sqrt();
    let mut per_pilot: Vec<Option<CVector>> = vec![None; pilots.tau_p()];
    for (node, h) in hs.iter().enumerate() {
        let slot = per_pilot[pilots.pilot_of(node)].get_or_insert_with(|| CVector::zeros(n));
        *slot += h * Complex64::new((pilots.power(node) * tau).sqrt(), 0.0);
    }
    // Noise in pilot order so the draw sequence does not depend on node order.
    for slot in per_pilot.iter_mut().flatten() {
        for v in slot.iter_mut() {
            *v += sigma * standard_complex_normal(rng);
        }
    }
    Ok((0..k)
        .map(|node| per_pilot[pilots.pilot_of(node)].clone().expect("slot filled"))
        .collect())
}

/// MMSE estimate of one channel and its analytic error covariance.
#[derive(Debug, Clone)]
pub struct MmseEntry {
    pub h_hat: CVector,
    pub err_cov: CMatrix,
}

/// `ĥ = sqrt(p_k τ_p)·Y_k·Ξ⁻¹·r` with `Ξ = Σ_{i∈P_k} p_i τ_p Y_i + δ² I`.
///
/// `contaminating` lists `(Y_i, p_i)` for every node sharing the pilot,
/// the estimated node included.
pub fn mmse_estimate(
    r_pilot: &CVector,
    y_k: &CMatrix,
    p_k: f64,
    contaminating: &[(&CMatrix, f64)],
    tau_p: usize,
    noise_var: f64,
) -> Result<MmseEntry> {
    let n = r_pilot.len();
    let tau = tau_p as f64;
    let mut xi = CMatrix::identity(n, n) * Complex64::new(noise_var, 0.0);
    for (y, p) in contaminating {
        xi += *y * Complex64::new(p * tau, 0.0);
    }
    let lu = xi.lu();
    let xi_inv_r = lu.solve(r_pilot).ok_or(Error::SingularXi)?;
    let xi_inv_y = lu.solve(y_k).ok_or(Error::SingularXi)?;
    if xi_inv_r.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularXi);
    }
    let scale = Complex64::new((p_k * tau).sqrt(), 0.0);
    let h_hat = y_k * xi_inv_r * scale;
    let err_cov = y_k - y_k * xi_inv_y * Complex64::new(p_k * tau, 0.0);
    Ok(MmseEntry { h_hat, err_cov })
}

/// Channel estimates of one trial, indexed by `(cp, node)`.
#[derive(Debug, Clone, Default)]
pub struct ChannelEstimate {
    pub h_hat: Vec<Vec<CVector>>,
    pub err_cov: Vec<Vec<CMatrix>>,
}

/// Estimates every `(node, cp)` channel with the general matrix route.
pub fn estimate_all<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    model: &SpatialCorrelationModel,
    pilots: &PilotBook,
    noise_var: f64,
    rng: &mut R,
) -> Result<ChannelEstimate> {
    let mut out = ChannelEstimate::default();
    for cp in 0..channels.n_cps() {
        let received = pilot_receive(channels, pilots, cp, noise_var, rng)?;
        let ys: Vec<CMatrix> = (0..channels.n_nodes())
            .map(|k| correlation_matrix(channels.beta(k, cp), model))
            .collect();
        let mut hats = Vec::with_capacity(ys.len());
        let mut covs = Vec::with_capacity(ys.len());
        for (k, r) in received.iter().enumerate() {
            let set: Vec<(&CMatrix, f64)> = pilots
                .sharing(k)
                .into_iter()
                .map(|i| (&ys[i], pilots.power(i)))
                .collect();
            let entry = mmse_estimate(r, &ys[k], pilots.power(k), &set, pilots.tau_p(), noise_var)?;
            hats.push(entry.h_hat);
            covs.push(entry.err_cov);
        }
        out.h_hat.push(hats);
        out.err_cov.push(covs);
    }
    Ok(out)
}

/// Precomputed factorizations of `T_{ij} = ρ^|i−j|` for fast sampling and
/// estimation when every covariance is `β·T`.
#[derive(Debug, Clone)]
pub struct ExponentialCorrelation {
    model: SpatialCorrelationModel,
    chol: DMatrix<f64>,
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
}

impl ExponentialCorrelation {
    pub fn new(model: SpatialCorrelationModel) -> Result<Self> {
        let t = model.toeplitz();
        let n = model.n_antennas();
        let chol = match t.clone().cholesky() {
            Some(c) => c.unpack(),
            None => (t.clone() + DMatrix::identity(n, n) * 1e-12)
                .cholesky()
                .ok_or(Error::NotPsd)?
                .unpack(),
        };
        let eig = t.symmetric_eigen();
        Ok(ExponentialCorrelation {
            model,
            chol,
            eigvecs: eig.eigenvectors,
            eigvals: eig.eigenvalues.map(|v| v.max(0.0)),
        })
    }

    pub fn model(&self) -> &SpatialCorrelationModel {
        &self.model
    }

    pub fn n_antennas(&self) -> usize {
        self.model.n_antennas()
    }

    pub fn covariance(&self, beta: f64) -> CMatrix {
        correlation_matrix(beta, &self.model)
    }

    /// `h ~ CN(0, β·T)`.
    pub fn draw<R: Rng + ?Sized>(&self, beta: f64, rng: &mut R) -> CVector {
        let n = self.n_antennas();
        let w = CVector::from_fn(n, |_, _| standard_complex_normal(rng));
        self.color(beta, &w)
    }

    /// `sqrt(β)·L·w` for a given white vector `w`.
    pub fn color(&self, beta: f64, w: &CVector) -> CVector {
        let n = self.n_antennas();
        let s = beta.sqrt();
        CVector::from_fn(n, |i, _| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=i {
                acc += w[j] * self.chol[(i, j)];
            }
            acc * s
        })
    }

    /// MMSE estimate of node `k`'s channel from its despread pilot signal.
    /// `pilot_load` is `Σ_{i∈P_k} p_i·β_i`, the estimated node included.
    pub fn estimate(
        &self,
        r_pilot: &CVector,
        beta_k: f64,
        p_k: f64,
        pilot_load: f64,
        tau_p: usize,
        noise_var: f64,
    ) -> Result<CVector> {
        let tau = tau_p as f64;
        let s = pilot_load * tau;
        let u = &self.eigvecs;
        let projected = u.transpose().map(|v| Complex64::new(v, 0.0)) * r_pilot;
        let mut scaled = projected;
        for (i, v) in scaled.iter_mut().enumerate() {
            let lambda = self.eigvals[i];
            let denom = s * lambda + noise_var;
            if lambda > 0.0 {
                if !(denom > 0.0) {
                    return Err(Error::SingularXi);
                }
                *v *= lambda / denom;
            } else if noise_var > 0.0 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                return Err(Error::SingularXi);
            }
        }
        let gain = (p_k * tau).sqrt() * beta_k;
        Ok(u.map(|v| Complex64::new(v * gain, 0.0)) * scaled)
    }

    /// Analytic error covariance `Y_k − p_k τ_p Y_k Ξ⁻¹ Y_k`.
    pub fn error_covariance(&self, beta_k: f64, p_k: f64, pilot_load: f64, tau_p: usize, noise_var: f64) -> CMatrix {
        let tau = tau_p as f64;
        let s = pilot_load * tau;
        let d = self.eigvals.map(|lambda| {
            let denom = s * lambda + noise_var;
            let shrink = if denom > 0.0 {
                p_k * tau * beta_k * lambda / denom
            } else {
                0.0
            };
            beta_k * lambda * (1.0 - shrink)
        });
        let u = &self.eigvecs;
        let m = u * DMatrix::from_diagonal(&d) * u.transpose();
        m.map(|v| Complex64::new(v, 0.0))
    }
}
