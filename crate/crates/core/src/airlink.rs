//! Transmit coefficients, multiple-access superposition and receiver gain.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{standard_complex_normal, CVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Phase pre-compensation at full power: `sqrt(P_t)·ĥ*/|ĥ|`.
    TypeI,
    /// Plain full power: `sqrt(P_t)`.
    TypeII,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::TypeI => "type1",
            PolicyKind::TypeII => "type2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitPolicy {
    pub kind: PolicyKind,
    pub p_t_mw: f64,
}

impl TransmitPolicy {
    pub fn new(kind: PolicyKind, p_t_mw: f64) -> Result<Self> {
        if !(p_t_mw > 0.0 && p_t_mw.is_finite()) {
            return Err(Error::Config(format!(
                "transmit power must be positive, got {p_t_mw} mW"
            )));
        }
        Ok(TransmitPolicy { kind, p_t_mw })
    }
}

/// A received sample after amplification by `a_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedSample {
    pub value: Complex64,
    pub a_r: f64,
}

/// Transmit coefficient from the antenna-summed channel estimate.
pub fn transmit_coeff(policy: &TransmitPolicy, h_hat_sum: Complex64) -> Result<Complex64> {
    let amp = policy.p_t_mw.sqrt();
    match policy.kind {
        PolicyKind::TypeII => Ok(Complex64::new(amp, 0.0)),
        PolicyKind::TypeI => {
            let mag = h_hat_sum.norm();
            if !(mag >= 1e-15) {
                return Err(Error::ZeroChannelPhase);
            }
            Ok(h_hat_sum.conj() / mag * amp)
        }
    }
}

/// `Σ_k Σ_n h_{k,n}·b_k·x_k + Σ_n z_n` with independent `z_n ~ CN(0, δ²)`.
///
/// `h[k]` holds node `k`'s per-antenna channel. One noise sample is drawn
/// per antenna, in antenna order.
pub fn superpose<R: Rng + ?Sized>(
    b: &[Complex64],
    x: &[Complex64],
    h: &[CVector],
    noise_var: f64,
    rng: &mut R,
) -> Result<Complex64> {
    if b.len() != x.len() || b.len() != h.len() {
        return Err(Error::InvalidInput(format!(
            "superpose needs one coefficient, symbol and channel per node ({}, {}, {})",
            b.len(),
            x.len(),
            h.len()
        )));
    }
    let n_antennas = h.first().map_or(1, |v| v.len());
    if h.iter().any(|v| v.len() != n_antennas) {
        return Err(Error::InvalidInput("channels disagree in antenna count".into()));
    }
    let mut r = Complex64::new(0.0, 0.0);
    for ((bk, xk), hk) in b.iter().zip(x).zip(h) {
        r += hk.sum() * bk * xk;
    }
    Ok(r + antenna_noise(n_antennas, noise_var, rng))
}

/// Sum of `n_antennas` independent `CN(0, δ²)` samples.
pub fn antenna_noise<R: Rng + ?Sized>(n_antennas: usize, noise_var: f64, rng: &mut R) -> Complex64 {
    let sigma = noise_var.sqrt();
    let mut z = Complex64::new(0.0, 0.0);
    for _ in 0..n_antennas {
        z += standard_complex_normal(rng) * sigma;
    }
    z
}

pub fn amplify(r: Complex64, a_r: f64) -> Result<ReceivedSample> {
    if !(a_r >= 1.0) {
        return Err(Error::InvalidInput(format!("amplification must be >= 1, got {a_r}")));
    }
    Ok(ReceivedSample { value: r * a_r, a_r })
}
