//! Energy-detection spectrum sensing.
//!
//! The secondary samples the primary subband at the Nyquist rate
//! `F_s = 2*W_p` for `tau_s` seconds and compares the measured energy
//! against a threshold chosen for a target false-alarm probability. Under
//! the CLT the test statistic is Gaussian with mean `Lambda = alpha*P_p + N_p`
//! and variance `Lambda^2 / (F_s*tau_s)` given the channel gain `alpha`;
//! misdetection is that conditional probability averaged over the
//! exponentially distributed gain of the primary -> secondary link.

use crate::numerics::{self, NumericsError, QuadratureSpec};

/// Inputs of the energy detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingParams {
    /// Sensing duration in seconds.
    pub tau_s: f64,
    /// Sensed (primary) subband in Hz.
    pub w_p: f64,
    /// Transmit PSD in Watts/Hz.
    pub p0: f64,
    /// Noise PSD in Watts/Hz.
    pub n0: f64,
    /// Mean gain of the sensed primary -> secondary link.
    pub sigma_ps: f64,
    /// Target false-alarm probability in (0, 1).
    pub target_pfa: f64,
}

/// Detector operating point: threshold plus both error probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingErrors {
    pub p_fa: f64,
    pub p_md: f64,
    /// Energy threshold in Watts.
    pub threshold: f64,
}

/// Errors from the sensing formulas.
#[derive(Debug, Clone, PartialEq)]
pub enum SensingError {
    /// `target_pfa` outside (0, 1).
    BadTargetPfa(f64),
    /// Fewer than one sample: `2 * w_p * tau_s < 1`.
    TooFewSamples(f64),
    /// The misdetection quadrature failed to converge.
    Quadrature(NumericsError),
}

impl std::fmt::Display for SensingError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SensingError::BadTargetPfa(p) => write!(f, "target_pfa must be in (0,1), got {p}"),
            SensingError::TooFewSamples(m) => {
                write!(f, "sample count 2*w_p*tau_s = {m} is below 1")
            }
            SensingError::Quadrature(e) => write!(f, "misdetection integral: {e}"),
        }
    }
}

impl std::error::Error for SensingError {}

/// Number of detector samples `F_s * tau_s = 2 * w_p * tau_s`, used as a
/// real value (the CLT approximation is continuous in it).
pub fn sample_count(params: &SensingParams) -> f64 {
    2.0 * params.w_p * params.tau_s
}

fn noise_power(params: &SensingParams) -> f64 {
    params.n0 * params.w_p
}

fn signal_power(params: &SensingParams) -> f64 {
    params.p0 * params.w_p
}

fn check(params: &SensingParams) -> Result<f64, SensingError> {
    let pfa = params.target_pfa;
    if pfa.is_nan() || pfa <= 0.0 || pfa >= 1.0 {
        return Err(SensingError::BadTargetPfa(pfa));
    }
    let m = sample_count(params);
    if m.is_nan() || m < 1.0 {
        return Err(SensingError::TooFewSamples(m));
    }
    Ok(m)
}

/// Energy threshold meeting the target false-alarm probability:
/// `eps = N_p * (Q^{-1}(P_FA)/sqrt(F_s*tau_s) + 1)` with `N_p = n0*w_p`.
pub fn detection_threshold(params: &SensingParams) -> Result<f64, SensingError> {
    let m = check(params)?;
    let qinv = numerics::q_inverse(params.target_pfa)
        .map_err(|_| SensingError::BadTargetPfa(params.target_pfa))?;
    Ok(noise_power(params) * (qinv / m.sqrt() + 1.0))
}

/// False-alarm probability of a given threshold,
/// `Q(sqrt(F_s*tau_s) * (eps/N_p - 1))`.
pub fn false_alarm_prob(params: &SensingParams, eps: f64) -> f64 {
    let m = sample_count(params);
    numerics::q_function(m.sqrt() * (eps / noise_power(params) - 1.0))
}

/// Detection probability conditioned on the sampled gain of the sensed
/// link: `Q(sqrt(F_s*tau_s) * (eps/(alpha*P_p + N_p) - 1))`.
///
/// This is the per-slot quantity the simulator draws against; averaging it
/// over `alpha ~ Exp(sigma_ps)` gives `1 - misdetection_prob`.
pub fn conditional_detection_prob(params: &SensingParams, eps: f64, alpha: f64) -> f64 {
    let m = sample_count(params);
    let lambda1 = alpha * signal_power(params) + noise_power(params);
    numerics::q_function(m.sqrt() * (eps / lambda1 - 1.0))
}

/// Misdetection probability at the threshold set by [`detection_threshold`]:
/// one minus the detection probability averaged over the exponential gain.
///
/// The integral over the received power `Z = alpha*P_p + N_p` is evaluated
/// in the normalized variable `u = alpha/sigma_ps`, so the weight is exactly
/// `exp(-u)` regardless of scale.
pub fn misdetection_prob(params: &SensingParams) -> Result<f64, SensingError> {
    let m = check(params)?;
    let eps = detection_threshold(params)?;
    let n_p = noise_power(params);
    let scale = params.sigma_ps * signal_power(params); // sigma * P_p
    let sqrt_m = m.sqrt();
    let spec = QuadratureSpec::default();
    let p_d = numerics::integrate(
        |u| (-u).exp() * numerics::q_function(sqrt_m * (eps / (u * scale + n_p) - 1.0)),
        0.0,
        f64::INFINITY,
        &spec,
    )
    .map_err(SensingError::Quadrature)?;
    Ok((1.0 - p_d).clamp(0.0, 1.0))
}

/// Threshold plus both error probabilities in one call.
pub fn errors_for(params: &SensingParams) -> Result<SensingErrors, SensingError> {
    let threshold = detection_threshold(params)?;
    Ok(SensingErrors {
        p_fa: false_alarm_prob(params, threshold),
        p_md: misdetection_prob(params)?,
        threshold,
    })
}

/// Memo cache for [`errors_for`] keyed by `w_p` (the only allocation-
/// dependent input during a grid search), with a 1e-12 relative key
/// tolerance. Single-threaded by design; the optimizer precomputes one
/// entry per grid column before fanning out.
#[derive(Debug, Default)]
pub struct SensingCache {
    entries: Vec<(f64, SensingErrors)>,
}

impl SensingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(&mut self, params: &SensingParams) -> Result<SensingErrors, SensingError> {
        let key = params.w_p;
        for (w, e) in &self.entries {
            if (w - key).abs() <= 1e-12 * w.abs().max(key.abs()) {
                return Ok(*e);
            }
        }
        let e = errors_for(params)?;
        self.entries.push((key, e));
        Ok(e)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
