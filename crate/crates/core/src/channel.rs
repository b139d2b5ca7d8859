//! Rayleigh-faded link outage probabilities and expected log-capacity.
//!
//! A link is "ON" in a slot when its instantaneous capacity exceeds the
//! transmission rate; with exponential power gains this reduces to comparing
//! the gain against a deterministic threshold.

use crate::numerics::{self, NumericsError};

/// Static description of one link: mean power gain and the (common) transmit
/// and noise spectral densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Mean channel power gain.
    pub sigma: f64,
    /// Transmit PSD in Watts/Hz.
    pub p0: f64,
    /// Noise PSD in Watts/Hz.
    pub n0: f64,
}

/// One packet transmission: `bits` sent over `duration` seconds occupying
/// `bandwidth` Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionSpec {
    pub bits: f64,
    pub duration: f64,
    pub bandwidth: f64,
}

/// Cap on the spectral-efficiency exponent `bits/(bandwidth*duration)`.
/// Degenerate grid corners (zero time or bandwidth) blow the exponent up;
/// beyond the cap the link is simply reported as always in outage.
pub const EXPONENT_CAP: f64 = 60.0;

/// Gain threshold `alpha_th = (n0/p0) * (2^(bits/(bandwidth*duration)) - 1)`
/// below which the link is in outage.
///
/// Errors with [`NumericsError::Domain`] when the exponent exceeds
/// [`EXPONENT_CAP`].
pub fn outage_threshold(spec: &TransmissionSpec, link: &LinkParams) -> Result<f64, NumericsError> {
    let exponent = spec.bits / (spec.bandwidth * spec.duration);
    // NaN (0/0 at doubly degenerate inputs) is rejected along with overflow.
    if exponent.is_nan() || exponent > EXPONENT_CAP {
        return Err(NumericsError::Domain {
            what: "spectral-efficiency exponent above cap",
            value: exponent,
        });
    }
    Ok(link.n0 / link.p0 * (exponent * std::f64::consts::LN_2).exp_m1())
}

/// Outage probability `1 - exp(-alpha_th / sigma)` of a single link without
/// interference. Saturates to 1 when the threshold overflows (degenerate
/// zero-time or zero-bandwidth allocations).
pub fn outage_prob(spec: &TransmissionSpec, link: &LinkParams) -> f64 {
    match outage_threshold(spec, link) {
        Ok(th) => -(-th / link.sigma).exp_m1(),
        Err(_) => 1.0,
    }
}

/// Probability the `direct` link delivers the packet while an interferer
/// with mean gain `interferer_sigma` (same PSD, per the equal-power model)
/// transmits concurrently in the same band:
///
/// `(1 - P_outage) / (1 + (sigma_int/sigma_dir) * (2^(b/(W*T)) - 1))`.
///
/// Saturates to 0 on exponent overflow. With `interferer_sigma = 0` this is
/// exactly the no-interference success probability.
pub fn interference_success_prob(
    spec: &TransmissionSpec,
    direct: &LinkParams,
    interferer_sigma: f64,
) -> f64 {
    let exponent = spec.bits / (spec.bandwidth * spec.duration);
    if exponent.is_nan() || exponent > EXPONENT_CAP {
        return 0.0;
    }
    let x = (exponent * std::f64::consts::LN_2).exp_m1();
    let succ = (-direct.n0 / direct.p0 * x / direct.sigma).exp();
    succ / (1.0 + interferer_sigma / direct.sigma * x)
}

/// Expected instantaneous log-capacity of a Rayleigh link in bits/sec/Hz:
/// the mean of `log2(1 + gamma*alpha)` over `alpha ~ Exp(mean sigma)`, which
/// has the closed form `(1/ln 2) * e^(1/(gamma*sigma)) * Gamma(0, 1/(gamma*sigma))`
/// with `gamma = p0/n0`.
pub fn expected_log_capacity(link: &LinkParams) -> f64 {
    let gs = link.p0 / link.n0 * link.sigma;
    if gs <= 0.0 {
        return 0.0;
    }
    let inv = 1.0 / gs;
    // Large 1/(gamma*sigma) underflows exp(-inv) inside Gamma(0, inv); the
    // product tends to 0 like gs, so fall back to the asymptotic form
    // Gamma(0,x) ~ e^{-x}/x * (1 - 1/x + ...) giving e^{x}Gamma(0,x) ~ 1/x.
    if inv > 600.0 {
        return gs * (1.0 - gs) / std::f64::consts::LN_2;
    }
    let g0 = numerics::upper_incomplete_gamma0(inv)
        .expect("1/(gamma*sigma) is positive here");
    inv.exp() * g0 / std::f64::consts::LN_2
}
