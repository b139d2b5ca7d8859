//! Shared parameter records: the full system configuration and one
//! candidate time/bandwidth split.

use std::fmt;

/// Which MAC protocol is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Non-cooperative baseline: the primary keeps the whole slot and band,
    /// the secondary never transmits.
    Nc,
    /// Cooperative protocol with blind relaying and one feedback phase.
    P1,
    /// Cooperative protocol with feedback-gated relaying and two feedback
    /// phases.
    P2,
}

impl Protocol {
    pub fn label(&self) -> &'static str {
        match self {
            Protocol::Nc => "NC",
            Protocol::P1 => "P1",
            Protocol::P2 => "P2",
        }
    }

    pub fn parse(s: &str) -> Option<Protocol> {
        match s.to_ascii_uppercase().as_str() {
            "NC" => Some(Protocol::Nc),
            "P1" => Some(Protocol::P1),
            "P2" => Some(Protocol::P2),
            _ => None,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Violation of a parameter or allocation invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamError {
    pub what: String,
}

impl ParamError {
    pub(crate) fn new(what: impl Into<String>) -> Self {
        Self { what: what.into() }
    }
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameter: {}", self.what)
    }
}

impl std::error::Error for ParamError {}

/// All physical and protocol constants of one scenario.
///
/// Times are in seconds, bandwidths in Hz, spectral densities in Watts/Hz,
/// packet size in bits, channel gains dimensionless (mean of the exponential
/// power gain), energies in joules.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Total bandwidth W.
    pub w: f64,
    /// Slot duration T.
    pub t: f64,
    /// Feedback phase duration.
    pub tau_f: f64,
    /// Spectrum-sensing duration.
    pub tau_s: f64,
    /// Packet size b in bits.
    pub b: f64,
    /// Transmit power spectral density (all nodes).
    pub p0: f64,
    /// Noise power spectral density.
    pub n0: f64,
    /// Mean gain of the primary -> primary-destination link.
    pub sigma_p_pd: f64,
    /// Mean gain of the primary -> secondary link (also the sensed link).
    pub sigma_p_s: f64,
    /// Mean gain of the secondary -> primary-destination link.
    pub sigma_s_pd: f64,
    /// Mean gain of the secondary -> secondary-destination link.
    pub sigma_s_sd: f64,
    /// Probability the secondary decodes the primary feedback message.
    pub f: f64,
    /// Probability an undecoded feedback is treated as a NACK.
    pub omega: f64,
    /// Cap on the secondary's mean transmit energy per slot.
    pub energy_budget: f64,
    /// Target false-alarm probability used to set the detector threshold.
    pub target_pfa: f64,
    /// Primary packet arrival probability per slot.
    pub lambda_p: f64,
}

impl SystemParams {
    /// Check every stated invariant; returns the first violation found.
    pub fn validate(&self) -> Result<(), ParamError> {
        let pos = [
            ("w", self.w),
            ("t", self.t),
            ("b", self.b),
            ("p0", self.p0),
            ("n0", self.n0),
            ("sigma_p_pd", self.sigma_p_pd),
            ("sigma_p_s", self.sigma_p_s),
            ("sigma_s_pd", self.sigma_s_pd),
            ("sigma_s_sd", self.sigma_s_sd),
            ("tau_s", self.tau_s),
        ];
        for (name, v) in pos {
            if !v.is_finite() || v <= 0.0 {
                return Err(ParamError::new(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.tau_f.is_finite() || self.tau_f < 0.0 {
            return Err(ParamError::new(format!("tau_f must be >= 0, got {}", self.tau_f)));
        }
        if self.tau_s >= self.t {
            return Err(ParamError::new(format!(
                "tau_s = {} must be less than t = {}",
                self.tau_s, self.t
            )));
        }
        if self.tau_s + self.tau_f >= self.t {
            return Err(ParamError::new(format!(
                "tau_s + tau_f = {} must be less than t = {}",
                self.tau_s + self.tau_f,
                self.t
            )));
        }
        let probs = [
            ("f", self.f),
            ("omega", self.omega),
            ("target_pfa", self.target_pfa),
            ("lambda_p", self.lambda_p),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(ParamError::new(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        if !(self.target_pfa > 0.0 && self.target_pfa < 1.0) {
            return Err(ParamError::new(format!(
                "target_pfa must lie strictly inside (0,1), got {}",
                self.target_pfa
            )));
        }
        if self.energy_budget.is_nan() || self.energy_budget < 0.0 {
            return Err(ParamError::new(format!(
                "energy_budget must be >= 0, got {}",
                self.energy_budget
            )));
        }
        Ok(())
    }

    /// Total transmission time available to the two users under `protocol`:
    /// `T - tau_f` for NC and P1 (one feedback phase), `T - 2 tau_f` for P2
    /// (two feedback phases).
    pub fn horizon(&self, protocol: Protocol) -> f64 {
        match protocol {
            Protocol::Nc | Protocol::P1 => self.t - self.tau_f,
            Protocol::P2 => self.t - 2.0 * self.tau_f,
        }
    }

    /// Receive SNR per unit gain, `p0/n0`.
    pub fn snr(&self) -> f64 {
        self.p0 / self.n0
    }

    pub fn with_lambda(&self, lambda_p: f64) -> SystemParams {
        SystemParams { lambda_p, ..self.clone() }
    }
}

/// One candidate split of the slot: the primary transmits for `t_p` seconds
/// over `w_p` Hz; the remainder of the transmission horizon and band goes to
/// the secondary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    /// Primary transmission time.
    pub t_p: f64,
    /// Primary subband.
    pub w_p: f64,
    /// Relay transmission time, `horizon - t_p`.
    pub t_s: f64,
    /// Secondary subband, `W - w_p`.
    pub w_s: f64,
    /// Secondary bandwidth fraction `w_s / W`.
    pub delta_s: f64,
}

impl Allocation {
    /// Build and validate an allocation for `protocol`:
    /// `tau_s <= t_p <= horizon`, `0 <= w_p <= W`.
    pub fn new(
        params: &SystemParams,
        protocol: Protocol,
        t_p: f64,
        w_p: f64,
    ) -> Result<Allocation, ParamError> {
        let horizon = params.horizon(protocol);
        if !(t_p.is_finite() && w_p.is_finite()) {
            return Err(ParamError::new("allocation must be finite"));
        }
        if t_p < params.tau_s || t_p > horizon {
            return Err(ParamError::new(format!(
                "t_p = {t_p} must lie in [tau_s = {}, horizon = {horizon}]",
                params.tau_s
            )));
        }
        if w_p < 0.0 || w_p > params.w {
            return Err(ParamError::new(format!(
                "w_p = {w_p} must lie in [0, W = {}]",
                params.w
            )));
        }
        let w_s = params.w - w_p;
        Ok(Allocation {
            t_p,
            w_p,
            t_s: horizon - t_p,
            w_s,
            delta_s: w_s / params.w,
        })
    }

    /// Build from fractions: `t_p = frac_t * horizon`, `w_p = frac_w * W`.
    pub fn from_fractions(
        params: &SystemParams,
        protocol: Protocol,
        frac_t: f64,
        frac_w: f64,
    ) -> Result<Allocation, ParamError> {
        Allocation::new(
            params,
            protocol,
            frac_t * params.horizon(protocol),
            frac_w * params.w,
        )
    }
}
