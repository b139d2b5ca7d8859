//! Closed-form per-protocol performance: primary service rate, secondary
//! transmission rates (empty/busy/mean), secondary mean transmit energy,
//! and the combined feasibility evaluation.
//!
//! Slot structure (cooperative protocols): the secondary senses the primary
//! subband during `[0, tau_s]`, the primary transmits over `[0, T_p]`, the
//! secondary may relay for `T_s` seconds, and each protocol ends the slot
//! with its feedback phase(s). P1 carries one feedback phase, P2 two.

use crate::channel::{self, LinkParams, TransmissionSpec};
use crate::params::{Allocation, Protocol, SystemParams};
use crate::queueing::{self, QueueModel, UnstableQueue};
use crate::sensing::{self, SensingErrors, SensingParams};

/// Relative guard for the strict feasibility inequalities, avoiding float
/// equality artifacts at degenerate grid corners.
const STRICT_GUARD: f64 = 1e-12;

pub(crate) fn strictly_greater(a: f64, b: f64) -> bool {
    a - b > STRICT_GUARD * a.abs().max(b.abs())
}

/// Per-link outage and sensing error probabilities evaluated at one
/// allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    /// Outage of primary -> primary destination at `(b, t_p, w_p)`.
    pub out_p_pd: f64,
    /// Outage of primary -> secondary at `(b, t_p, w_p)`.
    pub out_p_s: f64,
    /// Outage of secondary -> primary destination at the relay rate
    /// `(b, t_s, w_p)`.
    pub out_s_pd: f64,
    /// Success probability of primary -> primary destination under
    /// concurrent secondary transmission in the primary subband.
    pub succ_p_pd_int: f64,
    /// Misdetection probability of the energy detector at `(tau_s, w_p)`.
    pub p_md: f64,
    /// False-alarm probability (equals the configured target).
    pub p_fa: f64,
    /// Detector energy threshold.
    pub threshold: f64,
    /// Probability the secondary interprets the overheard feedback as NACK:
    /// `Gamma_f = out_p_pd * f + (1 - f)` (at `omega = 1`).
    pub gamma_f: f64,
    /// Probability a true NACK is acted on: `beta = f + (1 - f) * omega`.
    pub beta: f64,
}

/// Reasons an allocation fails the optimization constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// `mu <= lambda_p`: the primary queue would be unstable.
    Unstable,
    /// `mu <= mu_nc`: cooperation would worsen the primary delay.
    BelowNonCooperative,
    /// Mean secondary energy exceeds the budget.
    EnergyBudgetExceeded,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Violation::Unstable => "unstable (mu <= lambda)",
            Violation::BelowNonCooperative => "service below non-cooperative rate",
            Violation::EnergyBudgetExceeded => "energy budget exceeded",
        };
        f.write_str(s)
    }
}

/// Full performance snapshot of one protocol at one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolMetrics {
    pub protocol: Protocol,
    /// Primary mean service rate in packets/slot.
    pub mu_p: f64,
    /// Whether the primary queue is stable at the configured arrival rate.
    pub stable: bool,
    /// Stationary empty probability; 0 when unstable (saturated queue).
    pub nu0: f64,
    /// Mean queueing delay in slots; infinite when unstable.
    pub delay_slots: f64,
    /// Secondary rate in an empty-primary slot, bits/slot.
    pub rate_empty: f64,
    /// Secondary rate in a busy-primary slot, bits/slot.
    pub rate_busy: f64,
    /// Mean secondary rate, bits/slot.
    pub mean_rate: f64,
    /// Mean secondary transmit energy, joules/slot.
    pub mean_energy: f64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Evaluate every outage/sensing quantity the protocol formulas need at one
/// allocation.
///
/// Degenerate subbands that cannot supply one detector sample
/// (`2 w_p tau_s < 1`, e.g. the `w_p = 0` grid edge) saturate the sensor to
/// `p_md = 1` with the false alarm pinned at its target; such points are
/// always infeasible anyway since every primary link is then in outage.
pub fn link_stats(params: &SystemParams, alloc: &Allocation) -> LinkStats {
    link_stats_with_sensing(params, alloc, sensing_errors(params, alloc.w_p))
}

/// The detector operating point for a given primary subband, saturating the
/// degenerate below-one-sample case as described on [`link_stats`].
pub fn sensing_errors(params: &SystemParams, w_p: f64) -> SensingErrors {
    sensing::errors_for(&sensing_inputs(params, w_p)).unwrap_or(saturated_errors(params, w_p))
}

/// [`sensing_errors`] memoized through a [`sensing::SensingCache`]; repeated lookups
/// at the same subband (within 1e-12 relative) reuse the quadrature result.
pub fn sensing_errors_cached(
    params: &SystemParams,
    w_p: f64,
    cache: &mut sensing::SensingCache,
) -> SensingErrors {
    cache
        .get_or_compute(&sensing_inputs(params, w_p))
        .unwrap_or(saturated_errors(params, w_p))
}

fn sensing_inputs(params: &SystemParams, w_p: f64) -> SensingParams {
    SensingParams {
        tau_s: params.tau_s,
        w_p,
        p0: params.p0,
        n0: params.n0,
        sigma_ps: params.sigma_p_s,
        target_pfa: params.target_pfa,
    }
}

fn saturated_errors(params: &SystemParams, w_p: f64) -> SensingErrors {
    SensingErrors {
        p_fa: params.target_pfa,
        p_md: 1.0,
        threshold: params.n0 * w_p,
    }
}

/// [`link_stats`] with precomputed sensing errors; the optimizer caches the
/// detector operating point per grid column since it depends only on `w_p`.
pub fn link_stats_with_sensing(
    params: &SystemParams,
    alloc: &Allocation,
    errs: SensingErrors,
) -> LinkStats {
    let tx_primary = TransmissionSpec {
        bits: params.b,
        duration: alloc.t_p,
        bandwidth: alloc.w_p,
    };
    let tx_relay = TransmissionSpec {
        bits: params.b,
        duration: alloc.t_s,
        bandwidth: alloc.w_p,
    };
    let link = |sigma: f64| LinkParams { sigma, p0: params.p0, n0: params.n0 };

    let out_p_pd = channel::outage_prob(&tx_primary, &link(params.sigma_p_pd));
    let out_p_s = channel::outage_prob(&tx_primary, &link(params.sigma_p_s));
    let out_s_pd = channel::outage_prob(&tx_relay, &link(params.sigma_s_pd));
    let succ_p_pd_int = channel::interference_success_prob(
        &tx_primary,
        &link(params.sigma_p_pd),
        params.sigma_s_pd,
    );

    LinkStats {
        out_p_pd,
        out_p_s,
        out_s_pd,
        succ_p_pd_int,
        p_md: errs.p_md,
        p_fa: errs.p_fa,
        threshold: errs.threshold,
        gamma_f: out_p_pd * params.f + (1.0 - params.f),
        beta: params.f + (1.0 - params.f) * params.omega,
    }
}

/// Non-cooperative primary service rate: the success probability of the
/// direct link at full bandwidth over the data phase `T - tau_f`.
pub fn mu_nc(params: &SystemParams) -> f64 {
    let spec = TransmissionSpec {
        bits: params.b,
        duration: params.t - params.tau_f,
        bandwidth: params.w,
    };
    let link = LinkParams {
        sigma: params.sigma_p_pd,
        p0: params.p0,
        n0: params.n0,
    };
    1.0 - channel::outage_prob(&spec, &link)
}

/// P1 primary service rate: with correct detection the packet departs when
/// the direct link or the relaying path (`p->s` and `s->pd` both ON) works;
/// under misdetection only the interfered direct link can deliver.
pub fn mu_p1(stats: &LinkStats) -> f64 {
    let relay = (1.0 - stats.out_p_s) * (1.0 - stats.out_s_pd);
    (1.0 - stats.p_md) * (1.0 - stats.out_p_pd * (1.0 - relay))
        + stats.p_md * stats.succ_p_pd_int
}

/// P2 primary service rate: the relaying path additionally requires the
/// secondary to have read the feedback as a NACK, which happens with
/// probability `beta` when a NACK was actually sent.
pub fn mu_p2(stats: &LinkStats) -> f64 {
    let relay = stats.beta * (1.0 - stats.out_p_s) * (1.0 - stats.out_s_pd);
    (1.0 - stats.p_md) * (1.0 - stats.out_p_pd * (1.0 - relay))
        + stats.p_md * stats.succ_p_pd_int
}

/// Secondary rate components in bits/slot: in empty and busy primary slots,
/// and the stationary mean. Errors when the queue is unstable (the mean
/// does not exist).
pub fn secondary_rate_p1(
    params: &SystemParams,
    alloc: &Allocation,
    stats: &LinkStats,
    g: f64,
) -> Result<(f64, f64, f64), UnstableQueue> {
    let (empty, busy) = rate_brackets_p1(params, alloc, stats);
    let nu0 = queueing::empty_prob(&QueueModel {
        lambda_p: params.lambda_p,
        mu_p: mu_p1(stats),
    })?;
    let wg = params.w * g;
    Ok((empty * wg, busy * wg, (nu0 * empty + (1.0 - nu0) * busy) * wg))
}

/// P2 analogue of [`secondary_rate_p1`]. The busy-slot expression embeds the
/// `omega = 1` feedback policy (NACK assumed when nothing decodes), the
/// regime the closed forms are stated for.
pub fn secondary_rate_p2(
    params: &SystemParams,
    alloc: &Allocation,
    stats: &LinkStats,
    g: f64,
) -> Result<(f64, f64, f64), UnstableQueue> {
    let (empty, busy) = rate_brackets_p2(params, alloc, stats);
    let nu0 = queueing::empty_prob(&QueueModel {
        lambda_p: params.lambda_p,
        mu_p: mu_p2(stats),
    })?;
    let wg = params.w * g;
    Ok((empty * wg, busy * wg, (nu0 * empty + (1.0 - nu0) * busy) * wg))
}

/// Mean secondary transmit energy under P1 in joules/slot.
pub fn mean_energy_p1(
    params: &SystemParams,
    alloc: &Allocation,
    stats: &LinkStats,
) -> Result<f64, UnstableQueue> {
    let (empty, busy) = energy_brackets_p1(params, alloc, stats);
    let nu0 = queueing::empty_prob(&QueueModel {
        lambda_p: params.lambda_p,
        mu_p: mu_p1(stats),
    })?;
    Ok((nu0 * empty + (1.0 - nu0) * busy) * params.w * params.p0)
}

/// Mean secondary transmit energy under P2 in joules/slot.
pub fn mean_energy_p2(
    params: &SystemParams,
    alloc: &Allocation,
    stats: &LinkStats,
) -> Result<f64, UnstableQueue> {
    let (empty, busy) = energy_brackets_p2(params, alloc, stats);
    let nu0 = queueing::empty_prob(&QueueModel {
        lambda_p: params.lambda_p,
        mu_p: mu_p2(stats),
    })?;
    Ok((nu0 * empty + (1.0 - nu0) * busy) * params.w * params.p0)
}

/// Effective seconds of full-band secondary transmission per empty/busy P1
/// slot (multiply by `W*G` for bits or `W*P0` for joules — the empty-slot
/// bandwidth occupancy is identical for both).
fn rate_brackets_p1(params: &SystemParams, alloc: &Allocation, stats: &LinkStats) -> (f64, f64) {
    let d = alloc.delta_s;
    let empty = params.tau_s * d
        + (alloc.t_p - params.tau_s) * (stats.p_fa * d + (1.0 - stats.p_fa))
        + (alloc.t_s + params.tau_f);
    let busy = (params.tau_f + alloc.t_p) * d
        + (stats.p_md + (1.0 - stats.p_md) * stats.out_p_s) * alloc.t_s
        + (1.0 - stats.p_md)
            * (1.0 - stats.out_p_s)
            * alloc.t_s
            * ((1.0 - stats.out_s_pd) * d + stats.out_s_pd);
    (empty, busy)
}

fn energy_brackets_p1(params: &SystemParams, alloc: &Allocation, stats: &LinkStats) -> (f64, f64) {
    let d = alloc.delta_s;
    let empty = params.tau_s * d
        + (alloc.t_p - params.tau_s) * (stats.p_fa * d + (1.0 - stats.p_fa))
        + alloc.t_s
        + params.tau_f;
    let busy = (params.tau_f + params.tau_s) * d
        + (alloc.t_p - params.tau_s) * ((1.0 - stats.p_md) * d + stats.p_md)
        + alloc.t_s;
    (empty, busy)
}

fn rate_brackets_p2(params: &SystemParams, alloc: &Allocation, stats: &LinkStats) -> (f64, f64) {
    let d = alloc.delta_s;
    let empty = params.tau_s * d
        + (alloc.t_p - params.tau_s) * ((1.0 - stats.p_fa) + stats.p_fa * d)
        + alloc.t_s
        + 2.0 * params.tau_f;
    let relay_window = (1.0 - stats.out_p_s)
        * (stats.gamma_f * ((1.0 - stats.out_s_pd) * d + stats.out_s_pd) + (1.0 - stats.gamma_f))
        + stats.out_p_s;
    let busy = (2.0 * params.tau_f + alloc.t_p) * d
        + (1.0 - stats.p_md) * alloc.t_s * relay_window
        + stats.p_md * alloc.t_s;
    (empty, busy)
}

fn energy_brackets_p2(params: &SystemParams, alloc: &Allocation, stats: &LinkStats) -> (f64, f64) {
    let d = alloc.delta_s;
    let empty = params.tau_s * d
        + (alloc.t_p - params.tau_s) * ((1.0 - stats.p_fa) + stats.p_fa * d)
        + alloc.t_s
        + 2.0 * params.tau_f;
    let busy = (2.0 * params.tau_f + params.tau_s) * d
        + (alloc.t_p - params.tau_s) * ((1.0 - stats.p_md) * d + stats.p_md)
        + alloc.t_s;
    (empty, busy)
}

/// Evaluate one protocol at one allocation: service rate, queueing figures,
/// secondary rate and energy, and the feasibility verdict
/// `mu > max(mu_nc, lambda)` and `energy <= budget`.
///
/// Infeasibility is data, not an error: unstable points are reported with a
/// saturated queue (`nu0 = 0`, infinite delay, busy-slot means).
pub fn evaluate(params: &SystemParams, alloc: &Allocation, protocol: Protocol) -> ProtocolMetrics {
    if protocol == Protocol::Nc {
        return evaluate_nc(params);
    }
    let stats = link_stats(params, alloc);
    evaluate_prepared(
        params,
        alloc,
        protocol,
        &stats,
        secondary_log_capacity(params),
        mu_nc(params),
    )
}

/// Mean log-capacity of the secondary's own link, bits/sec/Hz.
pub fn secondary_log_capacity(params: &SystemParams) -> f64 {
    channel::expected_log_capacity(&LinkParams {
        sigma: params.sigma_s_sd,
        p0: params.p0,
        n0: params.n0,
    })
}

/// [`evaluate`] with the allocation-independent pieces (`stats`, the
/// secondary log-capacity and the non-cooperative rate) supplied by the
/// caller; this is the grid-search inner loop.
pub fn evaluate_prepared(
    params: &SystemParams,
    alloc: &Allocation,
    protocol: Protocol,
    stats: &LinkStats,
    g: f64,
    mu_nc_value: f64,
) -> ProtocolMetrics {
    if protocol == Protocol::Nc {
        return evaluate_nc(params);
    }
    let mu = match protocol {
        Protocol::P1 => mu_p1(stats),
        Protocol::P2 => mu_p2(stats),
        Protocol::Nc => unreachable!(),
    };
    let (rate_e, rate_b) = match protocol {
        Protocol::P1 => rate_brackets_p1(params, alloc, stats),
        _ => rate_brackets_p2(params, alloc, stats),
    };
    let (en_e, en_b) = match protocol {
        Protocol::P1 => energy_brackets_p1(params, alloc, stats),
        _ => energy_brackets_p2(params, alloc, stats),
    };
    let wg = params.w * g;
    let wp0 = params.w * params.p0;

    let queue = QueueModel { lambda_p: params.lambda_p, mu_p: mu };
    let stable = params.lambda_p == 0.0 || queueing::is_stable(&queue);
    let nu0 = queueing::empty_prob(&queue).unwrap_or(0.0);
    let delay_slots = queueing::mean_delay(&queue).unwrap_or(f64::INFINITY);
    let mean_rate = (nu0 * rate_e + (1.0 - nu0) * rate_b) * wg;
    let mean_energy = (nu0 * en_e + (1.0 - nu0) * en_b) * wp0;

    let mut violations = Vec::new();
    if !strictly_greater(mu, params.lambda_p) {
        violations.push(Violation::Unstable);
    }
    if !strictly_greater(mu, mu_nc_value) {
        violations.push(Violation::BelowNonCooperative);
    }
    if strictly_greater(mean_energy, params.energy_budget) {
        violations.push(Violation::EnergyBudgetExceeded);
    }

    ProtocolMetrics {
        protocol,
        mu_p: mu,
        stable,
        nu0,
        delay_slots,
        rate_empty: rate_e * wg,
        rate_busy: rate_b * wg,
        mean_rate,
        mean_energy,
        feasible: violations.is_empty(),
        violations,
    }
}

/// Non-cooperative baseline: the secondary never transmits, so its rate and
/// energy are zero; feasibility reduces to queue stability.
fn evaluate_nc(params: &SystemParams) -> ProtocolMetrics {
    let mu = mu_nc(params);
    let queue = QueueModel { lambda_p: params.lambda_p, mu_p: mu };
    let stable = params.lambda_p == 0.0 || queueing::is_stable(&queue);
    let nu0 = queueing::empty_prob(&queue).unwrap_or(0.0);
    let delay_slots = queueing::mean_delay(&queue).unwrap_or(f64::INFINITY);
    let violations = if stable { Vec::new() } else { vec![Violation::Unstable] };
    ProtocolMetrics {
        protocol: Protocol::Nc,
        mu_p: mu,
        stable,
        nu0,
        delay_slots,
        rate_empty: 0.0,
        rate_busy: 0.0,
        mean_rate: 0.0,
        mean_energy: 0.0,
        feasible: violations.is_empty(),
        violations,
    }
}
