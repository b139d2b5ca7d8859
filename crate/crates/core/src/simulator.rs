//! Slot-level Monte Carlo simulation of the three protocols.
//!
//! Written independently of the closed forms in [`crate::protocols`]: per
//! slot it samples Bernoulli arrivals and fresh exponential channel gains,
//! draws the energy-detector outcome from the conditional (gain-given)
//! detection probability, walks the protocol's phase logic, and accounts
//! secondary bits and energy as `sum(phase duration x bandwidth)` scaled by
//! the instantaneous capacity `log2(1 + alpha*P0/N0)` or by the PSD. The
//! late-arrival queue discipline (departures before arrivals) matches the
//! analytical model, so every analytic quantity can be cross-checked
//! against the simulated estimate.
//!
//! Transmit bandwidth and credited bandwidth differ in exactly two places:
//! a misdetecting secondary spends energy on both subbands during the data
//! phase but its primary-subband bits are lost to the collision, and a
//! relaying secondary fills the whole band while only its own subband
//! carries its own bits.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::channel::{self, LinkParams, TransmissionSpec};
use crate::params::{Allocation, ParamError, Protocol, SystemParams};
use crate::sensing::{self, SensingParams};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Counter-based generator: each slot reseeds its own splitmix64 stream
/// from `(seed, slot index)`, so any draw is reproducible from
/// `(seed, slot, draw index)` and replications parallelize safely.
#[derive(Debug, Clone)]
pub struct SlotRng {
    state: u64,
}

impl SlotRng {
    pub fn for_slot(seed: u64, slot: u64) -> SlotRng {
        let mut s = seed;
        let a = splitmix64(&mut s);
        let mut t = a ^ slot.wrapping_mul(0xD1B54A32D192ED03);
        SlotRng { state: splitmix64(&mut t) }
    }

    fn next_u64(&mut self) -> u64 {
        splitmix64(&mut self.state)
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Exponential with the given mean (inverse CDF).
    pub fn exponential(&mut self, mean: f64) -> f64 {
        -mean * (1.0 - self.uniform()).ln()
    }
}

/// Deterministic replication seed stream derived from a base seed.
pub fn replication_seed(base_seed: u64, rep: u64) -> u64 {
    let mut s = base_seed;
    let mut v = 0;
    for _ in 0..=rep {
        v = splitmix64(&mut s);
    }
    v
}

/// Simulation inputs.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_slots: u64,
    pub seed: u64,
    /// Slots discarded before estimation begins.
    pub warmup_slots: u64,
    pub protocol: Protocol,
    pub params: SystemParams,
    /// Ignored by the NC protocol.
    pub alloc: Allocation,
}

impl SimConfig {
    /// Standard configuration: warmup of 10^4 slots (or a fifth of short
    /// runs).
    pub fn new(
        params: SystemParams,
        alloc: Allocation,
        protocol: Protocol,
        n_slots: u64,
        seed: u64,
    ) -> Result<SimConfig, ParamError> {
        params.validate()?;
        if n_slots == 0 {
            return Err(ParamError::new("n_slots must be positive"));
        }
        let warmup_slots = 10_000.min(n_slots / 5);
        Ok(SimConfig { n_slots, seed, warmup_slots, protocol, params, alloc })
    }

    fn check(&self) -> Result<(), ParamError> {
        self.params.validate()?;
        if self.n_slots <= self.warmup_slots {
            return Err(ParamError::new(format!(
                "n_slots = {} must exceed warmup_slots = {}",
                self.n_slots, self.warmup_slots
            )));
        }
        Ok(())
    }
}

/// What the detector concluded in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensingOutcome {
    /// Primary active and detected.
    Detected,
    /// Primary active but missed.
    Missed,
    /// Primary idle but declared active.
    FalseAlarm,
    /// Primary idle, correctly declared idle.
    TrueIdle,
}

impl SensingOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            SensingOutcome::Detected => "detected",
            SensingOutcome::Missed => "missed",
            SensingOutcome::FalseAlarm => "false_alarm",
            SensingOutcome::TrueIdle => "true_idle",
        }
    }
}

/// Per-slot event record for debugging and trace-level assertions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotTrace {
    pub slot: u64,
    pub queue_len_before: u64,
    pub arrival: bool,
    pub primary_tx: bool,
    pub sensing_outcome: SensingOutcome,
    pub direct_success: bool,
    pub relay_attempted: bool,
    pub relay_success: bool,
    pub feedback_heard: bool,
    /// Joules the secondary spent this slot.
    pub su_energy: f64,
    /// Bits the secondary delivered this slot.
    pub su_bits: f64,
}

impl SlotTrace {
    /// Space-separated header matching [`SlotTrace::to_line`].
    pub const LINE_HEADER: &'static str = "slot queue_len_before arrival primary_tx \
        sensing_outcome direct_success relay_attempted relay_success feedback_heard \
        su_energy su_bits";

    /// One space-separated record per slot (booleans as 0/1), in the
    /// [`SlotTrace::LINE_HEADER`] field order.
    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {} {} {} {} {} {:e} {:e}",
            self.slot,
            self.queue_len_before,
            u8::from(self.arrival),
            u8::from(self.primary_tx),
            self.sensing_outcome.label(),
            u8::from(self.direct_success),
            u8::from(self.relay_attempted),
            u8::from(self.relay_success),
            u8::from(self.feedback_heard),
            self.su_energy,
            self.su_bits,
        )
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Monte Carlo estimates over the measurement window.
///
/// `mu_hat` and `delay_hat` are absent when no busy slot (respectively no
/// counted departure) occurred, e.g. at `lambda = 0`. Standard errors come
/// from batch means (50 batches), which absorbs the autocorrelation the
/// queue process induces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Departures per busy slot.
    pub mu_hat: Option<Estimate>,
    /// Fraction of slots with an empty primary queue.
    pub nu0_hat: Estimate,
    /// Mean per-packet sojourn in slots.
    pub delay_hat: Option<Estimate>,
    /// Secondary bits per slot.
    pub rate_hat: Estimate,
    /// Secondary joules per slot.
    pub energy_hat: Estimate,
    pub slots_used: u64,
    /// Set when the queue kept growing through the run; stationary
    /// estimates are then meaningless.
    pub diverged: bool,
}

const N_BATCHES: u64 = 50;

#[derive(Default, Clone)]
struct Batch {
    slots: u64,
    empty_slots: u64,
    busy_slots: u64,
    departures: u64,
    bits: f64,
    energy: f64,
    delay_sum: f64,
    delay_count: u64,
}

fn estimate_from_batches<F: Fn(&Batch) -> (f64, f64)>(
    batches: &[Batch],
    numerator_denominator: F,
) -> Option<Estimate> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut ratios = Vec::with_capacity(batches.len());
    for b in batches {
        let (n, d) = numerator_denominator(b);
        if d > 0.0 {
            num += n;
            den += d;
            ratios.push(n / d);
        }
    }
    if den == 0.0 {
        return None;
    }
    let mean = num / den;
    let k = ratios.len() as f64;
    let stderr = if ratios.len() > 1 {
        let m: f64 = ratios.iter().sum::<f64>() / k;
        let var: f64 = ratios.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Some(Estimate { mean, stderr })
}

/// Slot-invariant quantities: gain thresholds, detector operating point,
/// and scalar constants.
struct SlotModel {
    lambda: f64,
    protocol: Protocol,
    /// Gain threshold of the primary transmission at `(b, t_p, w_p)`;
    /// p -> pd and p -> s share it (only the mean gain differs).
    alpha_th_primary: f64,
    /// Gain threshold of the relay retransmission at `(b, t_s, w_p)`.
    alpha_th_relay: f64,
    /// Gain threshold of the non-cooperative transmission at
    /// `(b, T - tau_f, W)`.
    alpha_th_nc: f64,
    /// `2^(b/(w_p t_p)) - 1`, the SINR threshold under collision.
    sinr_x: f64,
    n0_over_p0: f64,
    gamma: f64,
    p0: f64,
    sensing: Option<DetectorPoint>,
}

struct DetectorPoint {
    params: SensingParams,
    threshold: f64,
    p_fa: f64,
}

impl SlotModel {
    fn build(cfg: &SimConfig) -> SlotModel {
        let p = &cfg.params;
        let a = &cfg.alloc;
        let unit_link = LinkParams { sigma: 1.0, p0: p.p0, n0: p.n0 };
        let th = |duration: f64, bandwidth: f64| {
            channel::outage_threshold(
                &TransmissionSpec { bits: p.b, duration, bandwidth },
                &unit_link,
            )
            .unwrap_or(f64::INFINITY)
        };
        let exponent = p.b / (a.w_p * a.t_p);
        let sinr_x = if exponent <= channel::EXPONENT_CAP {
            (exponent * std::f64::consts::LN_2).exp_m1()
        } else {
            f64::INFINITY
        };
        let sensing = if cfg.protocol == Protocol::Nc {
            None
        } else {
            let sp = SensingParams {
                tau_s: p.tau_s,
                w_p: a.w_p,
                p0: p.p0,
                n0: p.n0,
                sigma_ps: p.sigma_p_s,
                target_pfa: p.target_pfa,
            };
            Some(match sensing::detection_threshold(&sp) {
                Ok(threshold) => DetectorPoint {
                    params: sp,
                    threshold,
                    p_fa: sensing::false_alarm_prob(&sp, threshold),
                },
                // Below one sample the detector sees nothing: it misses
                // every active slot and false-alarms at the target rate.
                Err(_) => DetectorPoint {
                    params: sp,
                    threshold: f64::INFINITY,
                    p_fa: p.target_pfa,
                },
            })
        };
        SlotModel {
            lambda: p.lambda_p,
            protocol: cfg.protocol,
            alpha_th_primary: th(a.t_p, a.w_p),
            alpha_th_relay: th(a.t_s, a.w_p),
            alpha_th_nc: th(p.t - p.tau_f, p.w),
            sinr_x,
            n0_over_p0: p.n0 / p.p0,
            gamma: p.p0 / p.n0,
            p0: p.p0,
            sensing,
        }
    }

    fn detect_given_gain(&self, alpha_ps: f64) -> f64 {
        let s = self.sensing.as_ref().expect("cooperative protocols sense");
        if s.threshold.is_infinite() {
            return 0.0;
        }
        sensing::conditional_detection_prob(&s.params, s.threshold, alpha_ps)
    }
}

/// Airtime split into what the transmitter powers and what carries its own
/// decodable bits, both in seconds x Hz.
#[derive(Default, Clone, Copy)]
struct Airtime {
    tx: f64,
    credited: f64,
}

impl Airtime {
    fn same(&mut self, duration: f64, bandwidth: f64) {
        self.tx += duration * bandwidth;
        self.credited += duration * bandwidth;
    }

    fn split(&mut self, duration: f64, tx_bandwidth: f64, credited_bandwidth: f64) {
        self.tx += duration * tx_bandwidth;
        self.credited += duration * credited_bandwidth;
    }
}

/// Outcome of one slot: the trace plus the arrival slot of the packet that
/// departed, if any.
struct SlotOutcome {
    trace: SlotTrace,
    departed_arrival: Option<u64>,
}

fn run_slot(
    model: &SlotModel,
    cfg: &SimConfig,
    slot: u64,
    queue: &mut VecDeque<u64>,
) -> SlotOutcome {
    let p = &cfg.params;
    let a = &cfg.alloc;
    let w = p.w;
    let mut rng = SlotRng::for_slot(cfg.seed, slot);

    let queue_len_before = queue.len() as u64;
    let busy = queue_len_before > 0;

    // Fixed draw order: arrival, gains (p->s, p->pd, s->pd, sensed),
    // sensing coin, feedback coins (P2), own-link gain.
    let arrival = rng.bernoulli(model.lambda);

    let mut trace = SlotTrace {
        slot,
        queue_len_before,
        arrival,
        primary_tx: busy,
        sensing_outcome: SensingOutcome::TrueIdle,
        direct_success: false,
        relay_attempted: false,
        relay_success: false,
        feedback_heard: false,
        su_energy: 0.0,
        su_bits: 0.0,
    };

    let mut served = false;
    let mut air = Airtime::default();

    match model.protocol {
        Protocol::Nc => {
            if busy {
                trace.sensing_outcome = SensingOutcome::Detected;
                let alpha_p_pd = rng.exponential(p.sigma_p_pd);
                trace.direct_success = alpha_p_pd >= model.alpha_th_nc;
                served = trace.direct_success;
            }
            // The secondary never transmits without cooperation.
        }
        Protocol::P1 | Protocol::P2 => {
            let feedback_phases = if model.protocol == Protocol::P1 { 1.0 } else { 2.0 };
            if busy {
                let alpha_p_s = rng.exponential(p.sigma_p_s);
                let alpha_p_pd = rng.exponential(p.sigma_p_pd);
                let alpha_s_pd = rng.exponential(p.sigma_s_pd);
                // The detector outcome conditions on its own draw of the
                // sensed-link gain. The closed forms treat sensing and
                // packet decoding as independent events, so the validator
                // must too; tying both to one gain shifts the service rate
                // by ~P_MD*(relay-path terms), outside 3 sigma at 10^6
                // slots.
                let alpha_sense = rng.exponential(p.sigma_p_s);
                let detected = rng.bernoulli(model.detect_given_gain(alpha_sense));
                trace.sensing_outcome = if detected {
                    SensingOutcome::Detected
                } else {
                    SensingOutcome::Missed
                };
                let decode_ok = alpha_p_s >= model.alpha_th_primary;
                let relay_link_on = alpha_s_pd >= model.alpha_th_relay;

                // Sensing phase: own data on w_s while listening on w_p.
                air.same(p.tau_s, a.w_s);
                if detected {
                    // Data phase: decode the primary over w_p, own data on w_s.
                    air.same(a.t_p - p.tau_s, a.w_s);
                    trace.direct_success = alpha_p_pd >= model.alpha_th_primary;
                } else {
                    // Misdetection: transmit on both subbands; the w_p bits
                    // collide with the primary and are lost.
                    air.split(a.t_p - p.tau_s, w, a.w_s);
                    trace.direct_success =
                        alpha_p_pd >= model.sinr_x * (model.n0_over_p0 + alpha_s_pd);
                }

                // Relay decision.
                let wants_relay = match model.protocol {
                    Protocol::P1 => detected && decode_ok,
                    Protocol::P2 => {
                        // First feedback phase precedes the relay window; the
                        // secondary stays off w_p while the destination reports.
                        air.same(p.tau_f, a.w_s);
                        trace.feedback_heard = rng.bernoulli(p.f);
                        let nack_interpreted = if trace.feedback_heard {
                            !trace.direct_success
                        } else {
                            rng.bernoulli(p.omega)
                        };
                        detected && decode_ok && nack_interpreted
                    }
                    Protocol::Nc => unreachable!(),
                };

                // Relay window: forward over w_p (own data on w_s) when the
                // relay link is known ON, otherwise own data on both
                // subbands. Either way the full band is powered.
                if wants_relay && relay_link_on {
                    trace.relay_attempted = true;
                    trace.relay_success = true;
                    air.split(a.t_s, w, a.w_s);
                } else {
                    air.same(a.t_s, w);
                }

                // Closing feedback phase: own data on w_s only.
                air.same(p.tau_f, a.w_s);

                served = trace.direct_success || trace.relay_success;
            } else {
                let false_alarm = rng.bernoulli(model.sensing.as_ref().unwrap().p_fa);
                trace.sensing_outcome = if false_alarm {
                    SensingOutcome::FalseAlarm
                } else {
                    SensingOutcome::TrueIdle
                };
                air.same(p.tau_s, a.w_s);
                air.same(a.t_p - p.tau_s, if false_alarm { a.w_s } else { w });
                // Idle primary: no feedback signals, both subbands free for
                // the relay window and the feedback phase(s).
                air.same(a.t_s + feedback_phases * p.tau_f, w);
            }

            // Own-link instantaneous capacity, fresh gain every slot.
            let alpha_s_sd = rng.exponential(p.sigma_s_sd);
            trace.su_bits = air.credited * (1.0 + alpha_s_sd * model.gamma).log2();
            trace.su_energy = air.tx * model.p0;
        }
    }

    // Departures occur before arrivals; a packet arriving now is queued
    // behind the service point and cannot leave in its own slot.
    let mut departed_arrival = None;
    if busy && served {
        departed_arrival = queue.pop_front();
    }
    if arrival {
        queue.push_back(slot);
    }

    SlotOutcome { trace, departed_arrival }
}

/// Run one replication, feeding every post-warmup slot trace to `sink`.
pub fn run_with_trace<F: FnMut(&SlotTrace)>(
    cfg: &SimConfig,
    mut sink: F,
) -> Result<SimReport, ParamError> {
    cfg.check()?;
    let model = SlotModel::build(cfg);
    let mut queue: VecDeque<u64> = VecDeque::new();
    let measured = cfg.n_slots - cfg.warmup_slots;
    let n_batches = N_BATCHES.min(measured).max(1);
    let slots_per_batch = measured.div_ceil(n_batches);
    let mut batches = vec![Batch::default(); n_batches as usize];
    let mut mid_queue_len = 0u64;

    for slot in 0..cfg.n_slots {
        let outcome = run_slot(&model, cfg, slot, &mut queue);
        if slot == cfg.n_slots / 2 {
            mid_queue_len = queue.len() as u64;
        }
        if slot < cfg.warmup_slots {
            continue;
        }
        let idx = slot - cfg.warmup_slots;
        let b = &mut batches[((idx / slots_per_batch).min(n_batches - 1)) as usize];
        let trace = &outcome.trace;
        b.slots += 1;
        b.bits += trace.su_bits;
        b.energy += trace.su_energy;
        if trace.primary_tx {
            b.busy_slots += 1;
        } else {
            b.empty_slots += 1;
        }
        if let Some(arrived) = outcome.departed_arrival {
            b.departures += 1;
            // Sojourn from arrival slot to departure slot; a packet served
            // in the slot right after it arrived scores 1. Packets that
            // arrived during warmup are not counted.
            if arrived >= cfg.warmup_slots {
                b.delay_sum += (slot - arrived) as f64;
                b.delay_count += 1;
            }
        }
        sink(trace);
    }

    let final_len = queue.len() as u64;
    let diverged = final_len > 100 && final_len as f64 > 1.5 * mid_queue_len.max(1) as f64;

    Ok(SimReport {
        mu_hat: estimate_from_batches(&batches, |b| (b.departures as f64, b.busy_slots as f64)),
        nu0_hat: estimate_from_batches(&batches, |b| (b.empty_slots as f64, b.slots as f64))
            .expect("at least one measured slot"),
        delay_hat: estimate_from_batches(&batches, |b| (b.delay_sum, b.delay_count as f64)),
        rate_hat: estimate_from_batches(&batches, |b| (b.bits, b.slots as f64))
            .expect("at least one measured slot"),
        energy_hat: estimate_from_batches(&batches, |b| (b.energy, b.slots as f64))
            .expect("at least one measured slot"),
        slots_used: measured,
        diverged,
    })
}

/// Run one replication.
pub fn run(cfg: &SimConfig) -> Result<SimReport, ParamError> {
    run_with_trace(cfg, |_| {})
}

/// Run `n_reps` independent replications (seeds derived from the base seed
/// by a splitmix stream) and aggregate. With one replication this is
/// exactly [`run`]; otherwise replication means are averaged and the
/// standard error is taken across replications, deterministically by
/// replication index.
pub fn replicate(cfg: &SimConfig, n_reps: u64) -> Result<SimReport, ParamError> {
    if n_reps == 0 {
        return Err(ParamError::new("n_reps must be at least 1"));
    }
    if n_reps == 1 {
        return run(cfg);
    }
    let reports: Result<Vec<SimReport>, ParamError> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut c = cfg.clone();
            c.seed = replication_seed(cfg.seed, rep);
            run(&c)
        })
        .collect();
    let reports = reports?;

    let combine = |values: Vec<Option<f64>>| -> Option<Estimate> {
        let vals: Vec<f64> = values.iter().copied().flatten().collect();
        if vals.len() < values.len() || vals.is_empty() {
            return None;
        }
        let k = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
        Some(Estimate { mean, stderr: (var / k).sqrt() })
    };

    Ok(SimReport {
        mu_hat: combine(reports.iter().map(|r| r.mu_hat.map(|e| e.mean)).collect()),
        nu0_hat: combine(reports.iter().map(|r| Some(r.nu0_hat.mean)).collect())
            .expect("nu0 defined in every replication"),
        delay_hat: combine(reports.iter().map(|r| r.delay_hat.map(|e| e.mean)).collect()),
        rate_hat: combine(reports.iter().map(|r| Some(r.rate_hat.mean)).collect())
            .expect("rate defined in every replication"),
        energy_hat: combine(reports.iter().map(|r| Some(r.energy_hat.mean)).collect())
            .expect("energy defined in every replication"),
        slots_used: reports.iter().map(|r| r.slots_used).sum(),
        diverged: reports.iter().any(|r| r.diverged),
    })
}
