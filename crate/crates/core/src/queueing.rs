//! Geo/Geo/1 late-arrival queue analytics.
//!
//! Bernoulli arrivals (probability `lambda_p` per slot) and Bernoulli
//! service (probability `mu_p` per slot); departures occur before arrivals,
//! so a packet is never served in its arrival slot.

use std::fmt;

/// Arrival and service probabilities of the primary queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueModel {
    pub lambda_p: f64,
    pub mu_p: f64,
}

/// The queue is unstable (`mu_p <= lambda_p` with `lambda_p > 0`), so the
/// requested stationary quantity does not exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnstableQueue {
    pub lambda_p: f64,
    pub mu_p: f64,
}

impl fmt::Display for UnstableQueue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "queue unstable: service rate {} <= arrival rate {}",
            self.mu_p, self.lambda_p
        )
    }
}

impl std::error::Error for UnstableQueue {}

/// Strict stability test `mu_p > lambda_p`.
pub fn is_stable(q: &QueueModel) -> bool {
    q.mu_p > q.lambda_p
}

/// Stationary probability of an empty queue, `nu_0 = 1 - lambda/mu`.
///
/// `lambda_p = 0` is treated as stable with an always-empty queue whatever
/// `mu_p` is.
pub fn empty_prob(q: &QueueModel) -> Result<f64, UnstableQueue> {
    if q.lambda_p == 0.0 {
        return Ok(1.0);
    }
    if !is_stable(q) {
        return Err(UnstableQueue { lambda_p: q.lambda_p, mu_p: q.mu_p });
    }
    Ok(1.0 - q.lambda_p / q.mu_p)
}

/// Stationary distribution truncated at `k_max`, plus the exact geometric
/// mass of the discarded tail.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDist {
    /// `probs[k]` is the stationary probability of `k` packets, `k = 0..=k_max`.
    pub probs: Vec<f64>,
    /// Mass beyond `k_max`.
    pub tail_mass: f64,
}

/// Geometric decay ratio `eta = lambda*(1-mu) / ((1-lambda)*mu)`.
fn eta(q: &QueueModel) -> f64 {
    q.lambda_p * (1.0 - q.mu_p) / ((1.0 - q.lambda_p) * q.mu_p)
}

/// Stationary queue-length distribution `nu_0 .. nu_{k_max}`:
/// `nu_k = nu_0 / (1-mu) * eta^k` for `k >= 1`, computed by recurrence so
/// the `mu = 1` boundary (where `eta = 0`) stays finite.
pub fn stationary_dist(q: &QueueModel, k_max: usize) -> Result<StationaryDist, UnstableQueue> {
    let nu0 = empty_prob(q)?;
    let mut probs = Vec::with_capacity(k_max + 1);
    probs.push(nu0);
    if k_max >= 1 {
        // nu_1 = nu_0 * lambda / ((1-lambda) * mu); zero when lambda = 0.
        let nu1 = if q.lambda_p == 0.0 {
            0.0
        } else {
            nu0 * q.lambda_p / ((1.0 - q.lambda_p) * q.mu_p)
        };
        probs.push(nu1);
        let r = eta(q);
        for k in 2..=k_max {
            probs.push(probs[k - 1] * r);
        }
    }
    let tail_mass = if q.lambda_p == 0.0 || k_max == 0 {
        1.0 - probs.iter().sum::<f64>()
    } else {
        let r = eta(q);
        // sum_{k > k_max} nu_k = nu_{k_max} * r / (1 - r)
        probs[k_max] * r / (1.0 - r)
    };
    Ok(StationaryDist { probs, tail_mass: tail_mass.max(0.0) })
}

/// Smallest `k_max` whose geometric tail mass is below `tail_tol`.
pub fn truncation_k_max(q: &QueueModel, tail_tol: f64) -> Result<usize, UnstableQueue> {
    let nu0 = empty_prob(q)?;
    if q.lambda_p == 0.0 {
        return Ok(0);
    }
    let r = eta(q);
    if r == 0.0 {
        return Ok(1);
    }
    // tail(k) = nu_1 * r^k / (1-r); solve tail(k) < tol.
    let nu1 = nu0 * q.lambda_p / ((1.0 - q.lambda_p) * q.mu_p);
    let lead = nu1 / (1.0 - r);
    if lead <= tail_tol {
        return Ok(1);
    }
    Ok(((tail_tol / lead).ln() / r.ln()).ceil().max(1.0) as usize + 1)
}

/// Mean queueing delay in slots by Little's law,
/// `D = (1 - lambda) / (mu - lambda)`.
///
/// For `lambda_p = 0` Little's law degenerates; the delay is reported as
/// 1 slot by convention.
pub fn mean_delay(q: &QueueModel) -> Result<f64, UnstableQueue> {
    if q.lambda_p == 0.0 {
        return Ok(1.0);
    }
    if !is_stable(q) {
        return Err(UnstableQueue { lambda_p: q.lambda_p, mu_p: q.mu_p });
    }
    Ok((1.0 - q.lambda_p) / (q.mu_p - q.lambda_p))
}
