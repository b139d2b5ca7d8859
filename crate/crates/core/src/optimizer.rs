//! Constrained 2D grid search over the time/bandwidth split, plus the
//! primary energy-savings metric.
//!
//! The objective is the mean secondary rate; the constraints are
//! `mu > max(mu_nc, lambda)` (queue stability and no delay regression),
//! the secondary energy budget, and the closed box
//! `tau_s <= T_p <= horizon`, `0 <= W_p <= W`. Grid points are evaluated in
//! parallel but reduced in index order, so results are bit-reproducible.

use rayon::prelude::*;

use crate::params::{Allocation, ParamError, Protocol, SystemParams};
use crate::protocols::{self, LinkStats, ProtocolMetrics};
use crate::sensing::SensingCache;

/// Grid resolution along `T_p` and `W_p`; endpoints are always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n_t: usize,
    pub n_w: usize,
}

impl GridSpec {
    pub fn new(n_t: usize, n_w: usize) -> Result<GridSpec, ParamError> {
        if n_t < 2 || n_w < 2 {
            return Err(ParamError::new(format!(
                "grid needs at least 2 points per axis, got {n_t}x{n_w}"
            )));
        }
        Ok(GridSpec { n_t, n_w })
    }
}

impl Default for GridSpec {
    /// 200x200 resolves the figure-level structure in seconds of runtime.
    fn default() -> Self {
        GridSpec { n_t: 200, n_w: 200 }
    }
}

/// Outcome of one grid search. `best` is absent when no grid point
/// satisfies every constraint, which is a legitimate operating regime (the
/// secondary is then denied spectrum access).
#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best: Option<(Allocation, ProtocolMetrics)>,
    pub feasible_count: usize,
    /// Per-point metrics in row-major `(t index, w index)` order when the
    /// caller asked to keep them.
    pub grid_points: Option<Vec<(Allocation, ProtocolMetrics)>>,
}

impl OptResult {
    pub fn is_feasible(&self) -> bool {
        self.best.is_some()
    }
}

/// One row of a lambda sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub result: OptResult,
    /// Primary energy-savings ratio at the optimum; 0 when infeasible.
    pub phi: f64,
}

fn grid_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

/// Link statistics of every grid point. These are arrival-independent, so a
/// lambda sweep computes them once; the sensing quadrature additionally
/// depends only on `w_p` and is memoized per grid column.
struct PreparedGrid {
    points: Vec<(Allocation, LinkStats)>,
    g: f64,
    mu_nc: f64,
}

fn prepare(params: &SystemParams, protocol: Protocol, grid: &GridSpec) -> PreparedGrid {
    let horizon = params.horizon(protocol);
    let t_axis = grid_axis(params.tau_s, horizon, grid.n_t);
    let w_axis = grid_axis(0.0, params.w, grid.n_w);

    let mut cache = SensingCache::new();
    let col_errors: Vec<_> = w_axis
        .iter()
        .map(|&w_p| protocols::sensing_errors_cached(params, w_p, &mut cache))
        .collect();

    // Row-major (t, w) order; points are independent and the collect keeps
    // index order.
    let points: Vec<(Allocation, LinkStats)> = t_axis
        .par_iter()
        .flat_map_iter(|&t_p| {
            let w_axis = &w_axis;
            let col_errors = &col_errors;
            w_axis.iter().zip(col_errors).map(move |(&w_p, &errs)| {
                let alloc = Allocation::new(params, protocol, t_p, w_p)
                    .expect("grid axes stay inside the box constraints");
                let stats = protocols::link_stats_with_sensing(params, &alloc, errs);
                (alloc, stats)
            })
        })
        .collect();

    PreparedGrid {
        points,
        g: protocols::secondary_log_capacity(params),
        mu_nc: protocols::mu_nc(params),
    }
}

fn search(
    params: &SystemParams,
    protocol: Protocol,
    prepared: &PreparedGrid,
    keep: bool,
) -> OptResult {
    let points: Vec<(Allocation, ProtocolMetrics)> = prepared
        .points
        .par_iter()
        .map(|(alloc, stats)| {
            let metrics =
                protocols::evaluate_prepared(params, alloc, protocol, stats, prepared.g, prepared.mu_nc);
            (*alloc, metrics)
        })
        .collect();

    let mut feasible_count = 0;
    let mut best: Option<&(Allocation, ProtocolMetrics)> = None;
    for point in &points {
        if !point.1.feasible {
            continue;
        }
        feasible_count += 1;
        best = Some(match best {
            None => point,
            Some(cur) => {
                let (a, m) = point;
                let (ca, cm) = cur;
                // Ties break toward larger w_p, then larger t_p.
                if m.mean_rate > cm.mean_rate
                    || (m.mean_rate == cm.mean_rate
                        && (a.w_p > ca.w_p || (a.w_p == ca.w_p && a.t_p > ca.t_p)))
                {
                    point
                } else {
                    cur
                }
            }
        });
    }

    OptResult {
        best: best.cloned(),
        feasible_count,
        grid_points: keep.then_some(points),
    }
}

/// Exhaustive search of the allocation grid for `protocol` at the arrival
/// rate carried in `params`. Ties on the objective break toward larger
/// `W_p`, then larger `T_p` (more primary spectrum retained).
pub fn optimize(params: &SystemParams, protocol: Protocol, grid: &GridSpec) -> OptResult {
    search(params, protocol, &prepare(params, protocol, grid), false)
}

/// Same search, retaining every grid point's metrics.
pub fn optimize_with_grid(params: &SystemParams, protocol: Protocol, grid: &GridSpec) -> OptResult {
    search(params, protocol, &prepare(params, protocol, grid), true)
}

/// Primary energy-savings ratio relative to non-cooperative operation:
///
/// `phi = 1 - (W_p*T_p / (W*(T - tau_f))) * (max(mu_nc, lambda) / mu_c)`
///
/// evaluated at the optimal allocation; 0 when cooperation is infeasible
/// (the primary then keeps the whole slot).
pub fn energy_savings(params: &SystemParams, best: &OptResult) -> f64 {
    match &best.best {
        None => 0.0,
        Some((alloc, metrics)) => {
            let mu_nc = protocols::mu_nc(params);
            let baseline = params.w * (params.t - params.tau_f);
            1.0 - alloc.w_p * alloc.t_p / baseline * mu_nc.max(params.lambda_p) / metrics.mu_p
        }
    }
}

/// One [`optimize`] call per arrival rate, in the given order. The grid's
/// link statistics and the non-cooperative rate are arrival-independent, so
/// they are computed once and reused across the sweep.
pub fn sweep_lambda(
    params: &SystemParams,
    protocol: Protocol,
    lambdas: &[f64],
    grid: &GridSpec,
) -> Vec<SweepRow> {
    if lambdas.is_empty() {
        return Vec::new();
    }
    let prepared = prepare(params, protocol, grid);
    lambdas
        .iter()
        .map(|&lambda| {
            let p = params.with_lambda(lambda);
            let result = search(&p, protocol, &prepared, false);
            let phi = energy_savings(&p, &result);
            SweepRow { lambda, result, phi }
        })
        .collect()
}
