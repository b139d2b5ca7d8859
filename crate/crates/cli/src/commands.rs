//! Subcommand implementations.

use std::fs;

use cograte_core::optimizer::{self, GridSpec};
use cograte_core::simulator::{self, SimConfig};
use cograte_core::{protocols, Allocation, Protocol, SystemParams};

use crate::config::{parse_grid, parse_list, preset, preset_names, Config, RawConfig, Series};
use crate::format::{csv_line, g6};
use crate::{ConfigSource, Failure};

fn load(source: &ConfigSource) -> Result<Config, Failure> {
    let (text, origin): (String, String) = match (&source.preset, &source.config) {
        (Some(name), None) => match preset(name) {
            Some(text) => (text.to_string(), format!("preset:{name}")),
            None => {
                return Err(Failure::Config(format!(
                    "unknown preset `{name}` (available: {})",
                    preset_names().join(", ")
                )))
            }
        },
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read `{path}`: {e}")))?;
            (text, path.clone())
        }
        (Some(_), Some(_)) => {
            return Err(Failure::Config(
                "give either a config file or --preset, not both".to_string(),
            ))
        }
        (None, None) => {
            return Err(Failure::Config(
                "missing configuration: pass a config file or --preset <name>".to_string(),
            ))
        }
    };
    let mut raw = RawConfig::parse(&text, &origin).map_err(|e| Failure::Config(e.to_string()))?;
    raw.apply_env().map_err(|e| Failure::Config(e.to_string()))?;
    let cfg = raw.resolve().map_err(|e| Failure::Config(e.to_string()))?;
    cfg.base
        .validate()
        .map_err(|e| Failure::Invariant(e.to_string()))?;
    for s in &cfg.series {
        s.params
            .validate()
            .map_err(|e| Failure::Invariant(format!("series `{}`: {e}", s.label)))?;
    }
    Ok(cfg)
}

fn parse_protocol(name: &str) -> Result<Protocol, Failure> {
    Protocol::parse(name)
        .ok_or_else(|| Failure::Config(format!("unknown protocol `{name}` (NC, P1 or P2)")))
}

fn allocation(
    params: &SystemParams,
    protocol: Protocol,
    tp: f64,
    wp: f64,
) -> Result<Allocation, Failure> {
    let alloc_protocol = if protocol == Protocol::Nc { Protocol::P1 } else { protocol };
    Allocation::from_fractions(params, alloc_protocol, tp, wp)
        .map_err(|e| Failure::Invariant(e.to_string()))
}

fn write_out(path: &str, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::Invariant(format!("cannot write `{path}`: {e}")))
}

pub fn evaluate(
    source: &ConfigSource,
    protocol: &str,
    tp: f64,
    wp: f64,
    lambda: Option<f64>,
    out: Option<&str>,
) -> Result<(), Failure> {
    let cfg = load(source)?;
    let protocol = parse_protocol(protocol)?;
    let mut params = cfg.base.clone();
    if let Some(l) = lambda {
        params = params.with_lambda(l);
        params
            .validate()
            .map_err(|e| Failure::Invariant(e.to_string()))?;
    }
    let alloc = allocation(&params, protocol, tp, wp)?;
    let stats = protocols::link_stats(&params, &alloc);
    let m = protocols::evaluate(&params, &alloc, protocol);

    println!("protocol      {}", m.protocol);
    println!("lambda        {}", g6(params.lambda_p));
    println!("t_p           {} s", g6(alloc.t_p));
    println!("w_p           {} Hz", g6(alloc.w_p));
    println!("t_s           {} s", g6(alloc.t_s));
    println!("w_s           {} Hz", g6(alloc.w_s));
    println!("mu            {}", g6(m.mu_p));
    println!("stable        {}", m.stable);
    println!("nu0           {}", g6(m.nu0));
    println!("delay         {} slots", g6(m.delay_slots));
    println!("rate_empty    {} bits/slot", g6(m.rate_empty));
    println!("rate_busy     {} bits/slot", g6(m.rate_busy));
    println!("mean_rate     {} bits/slot", g6(m.mean_rate));
    println!("mean_energy   {} J/slot", g6(m.mean_energy));
    println!("feasible      {}", m.feasible);
    if !m.violations.is_empty() {
        let reasons: Vec<String> = m.violations.iter().map(|v| v.to_string()).collect();
        println!("violations    {}", reasons.join("; "));
    }
    println!("-- link statistics --");
    println!("out_p_pd      {}", g6(stats.out_p_pd));
    println!("out_p_s       {}", g6(stats.out_p_s));
    println!("out_s_pd      {}", g6(stats.out_s_pd));
    println!("succ_int      {}", g6(stats.succ_p_pd_int));
    println!("p_fa          {}", g6(stats.p_fa));
    println!("p_md          {}", g6(stats.p_md));
    println!("gamma_f       {}", g6(stats.gamma_f));
    println!("beta          {}", g6(stats.beta));

    if let Some(path) = out {
        let header = "protocol,lambda,t_p,w_p,mu,nu0,delay,rate_empty,rate_busy,mean_rate,\
                      mean_energy,out_p_pd,out_p_s,out_s_pd,succ_int,p_fa,p_md,gamma_f,beta,feasible";
        let fields = vec![
            m.protocol.to_string(),
            g6(params.lambda_p),
            g6(alloc.t_p),
            g6(alloc.w_p),
            g6(m.mu_p),
            g6(m.nu0),
            g6(m.delay_slots),
            g6(m.rate_empty),
            g6(m.rate_busy),
            g6(m.mean_rate),
            g6(m.mean_energy),
            g6(stats.out_p_pd),
            g6(stats.out_p_s),
            g6(stats.out_s_pd),
            g6(stats.succ_p_pd_int),
            g6(stats.p_fa),
            g6(stats.p_md),
            g6(stats.gamma_f),
            g6(stats.beta),
            m.feasible.to_string(),
        ];
        write_out(path, &format!("{header}\n{}", csv_line(&fields)))?;
    }
    Ok(())
}

const OPTIMIZE_HEADER: &str = "lambda,protocol,t_p,w_p,mu,delay,rate,energy,phi,feasible";

fn optimize_rows(series: &Series, lambdas: &[f64], grid: &GridSpec) -> Vec<String> {
    let mut rows = Vec::new();
    if series.protocol == Protocol::Nc {
        // No split to optimize: the primary keeps the whole band and data
        // phase; one closed-form evaluation per arrival rate.
        for &lambda in lambdas {
            let p = series.params.with_lambda(lambda);
            let alloc =
                Allocation::new(&p, Protocol::P1, p.horizon(Protocol::P1), p.w).unwrap();
            let m = protocols::evaluate(&p, &alloc, Protocol::Nc);
            rows.push(csv_line(&[
                g6(lambda),
                series.label.clone(),
                g6(p.horizon(Protocol::Nc)),
                g6(p.w),
                g6(m.mu_p),
                g6(m.delay_slots),
                g6(0.0),
                g6(0.0),
                g6(0.0),
                m.feasible.to_string(),
            ]));
        }
        return rows;
    }
    for row in optimizer::sweep_lambda(&series.params, series.protocol, lambdas, grid) {
        let fields = match &row.result.best {
            Some((alloc, m)) => vec![
                g6(row.lambda),
                series.label.clone(),
                g6(alloc.t_p),
                g6(alloc.w_p),
                g6(m.mu_p),
                g6(m.delay_slots),
                g6(m.mean_rate),
                g6(m.mean_energy),
                g6(row.phi),
                "true".to_string(),
            ],
            None => vec![
                g6(row.lambda),
                series.label.clone(),
                g6(0.0),
                g6(0.0),
                g6(0.0),
                g6(0.0),
                g6(0.0),
                g6(0.0),
                g6(0.0),
                "false".to_string(),
            ],
        };
        rows.push(csv_line(&fields));
    }
    rows
}

pub fn optimize(
    source: &ConfigSource,
    grid: Option<&str>,
    lambda: Option<&str>,
    out: Option<&str>,
) -> Result<(), Failure> {
    let cfg = load(source)?;
    let grid = match grid {
        Some(raw) => parse_grid(raw).map_err(|e| Failure::Config(e.to_string()))?,
        None => cfg.grid,
    };
    let lambdas = match lambda {
        Some(raw) => parse_list(raw).map_err(Failure::Config)?,
        None => cfg.lambdas.clone(),
    };
    for &l in &lambdas {
        if !(0.0..=1.0).contains(&l) {
            return Err(Failure::Invariant(format!("lambda {l} outside [0, 1]")));
        }
    }

    let mut csv = String::from(OPTIMIZE_HEADER);
    csv.push('\n');
    for series in &cfg.series {
        for row in optimize_rows(series, &lambdas, &grid) {
            csv.push_str(&row);
        }
    }
    print!("{csv}");
    if let Some(path) = out {
        write_out(path, &csv)?;
    }
    Ok(())
}

/// Test hook: an additive bias applied to the analytic service rate so the
/// mismatch detector itself can be exercised end to end.
const MU_BIAS_ENV: &str = "COGRATE_TEST_MU_BIAS";

#[allow(clippy::too_many_arguments)]
pub fn validate(
    source: &ConfigSource,
    protocol: &str,
    tp: f64,
    wp: f64,
    lambda: Option<f64>,
    slots: Option<u64>,
    reps: Option<u64>,
    seed: Option<u64>,
    allow_unstable: bool,
    out: Option<&str>,
    trace: Option<&str>,
) -> Result<(), Failure> {
    let cfg = load(source)?;
    let protocol = parse_protocol(protocol)?;
    let mut params = cfg.base.clone();
    if let Some(l) = lambda {
        params = params.with_lambda(l);
        params
            .validate()
            .map_err(|e| Failure::Invariant(e.to_string()))?;
    }
    let alloc = allocation(&params, protocol, tp, wp)?;
    let analytic = protocols::evaluate(&params, &alloc, protocol);
    if !analytic.stable && !allow_unstable {
        return Err(Failure::Invariant(format!(
            "analytic queue unstable (mu = {} <= lambda = {}); pass --allow-unstable to proceed",
            g6(analytic.mu_p),
            g6(params.lambda_p)
        )));
    }

    let mu_bias: f64 = std::env::var(MU_BIAS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0.0);

    let n_slots = slots.unwrap_or(cfg.sim_slots);
    let n_reps = reps.unwrap_or(cfg.sim_reps).max(1);
    let seed = seed.unwrap_or(cfg.sim_seed);
    let mut sim_cfg = SimConfig::new(params.clone(), alloc, protocol, n_slots, seed)
        .map_err(|e| Failure::Invariant(e.to_string()))?;
    sim_cfg.warmup_slots = cfg.sim_warmup.min(n_slots.saturating_sub(1));
    let report = match trace {
        None => simulator::replicate(&sim_cfg, n_reps),
        Some(path) => {
            if n_reps != 1 {
                return Err(Failure::Config(
                    "--trace records a single replication; drop --reps or set it to 1"
                        .to_string(),
                ));
            }
            let mut lines = String::from(simulator::SlotTrace::LINE_HEADER);
            lines.push('\n');
            let r = simulator::run_with_trace(&sim_cfg, |t| {
                lines.push_str(&t.to_line());
                lines.push('\n');
            });
            write_out(path, &lines)?;
            r
        }
    }
    .map_err(|e| Failure::Invariant(e.to_string()))?;

    // (metric, analytic, simulated estimate)
    let mut table: Vec<(&str, f64, simulator::Estimate)> = Vec::new();
    if let Some(mu) = report.mu_hat {
        table.push(("mu", analytic.mu_p + mu_bias, mu));
    }
    if analytic.stable {
        table.push(("nu0", analytic.nu0, report.nu0_hat));
        if let Some(delay) = report.delay_hat {
            table.push(("delay", analytic.delay_slots, delay));
        }
        table.push(("rate", analytic.mean_rate, report.rate_hat));
        table.push(("energy", analytic.mean_energy, report.energy_hat));
    } else {
        // A diverging queue never reaches stationarity, so occupancy-
        // weighted means are not comparable; the service rate (conditional
        // on a busy slot) still is.
        println!("note: analytic queue unstable; only the service rate is compared");
    }

    let z_of = |analytic: f64, e: &simulator::Estimate| -> f64 {
        let diff = e.mean - analytic;
        if diff == 0.0 {
            0.0
        } else if e.stderr == 0.0 {
            f64::INFINITY * diff.signum()
        } else {
            diff / e.stderr
        }
    };

    println!(
        "{:<8}{:>14}{:>14}{:>12}{:>9}",
        "metric", "analytic", "simulated", "stderr", "z"
    );
    let mut csv = String::from("metric,analytic,simulated,stderr,z\n");
    let mut worst: f64 = 0.0;
    for (name, a, e) in &table {
        let z = z_of(*a, e);
        worst = worst.max(z.abs());
        println!(
            "{:<8}{:>14}{:>14}{:>12}{:>9}",
            name,
            g6(*a),
            g6(e.mean),
            g6(e.stderr),
            g6(z)
        );
        csv.push_str(&csv_line(&[
            name.to_string(),
            g6(*a),
            g6(e.mean),
            g6(e.stderr),
            g6(z),
        ]));
    }
    if report.diverged {
        println!("note: simulated queue diverged during the run");
    }
    println!(
        "slots_used {}  reps {}  verdict {}",
        report.slots_used,
        n_reps,
        if worst > 4.0 { "MISMATCH" } else { "OK" }
    );
    if let Some(path) = out {
        write_out(path, &csv)?;
    }
    if worst > 4.0 {
        return Err(Failure::Validation(format!(
            "analytics and simulation disagree: max |z| = {}",
            g6(worst)
        )));
    }
    Ok(())
}
