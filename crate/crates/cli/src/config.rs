//! Flat key=value configuration with section prefixes.
//!
//! Grammar: one `section.key = value` per line, `#` comments, blank lines
//! ignored. Sections: `system`, `channel`, `sensing`, `feedback`, `opt`,
//! `sim`. Environment variables `COGRATE_<SECTION>_<KEY>` override file
//! values (e.g. `COGRATE_CHANNEL_SIGMA_P_PD=0.01`); command-line flags
//! override both.
//!
//! Parameter sweeps are expressed as labeled series:
//!
//! ```text
//! series.<label>.protocol = P1|P2|NC
//! series.<label>.<section>.<key> = <override>
//! ```
//!
//! Each series inherits the base parameters plus its overrides; the label
//! becomes the `protocol` column of the optimize CSV. Without any series,
//! `opt.protocols` (default `P1,P2`) defines one plain series per protocol.

use std::collections::BTreeMap;
use std::fmt;

use cograte_core::{GridSpec, Protocol, SystemParams};

const SECTIONS: [&str; 6] = ["system", "channel", "sensing", "feedback", "opt", "sim"];

fn is_section(name: &str) -> bool {
    SECTIONS.iter().any(|s| name.eq_ignore_ascii_case(s))
}

/// Configuration error: exit code 2 territory.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    /// Base `section.key -> value` pairs in normalized form.
    values: BTreeMap<String, String>,
    /// Series label -> (protocol value, override map), in file order.
    series: Vec<(String, Option<String>, BTreeMap<String, String>)>,
}

/// One resolved experiment series.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub protocol: Protocol,
    pub params: SystemParams,
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub base: SystemParams,
    pub series: Vec<Series>,
    pub lambdas: Vec<f64>,
    pub grid: GridSpec,
    pub sim_slots: u64,
    pub sim_warmup: u64,
    pub sim_reps: u64,
    pub sim_seed: u64,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> Result<RawConfig, ConfigError> {
        let mut cfg = RawConfig::default();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(i) => &raw_line[..i],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            // Split at the last '=': series labels may contain '=' (e.g.
            // "P2(f=0.5)"), values never do.
            let (key, value) = line.rsplit_once('=').ok_or_else(|| {
                ConfigError(format!("{origin}:{}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim().to_string();
            cfg.insert(key, value, &format!("{origin}:{}", lineno + 1))?;
        }
        Ok(cfg)
    }

    fn insert(&mut self, key: &str, value: String, origin: &str) -> Result<(), ConfigError> {
        let parts: Vec<&str> = key.split('.').collect();
        let n = parts.len();
        if parts.first().is_some_and(|s| s.eq_ignore_ascii_case("series")) {
            // series.<label>.protocol  or  series.<label>.<section>.<key>;
            // the label may itself contain dots, so parse from the right.
            // Label case is preserved (it becomes a CSV column value).
            if n >= 3 && parts[n - 1].eq_ignore_ascii_case("protocol") {
                let label = parts[1..n - 1].join(".");
                self.series_entry(&label).1.replace(value);
                return Ok(());
            }
            if n >= 4 && is_section(parts[n - 2]) {
                let label = parts[1..n - 2].join(".");
                let sub = format!(
                    "{}.{}",
                    parts[n - 2].to_ascii_lowercase(),
                    parts[n - 1].to_ascii_lowercase()
                );
                self.series_entry(&label).2.insert(sub, value);
                return Ok(());
            }
            return Err(ConfigError(format!(
                "{origin}: malformed series key `{key}` (expected series.<label>.protocol \
                 or series.<label>.<section>.<key>)"
            )));
        }
        if n == 2 && is_section(parts[0]) {
            self.values.insert(key.to_ascii_lowercase(), value);
            return Ok(());
        }
        Err(ConfigError(format!("{origin}: unknown key `{key}`")))
    }

    fn series_entry(
        &mut self,
        label: &str,
    ) -> &mut (String, Option<String>, BTreeMap<String, String>) {
        if let Some(i) = self.series.iter().position(|(l, _, _)| l == label) {
            &mut self.series[i]
        } else {
            self.series
                .push((label.to_string(), None, BTreeMap::new()));
            self.series.last_mut().unwrap()
        }
    }

    /// Apply `COGRATE_<SECTION>_<KEY>` overrides to the base values.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        for (name, value) in std::env::vars() {
            let Some(rest) = name.strip_prefix("COGRATE_") else {
                continue;
            };
            let lower = rest.to_ascii_lowercase();
            let Some((section, key)) = lower.split_once('_') else {
                continue;
            };
            if SECTIONS.contains(&section) {
                self.values
                    .insert(format!("{section}.{key}"), value);
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn optional_f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            Some(raw) => parse_f64(key, raw),
            None => Ok(default),
        }
    }

    fn optional_u64(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get(key) {
            Some(raw) => raw
                .trim()
                .parse::<u64>()
                .map_err(|_| ConfigError(format!("key `{key}`: expected an integer, got `{raw}`"))),
            None => Ok(default),
        }
    }

    fn base_params(&self, overrides: &BTreeMap<String, String>) -> Result<SystemParams, ConfigError> {
        let lookup = |key: &str| -> Option<&str> {
            overrides.get(key).map(|s| s.as_str()).or_else(|| self.get(key))
        };
        let require = |key: &str| -> Result<f64, ConfigError> {
            let raw = lookup(key)
                .ok_or_else(|| ConfigError(format!("missing required key `{key}`")))?;
            parse_f64(key, raw)
        };
        let optional = |key: &str, default: f64| -> Result<f64, ConfigError> {
            match lookup(key) {
                Some(raw) => parse_f64(key, raw),
                None => Ok(default),
            }
        };
        Ok(SystemParams {
            w: require("system.w")?,
            t: require("system.t")?,
            tau_f: require("system.tau_f")?,
            tau_s: require("system.tau_s")?,
            b: require("system.b")?,
            p0: require("system.p0")?,
            n0: require("system.n0")?,
            energy_budget: require("system.energy_budget")?,
            lambda_p: optional("system.lambda_p", 0.0)?,
            sigma_p_pd: require("channel.sigma_p_pd")?,
            sigma_p_s: require("channel.sigma_p_s")?,
            sigma_s_pd: require("channel.sigma_s_pd")?,
            sigma_s_sd: require("channel.sigma_s_sd")?,
            target_pfa: require("sensing.target_pfa")?,
            f: optional("feedback.f", 1.0)?,
            omega: optional("feedback.omega", 1.0)?,
        })
    }

    pub fn resolve(&self) -> Result<Config, ConfigError> {
        let base = self.base_params(&BTreeMap::new())?;

        let mut series = Vec::new();
        if self.series.is_empty() {
            let protocols = self.get("opt.protocols").unwrap_or("P1,P2");
            for name in protocols.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let protocol = Protocol::parse(name)
                    .ok_or_else(|| ConfigError(format!("opt.protocols: unknown protocol `{name}`")))?;
                series.push(Series {
                    label: protocol.label().to_string(),
                    protocol,
                    params: base.clone(),
                });
            }
        } else {
            for (label, protocol, overrides) in &self.series {
                let protocol_name = protocol.as_deref().ok_or_else(|| {
                    ConfigError(format!("series `{label}`: missing series.{label}.protocol"))
                })?;
                let protocol = Protocol::parse(protocol_name).ok_or_else(|| {
                    ConfigError(format!("series `{label}`: unknown protocol `{protocol_name}`"))
                })?;
                series.push(Series {
                    label: label.clone(),
                    protocol,
                    params: self.base_params(overrides)?,
                });
            }
        }
        for i in 1..series.len() {
            if series[..i].iter().any(|s| s.label == series[i].label) {
                return Err(ConfigError(format!(
                    "duplicate series label `{}`",
                    series[i].label
                )));
            }
        }

        let lambdas = match self.get("opt.lambdas") {
            Some(raw) => parse_list(raw).map_err(|e| ConfigError(format!("opt.lambdas: {e}")))?,
            None => vec![self.optional_f64("system.lambda_p", 0.0)?],
        };
        let grid = match self.get("opt.grid") {
            Some(raw) => parse_grid(raw)?,
            None => GridSpec::default(),
        };

        Ok(Config {
            base,
            series,
            lambdas,
            grid,
            sim_slots: self.optional_u64("sim.slots", 1_000_000)?,
            sim_warmup: self.optional_u64("sim.warmup", 10_000)?,
            sim_reps: self.optional_u64("sim.reps", 1)?,
            sim_seed: self.optional_u64("sim.seed", 1)?,
        })
    }
}

fn parse_f64(key: &str, raw: &str) -> Result<f64, ConfigError> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| ConfigError(format!("key `{key}`: expected a number, got `{raw}`")))
}

pub fn parse_list(raw: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("bad number `{s}`")))
        .collect()
}

pub fn parse_grid(raw: &str) -> Result<GridSpec, ConfigError> {
    let (a, b) = raw
        .trim()
        .split_once(['x', 'X'])
        .ok_or_else(|| ConfigError(format!("grid `{raw}`: expected NxM")))?;
    let n_t = a.trim().parse::<usize>().map_err(|_| ConfigError(format!("grid `{raw}`: bad N")))?;
    let n_w = b.trim().parse::<usize>().map_err(|_| ConfigError(format!("grid `{raw}`: bad M")))?;
    GridSpec::new(n_t, n_w).map_err(|e| ConfigError(e.to_string()))
}

/// Embedded figure presets; the same files are committed under `presets/`.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "common" => Some(include_str!("../presets/common.conf")),
        "fig1" => Some(include_str!("../presets/fig1.conf")),
        "fig2" => Some(include_str!("../presets/fig2.conf")),
        "fig3" => Some(include_str!("../presets/fig3.conf")),
        "fig4" => Some(include_str!("../presets/fig4.conf")),
        "fig5" => Some(include_str!("../presets/fig5.conf")),
        _ => None,
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &["common", "fig1", "fig2", "fig3", "fig4", "fig5"]
}
