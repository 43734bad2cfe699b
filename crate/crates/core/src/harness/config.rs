//! Simulation configuration and its text-file / command-line sources.
//!
//! A config file is a flat list of `key = value` lines using the long
//! command-line flag names as keys. Blank lines and `#` comments are
//! ignored. Values given on the command line override the file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::LinkBudget;
use crate::error::{Result, SimError};
use crate::geometry::LatticeScale;
use crate::power_alloc::SolverOptions;
use crate::schemes::SchemeKind;

/// Environment variable that overrides the worker-thread count.
pub const WORKERS_ENV: &str = "MBSIM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(SimError::config(format!("unknown output format '{other}'"))),
        }
    }
}

/// Beam layout of the simulated system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub coverage_diameter_km: f64,
    pub lattice_scale: LatticeScale,
    pub beams_per_cluster: usize,
    pub clusters: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            coverage_diameter_km: 500.0,
            lattice_scale: LatticeScale::BeamFootprint,
            beams_per_cluster: 7,
            clusters: 19,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: usize,
    pub master_seed: u64,
    /// Per-beam transmit powers, dBW; each gateway's budget is
    /// `beams_per_cluster` times the per-beam power.
    pub power_grid_dbw_per_beam: Vec<f64>,
    pub schemes: Vec<SchemeKind>,
    pub m_per_neighbour: usize,
    pub solver: SolverOptions,
    pub inflated_coloring_noise: bool,
    pub bare_slnr_noise: bool,
    /// Worker threads; `None` uses all available cores.
    pub workers: Option<usize>,
    pub output: PathBuf,
    pub format: OutputFormat,
    pub scenario: Scenario,
    pub budget: LinkBudget,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            trials: 200,
            master_seed: 1,
            power_grid_dbw_per_beam: (0..=6).map(|i| 5.0 * i as f64).collect(),
            schemes: SchemeKind::ALL.to_vec(),
            m_per_neighbour: 1,
            solver: SolverOptions::default(),
            inflated_coloring_noise: false,
            bare_slnr_noise: false,
            workers: None,
            output: PathBuf::from("results.csv"),
            format: OutputFormat::Csv,
            scenario: Scenario::default(),
            budget: LinkBudget::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(SimError::config("trials must be at least 1"));
        }
        if self.power_grid_dbw_per_beam.is_empty() {
            return Err(SimError::config("power grid is empty"));
        }
        if self.power_grid_dbw_per_beam.iter().any(|p| !p.is_finite()) {
            return Err(SimError::config("power grid contains non-finite values"));
        }
        if self.schemes.is_empty() {
            return Err(SimError::config("no schemes selected"));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iters == 0 {
            return Err(SimError::config(
                "solver tolerance and iteration cap must be positive",
            ));
        }
        if self.m_per_neighbour > self.scenario.beams_per_cluster {
            return Err(SimError::config(format!(
                "m = {} exceeds the {} users of a cluster",
                self.m_per_neighbour, self.scenario.beams_per_cluster
            )));
        }
        if self.workers == Some(0) {
            return Err(SimError::config("worker count must be at least 1"));
        }
        self.budget.validate()
    }

    /// Gateway budget for a per-beam power in dBW.
    pub fn p_total_per_gw(&self, per_beam_dbw: f64) -> f64 {
        self.scenario.beams_per_cluster as f64 * 10f64.powf(per_beam_dbw / 10.0)
    }
}

/// Parses `start:stop:step` (inclusive), a comma list, or a single value.
pub fn parse_power_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || SimError::config(format!("invalid power grid '{spec}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let spec = spec.trim();
    let grid = if spec.contains(':') {
        let parts: Vec<f64> = spec.split(':').map(num).collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(num)
            .collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() || grid.iter().any(|p| !p.is_finite()) {
        return Err(bad());
    }
    Ok(grid)
}

pub fn parse_schemes(spec: &str) -> Result<Vec<SchemeKind>> {
    let mut out = Vec::new();
    for name in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let kind: SchemeKind = name.parse()?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(SimError::config("no schemes selected"));
    }
    Ok(out)
}

/// Partially specified configuration from one source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub schemes: Option<Vec<SchemeKind>>,
    pub power_dbw: Option<Vec<f64>>,
    pub m: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub inflated_coloring_noise: Option<bool>,
    pub bare_slnr_noise: Option<bool>,
    pub lattice: Option<LatticeScale>,
    pub workers: Option<usize>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| SimError::config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" | "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(SimError::config(format!(
            "invalid value '{value}' for '{key}'"
        ))),
    }
}

impl ConfigOverrides {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            SimError::Config(message) => SimError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ConfigOverrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = match line.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => (line, ""),
            };
            let key = key.trim_start_matches("--").replace('_', "-");
            match key.as_str() {
                "trials" => cfg.trials = Some(parse_value(&key, value)?),
                "seed" => cfg.seed = Some(parse_value(&key, value)?),
                "schemes" => cfg.schemes = Some(parse_schemes(value)?),
                "power-dbw" => cfg.power_dbw = Some(parse_power_grid(value)?),
                "m" => cfg.m = Some(parse_value(&key, value)?),
                "out" => cfg.out = Some(PathBuf::from(value)),
                "format" => cfg.format = Some(value.parse()?),
                "inflated-coloring-noise" => {
                    cfg.inflated_coloring_noise = Some(parse_bool(&key, value)?)
                }
                "bare-slnr-noise" => cfg.bare_slnr_noise = Some(parse_bool(&key, value)?),
                "lattice" => cfg.lattice = Some(value.parse()?),
                "workers" => cfg.workers = Some(parse_value(&key, value)?),
                "tol" => cfg.tol = Some(parse_value(&key, value)?),
                "max-iters" => cfg.max_iters = Some(parse_value(&key, value)?),
                _ => {
                    return Err(SimError::config(format!(
                        "line {}: unknown key '{key}'",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(cfg)
    }

    /// Values set in `other` win.
    pub fn merged_with(self, other: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            trials: other.trials.or(self.trials),
            seed: other.seed.or(self.seed),
            schemes: other.schemes.or(self.schemes),
            power_dbw: other.power_dbw.or(self.power_dbw),
            m: other.m.or(self.m),
            out: other.out.or(self.out),
            format: other.format.or(self.format),
            inflated_coloring_noise: other
                .inflated_coloring_noise
                .or(self.inflated_coloring_noise),
            bare_slnr_noise: other.bare_slnr_noise.or(self.bare_slnr_noise),
            lattice: other.lattice.or(self.lattice),
            workers: other.workers.or(self.workers),
            tol: other.tol.or(self.tol),
            max_iters: other.max_iters.or(self.max_iters),
        }
    }

    pub fn apply(self, base: SimConfig) -> Result<SimConfig> {
        let mut cfg = base;
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.schemes {
            cfg.schemes = v;
        }
        if let Some(v) = self.power_dbw {
            cfg.power_grid_dbw_per_beam = v;
        }
        if let Some(v) = self.m {
            cfg.m_per_neighbour = v;
        }
        if let Some(v) = self.out {
            cfg.output = v;
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if let Some(v) = self.inflated_coloring_noise {
            cfg.inflated_coloring_noise = v;
        }
        if let Some(v) = self.bare_slnr_noise {
            cfg.bare_slnr_noise = v;
        }
        if let Some(v) = self.lattice {
            cfg.scenario.lattice_scale = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = Some(v);
        }
        if let Some(v) = self.tol {
            cfg.solver.tol = v;
        }
        if let Some(v) = self.max_iters {
            cfg.solver.max_iters = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
