//! Seeded Monte-Carlo driver.
//!
//! Every trial draws one user drop and one channel realization from a seed
//! derived from the master seed and the trial index, then evaluates every
//! selected scheme at every power point on that same realization. Trials run
//! on a thread pool; results are collected by trial index and reduced in
//! order, so the output never depends on the worker count.

pub mod config;
pub mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{synthesize_channels, ChannelRealization};
use crate::error::{Result, SimError};
use crate::geometry::{build_topology_scaled, drop_users, Topology};
use crate::schemes::{run_scheme, SchemeConfig, SchemeKind, SchemeResult};

pub use config::{OutputFormat, Scenario, SimConfig};
pub use report::{export_report, read_report_csv, RelativeGain, SweepCell, SweepReport};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `t`; independent of how many trials are run.
pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    splitmix64(splitmix64(master_seed) ^ (trial as u64).wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Per-beam result row for detailed output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamRow {
    pub trial: usize,
    pub scheme: String,
    pub per_beam_power_dbw: f64,
    pub beam: usize,
    pub rate_bps_hz: f64,
    pub throughput_mbps: f64,
}

/// One scheme at one power point in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialCell {
    pub scheme: SchemeKind,
    pub per_beam_power_dbw: f64,
    pub mean_throughput_mbps: f64,
    pub mean_rate_bps_hz: f64,
    pub non_converged_gateways: usize,
    pub realization_checksum: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub realization_checksum: u64,
    pub cells: Vec<TrialCell>,
    pub beam_rows: Vec<BeamRow>,
}

/// Topology, user drop and channel of trial `t`.
pub fn trial_realization(
    config: &SimConfig,
    topology: &Topology,
    trial: usize,
) -> Result<(u64, ChannelRealization)> {
    let seed = trial_seed(config.master_seed, trial);
    let drop = drop_users(topology, splitmix64(seed ^ 0x01));
    let channels = synthesize_channels(topology, &drop, &config.budget, splitmix64(seed ^ 0x02))?;
    Ok((seed, channels))
}

pub fn scheme_config(config: &SimConfig, kind: SchemeKind, per_beam_dbw: f64) -> SchemeConfig {
    SchemeConfig {
        kind,
        m_per_neighbour: config.m_per_neighbour,
        inflated_coloring_noise: config.inflated_coloring_noise,
        bare_slnr_noise: config.bare_slnr_noise,
        p_total_per_gw: config.p_total_per_gw(per_beam_dbw),
        solver: config.solver,
    }
}

/// Runs every scheme at every power point on one trial's realization.
pub fn run_trial(
    config: &SimConfig,
    topology: &Topology,
    trial: usize,
    keep_beam_rows: bool,
) -> Result<TrialRecord> {
    let (seed, channels) = trial_realization(config, topology, trial)?;
    let checksum = channels.checksum();
    let mut cells = Vec::with_capacity(config.schemes.len() * config.power_grid_dbw_per_beam.len());
    let mut beam_rows = Vec::new();
    for &kind in &config.schemes {
        for &dbw in &config.power_grid_dbw_per_beam {
            let result: SchemeResult = run_scheme(
                topology,
                &channels,
                &config.budget,
                &scheme_config(config, kind, dbw),
            )?;
            if keep_beam_rows {
                beam_rows.extend(
                    result
                        .per_user_rate
                        .iter()
                        .zip(&result.per_beam_throughput)
                        .enumerate()
                        .map(|(beam, (&rate, &tp))| BeamRow {
                            trial,
                            scheme: kind.name().to_string(),
                            per_beam_power_dbw: dbw,
                            beam,
                            rate_bps_hz: rate,
                            throughput_mbps: tp / 1e6,
                        }),
                );
            }
            cells.push(TrialCell {
                scheme: kind,
                per_beam_power_dbw: dbw,
                mean_throughput_mbps: result.mean_throughput() / 1e6,
                mean_rate_bps_hz: result.mean_rate(),
                non_converged_gateways: result.diagnostics.non_converged(),
                realization_checksum: result.diagnostics.realization_checksum,
            });
        }
    }
    Ok(TrialRecord {
        trial,
        seed,
        realization_checksum: checksum,
        cells,
        beam_rows,
    })
}

pub fn scenario_topology(config: &SimConfig) -> Result<Topology> {
    let s = config.scenario;
    build_topology_scaled(
        s.coverage_diameter_km,
        s.beams_per_cluster,
        s.clusters,
        s.lattice_scale,
    )
}

/// Full sweep result including per-trial records.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub report: SweepReport,
    pub trials: Vec<TrialRecord>,
}

impl SweepOutcome {
    pub fn beam_rows(&self) -> impl Iterator<Item = &BeamRow> {
        self.trials.iter().flat_map(|t| t.beam_rows.iter())
    }
}

pub fn run_sweep(config: &SimConfig) -> Result<SweepReport> {
    Ok(run_sweep_detailed(config, false)?.report)
}

/// Runs the sweep, optionally keeping per-beam rows of every trial.
pub fn run_sweep_detailed(config: &SimConfig, keep_beam_rows: bool) -> Result<SweepOutcome> {
    config.validate()?;
    let topology = scenario_topology(config)?;
    let run = || -> Result<Vec<TrialRecord>> {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, &topology, t, keep_beam_rows))
            .collect()
    };
    let trials = match worker_count(config)? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok(SweepOutcome {
        report: SweepReport::aggregate(config, &trials),
        trials,
    })
}

fn worker_count(config: &SimConfig) -> Result<Option<usize>> {
    if let Some(n) = config.workers {
        return Ok(Some(n));
    }
    match std::env::var(config::WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(SimError::config(format!(
                "{} must be a positive integer, got '{v}'",
                config::WORKERS_ENV
            ))),
        },
        Err(_) => Ok(None),
    }
}
