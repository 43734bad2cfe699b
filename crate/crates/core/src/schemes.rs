//! End-to-end transmission strategies and true achieved rates.
//!
//! Every scheme designs beamformers and powers per gateway from the CSI that
//! gateway holds, then the achieved SINR of each user is evaluated against
//! every stream in the system. A user may be served by several gateways
//! (data sharing); their contributions add coherently at the terminal:
//!
//! ```text
//! Γ_u = |Σ_{g∈A_u} √p_gu w_gu^H h_{g,u}|² / (Σ_{v≠u} |Σ_{g∈A_v} √p_gv w_gv^H h_{g,u}|² + W N0)
//! ```

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, LinkBudget};
use crate::error::{Result, SimError};
use crate::geometry::Topology;
use crate::linalg::{dot_h, CVector};
use crate::power_alloc::{allocate_sumrate, EffectiveGainTable, SolverOptions};
use crate::precoding::{
    optimal_beta, rzf_precoder, select_edge_users, slnr_beamformer, BeamformerSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeKind {
    /// 4-colour frequency reuse, one feed per beam.
    Coloring4,
    /// Regularized zero-forcing inside each cluster, no cooperation.
    ClusterRzf,
    /// SLNR beamforming with CSI shared inside hyper-clusters.
    HyperClusterCsi,
    /// SLNR beamforming with CSI and data shared inside hyper-clusters.
    HyperClusterCsiData,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Coloring4,
        SchemeKind::ClusterRzf,
        SchemeKind::HyperClusterCsi,
        SchemeKind::HyperClusterCsiData,
    ];

    /// Short name used on the command line and in output files.
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Coloring4 => "coloring",
            SchemeKind::ClusterRzf => "rzf",
            SchemeKind::HyperClusterCsi => "csi",
            SchemeKind::HyperClusterCsiData => "csidata",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                SimError::config(format!(
                    "unknown scheme '{s}' (expected coloring, rzf, csi or csidata)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Edge users each gateway picks from every cooperating neighbour.
    pub m_per_neighbour: usize,
    /// Use the `4 W N0` coloring noise term instead of the `W N0 / 4`
    /// noise of a quarter-band carrier.
    pub inflated_coloring_noise: bool,
    /// Use the bare `W N0` term in the SLNR denominator instead of the noise
    /// seen per unit stream power under an even split, `W N0 |G_c| / P_T`.
    pub bare_slnr_noise: bool,
    /// Sum-power budget of each gateway, W.
    pub p_total_per_gw: f64,
    pub solver: SolverOptions,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, p_total_per_gw: f64) -> Self {
        SchemeConfig {
            kind,
            m_per_neighbour: 1,
            inflated_coloring_noise: false,
            bare_slnr_noise: false,
            p_total_per_gw,
            solver: SolverOptions::default(),
        }
    }

    /// Noise term of the SLNR design for a gateway serving `streams` users.
    pub fn slnr_noise(&self, budget: &LinkBudget, streams: usize) -> f64 {
        if self.bare_slnr_noise {
            budget.noise_power()
        } else {
            budget.noise_power() * streams as f64 / self.p_total_per_gw
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p_total_per_gw > 0.0) || !self.p_total_per_gw.is_finite() {
            return Err(SimError::config(format!(
                "gateway power must be positive, got {}",
                self.p_total_per_gw
            )));
        }
        Ok(())
    }
}

/// One gateway's share of a data stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub gw: usize,
    pub power: f64,
    pub beamformer: CVector,
}

/// All transmissions in the system: `streams[u]` lists the gateways that
/// send user `u`'s symbol.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transmission {
    pub streams: Vec<Vec<Contribution>>,
}

impl Transmission {
    pub fn new(num_users: usize) -> Self {
        Transmission {
            streams: vec![Vec::new(); num_users],
        }
    }

    /// `amp[v * n + u]`: received amplitude of user `u`'s stream at user `v`.
    pub fn received_amplitudes(&self, channels: &ChannelRealization) -> Result<Vec<Complex64>> {
        let n = self.streams.len();
        if n != channels.num_users() {
            return Err(SimError::Inconsistent(format!(
                "{n} streams for {} users",
                channels.num_users()
            )));
        }
        let mut amp = vec![Complex64::new(0.0, 0.0); n * n];
        for (u, stream) in self.streams.iter().enumerate() {
            if stream.is_empty() {
                return Err(SimError::Inconsistent(format!(
                    "user {u} has no serving gateway"
                )));
            }
            for c in stream {
                let root_p = c.power.max(0.0).sqrt();
                for v in 0..n {
                    amp[v * n + u] += root_p * dot_h(&c.beamformer, channels.h_to_user(c.gw, v));
                }
            }
        }
        Ok(amp)
    }
}

/// Received powers at one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub signal: f64,
    pub interference: f64,
    pub noise: f64,
}

impl SinrBreakdown {
    pub fn sinr(&self) -> f64 {
        self.signal / (self.interference + self.noise)
    }
}

/// SINR breakdown of every user with all streams interfering.
pub fn evaluate_all(
    tx: &Transmission,
    channels: &ChannelRealization,
    noise: f64,
) -> Result<Vec<SinrBreakdown>> {
    let n = tx.streams.len();
    let amp = tx.received_amplitudes(channels)?;
    Ok((0..n)
        .map(|v| {
            let row = &amp[v * n..(v + 1) * n];
            let total: f64 = row.iter().map(|a| a.norm_sqr()).sum();
            let signal = row[v].norm_sqr();
            SinrBreakdown {
                signal,
                interference: (total - signal).max(0.0),
                noise,
            }
        })
        .collect())
}

/// Achieved SINR of one user.
pub fn evaluate_sinr_global(
    tx: &Transmission,
    channels: &ChannelRealization,
    noise: f64,
    user: usize,
) -> Result<f64> {
    if user >= tx.streams.len() {
        return Err(SimError::Inconsistent(format!("no stream for user {user}")));
    }
    for (u, stream) in tx.streams.iter().enumerate() {
        if stream.is_empty() {
            return Err(SimError::Inconsistent(format!(
                "user {u} has no serving gateway"
            )));
        }
    }
    let received = |v: usize, u: usize| -> Complex64 {
        tx.streams[u]
            .iter()
            .map(|c| c.power.max(0.0).sqrt() * dot_h(&c.beamformer, channels.h_to_user(c.gw, v)))
            .sum()
    };
    let signal = received(user, user).norm_sqr();
    let interference: f64 = (0..tx.streams.len())
        .filter(|&u| u != user)
        .map(|u| received(user, u).norm_sqr())
        .sum();
    Ok(signal / (interference + noise))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GatewayDiagnostics {
    pub served: Vec<usize>,
    pub edge_users: Vec<usize>,
    pub powers: Vec<f64>,
    pub solver_converged: bool,
    pub solver_iterations: usize,
    /// Sum rate the gateway believes it achieves (own streams only).
    pub design_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub gateways: Vec<GatewayDiagnostics>,
    /// Number of gateways transmitting each user's symbol.
    pub serving_set_size: Vec<usize>,
    /// Per user, the rate its home gateway designed for, bits/s/Hz.
    pub design_rate: Vec<f64>,
    pub realization_checksum: u64,
}

impl Diagnostics {
    pub fn non_converged(&self) -> usize {
        self.gateways.iter().filter(|g| !g.solver_converged).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub scheme: SchemeKind,
    pub sinr: Vec<f64>,
    /// Spectral efficiency per user over the full band, bits/s/Hz.
    pub per_user_rate: Vec<f64>,
    /// Throughput of each beam's user, bits/s.
    pub per_beam_throughput: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub beamformers: BeamformerSet,
}

impl SchemeResult {
    pub fn mean_rate(&self) -> f64 {
        mean(&self.per_user_rate)
    }

    pub fn mean_throughput(&self) -> f64 {
        mean(&self.per_beam_throughput)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn check_inputs(topology: &Topology, channels: &ChannelRealization) -> Result<()> {
    if topology.num_beams() != channels.num_users()
        || topology.num_beams() != channels.num_feeds()
        || topology.beams_per_cluster != channels.beams_per_cluster()
    {
        return Err(SimError::Inconsistent(
            "channel realization does not match the topology".into(),
        ));
    }
    Ok(())
}

/// Runs the scheme selected in `config`.
pub fn run_scheme(
    topology: &Topology,
    channels: &ChannelRealization,
    budget: &LinkBudget,
    config: &SchemeConfig,
) -> Result<SchemeResult> {
    match config.kind {
        SchemeKind::Coloring4 => run_coloring(topology, channels, budget, config),
        SchemeKind::ClusterRzf => run_cluster_rzf(topology, channels, budget, config),
        SchemeKind::HyperClusterCsi => run_hypercluster_csi(topology, channels, budget, config),
        SchemeKind::HyperClusterCsiData => {
            run_hypercluster_csi_data(topology, channels, budget, config)
        }
    }
}

/// Conventional 4-colour reuse: each beam's own feed carries its user at
/// `P_T / K` in a quarter of the band; only co-colour beams interfere.
pub fn run_coloring(
    topology: &Topology,
    channels: &ChannelRealization,
    budget: &LinkBudget,
    config: &SchemeConfig,
) -> Result<SchemeResult> {
    config.validate()?;
    check_inputs(topology, channels)?;
    let nb = topology.num_beams();
    let k = topology.beams_per_cluster;
    let p = config.p_total_per_gw / k as f64;
    let noise = if config.inflated_coloring_noise {
        4.0 * budget.noise_power()
    } else {
        budget.noise_power() / 4.0
    };

    let sinr: Vec<f64> = (0..nb)
        .map(|u| {
            let colour = topology.colour_of_beam[u];
            let interference: f64 = (0..nb)
                .filter(|&b| b != u && topology.colour_of_beam[b] == colour)
                .map(|b| p * channels.feed_gain(b, u).norm_sqr())
                .sum();
            p * channels.feed_gain(u, u).norm_sqr() / (interference + noise)
        })
        .collect();
    let per_user_rate: Vec<f64> = sinr.iter().map(|s| 0.25 * s.ln_1p() / LN_2).collect();

    let mut beamformers = BeamformerSet::with_gateways(topology.clusters);
    let mut gateways = Vec::with_capacity(topology.clusters);
    for c in 0..topology.clusters {
        let served: Vec<usize> = topology.beams_of(c).collect();
        for (local, &u) in served.iter().enumerate() {
            let mut w = vec![Complex64::new(0.0, 0.0); k];
            w[local] = Complex64::new(1.0, 0.0);
            beamformers.w.insert((c, u), w);
        }
        beamformers.served_sets[c] = served.clone();
        gateways.push(GatewayDiagnostics {
            design_objective: served.iter().map(|&u| per_user_rate[u]).sum(),
            powers: vec![p; served.len()],
            served,
            edge_users: Vec::new(),
            solver_converged: true,
            solver_iterations: 0,
        });
    }

    Ok(SchemeResult {
        scheme: config.kind,
        per_beam_throughput: per_user_rate
            .iter()
            .map(|r| r * budget.bandwidth_hz)
            .collect(),
        diagnostics: Diagnostics {
            gateways,
            serving_set_size: vec![1; nb],
            design_rate: per_user_rate.clone(),
            realization_checksum: channels.checksum(),
        },
        sinr,
        per_user_rate,
        beamformers,
    })
}

/// Beamformers one gateway designed, before power allocation.
struct GatewayDesign {
    served: Vec<usize>,
    edge_users: Vec<usize>,
    beamformers: Vec<CVector>,
}

/// Per-cluster R-ZF with `β = N0 W K / P_T`, evaluated against the
/// interference of every other cluster.
pub fn run_cluster_rzf(
    topology: &Topology,
    channels: &ChannelRealization,
    budget: &LinkBudget,
    config: &SchemeConfig,
) -> Result<SchemeResult> {
    config.validate()?;
    check_inputs(topology, channels)?;
    let k = topology.beams_per_cluster;
    let beta = optimal_beta(
        budget.noise_psd(),
        budget.bandwidth_hz,
        k,
        config.p_total_per_gw,
    )?;
    let designs = (0..topology.clusters)
        .map(|c| {
            let served: Vec<usize> = topology.beams_of(c).collect();
            let h: Vec<&[Complex64]> = served.iter().map(|&u| channels.h_to_user(c, u)).collect();
            Ok(GatewayDesign {
                beamformers: rzf_precoder(&h, beta)?,
                served,
                edge_users: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    finish(topology, channels, budget, config, designs)
}

/// Hyper-cluster SLNR with CSI sharing: each gateway serves only its own
/// users but also keeps leakage towards the edge users it selected in
/// cooperating clusters low.
pub fn run_hypercluster_csi(
    topology: &Topology,
    channels: &ChannelRealization,
    budget: &LinkBudget,
    config: &SchemeConfig,
) -> Result<SchemeResult> {
    config.validate()?;
    check_inputs(topology, channels)?;
    let designs = (0..topology.clusters)
        .map(|c| {
            let served: Vec<usize> = topology.beams_of(c).collect();
            let noise = config.slnr_noise(budget, served.len());
            let edge_users = select_edge_users(
                channels,
                c,
                &topology.cooperating_neighbours(c),
                config.m_per_neighbour,
            )?;
            let inter: Vec<&[Complex64]> = edge_users
                .iter()
                .map(|&u| channels.h_to_user(c, u))
                .collect();
            let beamformers = served
                .iter()
                .map(|&u| {
                    let intra: Vec<&[Complex64]> = served
                        .iter()
                        .filter(|&&j| j != u)
                        .map(|&j| channels.h_to_user(c, j))
                        .collect();
                    slnr_beamformer(channels.h_to_user(c, u), &intra, &inter, noise)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(GatewayDesign {
                served,
                edge_users,
                beamformers,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    finish(topology, channels, budget, config, designs)
}

/// Hyper-cluster SLNR with CSI and data sharing: each gateway also serves
/// the edge users it selected, coherently with their home gateway.
pub fn run_hypercluster_csi_data(
    topology: &Topology,
    channels: &ChannelRealization,
    budget: &LinkBudget,
    config: &SchemeConfig,
) -> Result<SchemeResult> {
    config.validate()?;
    check_inputs(topology, channels)?;
    let designs = (0..topology.clusters)
        .map(|c| {
            let edge_users = select_edge_users(
                channels,
                c,
                &topology.cooperating_neighbours(c),
                config.m_per_neighbour,
            )?;
            let served: Vec<usize> = topology
                .beams_of(c)
                .chain(edge_users.iter().copied())
                .collect();
            let noise = config.slnr_noise(budget, served.len());
            // every selected edge user is also served, so the leakage set
            // outside the served set is empty
            let beamformers = served
                .iter()
                .map(|&u| {
                    let others: Vec<&[Complex64]> = served
                        .iter()
                        .filter(|&&j| j != u)
                        .map(|&j| channels.h_to_user(c, j))
                        .collect();
                    slnr_beamformer(channels.h_to_user(c, u), &others, &[], noise)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(GatewayDesign {
                served,
                edge_users,
                beamformers,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    finish(topology, channels, budget, config, designs)
}

/// Allocates powers per gateway and evaluates the achieved rates.
fn finish(
    topology: &Topology,
    channels: &ChannelRealization,
    budget: &LinkBudget,
    config: &SchemeConfig,
    designs: Vec<GatewayDesign>,
) -> Result<SchemeResult> {
    let nu = channels.num_users();
    let noise = budget.noise_power();
    let mut tx = Transmission::new(nu);
    let mut beamformers = BeamformerSet::with_gateways(designs.len());
    let mut design_rate = vec![0.0; nu];
    let mut gateways = Vec::with_capacity(designs.len());

    for (gw, design) in designs.into_iter().enumerate() {
        let w: Vec<&[Complex64]> = design.beamformers.iter().map(Vec::as_slice).collect();
        let h: Vec<&[Complex64]> = design
            .served
            .iter()
            .map(|&u| channels.h_to_user(gw, u))
            .collect();
        let table = EffectiveGainTable::from_beamformers(&w, &h, noise)?;
        let solution = allocate_sumrate(&table, config.p_total_per_gw, config.solver)?;
        let view = table.sinr(&solution.powers.0);

        for (i, (&u, wv)) in design.served.iter().zip(&design.beamformers).enumerate() {
            if topology.cluster_of_beam[u] == gw {
                design_rate[u] = view[i].ln_1p() / LN_2;
            }
            tx.streams[u].push(Contribution {
                gw,
                power: solution.powers.0[i],
                beamformer: wv.clone(),
            });
            beamformers.w.insert((gw, u), wv.clone());
        }
        beamformers.served_sets[gw] = design.served.clone();
        beamformers.leakage_sets[gw] = design.edge_users.clone();
        gateways.push(GatewayDiagnostics {
            served: design.served,
            edge_users: design.edge_users,
            powers: solution.powers.0,
            solver_converged: solution.converged,
            solver_iterations: solution.iterations,
            design_objective: solution.objective,
        });
    }

    let breakdown = evaluate_all(&tx, channels, noise)?;
    let sinr: Vec<f64> = breakdown.iter().map(SinrBreakdown::sinr).collect();
    let per_user_rate: Vec<f64> = sinr.iter().map(|s| s.ln_1p() / LN_2).collect();
    Ok(SchemeResult {
        scheme: config.kind,
        per_beam_throughput: per_user_rate
            .iter()
            .map(|r| r * budget.bandwidth_hz)
            .collect(),
        diagnostics: Diagnostics {
            gateways,
            serving_set_size: tx.streams.iter().map(Vec::len).collect(),
            design_rate,
            realization_checksum: channels.checksum(),
        },
        sinr,
        per_user_rate,
        beamformers,
    })
}
