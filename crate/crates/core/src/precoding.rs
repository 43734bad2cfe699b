//! Linear beamformer design at a single gateway.
//!
//! Two closed forms are provided. Regularized zero-forcing takes the
//! normalized columns of `(H^H H + βI)^{-1} H^H` where the rows of `H` are the
//! conjugated user channels, i.e. `w_k ∝ (Σ_j h_j h_j^H + βI)^{-1} h_k`. The
//! SLNR beamformer maximizes
//!
//! ```text
//! |w^H h|² / (Σ_leak |w^H g|² + σ²)
//! ```
//!
//! over unit vectors; the maximizer is `M^{-1} h / ‖M^{-1} h‖` with
//! `M = Σ_leak g g^H + σ² I`.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Result, SimError};
use crate::linalg::{normalized, CMatrix, CVector, Cholesky};

/// Regularization of the zero-forcing inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularizationPolicy {
    Fixed(f64),
    /// `β = N0 W K / P_T`.
    Optimal,
}

impl RegularizationPolicy {
    pub fn resolve(self, noise_power: f64, k_users: usize, p_total: f64) -> Result<f64> {
        match self {
            RegularizationPolicy::Fixed(beta) if beta >= 0.0 && beta.is_finite() => Ok(beta),
            RegularizationPolicy::Fixed(beta) => Err(SimError::config(format!(
                "regularization must be >= 0, got {beta}"
            ))),
            RegularizationPolicy::Optimal => optimal_beta(noise_power, 1.0, k_users, p_total),
        }
    }
}

/// `β_opt = N0 · W · K / P_T`.
pub fn optimal_beta(n0: f64, bandwidth: f64, k_users: usize, p_total: f64) -> Result<f64> {
    if !(p_total > 0.0) {
        return Err(SimError::config(format!(
            "total power must be positive, got {p_total}"
        )));
    }
    if !(n0 > 0.0) || !(bandwidth > 0.0) || k_users == 0 {
        return Err(SimError::config(
            "noise density, bandwidth and user count must be positive",
        ));
    }
    Ok(n0 * bandwidth * k_users as f64 / p_total)
}

/// Regularized zero-forcing beamformers, one unit-norm vector per user.
///
/// `channels[k]` is user `k`'s channel from the gateway's feeds. With
/// `beta = 0` the Gram matrix must be nonsingular.
pub fn rzf_precoder(channels: &[&[Complex64]], beta: f64) -> Result<Vec<CVector>> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(SimError::config(format!(
            "regularization must be >= 0, got {beta}"
        )));
    }
    let n = feed_dim(channels)?;
    let mut gram = CMatrix::zeros(n, n);
    for h in channels {
        gram.add_outer(h, 1.0);
    }
    gram.add_diagonal(beta);
    let chol = Cholesky::factor(&gram)?;
    channels
        .iter()
        .map(|h| {
            normalized(&chol.solve(h))
                .ok_or_else(|| SimError::Singular("zero-forcing column vanished".into()))
        })
        .collect()
}

fn feed_dim(channels: &[&[Complex64]]) -> Result<usize> {
    let n = channels
        .first()
        .map(|h| h.len())
        .ok_or_else(|| SimError::Inconsistent("no user channels".into()))?;
    if n == 0 || channels.iter().any(|h| h.len() != n) {
        return Err(SimError::Inconsistent(
            "user channels of unequal length".into(),
        ));
    }
    Ok(n)
}

/// SLNR-maximizing unit beamformer for `target` given leakage channels.
///
/// The intra- and inter-cluster leakage lists enter the interference
/// covariance identically; they are kept apart only to mirror how callers
/// assemble them.
pub fn slnr_beamformer(
    target: &[Complex64],
    intra_leakage: &[&[Complex64]],
    inter_leakage: &[&[Complex64]],
    noise_power: f64,
) -> Result<CVector> {
    if !(noise_power > 0.0) {
        return Err(SimError::config(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    let n = target.len();
    let mut m = CMatrix::zeros(n, n);
    for g in intra_leakage.iter().chain(inter_leakage) {
        if g.len() != n {
            return Err(SimError::Inconsistent("leakage channel length".into()));
        }
        m.add_outer(g, 1.0);
    }
    m.add_diagonal(noise_power);
    let x = Cholesky::factor(&m)?.solve(target);
    normalized(&x).ok_or_else(|| SimError::Inconsistent("zero target channel".into()))
}

/// SLNR value of `w` for the given target and leakage set.
pub fn slnr_value(
    w: &[Complex64],
    target: &[Complex64],
    leakage: &[&[Complex64]],
    noise_power: f64,
) -> f64 {
    use crate::linalg::{dot_h, norm_sqr};
    let leak: f64 = leakage.iter().map(|g| dot_h(w, g).norm_sqr()).sum();
    dot_h(w, target).norm_sqr() / (leak + noise_power * norm_sqr(w))
}

/// For each neighbouring cluster, the `m_per_neighbour` users with the
/// strongest channel norm from `gw`'s feeds, ties to the lower user index.
///
/// Returned ids are global user indices, grouped by neighbour in the given
/// order and by decreasing strength within a neighbour.
pub fn select_edge_users(
    channels: &ChannelRealization,
    gw: usize,
    neighbours: &[usize],
    m_per_neighbour: usize,
) -> Result<Vec<usize>> {
    let k = channels.beams_per_cluster();
    if m_per_neighbour > k {
        return Err(SimError::config(format!(
            "cannot select {m_per_neighbour} users from a {k}-user cluster"
        )));
    }
    let mut selected = Vec::with_capacity(neighbours.len() * m_per_neighbour);
    for &b in neighbours {
        let mut candidates: Vec<(usize, f64)> = (0..k)
            .map(|j| {
                let user = b * k + j;
                (user, crate::linalg::norm_sqr(channels.h_to_user(gw, user)))
            })
            .collect();
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        selected.extend(candidates.iter().take(m_per_neighbour).map(|c| c.0));
    }
    Ok(selected)
}

/// Beamformers designed by every gateway in one scheme.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeamformerSet {
    /// `w[(gw, user)]`.
    pub w: HashMap<(usize, usize), CVector>,
    /// Per gateway, the ordered users it transmits to.
    pub served_sets: Vec<Vec<usize>>,
    /// Per gateway, the out-of-cluster users whose CSI it holds.
    pub leakage_sets: Vec<Vec<usize>>,
}

impl BeamformerSet {
    pub fn with_gateways(n: usize) -> Self {
        BeamformerSet {
            w: HashMap::new(),
            served_sets: vec![Vec::new(); n],
            leakage_sets: vec![Vec::new(); n],
        }
    }

    pub fn get(&self, gw: usize, user: usize) -> Option<&CVector> {
        self.w.get(&(gw, user))
    }
}
