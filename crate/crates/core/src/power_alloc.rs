//! Sum-rate power allocation for fixed beamformers at one gateway.
//!
//! The gateway maximizes
//!
//! ```text
//! Σ_l log2(1 + p_l g_ll / (Σ_{j≠l} p_j g_jl + σ²))   s.t.  p ≥ 0, Σ p ≤ P_T
//! ```
//!
//! where `g_jl = |w_j^H h_l|²` is the gain of stream `j` at user `l`. The
//! objective is non-concave in general, so the solver finds a stationary
//! point by projected gradient ascent with Armijo backtracking, starting from
//! uniform powers.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::linalg::dot_h;

/// Stream-to-user power gains and receiver noise seen by one gateway.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGainTable {
    n: usize,
    /// Row-major: `gains[j * n + l] = |w_j^H h_l|²`.
    gains: Vec<f64>,
    noise: f64,
}

impl EffectiveGainTable {
    pub fn new(n: usize, gains: Vec<f64>, noise: f64) -> Result<Self> {
        if gains.len() != n * n {
            return Err(SimError::Inconsistent(format!(
                "{} gains for {n} streams",
                gains.len()
            )));
        }
        if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(SimError::Inconsistent(
                "gains must be finite and >= 0".into(),
            ));
        }
        if !(noise > 0.0) || !noise.is_finite() {
            return Err(SimError::config(format!(
                "noise must be positive, got {noise}"
            )));
        }
        Ok(EffectiveGainTable { n, gains, noise })
    }

    /// Gain table for beamformers `w[j]` and user channels `h[l]`.
    pub fn from_beamformers(
        beamformers: &[&[num_complex::Complex64]],
        channels: &[&[num_complex::Complex64]],
        noise: f64,
    ) -> Result<Self> {
        let n = beamformers.len();
        if channels.len() != n {
            return Err(SimError::Inconsistent(
                "one channel per beamformer required".into(),
            ));
        }
        let mut gains = Vec::with_capacity(n * n);
        for w in beamformers {
            for h in channels {
                gains.push(dot_h(w, h).norm_sqr());
            }
        }
        Self::new(n, gains, noise)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn gain(&self, stream: usize, user: usize) -> f64 {
        self.gains[stream * self.n + user]
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Copy with every gain and the noise multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        EffectiveGainTable {
            n: self.n,
            gains: self.gains.iter().map(|g| g * factor).collect(),
            noise: self.noise * factor,
        }
    }

    /// Per-user SINR under the gateway's own view (its streams only).
    pub fn sinr(&self, p: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|l| {
                let interference: f64 = (0..self.n)
                    .filter(|&j| j != l)
                    .map(|j| p[j] * self.gain(j, l))
                    .sum();
                p[l] * self.gain(l, l) / (interference + self.noise)
            })
            .collect()
    }
}

/// Non-negative per-stream transmit powers, watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerVector(pub Vec<f64>);

impl PowerVector {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_feasible(&self, p_total: f64) -> bool {
        self.0.iter().all(|&p| p >= 0.0) && self.total() <= p_total * (1.0 + 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative objective change that ends the ascent.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSolution {
    pub powers: PowerVector,
    /// Sum rate at `powers`, bits/s/Hz.
    pub objective: f64,
    /// Ascent iterations summed over all starts.
    pub iterations: usize,
    /// False when any start hit `max_iters` with the last relative change
    /// above `100 · tol`.
    pub converged: bool,
    /// Objective along the run from the uniform start, followed by the final
    /// objective of each restart that improved on it; never decreases.
    pub history: Vec<f64>,
}

/// Gateway-view sum rate `Σ_l log2(1 + SINR_l)`.
pub fn sum_rate_objective(gains: &EffectiveGainTable, p: &PowerVector) -> f64 {
    gains.sinr(&p.0).iter().map(|s| s.ln_1p()).sum::<f64>() / LN_2
}

const ARMIJO_SLOPE: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Locally optimal sum-rate powers under `Σ p ≤ p_total`, starting from the
/// uniform split.
pub fn allocate_sumrate(
    gains: &EffectiveGainTable,
    p_total: f64,
    opts: SolverOptions,
) -> Result<PowerSolution> {
    if !(p_total > 0.0) || !p_total.is_finite() {
        return Err(SimError::config(format!(
            "total power must be positive, got {p_total}"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(SimError::config(format!(
            "solver tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let n = gains.len();
    if n == 0 {
        return Ok(PowerSolution {
            powers: PowerVector(Vec::new()),
            objective: 0.0,
            iterations: 0,
            converged: true,
            history: vec![0.0],
        });
    }

    // Work on fractions of the budget with gains in units of P_T / σ², so
    // step lengths are O(1) whatever the link budget.
    let problem = Normalized::new(gains, p_total);
    let primary = problem.ascend(vec![1.0 / n as f64; n], opts);
    let mut x = primary.x;
    let mut f = primary.f;
    let mut history = primary.history;
    let mut iterations = primary.iterations;
    let mut converged = primary.converged;

    // The objective is not concave, so the uniform start can stop at a poor
    // stationary point. Restart from every vertex and from every uniform
    // split with one stream switched off, keeping strict improvements only.
    if n > 1 {
        let restarts = (0..n).flat_map(|j| {
            let vertex: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            let without: Vec<f64> = (0..n)
                .map(|i| if i == j { 0.0 } else { 1.0 / (n - 1) as f64 })
                .collect();
            [vertex, without]
        });
        for start in restarts {
            let run = problem.ascend(start, opts);
            iterations += run.iterations;
            converged &= run.converged;
            if run.f > f * (1.0 + 1e-12) + 1e-15 {
                x = run.x;
                f = run.f;
                history.push(f);
            }
        }
    }

    let powers = PowerVector(x.iter().map(|xi| xi * p_total).collect());
    Ok(PowerSolution {
        objective: sum_rate_objective(gains, &powers),
        powers,
        iterations,
        converged,
        history,
    })
}

struct Ascent {
    x: Vec<f64>,
    f: f64,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
}

struct Normalized {
    n: usize,
    /// `a[j * n + l] = g_jl · P_T / σ²`.
    a: Vec<f64>,
}

impl Normalized {
    fn new(gains: &EffectiveGainTable, p_total: f64) -> Self {
        let n = gains.len();
        let scale = p_total / gains.noise();
        Normalized {
            n,
            a: (0..n * n).map(|i| gains.gains[i] * scale).collect(),
        }
    }

    /// Projected gradient ascent with Armijo backtracking from `x`.
    fn ascend(&self, mut x: Vec<f64>, opts: SolverOptions) -> Ascent {
        let mut f = self.objective(&x);
        let mut history = vec![f];
        let mut step = 1.0;
        let mut converged = false;
        let mut last_change = f64::INFINITY;
        let mut iterations = 0;

        while iterations < opts.max_iters {
            iterations += 1;
            let grad = self.gradient(&x);
            let mut accepted = None;
            let mut s = step;
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + s * gi).collect();
                let candidate = project_capped_simplex(&trial);
                let ascent: f64 = grad
                    .iter()
                    .zip(candidate.iter().zip(&x))
                    .map(|(g, (c, xi))| g * (c - xi))
                    .sum();
                if ascent <= 0.0 {
                    // projected step no longer moves: stationary point
                    break;
                }
                let fc = self.objective(&candidate);
                if fc >= f + ARMIJO_SLOPE * ascent {
                    accepted = Some((candidate, fc));
                    break;
                }
                s *= 0.5;
            }
            let Some((candidate, fc)) = accepted else {
                converged = true;
                last_change = 0.0;
                break;
            };
            last_change = (fc - f) / f.abs().max(f64::MIN_POSITIVE);
            x = candidate;
            f = fc;
            history.push(f);
            step = (2.0 * s).min(1e6);
            if last_change < opts.tol {
                converged = true;
                break;
            }
        }
        if !converged && last_change <= 100.0 * opts.tol {
            converged = true;
        }
        Ascent {
            x,
            f,
            history,
            iterations,
            converged,
        }
    }

    /// Total received power plus unit noise at each user.
    fn totals(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|l| {
                1.0 + (0..self.n)
                    .map(|j| x[j] * self.a[j * self.n + l])
                    .sum::<f64>()
            })
            .collect()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let t = self.totals(x);
        (0..self.n)
            .map(|l| {
                let signal = x[l] * self.a[l * self.n + l];
                let interference = t[l] - signal;
                (signal / interference).ln_1p()
            })
            .sum::<f64>()
            / LN_2
    }

    // ∂/∂x_j Σ_l [ln T_l − ln I_l],  I_l = T_l − x_l a_ll
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let t = self.totals(x);
        let inv_i: Vec<f64> = (0..self.n)
            .map(|l| 1.0 / (t[l] - x[l] * self.a[l * self.n + l]))
            .collect();
        (0..self.n)
            .map(|j| {
                (0..self.n)
                    .map(|l| {
                        let a = self.a[j * self.n + l];
                        let own = a / t[l];
                        if j == l {
                            own
                        } else {
                            own - a * inv_i[l]
                        }
                    })
                    .sum::<f64>()
                    / LN_2
            })
            .collect()
    }
}

/// Euclidean projection onto `{x ≥ 0, Σ x ≤ 1}`.
pub fn project_capped_simplex(y: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    // projection onto the face Σ x = 1
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if v - candidate > 0.0 {
            tau = candidate;
        }
    }
    let mut x: Vec<f64> = y.iter().map(|v| (v - tau).max(0.0)).collect();
    // absorb rounding so the budget is never exceeded
    let total: f64 = x.iter().sum();
    if total > 1.0 {
        x.iter_mut().for_each(|v| *v /= total);
    }
    x
}
