//! Complex channel synthesis: beam pattern, rain fading, free-space loss and
//! antenna gains.
//!
//! The channel from feed `f` to user `u` is
//!
//! ```text
//! h[u][f] = exp(-j φ_u) · sqrt( G_rx · (λ / 4π d_u)² · b(θ_{f,u}) / ξ_u )
//! ```
//!
//! where `b` is the Bessel beam pattern, `ξ_u ≥ 1` the rain power
//! attenuation and `φ_u` a uniform phase. Rain amplitude and phase are common
//! to every feed seen by the same user.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::{Topology, UserDrop};
use crate::special::bessel_j_scaled;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// The `u` scaling that puts the -3 dB point of the pattern at θ_3dB.
const PATTERN_U_SCALE: f64 = 2.07123;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Ka-band forward-link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub frequency_hz: f64,
    /// Feed gain at beam center (b_max), dBi.
    pub max_tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub theta_3db_rad: f64,
    pub bandwidth_hz: f64,
    pub noise_temp_k: f64,
    /// Mean of ln(A_dB) for the rain attenuation A_dB.
    pub rain_mu: f64,
    /// Standard deviation of ln(A_dB).
    pub rain_sigma: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            frequency_hz: 20e9,
            max_tx_gain_dbi: 52.0,
            rx_gain_dbi: 41.7,
            theta_3db_rad: 0.4f64.to_radians(),
            bandwidth_hz: 500e6,
            noise_temp_k: 207.0,
            rain_mu: -3.4249,
            rain_sigma: 1.5768,
        }
    }
}

impl LinkBudget {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    /// Noise power spectral density N0, W/Hz.
    pub fn noise_psd(&self) -> f64 {
        BOLTZMANN * self.noise_temp_k
    }

    /// Noise power over the full user-link bandwidth, W·N0.
    pub fn noise_power(&self) -> f64 {
        self.noise_psd() * self.bandwidth_hz
    }

    pub fn b_max_linear(&self) -> f64 {
        db_to_linear(self.max_tx_gain_dbi)
    }

    pub fn rx_gain_linear(&self) -> f64 {
        db_to_linear(self.rx_gain_dbi)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.frequency_hz,
            self.max_tx_gain_dbi,
            self.rx_gain_dbi,
            self.theta_3db_rad,
            self.bandwidth_hz,
            self.noise_temp_k,
            self.rain_sigma,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !all_finite
            || self.frequency_hz <= 0.0
            || self.theta_3db_rad <= 0.0
            || self.noise_power() <= 0.0
            || self.rain_sigma < 0.0
        {
            return Err(SimError::config(format!("invalid link budget {self:?}")));
        }
        Ok(())
    }
}

/// Beam power gain at off-axis angle `theta`:
/// `b_max (J1(u)/(2u) + 36 J3(u)/u³)²` with `u = 2.07123 sin θ / sin θ_3dB`.
pub fn beam_gain(theta: f64, theta_3db: f64, b_max_linear: f64) -> Result<f64> {
    if !(theta_3db > 0.0) {
        return Err(SimError::config(format!(
            "3 dB angle must be positive, got {theta_3db}"
        )));
    }
    let u = PATTERN_U_SCALE * theta.sin() / theta_3db.sin();
    // J1(u)/(2u) -> 1/4 and 36 J3(u)/u³ -> 3/4 as u -> 0
    let amplitude = 0.5 * bessel_j_scaled(1, u) + 36.0 * bessel_j_scaled(3, u);
    Ok(b_max_linear * amplitude * amplitude)
}

/// Free-space power gain `(λ / (4π d))²` for a distance in km.
pub fn path_loss_gain(d_km: f64, wavelength_m: f64) -> Result<f64> {
    if !(d_km > 0.0) {
        return Err(SimError::config(format!(
            "distance must be positive, got {d_km}"
        )));
    }
    let x = wavelength_m / (4.0 * PI * d_km * 1e3);
    Ok(x * x)
}

/// One rain-fading draw for a single terminal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainFade {
    /// Linear power attenuation, always >= 1.
    pub xi_linear: f64,
    /// Common carrier phase, radians in [0, 2π).
    pub phi: f64,
}

/// Draws `ln(A_dB) ~ N(mu, sigma²)`, `ξ = 10^(A_dB/10)` and a uniform phase.
pub fn draw_rain_fade<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64) -> RainFade {
    let z: f64 = rng.sample(StandardNormal);
    let a_db = (mu + sigma * z).exp();
    RainFade {
        xi_linear: db_to_linear(a_db),
        phi: rng.random_range(0.0..2.0 * PI),
    }
}

/// Seeded single rain draw.
pub fn sample_rain_fade(rng_seed: u64, mu: f64, sigma: f64) -> RainFade {
    draw_rain_fade(&mut ChaCha8Rng::seed_from_u64(rng_seed), mu, sigma)
}

/// Complex gains from every feed to every user for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    beams_per_cluster: usize,
    num_feeds: usize,
    /// Row-major users × feeds.
    gains: Vec<Complex64>,
    pub rain_fade_linear: Vec<f64>,
    pub rain_phase: Vec<f64>,
}

impl ChannelRealization {
    /// Wraps an explicit users × feeds gain matrix (row-major). Rain fields
    /// are set to clear sky.
    pub fn from_gains(
        beams_per_cluster: usize,
        num_users: usize,
        gains: Vec<Complex64>,
    ) -> Result<Self> {
        if beams_per_cluster == 0 || num_users == 0 || gains.len() % num_users != 0 {
            return Err(SimError::Inconsistent("channel gain matrix shape".into()));
        }
        let num_feeds = gains.len() / num_users;
        if num_feeds % beams_per_cluster != 0 {
            return Err(SimError::Inconsistent(
                "feed count is not a multiple of the cluster size".into(),
            ));
        }
        if gains.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SimError::Inconsistent("non-finite channel gain".into()));
        }
        Ok(ChannelRealization {
            beams_per_cluster,
            num_feeds,
            gains,
            rain_fade_linear: vec![1.0; num_users],
            rain_phase: vec![0.0; num_users],
        })
    }

    pub fn num_users(&self) -> usize {
        self.rain_phase.len()
    }

    pub fn num_feeds(&self) -> usize {
        self.num_feeds
    }

    pub fn beams_per_cluster(&self) -> usize {
        self.beams_per_cluster
    }

    pub fn num_clusters(&self) -> usize {
        self.num_feeds / self.beams_per_cluster
    }

    /// Gains from all feeds to one user.
    pub fn user_row(&self, user: usize) -> &[Complex64] {
        &self.gains[user * self.num_feeds..(user + 1) * self.num_feeds]
    }

    /// Gain from one feed (global beam index) to one user.
    pub fn feed_gain(&self, feed: usize, user: usize) -> Complex64 {
        self.gains[user * self.num_feeds + feed]
    }

    /// Channel vector from the feeds of `src_cluster` to a user (global index).
    pub fn h_to_user(&self, src_cluster: usize, user: usize) -> &[Complex64] {
        let k = self.beams_per_cluster;
        &self.user_row(user)[src_cluster * k..(src_cluster + 1) * k]
    }

    /// `h_{c1,c2,k}`: feeds of cluster `c1` to user `k` of cluster `c2`.
    pub fn h(&self, c1: usize, c2: usize, k: usize) -> &[Complex64] {
        self.h_to_user(c1, c2 * self.beams_per_cluster + k)
    }

    /// FNV-1a over the bit patterns of all gains; identical realizations
    /// give identical checksums.
    pub fn checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for z in &self.gains {
            for word in [z.re.to_bits(), z.im.to_bits()] {
                for byte in word.to_le_bytes() {
                    hash ^= byte as u64;
                    hash = hash.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        hash
    }

    /// Writes the feeds × users matrix as CSV, one row per feed with
    /// interleaved `re,im` columns per user.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let users = self.num_users();
        let header: Vec<String> = (0..users)
            .flat_map(|u| [format!("u{u}_re"), format!("u{u}_im")])
            .collect();
        let write = |out: &mut std::io::BufWriter<_>| -> std::io::Result<()> {
            writeln!(out, "feed,{}", header.join(","))?;
            for f in 0..self.num_feeds {
                write!(out, "{f}")?;
                for u in 0..users {
                    let z = self.feed_gain(f, u);
                    write!(out, ",{:e},{:e}", z.re, z.im)?;
                }
                writeln!(out)?;
            }
            out.flush()
        };
        write(&mut out).map_err(|e| SimError::io(path, e))
    }
}

/// Builds the full channel for one user drop.
pub fn synthesize_channels(
    topology: &Topology,
    drop: &UserDrop,
    budget: &LinkBudget,
    rng_seed: u64,
) -> Result<ChannelRealization> {
    budget.validate()?;
    let nb = topology.num_beams();
    if drop.num_users() != nb {
        return Err(SimError::Inconsistent(format!(
            "user drop has {} users for {nb} beams",
            drop.num_users()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let fades: Vec<RainFade> = (0..nb)
        .map(|_| draw_rain_fade(&mut rng, budget.rain_mu, budget.rain_sigma))
        .collect();

    let lambda = budget.wavelength_m();
    let g_rx = budget.rx_gain_linear();
    let b_max = budget.b_max_linear();
    let mut gains = Vec::with_capacity(nb * nb);
    for (u, fade) in fades.iter().enumerate() {
        let common = g_rx * path_loss_gain(drop.slant_range[u], lambda)? / fade.xi_linear;
        let phase = Complex64::from_polar(1.0, -fade.phi);
        for b in 0..nb {
            let pattern = beam_gain(drop.off_axis_angle(b, u), budget.theta_3db_rad, b_max)?;
            gains.push(phase * (common * pattern).sqrt());
        }
    }

    let mut realization = ChannelRealization::from_gains(topology.beams_per_cluster, nb, gains)?;
    realization.rain_fade_linear = fades.iter().map(|f| f.xi_linear).collect();
    realization.rain_phase = fades.iter().map(|f| f.phi).collect();
    Ok(realization)
}
