#![allow(dead_code)]

use mbsim::linalg::CVector;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Circularly-symmetric complex Gaussian vector with unit variance per entry.
pub fn cn_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect()
}

pub fn to_na(v: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(v)
}

/// `|<a, b>| / (|a| |b|)`.
pub fn alignment(a: &[Complex64], b: &[Complex64]) -> f64 {
    let a = to_na(a);
    let b = to_na(b);
    a.dotc(&b).norm() / (a.norm() * b.norm())
}

/// Largest generalized eigenvector of `(h h^H, M)` computed by whitening
/// with the Hermitian eigendecomposition of `M`.
pub fn dominant_generalized_eigenvector(
    target: &[Complex64],
    leakage: &[CVector],
    noise: f64,
) -> DVector<Complex64> {
    let n = target.len();
    let mut m = DMatrix::<Complex64>::identity(n, n) * Complex64::from(noise);
    for g in leakage {
        let g = to_na(g);
        m += &g * g.adjoint();
    }
    let eig = m.symmetric_eigen();
    let inv_sqrt =
        DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from(1.0 / l.sqrt())));
    let m_inv_sqrt = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    let h = to_na(target);
    let a = &m_inv_sqrt * &h * h.adjoint() * &m_inv_sqrt;
    let a = (&a + a.adjoint()) * Complex64::from(0.5);
    let ea = a.symmetric_eigen();
    let top = ea.eigenvalues.imax();
    let v = &m_inv_sqrt * ea.eigenvectors.column(top);
    let norm = v.norm();
    v / Complex64::from(norm)
}

/// Brute-force sum-rate maximum over the power grid `{i P / steps}` with
/// `Σ p ≤ P` for three streams; `gains[j][l]` as in `EffectiveGainTable`.
pub fn grid_sum_rate_optimum(gains: &[[f64; 3]; 3], noise: f64, p_total: f64, steps: usize) -> f64 {
    let step = p_total / steps as f64;
    let mut best = f64::NEG_INFINITY;
    for a in 0..=steps {
        for b in 0..=steps - a {
            for c in 0..=steps - a - b {
                let p = [a as f64 * step, b as f64 * step, c as f64 * step];
                let mut rate = 0.0;
                for l in 0..3 {
                    let signal = p[l] * gains[l][l];
                    let interference: f64 =
                        (0..3).filter(|&j| j != l).map(|j| p[j] * gains[j][l]).sum();
                    rate += (1.0 + signal / (interference + noise)).log2();
                }
                best = best.max(rate);
            }
        }
    }
    best
}
