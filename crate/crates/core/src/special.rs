//! Bessel functions of the first kind for integer order.

use std::f64::consts::PI;

/// Below this argument the ascending series converges without visible
/// cancellation; above it Bessel's integral is used instead.
const SERIES_LIMIT: f64 = 4.0;

/// `J_n(x)` for integer order `n >= 0` and finite `x`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    if x < 0.0 {
        // J_n(-x) = (-1)^n J_n(x)
        let v = bessel_j(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x < SERIES_LIMIT {
        ascending_series(n, x)
    } else {
        bessel_integral(n, x)
    }
}

/// `J_n(x) / x^n`, accurate as `x -> 0` where it tends to `1 / (2^n n!)`.
pub fn bessel_j_scaled(n: u32, x: f64) -> f64 {
    if x.abs() < SERIES_LIMIT {
        let half = 0.5 * x;
        let mut term = 1.0;
        for k in 1..=n {
            term /= 2.0 * k as f64;
        }
        series_sum(term, half * half, n)
    } else {
        bessel_j(n, x) / x.powi(n as i32)
    }
}

fn ascending_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= half / k as f64;
    }
    series_sum(lead, half * half, n)
}

// sum_{m>=0} lead * (-q)^m / (m! (m+n)!/n!)
fn series_sum(lead: f64, q: f64, n: u32) -> f64 {
    let mut term = lead;
    let mut sum = lead;
    for m in 1..200u32 {
        term *= -q / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs() * 1e-2 {
            break;
        }
    }
    sum
}

// J_n(x) = (1/2π) ∫_0^{2π} cos(nτ - x sin τ) dτ; the trapezoid rule on a full
// period of an analytic integrand converges geometrically once the node
// count exceeds x + n by a margin.
fn bessel_integral(n: u32, x: f64) -> f64 {
    let nodes = 2 * (x.ceil() as usize + n as usize) + 48;
    let h = 2.0 * PI / nodes as f64;
    let nf = n as f64;
    let sum: f64 = (0..nodes)
        .map(|i| {
            let t = i as f64 * h;
            (nf * t - x * t.sin()).cos()
        })
        .sum();
    sum / nodes as f64
}
