mod common;

use common::*;
use mbsim::channel::{
    beam_gain, draw_rain_fade, linear_to_db, path_loss_gain, synthesize_channels, LinkBudget,
};
use mbsim::geometry::{build_topology_scaled, LatticeScale, UserDrop};
use mbsim::power_alloc::{allocate_sumrate, EffectiveGainTable, SolverOptions};
use mbsim::precoding::{rzf_precoder, slnr_beamformer, slnr_value};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

// (degrees, b/b_max) evaluated with scipy.special.jv
const PATTERN_REFERENCE: &[(f64, f64)] = &[
    (0.1, 0.9588903591105689),
    (0.2, 0.8445662870305389),
    (0.4, 0.5000004083327869),
    (0.6, 0.19473035806958905),
    (0.8, 0.04223910206866427),
    (1.0, 0.0027910307494099337),
    (1.5, 8.528271661092202e-05),
];

#[test]
fn beam_pattern_matches_reference() {
    let t3 = 0.4f64.to_radians();
    for &(deg, expected) in PATTERN_REFERENCE {
        let got = beam_gain(deg.to_radians(), t3, 1.0).unwrap();
        assert!(
            (got - expected).abs() <= 1e-12 * expected.max(1e-3),
            "{deg}°: {got} vs {expected}"
        );
    }
}

#[test]
fn link_budget_reference_values() {
    let b = LinkBudget::default();
    let fsl_db = -linear_to_db(path_loss_gain(35_786.0, b.wavelength_m()).unwrap());
    assert!((fsl_db - 209.54264628708657).abs() < 1e-9, "{fsl_db}");
    assert!((b.noise_power() - 1.4289717150000002e-12).abs() < 1e-24);
}

fn clear_sky_budget() -> LinkBudget {
    LinkBudget {
        rain_mu: -700.0,
        rain_sigma: 0.0,
        ..LinkBudget::default()
    }
}

#[test]
fn clear_sky_gain_at_beam_center() {
    let topo = build_topology_scaled(500.0, 7, 19, LatticeScale::BeamFootprint).unwrap();
    let drop = UserDrop::from_positions(&topo, topo.beam_centers.clone()).unwrap();
    let ch = synthesize_channels(&topo, &drop, &clear_sky_budget(), 3).unwrap();
    // G_rx (λ/4πd)² b_max at nadir, independent evaluation
    let expected = 2.6045660258564876e-12;
    let got = ch.feed_gain(0, 0).norm_sqr();
    assert!((got / expected - 1.0).abs() < 1e-9, "{got}");
    let snr_per_watt = got / clear_sky_budget().noise_power();
    assert!((snr_per_watt - 1.822685500710899).abs() < 1e-8);
}

#[test]
fn equidistant_user_sees_equal_gains_from_both_beams() {
    let topo = build_topology_scaled(500.0, 7, 19, LatticeScale::BeamFootprint).unwrap();
    // a pair mirrored about the nadir plane, so the midpoint is equidistant
    // in off-axis angle as well as on the ground
    let radius = |i: usize| topo.beam_centers[i][0].hypot(topo.beam_centers[i][1]);
    let (a, b) = topo
        .adjacent_beam_pairs()
        .into_iter()
        .find(|&(a, b)| radius(a) > 0.0 && (radius(a) - radius(b)).abs() < 1e-9)
        .unwrap();
    let (pa, pb) = (topo.beam_centers[a], topo.beam_centers[b]);
    let mut positions = topo.beam_centers.clone();
    positions[a] = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
    let drop = UserDrop::from_positions(&topo, positions).unwrap();
    let ch = synthesize_channels(&topo, &drop, &LinkBudget::default(), 11).unwrap();
    let (ga, gb) = (ch.feed_gain(a, a).norm(), ch.feed_gain(b, a).norm());
    assert!((ga / gb - 1.0).abs() < 1e-12, "{ga} {gb}");
}

#[test]
fn users_at_beam_centers_hear_their_own_feed_loudest() {
    let topo = build_topology_scaled(500.0, 7, 19, LatticeScale::BeamFootprint).unwrap();
    let drop = UserDrop::from_positions(&topo, topo.beam_centers.clone()).unwrap();
    let ch = synthesize_channels(&topo, &drop, &LinkBudget::default(), 5).unwrap();
    for u in 0..topo.num_beams() {
        let own = ch.feed_gain(u, u).norm_sqr();
        for f in (0..topo.num_beams()).filter(|&f| f != u) {
            assert!(ch.feed_gain(f, u).norm_sqr() < own);
        }
    }
}

#[test]
fn rain_log_attenuation_moments() {
    let (mu, sigma) = (-3.4249, 1.5768);
    let mut rng = rng(2024);
    let n = 200_000;
    let logs: Vec<f64> = (0..n)
        .map(|_| {
            let f = draw_rain_fade(&mut rng, mu, sigma);
            assert!(f.xi_linear >= 1.0);
            assert!((0.0..2.0 * std::f64::consts::PI).contains(&f.phi));
            linear_to_db(f.xi_linear).ln()
        })
        .collect();
    let mean = logs.iter().sum::<f64>() / n as f64;
    let var = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(
        (mean - mu).abs() < 4.0 * sigma / (n as f64).sqrt(),
        "{mean}"
    );
    assert!((var.sqrt() - sigma).abs() < 0.01, "{}", var.sqrt());
}

#[test]
fn slnr_matches_generalized_eigenvector_across_shapes() {
    let mut rng = rng(77);
    for case in 0..200 {
        let n = 2 + case % 8;
        // includes more leakage channels than dimensions
        let leaks = rng.random_range(0..2 * n);
        let target = cn_vector(&mut rng, n);
        let leakage: Vec<_> = (0..leaks).map(|_| cn_vector(&mut rng, n)).collect();
        let noise = 10f64.powf(rng.random_range(-3.0..1.0));
        let refs: Vec<&[Complex64]> = leakage.iter().map(Vec::as_slice).collect();
        let w = slnr_beamformer(&target, &refs, &[], noise).unwrap();
        let oracle = dominant_generalized_eigenvector(&target, &leakage, noise);
        assert!(
            alignment(&w, oracle.as_slice()) >= 1.0 - 1e-9,
            "case {case}"
        );
        let best = slnr_value(&w, &target, &refs, noise);
        for _ in 0..20 {
            let v = cn_vector(&mut rng, n);
            assert!(slnr_value(&v, &target, &refs, noise) <= best * (1.0 + 1e-12));
        }
    }
}

#[test]
fn rzf_limits_match_pseudo_inverse_and_matched_filter() {
    let mut rng = rng(9);
    for _ in 0..100 {
        let hs: Vec<_> = (0..7).map(|_| cn_vector(&mut rng, 7)).collect();
        let refs: Vec<&[Complex64]> = hs.iter().map(Vec::as_slice).collect();
        // column k of pinv(G^H) is the zero-forcing direction of user k
        let g = DMatrix::from_fn(7, 7, |i, k| hs[k][i]);
        let zf = g.adjoint().pseudo_inverse(1e-14).unwrap();
        let small = rzf_precoder(&refs, 1e-12).unwrap();
        let large = rzf_precoder(&refs, 1e12).unwrap();
        for k in 0..7 {
            let col: Vec<Complex64> = zf.column(k).iter().copied().collect();
            assert!(alignment(&small[k], &col) >= 1.0 - 1e-6);
            assert!(alignment(&large[k], &hs[k]) >= 1.0 - 1e-6);
        }
    }
}

#[test]
fn rzf_cross_talk_vanishes_at_small_regularization() {
    let mut rng = rng(10);
    let hs: Vec<_> = (0..5).map(|_| cn_vector(&mut rng, 7)).collect();
    let refs: Vec<&[Complex64]> = hs.iter().map(Vec::as_slice).collect();
    let w = rzf_precoder(&refs, 1e-12).unwrap();
    for j in 0..5 {
        for l in (0..5).filter(|&l| l != j) {
            assert!(mbsim::linalg::dot_h(&w[j], &hs[l]).norm() < 1e-9);
        }
    }
}

#[test]
fn power_solver_close_to_grid_search() {
    let mut rng = rng(31);
    for _ in 0..10 {
        let mut g = [[0.0; 3]; 3];
        for (j, row) in g.iter_mut().enumerate() {
            for (l, x) in row.iter_mut().enumerate() {
                *x = if j == l {
                    rng.random_range(0.5..2.0)
                } else {
                    rng.random_range(0.0..0.6)
                };
            }
        }
        let noise = rng.random_range(0.01..1.0);
        let table =
            EffectiveGainTable::new(3, g.iter().flatten().copied().collect(), noise).unwrap();
        let sol = allocate_sumrate(&table, 1.0, SolverOptions::default()).unwrap();
        let grid = grid_sum_rate_optimum(&g, noise, 1.0, 200);
        assert!(
            sol.objective >= grid * (1.0 - 0.02),
            "{} vs {grid}",
            sol.objective
        );
        assert!(sol.powers.is_feasible(1.0));
        assert!(sol.history.windows(2).all(|w| w[1] >= w[0]));
    }
}
