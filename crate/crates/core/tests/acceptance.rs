//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use common::*;
use mbsim::channel::{beam_gain, linear_to_db, path_loss_gain, synthesize_channels, LinkBudget};
use mbsim::geometry::{build_topology_scaled, drop_users, LatticeScale, GEO_ALTITUDE_KM};
use mbsim::harness::{run_sweep, scenario_topology, trial_realization, SimConfig, SweepReport};
use mbsim::power_alloc::{allocate_sumrate, EffectiveGainTable, SolverOptions};
use mbsim::precoding::{rzf_precoder, slnr_beamformer};
use mbsim::schemes::{run_scheme, SchemeConfig, SchemeKind, SchemeResult};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use SchemeKind::{ClusterRzf, Coloring4, HyperClusterCsi, HyperClusterCsiData};

const MID_GRID_DBW: f64 = 15.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct SweepRun {
    report: SweepReport,
    seconds: f64,
    power_grid: Vec<f64>,
}

fn reference_sweep() -> SweepRun {
    let config = SimConfig::default();
    let started = Instant::now();
    let report = run_sweep(&config).expect("reference sweep");
    SweepRun {
        report,
        seconds: started.elapsed().as_secs_f64(),
        power_grid: config.power_grid_dbw_per_beam,
    }
}

fn scheme_ordering(run: &SweepRun) -> Outcome {
    let r = &run.report;
    let chain = [Coloring4, ClusterRzf, HyperClusterCsi, HyperClusterCsiData];
    let mut pass = run.seconds < 300.0;
    let mut parts = Vec::new();
    for pair in chain.windows(2) {
        let g = r.gain(pair[1], pair[0], MID_GRID_DBW).unwrap();
        let significant = g.mean_difference_mbps > 2.0 * g.paired_std_error_mbps;
        pass &= significant;
        parts.push(format!(
            "{}-{} = {:.2} Mbit/s (se {:.2})",
            pair[1].name(),
            pair[0].name(),
            g.mean_difference_mbps,
            g.paired_std_error_mbps
        ));
    }
    let trials = r.cell(Coloring4, MID_GRID_DBW).unwrap().trials;
    pass &= trials >= 200;
    outcome(
        pass,
        format!(
            "{trials} trials at {MID_GRID_DBW} dBW, {}; sweep {:.1} s",
            parts.join(", "),
            run.seconds
        ),
    )
}

fn quantitative_gains(run: &SweepRun) -> Outcome {
    let r = &run.report;
    let over_col = r
        .gain(HyperClusterCsiData, Coloring4, MID_GRID_DBW)
        .unwrap()
        .relative_gain;
    let over_rzf = r
        .gain(HyperClusterCsiData, ClusterRzf, MID_GRID_DBW)
        .unwrap()
        .relative_gain;
    let pass = (0.25..=0.60).contains(&over_col) && (0.05..=0.30).contains(&over_rzf);
    outcome(
        pass,
        format!(
            "csidata vs coloring {:+.1}% (want 25..60%), vs rzf {:+.1}% (want 5..30%)",
            100.0 * over_col,
            100.0 * over_rzf
        ),
    )
}

fn marginal_csi_gain(run: &SweepRun) -> Outcome {
    let gains: Vec<(f64, f64)> = run
        .power_grid
        .iter()
        .map(|&p| {
            (
                p,
                run.report
                    .gain(HyperClusterCsi, ClusterRzf, p)
                    .unwrap()
                    .relative_gain,
            )
        })
        .collect();
    let pass = gains.iter().all(|&(_, g)| (-0.02..=0.10).contains(&g));
    let text: Vec<String> = gains
        .iter()
        .map(|(p, g)| format!("{p}: {:+.2}%", 100.0 * g))
        .collect();
    outcome(pass, format!("csi vs rzf {}", text.join(", ")))
}

fn slnr_oracle() -> Outcome {
    let mut rng = rng(4);
    let mut worst: f64 = 1.0;
    for _ in 0..1000 {
        let target = cn_vector(&mut rng, 7);
        let intra: Vec<_> = (0..6).map(|_| cn_vector(&mut rng, 7)).collect();
        let inter: Vec<_> = (0..rng.random_range(0..5))
            .map(|_| cn_vector(&mut rng, 7))
            .collect();
        let noise = 10f64.powf(rng.random_range(-3.0..1.0));
        let ri: Vec<&[Complex64]> = intra.iter().map(Vec::as_slice).collect();
        let ro: Vec<&[Complex64]> = inter.iter().map(Vec::as_slice).collect();
        let w = slnr_beamformer(&target, &ri, &ro, noise).unwrap();
        let all: Vec<_> = intra.iter().chain(&inter).cloned().collect();
        let oracle = dominant_generalized_eigenvector(&target, &all, noise);
        worst = worst.min(alignment(&w, oracle.as_slice()));
    }
    outcome(
        worst >= 1.0 - 1e-9,
        format!(
            "1000 instances, min |<w, w_oracle>| = 1 - {:.2e}",
            1.0 - worst
        ),
    )
}

fn rzf_limits() -> Outcome {
    let mut rng = rng(5);
    let (mut worst_zf, mut worst_mf): (f64, f64) = (1.0, 1.0);
    for _ in 0..200 {
        let hs: Vec<_> = (0..7).map(|_| cn_vector(&mut rng, 7)).collect();
        let refs: Vec<&[Complex64]> = hs.iter().map(Vec::as_slice).collect();
        let g = DMatrix::from_fn(7, 7, |i, k| hs[k][i]);
        let zf = g.adjoint().pseudo_inverse(1e-14).unwrap();
        let small = rzf_precoder(&refs, 1e-12).unwrap();
        let large = rzf_precoder(&refs, 1e12).unwrap();
        for k in 0..7 {
            let col: Vec<Complex64> = zf.column(k).iter().copied().collect();
            worst_zf = worst_zf.min(alignment(&small[k], &col));
            worst_mf = worst_mf.min(alignment(&large[k], &hs[k]));
        }
    }
    outcome(
        1.0 - worst_zf <= 1e-6 && 1.0 - worst_mf <= 1e-6,
        format!(
            "200 channels, pseudo-inverse gap {:.2e}, matched-filter gap {:.2e}",
            1.0 - worst_zf,
            1.0 - worst_mf
        ),
    )
}

fn power_solver_vs_grid() -> Outcome {
    let mut rng = rng(6);
    let mut worst_ratio = f64::INFINITY;
    let mut monotone = true;
    for _ in 0..100 {
        let mut g = [[0.0; 3]; 3];
        for (j, row) in g.iter_mut().enumerate() {
            for (l, x) in row.iter_mut().enumerate() {
                *x = if j == l {
                    rng.random_range(0.3..3.0)
                } else {
                    rng.random_range(0.0..1.0)
                };
            }
        }
        let noise = 10f64.powf(rng.random_range(-2.0..0.5));
        let p_total = rng.random_range(0.5..5.0);
        let table =
            EffectiveGainTable::new(3, g.iter().flatten().copied().collect(), noise).unwrap();
        let sol = allocate_sumrate(&table, p_total, SolverOptions::default()).unwrap();
        monotone &= sol.history.windows(2).all(|w| w[1] >= w[0]);
        let grid = grid_sum_rate_optimum(&g, noise, p_total, 200);
        worst_ratio = worst_ratio.min(sol.objective / grid);
    }
    outcome(
        worst_ratio >= 0.98 && monotone,
        format!("100 instances, worst solver/grid = {worst_ratio:.5}, monotone = {monotone}"),
    )
}

fn beam_pattern() -> Outcome {
    let b = LinkBudget::default();
    let b_max = b.b_max_linear();
    let at_center = beam_gain(0.0, b.theta_3db_rad, b_max).unwrap();
    let ratio = beam_gain(b.theta_3db_rad, b.theta_3db_rad, b_max).unwrap() / b_max;
    outcome(
        at_center == b_max && (ratio - 0.5).abs() <= 0.005,
        format!(
            "b(0) = b_max: {}, b(θ3dB)/b_max = {ratio:.7}",
            at_center == b_max
        ),
    )
}

fn free_space_loss() -> Outcome {
    let b = LinkBudget::default();
    let fsl = -linear_to_db(path_loss_gain(GEO_ALTITUDE_KM, b.wavelength_m()).unwrap());
    outcome(
        (fsl - 210.0).abs() <= 1.0,
        format!("{fsl:.3} dB at {GEO_ALTITUDE_KM} km, 20 GHz"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_simulate"))
            .env_remove("MBSIM_WORKERS")
            .args([
                "--trials",
                "12",
                "--seed",
                "2718",
                "--power-dbw",
                "0:30:5",
                "-q",
                "--workers",
                workers,
            ])
            .arg("--out")
            .arg(&out)
            .status()
            .expect("simulate");
        assert!(status.success());
        std::fs::read(&out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "4");
    outcome(
        a == b && a == c,
        format!(
            "{} bytes, repeat equal: {}, 1 vs 4 workers equal: {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

fn same_fields(a: &SchemeResult, b: &SchemeResult) -> bool {
    a.sinr == b.sinr
        && a.per_user_rate == b.per_user_rate
        && a.per_beam_throughput == b.per_beam_throughput
        && a.diagnostics == b.diagnostics
        && a.beamformers == b.beamformers
}

fn reduction_identities() -> Outcome {
    let config = SimConfig::default();
    let budget = config.budget;
    let topo = scenario_topology(&config).unwrap();
    let mut identical = true;
    for trial in 0..5 {
        let (_, ch) = trial_realization(&config, &topo, trial).unwrap();
        for &dbw in &config.power_grid_dbw_per_beam {
            let p = config.p_total_per_gw(dbw);
            let mut data = SchemeConfig::new(HyperClusterCsiData, p);
            data.m_per_neighbour = 0;
            let mut csi = data;
            csi.kind = HyperClusterCsi;
            identical &= same_fields(
                &run_scheme(&topo, &ch, &budget, &data).unwrap(),
                &run_scheme(&topo, &ch, &budget, &csi).unwrap(),
            );
        }
    }

    let single = build_topology_scaled(500.0, 7, 1, LatticeScale::BeamFootprint).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let ch = synthesize_channels(&single, &drop_users(&single, seed), &budget, seed ^ 0xabc)
            .unwrap();
        for &dbw in &config.power_grid_dbw_per_beam {
            let res = run_scheme(
                &single,
                &ch,
                &budget,
                &SchemeConfig::new(ClusterRzf, config.p_total_per_gw(dbw)),
            )
            .unwrap();
            for (a, d) in res.per_user_rate.iter().zip(&res.diagnostics.design_rate) {
                worst = worst.max((a - d).abs());
            }
        }
    }
    outcome(
        identical && worst <= 1e-9,
        format!("m = 0 data sharing equals csi-only: {identical}; single-cluster rzf max |achieved - design| = {worst:.2e}"),
    )
}

fn main() -> ExitCode {
    let sweep = reference_sweep();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("scheme ordering", Box::new(|| scheme_ordering(&sweep))),
        (
            "quantitative gains",
            Box::new(|| quantitative_gains(&sweep)),
        ),
        (
            "marginal csi-only gain",
            Box::new(|| marginal_csi_gain(&sweep)),
        ),
        ("slnr oracle", Box::new(slnr_oracle)),
        ("rzf limits", Box::new(rzf_limits)),
        ("power solver vs grid", Box::new(power_solver_vs_grid)),
        ("beam pattern", Box::new(beam_pattern)),
        ("free-space loss", Box::new(free_space_loss)),
        ("determinism", Box::new(determinism)),
        ("reduction identities", Box::new(reduction_identities)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<24} {}  {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
