//! Command-line front end for power sweeps.
//!
//! Exit codes: 0 on success, 1 on a configuration error, 2 on an I/O error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use mbsim::geometry::LatticeScale;
use mbsim::harness::config::{parse_power_grid, parse_schemes, ConfigOverrides, WORKERS_ENV};
use mbsim::harness::report::{export_report, plot_data_path, write_beam_rows};
use mbsim::harness::{run_sweep_detailed, scenario_topology, SimConfig};
use mbsim::schemes::SchemeKind;
use mbsim::SimError;

#[derive(Debug, Parser)]
#[command(
    name = "simulate",
    version,
    about = "Monte-Carlo per-beam throughput sweep for multi-gateway multibeam satellite forward links",
    after_help = format!(
        "The worker-thread count defaults to all cores; set {WORKERS_ENV} or --workers to override.\n\
         Config files hold `key = value` lines using the long flag names as keys."
    )
)]
struct Cli {
    /// Flat key-value config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Number of Monte-Carlo trials [default: 200].
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed from which every trial seed is derived [default: 1].
    #[arg(long)]
    seed: Option<u64>,

    /// Comma-separated schemes: coloring, rzf, csi, csidata [default: all].
    #[arg(long, value_parser = parse_schemes)]
    schemes: Option<std::vec::Vec<SchemeKind>>,

    /// Per-beam power grid in dBW: start:stop:step or a comma list [default: 0:30:5].
    #[arg(long = "power-dbw", value_parser = parse_power_grid)]
    power_dbw: Option<std::vec::Vec<f64>>,

    /// Edge users each gateway selects per cooperating neighbour [default: 1].
    #[arg(long)]
    m: Option<usize>,

    /// Summary output file [default: results.csv]; a .dat plot file is written alongside.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Summary format: csv or json [default: csv].
    #[arg(long)]
    format: Option<String>,

    /// Use the 4·W·N0 noise term for the colouring scheme.
    #[arg(long)]
    inflated_coloring_noise: bool,

    /// Use the bare W·N0 noise term in the SLNR beamformer design.
    #[arg(long)]
    bare_slnr_noise: bool,

    /// How the 500 km layout diameter sets the beam pitch: beam-footprint
    /// (one beam's 3 dB footprint) or coverage-disk (the whole layout) [default: beam-footprint].
    #[arg(long)]
    lattice: Option<LatticeScale>,

    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,

    /// Relative tolerance of the power-allocation solver [default: 1e-6].
    #[arg(long)]
    tol: Option<f64>,

    /// Iteration cap of the power-allocation solver [default: 500].
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,

    /// Also write per-beam rates of every trial to this CSV file.
    #[arg(long = "beam-rows")]
    beam_rows: Option<PathBuf>,

    /// Also write the beam layout as JSON to this file.
    #[arg(long = "topology-out")]
    topology_out: Option<PathBuf>,

    /// Suppress the summary table on stdout.
    #[arg(long, short)]
    quiet: bool,
}

impl Cli {
    fn overrides(&self) -> Result<ConfigOverrides, SimError> {
        Ok(ConfigOverrides {
            trials: self.trials,
            seed: self.seed,
            schemes: self.schemes.clone(),
            power_dbw: self.power_dbw.clone(),
            m: self.m,
            out: self.out.clone(),
            format: self.format.as_deref().map(str::parse).transpose()?,
            inflated_coloring_noise: self.inflated_coloring_noise.then_some(true),
            bare_slnr_noise: self.bare_slnr_noise.then_some(true),
            lattice: self.lattice,
            workers: self.workers,
            tol: self.tol,
            max_iters: self.max_iters,
        })
    }
}

fn run(cli: &Cli) -> Result<(), SimError> {
    let file = match &cli.config {
        Some(path) => ConfigOverrides::from_file(path)?,
        None => ConfigOverrides::default(),
    };
    let config: SimConfig = file
        .merged_with(cli.overrides()?)
        .apply(SimConfig::default())?;

    if let Some(path) = &cli.topology_out {
        scenario_topology(&config)?.write_json(path)?;
    }

    let started = Instant::now();
    let outcome = run_sweep_detailed(&config, cli.beam_rows.is_some())?;
    export_report(&outcome.report, &config.output, config.format)?;
    if let Some(path) = &cli.beam_rows {
        write_beam_rows(outcome.beam_rows(), path)?;
    }

    if !cli.quiet {
        println!(
            "{} trials, {} schemes, {} power points in {:.1} s",
            config.trials,
            config.schemes.len(),
            config.power_grid_dbw_per_beam.len(),
            started.elapsed().as_secs_f64()
        );
        println!(
            "{:<10} {:>10} {:>14} {:>10}",
            "scheme", "dBW/beam", "Mbit/s/beam", "std.err"
        );
        for c in &outcome.report.cells {
            println!(
                "{:<10} {:>10.1} {:>14.2} {:>10.2}",
                c.scheme, c.per_beam_power_dbw, c.mean_throughput_mbps, c.std_error_mbps
            );
        }
        let skipped: usize = outcome
            .report
            .cells
            .iter()
            .map(|c| c.non_converged_gateways)
            .sum();
        if skipped > 0 {
            eprintln!("warning: {skipped} gateway power solves hit the iteration cap");
        }
        println!(
            "wrote {} and {}",
            config.output.display(),
            plot_data_path(&config.output).display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
