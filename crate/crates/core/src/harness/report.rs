//! Sweep aggregation and export.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{OutputFormat, SimConfig};
use super::TrialRecord;
use crate::error::{Result, SimError};
use crate::schemes::SchemeKind;

/// Mean per-beam throughput of one scheme at one power point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub scheme: String,
    pub per_beam_power_dbw: f64,
    pub mean_throughput_mbps: f64,
    pub std_error_mbps: f64,
    pub trials: usize,
    /// Per-trial mean per-beam throughputs, in trial order.
    #[serde(skip)]
    pub samples_mbps: Vec<f64>,
    #[serde(skip)]
    pub mean_spectral_efficiency: f64,
    #[serde(skip)]
    pub non_converged_gateways: usize,
}

/// Paired comparison of `scheme` against `baseline` at one power point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeGain {
    pub per_beam_power_dbw: f64,
    pub scheme: String,
    pub baseline: String,
    /// `mean(scheme) / mean(baseline) - 1`.
    pub relative_gain: f64,
    pub mean_difference_mbps: f64,
    /// Standard error of the per-trial paired difference.
    pub paired_std_error_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub relative_gains: Vec<RelativeGain>,
}

/// Mean and standard error of the mean.
pub fn mean_and_std_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl SweepReport {
    /// Reduces trial records (in trial order) into per-cell statistics.
    pub fn aggregate(config: &SimConfig, trials: &[TrialRecord]) -> Self {
        let mut cells = Vec::new();
        for &kind in &config.schemes {
            for &dbw in &config.power_grid_dbw_per_beam {
                let picked: Vec<_> = trials
                    .iter()
                    .filter_map(|t| {
                        t.cells
                            .iter()
                            .find(|c| c.scheme == kind && c.per_beam_power_dbw == dbw)
                    })
                    .collect();
                let samples: Vec<f64> = picked.iter().map(|c| c.mean_throughput_mbps).collect();
                let (mean, se) = mean_and_std_error(&samples);
                let rates: Vec<f64> = picked.iter().map(|c| c.mean_rate_bps_hz).collect();
                cells.push(SweepCell {
                    scheme: kind.name().to_string(),
                    per_beam_power_dbw: dbw,
                    mean_throughput_mbps: mean,
                    std_error_mbps: se,
                    trials: samples.len(),
                    samples_mbps: samples,
                    mean_spectral_efficiency: mean_and_std_error(&rates).0,
                    non_converged_gateways: picked.iter().map(|c| c.non_converged_gateways).sum(),
                });
            }
        }
        let mut report = SweepReport {
            cells,
            relative_gains: Vec::new(),
        };
        report.relative_gains =
            report.paired_gains(&config.schemes, &config.power_grid_dbw_per_beam);
        report
    }

    pub fn cell(&self, scheme: SchemeKind, per_beam_power_dbw: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.scheme == scheme.name() && c.per_beam_power_dbw == per_beam_power_dbw)
    }

    pub fn gain(
        &self,
        scheme: SchemeKind,
        baseline: SchemeKind,
        per_beam_power_dbw: f64,
    ) -> Option<&RelativeGain> {
        self.relative_gains.iter().find(|g| {
            g.scheme == scheme.name()
                && g.baseline == baseline.name()
                && g.per_beam_power_dbw == per_beam_power_dbw
        })
    }

    fn paired_gains(&self, schemes: &[SchemeKind], grid: &[f64]) -> Vec<RelativeGain> {
        let mut ordered = schemes.to_vec();
        ordered.sort();
        let mut out = Vec::new();
        for &dbw in grid {
            for (i, &baseline) in ordered.iter().enumerate() {
                for &scheme in &ordered[i + 1..] {
                    let (Some(a), Some(b)) = (self.cell(scheme, dbw), self.cell(baseline, dbw))
                    else {
                        continue;
                    };
                    let diffs: Vec<f64> = a
                        .samples_mbps
                        .iter()
                        .zip(&b.samples_mbps)
                        .map(|(x, y)| x - y)
                        .collect();
                    let (mean_diff, se) = mean_and_std_error(&diffs);
                    out.push(RelativeGain {
                        per_beam_power_dbw: dbw,
                        scheme: scheme.name().to_string(),
                        baseline: baseline.name().to_string(),
                        relative_gain: a.mean_throughput_mbps / b.mean_throughput_mbps - 1.0,
                        mean_difference_mbps: mean_diff,
                        paired_std_error_mbps: se,
                    });
                }
            }
        }
        out
    }
}

/// CSV row layout of the sweep summary.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    scheme: String,
    per_beam_power_dbw: f64,
    mean_throughput_mbps: f64,
    std_error_mbps: f64,
    trials: usize,
}

/// Path of the plot-data file written next to `path`.
pub fn plot_data_path(path: &Path) -> PathBuf {
    path.with_extension("dat")
}

/// Writes the report in the requested format plus a whitespace-separated
/// plot-data companion (`.dat`) with one throughput column per scheme.
pub fn export_report(report: &SweepReport, path: &Path, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(report, path)?,
        OutputFormat::Json => {
            let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
            let mut w = std::io::BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, report)
                .map_err(|e| SimError::io(path, e.into()))?;
            w.flush().map_err(|e| SimError::io(path, e))?;
        }
    }
    let dat = plot_data_path(path);
    if dat != path {
        write_plot_data(report, &dat)?;
    }
    Ok(())
}

fn write_csv(report: &SweepReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    if report.cells.is_empty() {
        w.write_record([
            "scheme",
            "per_beam_power_dbw",
            "mean_throughput_mbps",
            "std_error_mbps",
            "trials",
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    for c in &report.cells {
        w.serialize(CsvRow {
            scheme: c.scheme.clone(),
            per_beam_power_dbw: c.per_beam_power_dbw,
            mean_throughput_mbps: c.mean_throughput_mbps,
            std_error_mbps: c.std_error_mbps,
            trials: c.trials,
        })
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> SimError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SimError::io(path, io),
        other => SimError::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn write_plot_data(report: &SweepReport, path: &Path) -> Result<()> {
    let mut schemes: Vec<&str> = Vec::new();
    let mut powers: Vec<f64> = Vec::new();
    for c in &report.cells {
        if !schemes.contains(&c.scheme.as_str()) {
            schemes.push(&c.scheme);
        }
        if !powers.contains(&c.per_beam_power_dbw) {
            powers.push(c.per_beam_power_dbw);
        }
    }
    let lookup = |s: &str, p: f64| {
        report
            .cells
            .iter()
            .find(|c| c.scheme == s && c.per_beam_power_dbw == p)
    };
    let mut text = String::new();
    let blocks: [(&str, fn(&SweepCell) -> f64); 2] = [
        ("mean per-beam throughput, Mbit/s", |c| {
            c.mean_throughput_mbps
        }),
        ("mean spectral efficiency, bit/s/Hz", |c| {
            c.mean_spectral_efficiency
        }),
    ];
    for (i, (title, value)) in blocks.iter().enumerate() {
        if i > 0 {
            text.push_str("\n\n");
        }
        text.push_str(&format!(
            "# {title}\n# per_beam_power_dbw {}\n",
            schemes.join(" ")
        ));
        for &p in &powers {
            text.push_str(&p.to_string());
            for s in &schemes {
                match lookup(s, p) {
                    Some(c) => text.push_str(&format!(" {}", value(c))),
                    None => text.push_str(" NaN"),
                }
            }
            text.push('\n');
        }
    }
    std::fs::write(path, text).map_err(|e| SimError::io(path, e))
}

/// Reads the summary cells back from an exported CSV file.
pub fn read_report_csv(path: &Path) -> Result<Vec<SweepCell>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| csv_error(path, e))?;
            Ok(SweepCell {
                scheme: row.scheme,
                per_beam_power_dbw: row.per_beam_power_dbw,
                mean_throughput_mbps: row.mean_throughput_mbps,
                std_error_mbps: row.std_error_mbps,
                trials: row.trials,
                samples_mbps: Vec::new(),
                mean_spectral_efficiency: 0.0,
                non_converged_gateways: 0,
            })
        })
        .collect()
}

/// Writes per-beam rows (trial, scheme, power, beam, rate, throughput).
pub fn write_beam_rows<'a>(
    rows: impl IntoIterator<Item = &'a super::BeamRow>,
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut any = false;
    for row in rows {
        any = true;
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    if !any {
        w.write_record([
            "trial",
            "scheme",
            "per_beam_power_dbw",
            "beam",
            "rate_bps_hz",
            "throughput_mbps",
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_error_basics() {
        assert_eq!(mean_and_std_error(&[]), (0.0, 0.0));
        assert_eq!(mean_and_std_error(&[3.0]), (3.0, 0.0));
        let (m, se) = mean_and_std_error(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        assert!((se - ((2.25 + 0.25 + 0.25 + 2.25) / 3.0 / 4.0f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_report_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        export_report(&SweepReport::default(), &path, OutputFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.trim_end(),
            "scheme,per_beam_power_dbw,mean_throughput_mbps,std_error_mbps,trials"
        );
        assert!(read_report_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn io_errors_carry_the_path() {
        let path = Path::new("/nonexistent-dir/x/report.csv");
        let err = export_report(&SweepReport::default(), path, OutputFormat::Csv).unwrap_err();
        assert!(matches!(err, SimError::Io { .. }));
        assert!(err.to_string().contains("report.csv"));
    }
}
