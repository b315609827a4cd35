//! Deterministic artifact rendering.
//!
//! Every document the laboratory emits is either a TOML report or a CSV
//! table. The writers here fix the row order and render floating-point
//! fields with Rust's shortest round-trip notation, so rerunning with the
//! same configuration reproduces each artifact byte for byte and parsing a
//! numeric cell back recovers the exact bits that were written.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::conditions::ConditionReport;
use crate::error::{Error, Result};
use crate::fourier::FourierSample;
use crate::martingale::GapEstimate;
use crate::models::Trajectory;
use crate::quenched::{CenteringDecay, QuenchedRun, TestReport};
use crate::spectral::{SpectralEstimate, SpectralMethod};

/// Render any report document as pretty TOML.
pub fn toml_document<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string_pretty(value).map_err(|err| Error::Parse(format!("TOML render: {err}")))
}

/// Hex SHA-256 of a rendered artifact, as recorded in run manifests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Shortest round-trip rendering of one numeric cell.
fn cell(x: f64) -> String {
    format!("{x}")
}

fn method_name(method: SpectralMethod) -> &'static str {
    match method {
        SpectralMethod::Analytic => "analytic",
        SpectralMethod::CovarianceSeries => "covariance-series",
        SpectralMethod::Empirical => "empirical",
    }
}

/// One sampled path as `k,x` rows, `k` starting at 1.
pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from("k,x\n");
    for (k, x) in trajectory.values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", k + 1, cell(*x)));
    }
    out
}

/// All per-replicate Fourier statistics of a finished experiment,
/// replicate-major, grid order within each replicate.
pub fn samples_csv(run: &QuenchedRun) -> String {
    let mut out = String::from("replicate,t,n,re_s,im_s,re_v,im_v,re_w,im_w,periodogram\n");
    for (replicate, row) in run.samples.iter().enumerate() {
        for sample in row {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                replicate,
                cell(sample.t),
                sample.n,
                cell(sample.s.re),
                cell(sample.s.im),
                cell(sample.v[0]),
                cell(sample.v[1]),
                cell(sample.w[0]),
                cell(sample.w[1]),
                cell(sample.i),
            ));
        }
    }
    out
}

/// Periodogram of one trajectory over a grid, with the analytic density
/// overlay where one exists (empty cells otherwise).
pub fn periodogram_csv(
    samples: &[FourierSample],
    overlay: &[Option<SpectralEstimate>],
) -> Result<String> {
    if samples.len() != overlay.len() {
        return Err(Error::invalid(format!(
            "periodogram table needs one overlay slot per sample: {} vs {}",
            samples.len(),
            overlay.len()
        )));
    }
    let mut out = String::from("t,n,re_s,im_s,periodogram,f,sigma2,method\n");
    for (sample, density) in samples.iter().zip(overlay) {
        let (f, sigma2, method) = match density {
            Some(est) => (cell(est.f), cell(est.sigma2), method_name(est.method)),
            None => (String::new(), String::new(), ""),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            cell(sample.t),
            sample.n,
            cell(sample.s.re),
            cell(sample.s.im),
            cell(sample.i),
            f,
            sigma2,
            method,
        ));
    }
    Ok(out)
}

/// Spectral density table as `t,f,sigma2,method` rows.
pub fn density_csv(estimates: &[SpectralEstimate]) -> String {
    let mut out = String::from("t,f,sigma2,method\n");
    for est in estimates {
        out.push_str(&format!(
            "{},{},{},{}\n",
            cell(est.t),
            cell(est.f),
            cell(est.sigma2),
            method_name(est.method),
        ));
    }
    out
}

/// Martingale approximation gap curve as `n,t,gap,stderr,replicates` rows.
pub fn gap_csv(gaps: &[GapEstimate]) -> String {
    let mut out = String::from("n,t,gap,stderr,replicates\n");
    for gap in gaps {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            gap.n,
            cell(gap.t),
            cell(gap.gap),
            cell(gap.stderr),
            gap.replicates,
        ));
    }
    out
}

/// Conditional-mean decay ladders as `t,n,scaled_mean,variance_over_n` rows
/// (empty variance cell when no analytic covariance exists), one block per
/// frequency in the given order.
pub fn decay_csv(decays: &[CenteringDecay]) -> String {
    let mut out = String::from("t,n,scaled_mean,variance_over_n\n");
    for decay in decays {
        for rung in &decay.rungs {
            let variance = rung.variance_over_n.map(cell).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                cell(decay.t),
                rung.n,
                cell(rung.scaled_mean),
                variance,
            ));
        }
    }
    out
}

/// Every martingale-increment diagnostic of a finished experiment, flattened
/// to `t,a,b,n,max_mean,square_mean,square_sd` rows in grid order.
pub fn raikov_csv(report: &TestReport) -> String {
    let mut out = String::from("t,a,b,n,max_mean,square_mean,square_sd\n");
    for freq in &report.frequencies {
        let Some(diagnostics) = &freq.raikov else { continue };
        for diag in diagnostics {
            for point in &diag.points {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    cell(freq.t),
                    cell(diag.a),
                    cell(diag.b),
                    point.n,
                    cell(point.max_mean),
                    cell(point.square_mean),
                    cell(point.square_sd),
                ));
            }
        }
    }
    out
}

/// Human-readable verdict table for a batch of condition checks:
/// one aligned row per condition, followed by indented evidence notes.
pub fn conditions_table(reports: &[ConditionReport]) -> String {
    let mut rows: Vec<[String; 4]> = vec![[
        "condition".to_string(),
        "verdict".to_string(),
        "series-total".to_string(),
        "tail-bound".to_string(),
    ]];
    for report in reports {
        rows.push([
            report.condition_id.wire_name().to_string(),
            report.verdict.wire_name().to_string(),
            report
                .evidence
                .series
                .as_ref()
                .map(|table| cell(table.total()))
                .unwrap_or_else(|| "-".to_string()),
            report
                .evidence
                .tail_value
                .map(cell)
                .unwrap_or_else(|| "-".to_string()),
        ]);
    }
    let mut widths = [0usize; 4];
    for row in &rows {
        for (w, field) in widths.iter_mut().zip(row) {
            *w = (*w).max(field.len());
        }
    }
    let mut out = String::new();
    for (idx, row) in rows.iter().enumerate() {
        let mut line = String::new();
        for (w, field) in widths.iter().zip(row) {
            line.push_str(&format!("{field:<w$}  "));
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if idx > 0 {
            for note in &reports[idx - 1].evidence.notes {
                out.push_str(&format!("    note: {note}\n"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::Coefficients;
    use crate::conditions::check_mean_square_series;
    use crate::fourier::FrequencyGrid;
    use crate::models::{Innovation, LinearProcess, ProcessSpec};
    use crate::quenched::{
        centering_decay, run_quenched, CenteringMode, ExperimentConfig, OriginPolicy, Tolerances,
    };
    use crate::spectral::spectral_density;

    fn ar1(rho: f64) -> ProcessSpec {
        ProcessSpec::Linear(LinearProcess::ar1(rho, Innovation::standard_normal()).unwrap())
    }

    fn small_run() -> crate::quenched::QuenchedRun {
        let config = ExperimentConfig {
            spec: ar1(0.5),
            origin: OriginPolicy::Drawn,
            grid: FrequencyGrid::explicit(vec![0.7, 2.0]).unwrap(),
            n: 64,
            replicates: 100,
            seed: 11,
            centering: CenteringMode::Conditional,
            tolerances: Tolerances::default(),
            allow_excluded: false,
        };
        run_quenched(&config).unwrap()
    }

    #[test]
    fn numeric_cells_round_trip_exactly() {
        let values = [
            0.1 + 0.2,
            1e-17,
            -0.0,
            std::f64::consts::PI,
            f64::MAX,
            5e-324,
        ];
        for &x in &values {
            let text = super::cell(x);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "cell {text} must round-trip {x:?}");
        }
    }

    #[test]
    fn sample_table_has_one_row_per_replicate_and_frequency() {
        let run = small_run();
        let table = samples_csv(&run);
        let mut lines = table.lines();
        assert_eq!(
            lines.next().unwrap(),
            "replicate,t,n,re_s,im_s,re_v,im_v,re_w,im_w,periodogram"
        );
        assert_eq!(table.lines().count(), 1 + 100 * 2, "header plus R x grid rows");
        let first = table.lines().nth(1).unwrap();
        assert!(first.starts_with("0,0.7,64,"), "rows are replicate-major: {first}");
    }

    #[test]
    fn report_document_round_trips_through_toml() {
        let run = small_run();
        let rendered = toml_document(&run.report).unwrap();
        let parsed: crate::quenched::TestReport = toml::from_str(&rendered).unwrap();
        assert_eq!(parsed, run.report, "TOML text must reproduce the report");
    }

    #[test]
    fn trajectory_rows_are_one_based() {
        let spec = ar1(0.5);
        let sampler = spec.prepare(None, 4).unwrap();
        let driven = sampler.draw(9);
        let table = trajectory_csv(&driven.trajectory);
        assert!(table.starts_with("k,x\n1,"));
        assert_eq!(table.lines().count(), 5);
    }

    #[test]
    fn periodogram_overlay_cells_follow_density_availability() {
        let spec = ar1(0.5);
        let sampler = spec.prepare(None, 64).unwrap();
        let driven = sampler.draw(3);
        let grid = FrequencyGrid::explicit(vec![1.0]).unwrap();
        let samples =
            crate::fourier::fourier_batch(&driven.trajectory.values, &grid, None).unwrap();
        let with = periodogram_csv(&samples, &[spectral_density(&spec, 1.0).ok()]).unwrap();
        assert!(with.lines().nth(1).unwrap().contains("analytic"));
        let without = periodogram_csv(&samples, &[None]).unwrap();
        assert!(without.lines().nth(1).unwrap().ends_with(",,,"));
        assert!(periodogram_csv(&samples, &[]).is_err(), "length mismatch is rejected");
    }

    #[test]
    fn diagnostic_tables_cover_every_rung() {
        let config = ExperimentConfig {
            spec: ar1(0.5),
            origin: OriginPolicy::Drawn,
            grid: FrequencyGrid::explicit(vec![1.0]).unwrap(),
            n: 256,
            replicates: 100,
            seed: 2,
            centering: CenteringMode::Conditional,
            tolerances: Tolerances::default(),
            allow_excluded: false,
        };
        let run = run_quenched(&config).unwrap();
        let table = raikov_csv(&run.report);
        assert_eq!(
            table.lines().count(),
            1 + 2 * 2,
            "two directions x two ladder rungs at n = 256"
        );
        assert!(table.lines().nth(1).unwrap().starts_with("1,1,0,64,"), "{table}");

        let decay = centering_decay(&config.spec, &run.report.origin, 1.0, &[64, 256]).unwrap();
        let table = decay_csv(&[decay]);
        assert_eq!(table.lines().count(), 3, "header plus one row per rung");
        assert!(table.lines().nth(1).unwrap().starts_with("1,64,"), "{table}");
    }

    #[test]
    fn digests_are_stable_and_distinct() {
        let a = sha256_hex(b"report");
        assert_eq!(a.len(), 64);
        assert_eq!(a, sha256_hex(b"report"), "same bytes, same digest");
        assert_ne!(a, sha256_hex(b"report2"));
    }

    #[test]
    fn verdict_table_lists_every_condition() {
        let report = check_mean_square_series(&ar1(0.5)).unwrap();
        let table = conditions_table(&[report]);
        let mut lines = table.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("condition"), "header row first: {header}");
        let row = lines.next().unwrap();
        assert!(row.starts_with("cond-16"), "wire id leads the row: {row}");
        assert!(row.contains("holds-analytic"));
    }
}
