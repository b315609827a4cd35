//! Command implementations.
//!
//! Each command reads its config section, runs the corresponding library
//! operations, and returns its artifacts as named in-memory documents plus a
//! list of failed checks. The caller writes the files, assembles the
//! manifest, and turns the failure list into the exit code. Commands print
//! nothing themselves; the returned summary is the only console output, so
//! artifacts stay byte-deterministic.

use num_complex::Complex64;
use serde::Serialize;

use qclt::conditions::{
    check_coefficient_log_series, check_coupling_integral, check_functional_linear,
    check_increment_series, check_map_regime, check_mean_square_series, check_mixing_series,
    check_pathwise_mean_series, check_rotated_mean_series, ConditionReport, Verdict,
};
use qclt::fourier::fourier_batch;
use qclt::martingale::{
    approximation_gap, conditional_mean_s, telescoping_decomposition, GapEstimate,
    TELESCOPING_TOL,
};
use qclt::models::{ProcessSpec, QuenchedOrigin, Trajectory};
use qclt::quenched::{
    centering_decay, run_quenched, CenteringDecay, ExperimentConfig, FrequencyReport,
    OriginPolicy,
};
use qclt::report::{
    conditions_table, decay_csv, gap_csv, periodogram_csv, raikov_csv, samples_csv,
    toml_document, trajectory_csv,
};
use qclt::seeding::derive_seed;
use qclt::spectral::{exact_variance_s, spectral_density};
use qclt::{Error, Result};

use crate::config::RunConfig;

/// What one command produced: named artifacts, failed checks, and the
/// console summary.
pub struct CommandOutcome {
    /// `(file name, contents)` pairs, written in order to the output dir.
    pub artifacts: Vec<(String, String)>,
    pub failures: Vec<String>,
    pub summary: String,
}

fn missing_section(name: &str) -> Error {
    Error::invalid(format!("config has no [{name}] section"))
}

/// Round for console summaries only; artifacts carry full precision.
fn short(x: f64) -> String {
    format!("{x:.4}")
}

fn draw_trajectory(
    spec: &ProcessSpec,
    origin: &Option<QuenchedOrigin>,
    n: usize,
    stream: u64,
) -> Result<Trajectory> {
    match origin {
        None => spec.sample_stationary(n, stream),
        Some(origin) => spec.sample_quenched(origin, n, stream),
    }
}

/// Sample one trajectory and emit it as CSV.
pub fn cmd_simulate(config: &RunConfig) -> Result<CommandOutcome> {
    let section = config.simulate.as_ref().ok_or_else(|| missing_section("simulate"))?;
    let stream = derive_seed(config.seed, "cli.simulate", 0);
    let trajectory = draw_trajectory(&config.process, &section.origin, section.n, stream)?;
    let law = if section.origin.is_some() { "quenched" } else { "stationary" };
    Ok(CommandOutcome {
        artifacts: vec![("trajectory.csv".to_string(), trajectory_csv(&trajectory))],
        failures: Vec::new(),
        summary: format!(
            "simulate: family={} n={} law={law} -> trajectory.csv\n",
            config.process.family_name(),
            section.n,
        ),
    })
}

/// Fourier statistics of one trajectory over a grid, with the analytic
/// density overlay where one exists.
pub fn cmd_periodogram(config: &RunConfig) -> Result<CommandOutcome> {
    let section = config.periodogram.as_ref().ok_or_else(|| missing_section("periodogram"))?;
    let grid = section.frequencies.resolve(config.seed)?;
    let stream = derive_seed(config.seed, "cli.periodogram", 0);
    let trajectory = draw_trajectory(&config.process, &section.origin, section.n, stream)?;
    let samples = fourier_batch(&trajectory.values, &grid, None)?;
    let overlay: Vec<_> = grid
        .points()
        .iter()
        .map(|&t| spectral_density(&config.process, t).ok())
        .collect();
    let with_density = overlay.iter().flatten().count();
    let table = periodogram_csv(&samples, &overlay)?;
    Ok(CommandOutcome {
        artifacts: vec![("periodogram.csv".to_string(), table)],
        failures: Vec::new(),
        summary: format!(
            "periodogram: family={} n={} points={} analytic-overlay={with_density} -> periodogram.csv\n",
            config.process.family_name(),
            section.n,
            grid.len(),
        ),
    })
}

fn frequency_failures(freq: &FrequencyReport, tol: &qclt::quenched::Tolerances) -> Vec<String> {
    let mut failures = Vec::new();
    let t = freq.t;
    if !freq.flags.variance_ok {
        failures.push(format!(
            "t={t}: component variances [{}, {}] miss the target {} by more than {}",
            freq.covariance[0][0],
            freq.covariance[1][1],
            freq.target_component_variance,
            tol.variance_relative_max,
        ));
    }
    if !freq.flags.cross_correlation_ok {
        failures.push(format!(
            "t={t}: cross-correlation {} is at least {}",
            freq.cross_correlation, tol.cross_correlation_max,
        ));
    }
    if !freq.flags.ks_ok {
        failures.push(format!(
            "t={t}: KS distances [{}, {}] reach {}",
            freq.ks[0], freq.ks[1], tol.ks_max,
        ));
    }
    if !freq.flags.periodogram_ok {
        if let Some(stats) = &freq.periodogram {
            failures.push(format!(
                "t={t}: periodogram mean ratio {} outside [{}, {}] or KS {} reaches {}",
                stats.mean_ratio,
                tol.periodogram_mean_low,
                tol.periodogram_mean_high,
                stats.ks_exponential,
                tol.periodogram_ks_max,
            ));
        }
    }
    failures
}

/// Quenched Monte Carlo: replicated futures from one frozen past, graded
/// against the limit law, plus the optional conditional-mean decay ladder.
pub fn cmd_quenched(config: &RunConfig) -> Result<CommandOutcome> {
    let section = config.quenched.as_ref().ok_or_else(|| missing_section("quenched"))?;
    let experiment = ExperimentConfig {
        spec: config.process.clone(),
        origin: match &section.origin {
            Some(origin) => OriginPolicy::Explicit { origin: origin.clone() },
            None => OriginPolicy::Drawn,
        },
        grid: section.frequencies.resolve(config.seed)?,
        n: section.n,
        replicates: section.replicates,
        seed: config.seed,
        centering: section.centering,
        tolerances: section.tolerances,
        allow_excluded: section.allow_excluded,
    };
    let run = run_quenched(&experiment)?;

    let mut artifacts = vec![
        ("report.toml".to_string(), toml_document(&run.report)?),
        ("samples.csv".to_string(), samples_csv(&run)),
    ];
    if run.report.frequencies.iter().any(|freq| freq.raikov.is_some()) {
        artifacts.push(("raikov.csv".to_string(), raikov_csv(&run.report)));
    }

    let mut failures = Vec::new();
    let mut summary = String::new();
    for freq in &run.report.frequencies {
        failures.extend(frequency_failures(freq, &section.tolerances));
        summary.push_str(&format!(
            "t={}: sigma2={} var=[{}, {}] cross={} ks=[{}, {}] {}\n",
            short(freq.t),
            short(freq.sigma2),
            short(freq.covariance[0][0]),
            short(freq.covariance[1][1]),
            short(freq.cross_correlation),
            short(freq.ks[0]),
            short(freq.ks[1]),
            if freq.flags.pass() { "pass" } else { "FAIL" },
        ));
    }

    if let Some(ladder) = &section.decay_ladder {
        let mut decays: Vec<CenteringDecay> = Vec::new();
        for freq in &run.report.frequencies {
            let decay =
                centering_decay(&config.process, &run.report.origin, freq.t, ladder)?;
            if decay.decay_failure {
                failures.push(format!(
                    "t={}: scaled conditional mean fails to shed sqrt(2) per fourfold n",
                    freq.t,
                ));
            }
            decays.push(decay);
        }
        artifacts.push(("decay.csv".to_string(), decay_csv(&decays)));
    }

    summary.push_str(&format!(
        "quenched: n={} replicates={} frequencies={} {}\n",
        run.report.n,
        run.report.replicates,
        run.report.frequencies.len(),
        if failures.is_empty() { "all pass" } else { "FAILURES" },
    ));
    Ok(CommandOutcome { artifacts, failures, summary })
}

/// The structured document emitted by `conditions`.
#[derive(Serialize)]
struct ConditionsDocument {
    spec_hash: String,
    family: String,
    notes: Vec<String>,
    conditions: Vec<ConditionReport>,
}

/// Evaluate every sufficient condition that applies to the configured model;
/// for the long-memory family, emit the exact variance-divergence table
/// instead.
pub fn cmd_conditions(config: &RunConfig) -> Result<CommandOutcome> {
    let default_section = crate::config::ConditionsSection::default();
    let section = config.conditions.as_ref().unwrap_or(&default_section);
    let spec = &config.process;

    let mut reports: Vec<ConditionReport> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let mut artifacts: Vec<(String, String)> = Vec::new();

    match spec {
        ProcessSpec::GaussianLrd(_) => {
            notes.push(
                "series conditions do not cover the long-memory family; \
                 emitting the exact variance-divergence table instead"
                    .to_string(),
            );
            let mut table = String::from("n,variance_over_n,growth_factor\n");
            let mut previous: Option<f64> = None;
            for &n in &section.divergence_ladder {
                let value = exact_variance_s(spec, n, 0.0)? / n as f64;
                let growth = previous.map(|p| format!("{}", value / p)).unwrap_or_default();
                table.push_str(&format!("{n},{value},{growth}\n"));
                previous = Some(value);
            }
            artifacts.push(("variance_divergence.csv".to_string(), table));
        }
        _ => {
            reports.push(check_increment_series(spec)?);
            reports.push(check_pathwise_mean_series(spec)?);
            reports.push(check_mean_square_series(spec)?);
            for &t in &section.frequencies {
                reports.push(check_rotated_mean_series(spec, t)?);
            }
            match spec {
                ProcessSpec::Linear(model) => {
                    reports.push(check_coefficient_log_series(model)?);
                    if let Some(functional) = &section.functional {
                        let projection =
                            functional.projection.as_ref().map(|mc| mc.build(config.seed));
                        reports.push(check_functional_linear(
                            model,
                            functional.observable.to_core(),
                            projection.as_ref(),
                        )?);
                    }
                }
                ProcessSpec::FiniteMarkov(_) | ProcessSpec::ReversibleMarkov(_) => {
                    let chain = spec.as_markov().expect("matched a Markov variant");
                    reports.push(check_mixing_series(chain)?);
                }
                ProcessSpec::IteratedMap(map) => {
                    let mc = section
                        .map_monte_carlo
                        .clone()
                        .unwrap_or_default()
                        .build(config.seed);
                    reports.push(check_map_regime(map, &mc)?);
                    reports.push(check_coupling_integral(map, &mc)?);
                }
                _ => {}
            }
        }
    }

    let mut failures = Vec::new();
    for report in &reports {
        match report.verdict {
            Verdict::FailsNumeric => failures.push(format!(
                "{}: {}",
                report.condition_id.wire_name(),
                report.verdict.wire_name(),
            )),
            Verdict::Inconclusive => notes.push(format!(
                "{} is inconclusive at the evaluation cap",
                report.condition_id.wire_name(),
            )),
            _ => {}
        }
    }

    let table = conditions_table(&reports);
    let document = ConditionsDocument {
        spec_hash: spec.spec_hash(),
        family: spec.family_name().to_string(),
        notes: notes.clone(),
        conditions: reports,
    };
    artifacts.insert(0, ("conditions.toml".to_string(), toml_document(&document)?));
    artifacts.insert(1, ("conditions.txt".to_string(), table.clone()));

    let mut summary = table;
    for note in &notes {
        summary.push_str(&format!("note: {note}\n"));
    }
    Ok(CommandOutcome { artifacts, failures, summary })
}

/// Martingale approximation gap curves and telescoping residuals.
pub fn cmd_martingale(config: &RunConfig) -> Result<CommandOutcome> {
    let section = config.martingale.as_ref().ok_or_else(|| missing_section("martingale"))?;
    if section.ladder.is_empty() {
        return Err(Error::invalid("the gap ladder needs at least one length"));
    }
    if section.ladder.windows(2).any(|pair| pair[1] <= pair[0]) || section.ladder[0] == 0 {
        return Err(Error::invalid("the gap ladder must be strictly increasing and positive"));
    }
    let spec = &config.process;
    let origin = match &section.origin {
        Some(origin) => origin.clone(),
        None => spec.draw_origin(derive_seed(config.seed, "cli.martingale.origin", 0))?,
    };

    let mut gaps: Vec<GapEstimate> = Vec::new();
    let mut residuals = String::from("t,n,residual\n");
    let mut failures = Vec::new();
    let mut summary = String::new();
    for (ti, &t) in section.frequencies.iter().enumerate() {
        for (ni, &n) in section.ladder.iter().enumerate() {
            let stream = derive_seed(
                config.seed,
                "cli.martingale.gap",
                (ti * section.ladder.len() + ni) as u64,
            );
            let gap = approximation_gap(spec, &origin, n, t, section.replicates, stream)?;
            summary.push_str(&format!(
                "t={} n={}: gap={} stderr={}\n",
                short(t),
                n,
                short(gap.gap),
                short(gap.stderr),
            ));
            gaps.push(gap);

            let terms = telescoping_decomposition(spec, &origin, n, t)?;
            let rotor = Complex64::from_polar(1.0, t);
            let lhs = (Complex64::new(1.0, 0.0) - rotor)
                * conditional_mean_s(spec, &origin, n, t)?;
            let residual = (lhs - terms.total()).norm();
            residuals.push_str(&format!("{t},{n},{residual}\n"));
            if residual > TELESCOPING_TOL {
                failures.push(format!(
                    "t={t} n={n}: telescoping residual {residual} exceeds {TELESCOPING_TOL}"
                ));
            }
        }
    }

    Ok(CommandOutcome {
        artifacts: vec![
            ("gap.csv".to_string(), gap_csv(&gaps)),
            ("residuals.csv".to_string(), residuals),
        ],
        failures,
        summary,
    })
}
