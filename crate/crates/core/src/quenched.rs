//! Quenched Monte Carlo experiments.
//!
//! An experiment freezes one realized past (the origin), draws many
//! replicated futures from it, and tests whether the normalized Fourier
//! statistics behave as the limit theory predicts: the pair
//! `(Re, Im) S_n(t)/sqrt(n)` — centered by the conditional mean when
//! requested — should look like two independent centered normals with common
//! variance `sigma_t^2 / 2`, and the periodogram ratio `I_n(t)/f(t)` should
//! look standard exponential. The variance target comes from the analytic
//! density when one exists and otherwise from the empirical conditional
//! second moment, and the report records which.
//!
//! Two diagnostic instruments accompany the main experiment: the decay of the
//! scaled conditional mean `|E_0 S_n(t)|/sqrt(n)` along an `n`-ladder (which
//! should shrink like `n^{-1/2}` for summably dependent models and visibly
//! fail to shrink in the long-memory zero-frequency regime), and the
//! martingale-increment diagnostics — the expected scaled running maximum
//! `E max_k |D_k| / sqrt(n)`, which must vanish as `n` grows, and the
//! per-path mean square `(1/n) sum_k D_k^2`, which must concentrate.
//!
//! Every replicate derives its own stream seed, so runs are reproducible bit
//! for bit regardless of thread count: replicates may be evaluated in
//! parallel, but the reduction consumes them in replicate order.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::check_mean_square_series;
use crate::error::{Error, Result};
use crate::fourier::{fourier_batch, FourierSample, FrequencyGrid};
use crate::martingale::{conditional_mean_s, MartingaleKernel};
use crate::models::{ProcessSpec, QuenchedOrigin};
use crate::seeding::derive_seed;
use crate::spectral::{exact_variance_s, spectral_density, SpectralMethod};
use crate::stats::{
    covariance, exponential_cdf, ks_distance, mean, normal_cdf, standard_error, variance,
    CompensatedSum,
};

/// Fewest replicates an experiment may request.
pub const MIN_REPLICATES: u64 = 100;
/// Shortest trajectory an experiment may request.
pub const MIN_TRAJECTORY: usize = 64;
/// Shortest ladder rung used by the increment diagnostics.
pub const RAIKOV_MIN_RUNG: usize = 64;
/// Slack allowed when calling a diagnostic trend nonincreasing.
const TREND_TOL: f64 = 1e-12;
/// A conditional mean below this is treated as exactly zero when judging
/// decay factors.
const DECAY_FLOOR: f64 = 1e-12;

/// Which normalized statistic the replicates test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenteringMode {
    /// Test `V_n = (Re, Im) S_n / sqrt(n)` as is.
    None,
    /// Test `W_n = (S_n - E_0 S_n) / sqrt(n)`.
    Conditional,
}

/// How the experiment obtains its frozen origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum OriginPolicy {
    /// Draw the origin from the stationary law of the past, deterministically
    /// from the experiment seed.
    Drawn,
    /// Use the supplied origin.
    Explicit { origin: QuenchedOrigin },
}

/// Pass/fail thresholds for the per-frequency checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct Tolerances {
    /// Largest allowed Kolmogorov-Smirnov distance per component.
    pub ks_max: f64,
    /// Largest allowed |empirical cross-correlation| between components.
    pub cross_correlation_max: f64,
    /// Largest allowed relative error of each component variance.
    pub variance_relative_max: f64,
    /// Allowed band for the mean periodogram ratio.
    pub periodogram_mean_low: f64,
    pub periodogram_mean_high: f64,
    /// Largest allowed KS distance of the periodogram ratio from the unit
    /// exponential.
    pub periodogram_ks_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ks_max: 0.04,
            cross_correlation_max: 0.07,
            variance_relative_max: 0.10,
            periodogram_mean_low: 0.9,
            periodogram_mean_high: 1.1,
            periodogram_ks_max: 0.05,
        }
    }
}

/// Full description of one quenched experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: ProcessSpec,
    pub origin: OriginPolicy,
    pub grid: FrequencyGrid,
    /// Trajectory length.
    pub n: usize,
    /// Number of quenched futures drawn from the shared origin.
    pub replicates: u64,
    pub seed: u64,
    pub centering: CenteringMode,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Allow grid points that sit on excluded frequencies.
    #[serde(default)]
    pub allow_excluded: bool,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::invalid(format!(
                "experiments need at least {MIN_REPLICATES} replicates, got {}",
                self.replicates
            )));
        }
        if self.n < MIN_TRAJECTORY {
            return Err(Error::invalid(format!(
                "experiments need trajectories of at least {MIN_TRAJECTORY}, got {}",
                self.n
            )));
        }
        if !self.allow_excluded {
            for (j, &t) in self.grid.points().iter().enumerate() {
                if self.grid.is_point_excluded(j) {
                    return Err(Error::invalid(format!(
                        "grid point {t} sits on an excluded frequency; \
                         set allow_excluded to test it anyway"
                    )));
                }
            }
        }
        Ok(())
    }

    fn resolve_origin(&self) -> Result<QuenchedOrigin> {
        match &self.origin {
            OriginPolicy::Drawn => {
                self.spec.draw_origin(derive_seed(self.seed, "quenched.origin", 0))
            }
            OriginPolicy::Explicit { origin } => Ok(origin.clone()),
        }
    }
}

/// Where the variance target `sigma_t^2` came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sigma2Source {
    /// `2 pi f(t)` from the analytic density route.
    Density { f: f64, method: SpectralMethod },
    /// Replicate mean of `|S_n - E_0 S_n|^2 / n`.
    EmpiricalConditional,
}

/// Periodogram-ratio statistics against the unit exponential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodogramStats {
    /// Replicate mean of `I_n(t) / f(t)`; the limit has mean 1.
    pub mean_ratio: f64,
    /// Standard error of that mean.
    pub mean_ratio_se: f64,
    /// KS distance of the ratios from the unit exponential law.
    pub ks_exponential: f64,
}

/// One rung of the increment-diagnostic ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaikovPoint {
    pub n: usize,
    /// Replicate mean of `max_{k <= n} |D_k| / sqrt(n)`.
    pub max_mean: f64,
    /// Replicate mean of `(1/n) sum_{k <= n} D_k^2`.
    pub square_mean: f64,
    /// Replicate standard deviation of the same per-path mean square.
    pub square_sd: f64,
}

/// Martingale-increment diagnostics for one direction `a Re D + b Im D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaikovDiagnostics {
    pub a: f64,
    pub b: f64,
    /// Ladder rungs in increasing `n`.
    pub points: Vec<RaikovPoint>,
    /// Whether the scaled-maximum diagnostic is nonincreasing along the
    /// ladder — the numeric signature of a negligible largest increment.
    pub max_trend_decreasing: bool,
}

/// Pass/fail summary of one frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFlags {
    /// The target variance is zero; distributional checks are vacuous.
    pub degenerate: bool,
    pub variance_ok: bool,
    pub cross_correlation_ok: bool,
    pub ks_ok: bool,
    pub periodogram_ok: bool,
}

impl FrequencyFlags {
    pub fn pass(&self) -> bool {
        self.variance_ok && self.cross_correlation_ok && self.ks_ok && self.periodogram_ok
    }
}

/// Everything measured at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub t: f64,
    pub excluded: bool,
    /// Empirical mean of the tested pair; the limit is the zero vector.
    pub mean: [f64; 2],
    /// Empirical covariance of the tested pair.
    pub covariance: [[f64; 2]; 2],
    /// Target variance per component, `sigma_t^2 / 2`.
    pub target_component_variance: f64,
    pub sigma2: f64,
    pub sigma2_source: Sigma2Source,
    /// Empirical correlation between the two components; the limit is 0.
    pub cross_correlation: f64,
    /// KS distance per component against a centered normal with the target
    /// variance.
    pub ks: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periodogram: Option<PeriodogramStats>,
    /// Increment diagnostics for the directions (1, 0) and (0, 1), when an
    /// analytic martingale kernel exists and the ladder has two rungs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raikov: Option<Vec<RaikovDiagnostics>>,
    pub flags: FrequencyFlags,
}

/// The structured result of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub spec_hash: String,
    pub family: String,
    pub origin: QuenchedOrigin,
    pub n: usize,
    pub replicates: u64,
    pub seed: u64,
    pub centering: CenteringMode,
    pub tolerances: Tolerances,
    pub frequencies: Vec<FrequencyReport>,
}

impl TestReport {
    /// Whether every frequency passed its checks.
    pub fn pass(&self) -> bool {
        self.frequencies.iter().all(|f| f.flags.pass())
    }
}

/// A finished experiment: the report plus the raw per-replicate samples
/// (outer index replicate, inner index grid point), kept for export.
#[derive(Clone, Debug, PartialEq)]
pub struct QuenchedRun {
    pub report: TestReport,
    pub samples: Vec<Vec<FourierSample>>,
}

/// Per-replicate raw material produced inside the replicate loop.
struct ReplicateRow {
    samples: Vec<FourierSample>,
    /// Per grid point: scaled-max and mean-square rows for the two increment
    /// directions, one value per ladder rung.
    raikov: Vec<Option<[RaikovRow; 2]>>,
}

#[derive(Clone, Debug)]
struct RaikovRow {
    max_scaled: Vec<f64>,
    square_mean: Vec<f64>,
}

/// Ladder rungs `n, n/4, n/16, ...` down to [`RAIKOV_MIN_RUNG`], ascending.
fn raikov_ladder(n: usize) -> Vec<usize> {
    let mut rungs = Vec::new();
    let mut m = n;
    while m >= RAIKOV_MIN_RUNG {
        rungs.push(m);
        m /= 4;
    }
    rungs.reverse();
    rungs
}

/// One pass over a single increment row: running maximum and compensated
/// square sum, sampled at the ladder rungs.
fn raikov_scalar_row(values: impl Iterator<Item = f64>, rungs: &[usize]) -> RaikovRow {
    let mut row = RaikovRow {
        max_scaled: Vec::with_capacity(rungs.len()),
        square_mean: Vec::with_capacity(rungs.len()),
    };
    let mut running_max = 0.0f64;
    let mut square = CompensatedSum::new();
    let mut next = 0;
    for (idx, value) in values.enumerate() {
        running_max = running_max.max(value.abs());
        square.add(value * value);
        if next < rungs.len() && idx + 1 == rungs[next] {
            let m = rungs[next] as f64;
            row.max_scaled.push(running_max / m.sqrt());
            row.square_mean.push(square.value() / m);
            next += 1;
        }
    }
    assert_eq!(next, rungs.len(), "increment rows must reach the last rung");
    row
}

/// Assemble ladder diagnostics from per-replicate rows.
fn assemble_raikov(rows: &[RaikovRow], rungs: &[usize], a: f64, b: f64) -> RaikovDiagnostics {
    let mut points = Vec::with_capacity(rungs.len());
    for (q, &n) in rungs.iter().enumerate() {
        let maxima: Vec<f64> = rows.iter().map(|row| row.max_scaled[q]).collect();
        let squares: Vec<f64> = rows.iter().map(|row| row.square_mean[q]).collect();
        points.push(RaikovPoint {
            n,
            max_mean: mean(&maxima),
            square_mean: mean(&squares),
            square_sd: variance(&squares).sqrt(),
        });
    }
    let max_trend_decreasing = points
        .windows(2)
        .all(|pair| pair[1].max_mean <= pair[0].max_mean + TREND_TOL);
    RaikovDiagnostics { a, b, points, max_trend_decreasing }
}

/// Increment diagnostics for a sample of rows, each row the per-step
/// real combination `a Re D_k + b Im D_k` of one replicate's martingale
/// increments. All rows must share one length, and the derived ladder needs
/// at least two rungs.
pub fn raikov_diagnostics(differences: &[Vec<f64>], a: f64, b: f64) -> Result<RaikovDiagnostics> {
    let first = differences
        .first()
        .ok_or_else(|| Error::invalid("increment diagnostics need at least one replicate"))?;
    let n = first.len();
    if differences.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("increment rows must share one length"));
    }
    let rungs = raikov_ladder(n);
    if rungs.len() < 2 {
        return Err(Error::invalid(format!(
            "increment diagnostics need at least 2 ladder rungs; length {n} gives {}",
            rungs.len()
        )));
    }
    let rows: Vec<RaikovRow> = differences
        .iter()
        .map(|row| raikov_scalar_row(row.iter().copied(), &rungs))
        .collect();
    Ok(assemble_raikov(&rows, &rungs, a, b))
}

/// Run one quenched experiment: freeze the origin, draw replicated futures,
/// and grade every grid point.
pub fn run_quenched(config: &ExperimentConfig) -> Result<QuenchedRun> {
    config.validate()?;
    let origin = config.resolve_origin()?;
    let sampler = config.spec.prepare(Some(&origin), config.n)?;
    let points = config.grid.points();

    // Per-frequency precomputation shared by every replicate.
    let centerings: Vec<Complex64> = points
        .iter()
        .map(|&t| conditional_mean_s(&config.spec, &origin, config.n, t))
        .collect::<Result<_>>()?;
    let densities: Vec<Option<crate::spectral::SpectralEstimate>> =
        points.iter().map(|&t| spectral_density(&config.spec, t).ok()).collect();
    let kernels: Vec<Option<MartingaleKernel>> = points
        .iter()
        .map(|&t| MartingaleKernel::for_spec(&config.spec, t).ok())
        .collect();
    let rungs = raikov_ladder(config.n);
    let diagnose = rungs.len() >= 2;

    // Replicates are independent; draw them in parallel but reduce in
    // replicate order so the result is identical at any thread count.
    let rows: Vec<ReplicateRow> = (0..config.replicates)
        .into_par_iter()
        .map(|replicate| -> Result<ReplicateRow> {
            let stream = derive_seed(config.seed, "quenched.replicate", replicate);
            let driven = sampler.draw(stream);
            let samples = fourier_batch(&driven.trajectory.values, &config.grid, Some(&centerings))?;
            let mut raikov = Vec::with_capacity(kernels.len());
            for kernel in &kernels {
                raikov.push(match kernel {
                    Some(kernel) if diagnose => {
                        let increments = kernel.increments(&driven.drivers)?;
                        Some([
                            raikov_scalar_row(increments.iter().map(|d| d.re), &rungs),
                            raikov_scalar_row(increments.iter().map(|d| d.im), &rungs),
                        ])
                    }
                    _ => None,
                });
            }
            Ok(ReplicateRow { samples, raikov })
        })
        .collect::<Result<_>>()?;

    let mut frequencies = Vec::with_capacity(points.len());
    for (j, &t) in points.iter().enumerate() {
        frequencies.push(grade_frequency(config, j, t, &rows, &densities[j], &rungs));
    }

    let report = TestReport {
        spec_hash: config.spec.spec_hash(),
        family: config.spec.family_name().to_string(),
        origin,
        n: config.n,
        replicates: config.replicates,
        seed: config.seed,
        centering: config.centering,
        tolerances: config.tolerances,
        frequencies,
    };
    let samples = rows.into_iter().map(|row| row.samples).collect();
    Ok(QuenchedRun { report, samples })
}

fn grade_frequency(
    config: &ExperimentConfig,
    j: usize,
    t: f64,
    rows: &[ReplicateRow],
    density: &Option<crate::spectral::SpectralEstimate>,
    rungs: &[usize],
) -> FrequencyReport {
    let tol = &config.tolerances;
    let component = |pick: fn(&FourierSample) -> f64| -> Vec<f64> {
        rows.iter().map(|row| pick(&row.samples[j])).collect()
    };
    let (re, im) = match config.centering {
        CenteringMode::None => (component(|s| s.v[0]), component(|s| s.v[1])),
        CenteringMode::Conditional => (component(|s| s.w[0]), component(|s| s.w[1])),
    };
    // Conditional second moment |S_n - E_0 S_n|^2 / n, the fallback target.
    let centered_sq: Vec<f64> = rows
        .iter()
        .map(|row| {
            let s = &row.samples[j];
            s.w[0] * s.w[0] + s.w[1] * s.w[1]
        })
        .collect();

    let (sigma2, sigma2_source) = match density {
        Some(est) => (est.sigma2, Sigma2Source::Density { f: est.f, method: est.method }),
        None => (mean(&centered_sq), Sigma2Source::EmpiricalConditional),
    };
    let target_half = sigma2 / 2.0;
    let degenerate = sigma2 == 0.0;

    let mean_vec = [mean(&re), mean(&im)];
    let var_re = variance(&re);
    let var_im = variance(&im);
    let cov = covariance(&re, &im);
    let covariance_matrix = [[var_re, cov], [cov, var_im]];
    let cross_correlation = if var_re > 0.0 && var_im > 0.0 {
        cov / (var_re * var_im).sqrt()
    } else {
        0.0
    };
    let ks = if degenerate {
        [0.0, 0.0]
    } else {
        [
            ks_distance(&re, |x| normal_cdf(x, target_half)),
            ks_distance(&im, |x| normal_cdf(x, target_half)),
        ]
    };

    let periodogram = match density {
        Some(est) if est.f > 0.0 => {
            let ratios: Vec<f64> = rows.iter().map(|row| row.samples[j].i / est.f).collect();
            Some(PeriodogramStats {
                mean_ratio: mean(&ratios),
                mean_ratio_se: standard_error(&ratios),
                ks_exponential: ks_distance(&ratios, exponential_cdf),
            })
        }
        _ => None,
    };

    let raikov = if rows.iter().all(|row| row.raikov[j].is_some()) && !rows.is_empty() {
        let directions = [(1.0, 0.0), (0.0, 1.0)];
        Some(
            directions
                .iter()
                .enumerate()
                .map(|(d, &(a, b))| {
                    let direction_rows: Vec<RaikovRow> = rows
                        .iter()
                        .map(|row| row.raikov[j].as_ref().expect("checked above")[d].clone())
                        .collect();
                    assemble_raikov(&direction_rows, rungs, a, b)
                })
                .collect(),
        )
    } else {
        None
    };

    let variance_ok = if degenerate {
        var_re == 0.0 && var_im == 0.0
    } else {
        (var_re - target_half).abs() <= tol.variance_relative_max * target_half
            && (var_im - target_half).abs() <= tol.variance_relative_max * target_half
    };
    let cross_correlation_ok = degenerate || cross_correlation.abs() < tol.cross_correlation_max;
    let ks_ok = degenerate || (ks[0] < tol.ks_max && ks[1] < tol.ks_max);
    let periodogram_ok = match &periodogram {
        Some(stats) => {
            stats.mean_ratio >= tol.periodogram_mean_low
                && stats.mean_ratio <= tol.periodogram_mean_high
                && stats.ks_exponential < tol.periodogram_ks_max
        }
        None => true,
    };

    FrequencyReport {
        t,
        excluded: config.grid.is_point_excluded(j),
        mean: mean_vec,
        covariance: covariance_matrix,
        target_component_variance: target_half,
        sigma2,
        sigma2_source,
        cross_correlation,
        ks,
        periodogram,
        raikov,
        flags: FrequencyFlags {
            degenerate,
            variance_ok,
            cross_correlation_ok,
            ks_ok,
            periodogram_ok,
        },
    }
}

/// One rung of the conditional-mean decay ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenteringRung {
    pub n: usize,
    /// `|E_0 S_n(t)| / sqrt(n)`.
    pub scaled_mean: f64,
    /// Exact `E |S_n(t)|^2 / n` when the covariances are analytic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_over_n: Option<f64>,
}

/// Decay of the scaled conditional mean along an `n`-ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenteringDecay {
    pub t: f64,
    pub rungs: Vec<CenteringRung>,
    /// Whether the summable-dependence certificate for the model holds
    /// (`None` when that check does not apply to the family).
    pub mean_square_certified: Option<bool>,
    /// Certified models must shed a factor `sqrt(2)` per fourfold `n`; set
    /// when some fourfold step fails to.
    pub decay_failure: bool,
    /// The long-memory family at frequency zero is expected not to decay;
    /// the failure flag is suppressed there.
    pub expected_non_decay: bool,
}

/// Evaluate `|E_0 S_n(t)| / sqrt(n)` on a ladder of trajectory lengths and
/// grade its decay.
pub fn centering_decay(
    spec: &ProcessSpec,
    origin: &QuenchedOrigin,
    t: f64,
    ladder: &[usize],
) -> Result<CenteringDecay> {
    if ladder.is_empty() {
        return Err(Error::invalid("the decay ladder needs at least one length"));
    }
    if ladder.windows(2).any(|pair| pair[1] <= pair[0]) || ladder[0] == 0 {
        return Err(Error::invalid("the decay ladder must be strictly increasing and positive"));
    }
    let mut rungs = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let scaled_mean = conditional_mean_s(spec, origin, n, t)?.norm() / (n as f64).sqrt();
        let variance_over_n = exact_variance_s(spec, n, t).ok().map(|v| v / n as f64);
        rungs.push(CenteringRung { n, scaled_mean, variance_over_n });
    }

    let mean_square_certified = match check_mean_square_series(spec) {
        Ok(report) => Some(report.verdict.holds()),
        Err(Error::Unsupported(_)) => None,
        Err(other) => return Err(other),
    };
    let distance_to_zero = {
        let d = t.rem_euclid(std::f64::consts::TAU);
        d.min(std::f64::consts::TAU - d)
    };
    let expected_non_decay =
        matches!(spec, ProcessSpec::GaussianLrd(_)) && distance_to_zero <= 1e-9;

    let mut decay_failure = false;
    if mean_square_certified == Some(true) && !expected_non_decay {
        for pair in rungs.windows(2) {
            if pair[1].n == 4 * pair[0].n {
                let before = pair[0].scaled_mean;
                let after = pair[1].scaled_mean;
                if before <= DECAY_FLOOR {
                    decay_failure |= after > DECAY_FLOOR;
                } else {
                    decay_failure |= after > before / std::f64::consts::SQRT_2;
                }
            }
        }
    }

    Ok(CenteringDecay {
        t,
        rungs,
        mean_square_certified,
        decay_failure,
        expected_non_decay,
    })
}
