//! Analytic spectral densities and exact finite-`n` Fourier-sum variances.
//!
//! These are the deterministic ground truths the Monte Carlo experiments are
//! judged against: `f(t)` with certified error below [`DENSITY_ABS_TOL`],
//! `sigma_t^2 = 2 pi f(t)`, and the exact `E |S_n(t)|^2` from lag-counted
//! covariance sums. The long-memory Gaussian family deliberately has no
//! density — its covariances are not absolutely summable, and the variance
//! growth of `S_n(0)` is reported instead of being masked.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{IteratedMap, LinearProcess, MarkovChain, ProcessSpec};
use crate::stats::CompensatedSum;

/// Absolute error certified for analytic density values.
pub const DENSITY_ABS_TOL: f64 = 1e-10;

/// How a spectral value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMethod {
    /// Closed form (transfer function or geometric covariance sum).
    Analytic,
    /// Covariance series truncated with a certified geometric tail bound.
    CovarianceSeries,
    /// Extrapolated from exact finite-`n` variances.
    Empirical,
}

/// A spectral density value at one frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub t: f64,
    /// Density `f(t) >= 0`.
    pub f: f64,
    /// Limiting variance `sigma_t^2 = 2 pi f(t)`.
    pub sigma2: f64,
    pub method: SpectralMethod,
}

impl SpectralEstimate {
    fn from_density(t: f64, f: f64, method: SpectralMethod) -> Self {
        let f = f.max(0.0);
        Self { t, f, sigma2: std::f64::consts::TAU * f, method }
    }
}

/// Density of a causal linear filter: `f(t) = (sigma^2 / 2 pi) |A(e^{it})|^2`
/// with `A` the transfer function, certified to [`DENSITY_ABS_TOL`].
pub fn spectral_density_linear(model: &LinearProcess, t: f64) -> Result<SpectralEstimate> {
    let var = model.innovation.variance();
    if var == 0.0 {
        return Ok(SpectralEstimate::from_density(t, 0.0, SpectralMethod::Analytic));
    }
    // First pass estimates |A| so the second pass can hit the density target.
    let rough = model.coeffs.transfer(t, 1e-6)?;
    let scale = var / std::f64::consts::PI * (rough.norm() + 1.0);
    let target = (DENSITY_ABS_TOL / 10.0 / scale).min(1e-12);
    let transfer = model.coeffs.transfer(t, target)?;
    let f = var / std::f64::consts::TAU * transfer.norm_sqr();
    Ok(SpectralEstimate::from_density(t, f, SpectralMethod::Analytic))
}

/// Density of a finite-chain observable from its covariance series
/// `f(t) = (1/2 pi) (cov(0) + 2 sum_{j>=1} cov(j) cos(jt))`, truncated when a
/// rigorous operator-norm tail bound drops below [`DENSITY_ABS_TOL`].
pub fn spectral_density_markov(chain: &MarkovChain, t: f64) -> Result<SpectralEstimate> {
    let (block, beta) = mean_zero_block_contraction(chain)?;
    let norm_h = chain.norm_sq(chain.observable()).sqrt();
    let mut acc = CompensatedSum::new();
    acc.add(chain.covariance(0));
    let mut v = chain.observable().to_vec();
    let mut j = 0u64;
    loop {
        j += 1;
        v = chain.apply(&v);
        acc.add(2.0 * chain.inner(chain.observable(), &v) * (j as f64 * t).cos());
        // |cov(i)| <= ||h|| ||Q^i h|| and ||Q^i h|| <= beta^b ||Q^j h|| for
        // i >= j + b*block, so the series tail after j is bounded by
        // ||h|| * block * ||Q^j h|| / (1 - beta).
        let c_j = chain.norm_sq(&v).sqrt();
        let tail = norm_h * block as f64 * c_j / (1.0 - beta);
        if 2.0 * tail / std::f64::consts::TAU < DENSITY_ABS_TOL {
            break;
        }
        if j > 1_000_000 {
            return Err(Error::NonSummable(
                "covariance series did not reach the density tolerance".into(),
            ));
        }
    }
    let f = acc.value() / std::f64::consts::TAU;
    Ok(SpectralEstimate::from_density(t, f, SpectralMethod::CovarianceSeries))
}

/// Density of an iterated affine map: the covariances are exactly
/// `Var(X) slope^j`, so `f(t) = (Var(X)/2 pi)(1-s^2)/(1 - 2 s cos t + s^2)`.
pub fn spectral_density_iterated_map(map: &IteratedMap, t: f64) -> SpectralEstimate {
    let s = map.mean_slope();
    let f = map.variance() / std::f64::consts::TAU * (1.0 - s * s)
        / (1.0 - 2.0 * s * t.cos() + s * s);
    SpectralEstimate::from_density(t, f, SpectralMethod::Analytic)
}

/// Density dispatch over the model families.
pub fn spectral_density(spec: &ProcessSpec, t: f64) -> Result<SpectralEstimate> {
    match spec {
        ProcessSpec::Linear(model) => spectral_density_linear(model, t),
        ProcessSpec::FiniteMarkov(chain) => spectral_density_markov(chain, t),
        ProcessSpec::ReversibleMarkov(chain) => spectral_density_markov(chain, t),
        ProcessSpec::IteratedMap(map) => Ok(spectral_density_iterated_map(map, t)),
        ProcessSpec::GaussianLrd(_) => Err(Error::NonSummable(
            "long-memory covariances are not absolutely summable; \
             no spectral density is reported for this family"
                .into(),
        )),
    }
}

/// Exact `E |S_n(t)|^2` via the lag-counted covariance sum
/// `n cov(0) + 2 sum_{l=1}^{n-1} (n - l) cos(l t) cov(l)`.
pub fn exact_variance_s(spec: &ProcessSpec, n: usize, t: f64) -> Result<f64> {
    assert!(n >= 1, "variance of an empty sum is undefined");
    let mut acc = CompensatedSum::new();
    match spec.as_markov() {
        // Incremental matrix application: O(n * states^2) for the whole sum.
        Some(chain) => {
            acc.add(n as f64 * chain.covariance(0));
            let mut v = chain.observable().to_vec();
            for lag in 1..n as u64 {
                v = chain.apply(&v);
                let cov = chain.inner(chain.observable(), &v);
                acc.add(2.0 * (n as f64 - lag as f64) * (lag as f64 * t).cos() * cov);
            }
        }
        None => {
            acc.add(n as f64 * spec.covariance(0)?);
            for lag in 1..n as u64 {
                let cov = spec.covariance(lag)?;
                acc.add(2.0 * (n as f64 - lag as f64) * (lag as f64 * t).cos() * cov);
            }
        }
    }
    Ok(acc.value().max(0.0))
}

/// `sigma_t^2` as the Richardson-extrapolated limit of `E|S_n|^2 / n` at
/// `n` and `2n`: `2 V(2n)/(2n) - V(n)/n`. For geometrically mixing models the
/// remaining error is exponentially small in `n`.
pub fn sigma2_extrapolated(spec: &ProcessSpec, t: f64, n: usize) -> Result<SpectralEstimate> {
    let at_n = exact_variance_s(spec, n, t)? / n as f64;
    let at_2n = exact_variance_s(spec, 2 * n, t)? / (2 * n) as f64;
    let sigma2 = (2.0 * at_2n - at_n).max(0.0);
    Ok(SpectralEstimate {
        t,
        f: sigma2 / std::f64::consts::TAU,
        sigma2,
        method: SpectralMethod::Empirical,
    })
}

/// Find a block length `m` and a rigorous bound `beta < 1` on the `L^2(pi)`
/// operator norm of `Q^m` restricted to mean-zero functions. Errors when the
/// chain keeps a unit-modulus eigenvalue besides the stationary one
/// (periodic or reducible kernels have no summable covariance series).
pub(crate) fn mean_zero_block_contraction(chain: &MarkovChain) -> Result<(usize, f64)> {
    // Restrict to states the stationary law actually charges; stationarity
    // forces zero flow from the support to the rest.
    let support: Vec<usize> = (0..chain.state_count())
        .filter(|&x| chain.stationary()[x] > 0.0)
        .collect();
    let m = support.len();
    if m == 0 {
        return Err(Error::invalid("stationary law charges no state"));
    }
    let sqrt_pi: Vec<f64> = support.iter().map(|&x| chain.stationary()[x].sqrt()).collect();
    // B = D^{1/2} Q D^{-1/2} on the support; the L^2(pi) geometry becomes
    // Euclidean and the stationary direction becomes the unit vector sqrt(pi).
    let b = DMatrix::from_fn(m, m, |i, j| {
        sqrt_pi[i] * chain.transition()[support[i]][support[j]] / sqrt_pi[j]
    });
    let u = nalgebra::DVector::from_column_slice(&sqrt_pi);
    let projector = DMatrix::identity(m, m) - &u * u.transpose();
    let mut power = b.clone();
    for block in 1..=256usize {
        let restricted = &projector * &power * &projector;
        let beta = restricted
            .singular_values()
            .iter()
            .fold(0.0f64, |a, &s| a.max(s));
        if beta < 0.9 {
            return Ok((block, beta));
        }
        power = &power * &b;
    }
    Err(Error::NonSummable(format!(
        "chain does not contract mean-zero functions within 256 steps \
         (second eigenvalue modulus {}); covariance series is not summable",
        chain.second_eigenvalue_modulus()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        GaussianLrd, GaussianObservable, Innovation, MarkovChain, ProcessSpec,
    };
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{PI, TAU};

    fn ar1_spec(rho: f64) -> ProcessSpec {
        ProcessSpec::Linear(LinearProcess::ar1(rho, Innovation::standard_normal()).unwrap())
    }

    fn ar1_density_oracle(rho: f64, t: f64) -> f64 {
        // |1 - rho e^{it}|^{-2} / 2 pi directly.
        let denom = (1.0 - rho * t.cos()).powi(2) + (rho * t.sin()).powi(2);
        1.0 / (TAU * denom)
    }

    #[test]
    fn white_noise_density_is_flat() {
        let spec = ProcessSpec::Linear(LinearProcess::new(
            crate::coeffs::Coefficients::white_noise(),
            Innovation::standard_normal(),
        ));
        for &t in &[0.1, 1.0, PI, 5.0] {
            let est = spectral_density(&spec, t).unwrap();
            assert_relative_eq!(est.f, 1.0 / TAU, max_relative = 1e-12);
            assert_relative_eq!(est.sigma2, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn ar1_density_reference_values() {
        let spec = ar1_spec(0.5);
        let at_pi = spectral_density(&spec, PI).unwrap();
        // f(pi) = (1/2pi) |1/(1 + 0.5)|^2 = 4 / (18 pi).
        assert_relative_eq!(at_pi.f, 4.0 / (18.0 * PI), max_relative = 1e-11);
        for &t in &[0.3, 1.0, 2.0, 4.7] {
            let est = spectral_density(&spec, t).unwrap();
            assert_abs_diff_eq!(est.f, ar1_density_oracle(0.5, t), epsilon = 1e-10);
        }
        // t -> 0+ approaches |1/(1 - 0.5)|^2 / 2pi = 4 / 2pi.
        let near_zero = spectral_density(&spec, 1e-3).unwrap();
        assert_abs_diff_eq!(near_zero.f, 4.0 / TAU, epsilon = 2e-3);
    }

    #[test]
    fn two_state_chain_density_closed_form() {
        let chain = MarkovChain::two_state_flip(0.3).unwrap();
        let rho: f64 = 0.4;
        for &t in &[0.5, 1.0, PI, 5.5] {
            let est = spectral_density_markov(&chain, t).unwrap();
            let oracle =
                (1.0 - rho * rho) / (TAU * (1.0 - 2.0 * rho * t.cos() + rho * rho));
            assert_abs_diff_eq!(est.f, oracle, epsilon = 1e-10);
            assert_relative_eq!(est.sigma2, TAU * est.f, max_relative = 1e-12);
        }
        // One-step decorrelation: flat density.
        let flat = MarkovChain::two_state_flip(0.5).unwrap();
        let est = spectral_density_markov(&flat, 1.234).unwrap();
        assert_abs_diff_eq!(est.f, 1.0 / TAU, epsilon = 1e-10);
    }

    #[test]
    fn single_state_chain_has_zero_density() {
        let chain = MarkovChain::new(vec![vec![1.0]], vec![1.0], vec![0.0]).unwrap();
        let est = spectral_density_markov(&chain, 1.0).unwrap();
        assert_eq!(est.f, 0.0);
    }

    #[test]
    fn periodic_chain_is_rejected() {
        // Deterministic swap: eigenvalues {1, -1}, no summable covariances.
        let chain = MarkovChain::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0.5, 0.5],
            vec![1.0, -1.0],
        )
        .unwrap();
        let err = spectral_density_markov(&chain, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonSummable(_)), "got: {err}");
    }

    #[test]
    fn gaussian_family_reports_no_density() {
        let spec = ProcessSpec::GaussianLrd(
            GaussianLrd::new(0.4, GaussianObservable::Identity).unwrap(),
        );
        let err = spectral_density(&spec, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonSummable(_)), "got: {err}");
    }

    #[test]
    fn iterated_map_density_matches_series() {
        let map = IteratedMap::new(
            0.3,
            0.4,
            1.0,
            0.5,
            Innovation::standard_normal(),
            2.0,
        )
        .unwrap();
        for &t in &[0.7, 2.0, 4.0] {
            let est = spectral_density_iterated_map(&map, t);
            let mut series = map.covariance(0);
            for lag in 1..200u64 {
                series += 2.0 * map.covariance(lag) * (lag as f64 * t).cos();
            }
            assert_relative_eq!(est.f, series / TAU, max_relative = 1e-10);
        }
    }

    #[test]
    fn densities_are_symmetric_and_nonnegative() {
        let specs = [
            ar1_spec(0.5),
            ar1_spec(-0.8),
            ProcessSpec::FiniteMarkov(MarkovChain::two_state_flip(0.1).unwrap()),
        ];
        for spec in &specs {
            for k in 1..24 {
                let t = k as f64 * 0.13;
                let est = spectral_density(spec, t).unwrap();
                assert!(est.f >= 0.0, "negative density {} at t={t}", est.f);
                let mirrored = spectral_density(spec, TAU - t).unwrap();
                assert_abs_diff_eq!(est.f, mirrored.f, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn herglotz_integral_recovers_the_variance() {
        let specs = [
            ar1_spec(0.6),
            ProcessSpec::FiniteMarkov(MarkovChain::two_state_flip(0.25).unwrap()),
        ];
        for spec in &specs {
            let points = 4096;
            let mut acc = CompensatedSum::new();
            // Trapezoid on (0, 2pi) with the symmetric endpoint value f(0+) ~
            // f(2pi-): approximate endpoints by the nearest interior points.
            for j in 1..points {
                let t = TAU * j as f64 / points as f64;
                acc.add(spectral_density(spec, t).unwrap().f);
            }
            let first = spectral_density(spec, TAU / points as f64).unwrap().f;
            acc.add(first); // endpoint contribution (f(0) + f(2pi))/2 ~ f(0+)
            let integral = acc.value() * TAU / points as f64;
            assert_abs_diff_eq!(integral, spec.variance().unwrap(), epsilon = 1e-4);
        }
    }

    #[test]
    fn white_noise_fourier_variance_is_n() {
        let spec = ProcessSpec::Linear(LinearProcess::new(
            crate::coeffs::Coefficients::white_noise(),
            Innovation::standard_normal(),
        ));
        for &t in &[0.0, 0.9, PI, 4.2] {
            assert_relative_eq!(
                exact_variance_s(&spec, 1024, t).unwrap(),
                1024.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn chain_variance_approaches_density_limit() {
        let spec = ProcessSpec::FiniteMarkov(MarkovChain::two_state_flip(0.25).unwrap());
        let t = PI / 3.0;
        let n = 1 << 14;
        let limit = spectral_density(&spec, t).unwrap().sigma2;
        let ratio = exact_variance_s(&spec, n, t).unwrap() / n as f64;
        assert_relative_eq!(ratio, limit, max_relative = 0.01);
    }

    #[test]
    fn linear_variance_approaches_density_limit_at_scale() {
        let spec = ar1_spec(0.5);
        let t = 1.0;
        let n = 1 << 16;
        let limit = spectral_density(&spec, t).unwrap().sigma2;
        let ratio = exact_variance_s(&spec, n, t).unwrap() / n as f64;
        assert_relative_eq!(ratio, limit, max_relative = 0.02);
    }

    #[test]
    fn long_memory_variance_grows_superlinearly() {
        let spec = ProcessSpec::GaussianLrd(
            GaussianLrd::new(0.4, GaussianObservable::Identity).unwrap(),
        );
        let per_n_1024 = exact_variance_s(&spec, 1024, 0.0).unwrap() / 1024.0;
        let per_n_4096 = exact_variance_s(&spec, 4096, 0.0).unwrap() / 4096.0;
        let growth = per_n_4096 / per_n_1024;
        // Var(S_n)/n ~ c n^{1-alpha}: quadrupling n multiplies it by ~ 4^{0.6}.
        assert_relative_eq!(growth, 4f64.powf(0.6), max_relative = 0.15);
    }

    #[test]
    fn extrapolated_sigma2_matches_the_density() {
        let spec = ar1_spec(0.5);
        let t = 1.0;
        let est = sigma2_extrapolated(&spec, t, 1024).unwrap();
        let density = spectral_density(&spec, t).unwrap();
        assert_relative_eq!(est.sigma2, density.sigma2, max_relative = 1e-9);
        assert_eq!(est.method, SpectralMethod::Empirical);
    }
}
