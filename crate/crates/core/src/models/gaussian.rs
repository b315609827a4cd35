//! Stationary Gaussian sequences with slowly decaying covariance.
//!
//! The underlying states form a centered Gaussian sequence with
//! `cov(xi_j, xi_k) = r(|j - k|) = (1 + (j-k)^2)^{-alpha/2}` for
//! `alpha in (0, 1/2)`; the covariances are not summable, so partial Fourier
//! sums at frequency zero grow faster than `n` and the usual normalization
//! fails. Observations are either the states themselves or the centered
//! squares `xi^2 - 1`.
//!
//! Sampling is exact: a window of states is drawn as `F z` with `z` i.i.d.
//! standard normal and `F F^T` equal to the covariance matrix (symmetric
//! eigenvalue factorization). Quenched draws condition on a finite window of
//! past states via the Schur complement. Dense factorization is capped at a
//! configurable window length.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Most negative covariance eigenvalue tolerated before rejecting a window.
pub const EIGEN_FLOOR: f64 = -1e-8;
/// Default cap on the dense factorization window (`n + past length`).
pub const DEFAULT_DENSE_CAP: usize = 4096;
/// Past window length used when an origin is drawn rather than supplied.
pub const DEFAULT_PAST_WINDOW: usize = 128;

/// Observable applied to the Gaussian states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussianObservable {
    /// `X_k = xi_k`.
    Identity,
    /// `X_k = xi_k^2 - 1` (centered since `E xi^2 = 1`).
    CenteredSquare,
}

/// A long-memory Gaussian process specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGaussianLrd", into = "RawGaussianLrd")]
pub struct GaussianLrd {
    alpha: f64,
    observable: GaussianObservable,
    dense_cap: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawGaussianLrd {
    alpha: f64,
    observable: GaussianObservable,
    #[serde(default = "default_cap")]
    dense_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DENSE_CAP
}

impl TryFrom<RawGaussianLrd> for GaussianLrd {
    type Error = Error;

    fn try_from(raw: RawGaussianLrd) -> Result<Self> {
        GaussianLrd::with_cap(raw.alpha, raw.observable, raw.dense_cap)
    }
}

impl From<GaussianLrd> for RawGaussianLrd {
    fn from(model: GaussianLrd) -> Self {
        Self {
            alpha: model.alpha,
            observable: model.observable,
            dense_cap: model.dense_cap,
        }
    }
}

impl GaussianLrd {
    pub fn new(alpha: f64, observable: GaussianObservable) -> Result<Self> {
        Self::with_cap(alpha, observable, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(
        alpha: f64,
        observable: GaussianObservable,
        dense_cap: usize,
    ) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 0.5 {
            return Err(Error::invalid(format!(
                "memory exponent alpha must lie in (0, 1/2), got {alpha}"
            )));
        }
        if dense_cap == 0 {
            return Err(Error::invalid("dense factorization cap must be positive"));
        }
        Ok(Self { alpha, observable, dense_cap })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn observable(&self) -> GaussianObservable {
        self.observable
    }

    pub fn dense_cap(&self) -> usize {
        self.dense_cap
    }

    /// State covariance `r(k) = (1 + k^2)^{-alpha/2}`.
    pub fn state_covariance(&self, lag: u64) -> f64 {
        let k = lag as f64;
        (1.0 + k * k).powf(-self.alpha / 2.0)
    }

    /// Covariance of the observed process.
    pub fn covariance(&self, lag: u64) -> f64 {
        let r = self.state_covariance(lag);
        match self.observable {
            GaussianObservable::Identity => r,
            // cov(xi_0^2 - 1, xi_k^2 - 1) = 2 r(k)^2 for jointly normal pairs.
            GaussianObservable::CenteredSquare => 2.0 * r * r,
        }
    }

    /// Variance of a single observation.
    pub fn variance(&self) -> f64 {
        self.covariance(0)
    }

    pub fn observe(&self, state: f64) -> f64 {
        match self.observable {
            GaussianObservable::Identity => state,
            GaussianObservable::CenteredSquare => state * state - 1.0,
        }
    }

    fn covariance_matrix(&self, len: usize) -> DMatrix<f64> {
        DMatrix::from_fn(len, len, |i, j| {
            self.state_covariance(i.abs_diff(j) as u64)
        })
    }

    fn check_cap(&self, total: usize) -> Result<()> {
        if total > self.dense_cap {
            return Err(Error::Unsupported(format!(
                "window of {total} states exceeds the dense factorization cap \
                 {}; raise dense_cap or shorten the run",
                self.dense_cap
            )));
        }
        Ok(())
    }

    /// Exact sampler for `n` consecutive stationary states.
    pub fn stationary_sampler(&self, n: usize) -> Result<GaussianSampler> {
        if n == 0 {
            return Err(Error::invalid("cannot sample an empty window"));
        }
        self.check_cap(n)?;
        let factor = factor_covariance(self.covariance_matrix(n))?;
        Ok(GaussianSampler { mean: DVector::zeros(n), factor })
    }

    /// Exact sampler for `n` states conditioned on past states
    /// `past[0] = xi_0, past[1] = xi_{-1}, ...`.
    pub fn quenched_sampler(&self, past: &[f64], n: usize) -> Result<GaussianSampler> {
        if n == 0 {
            return Err(Error::invalid("cannot sample an empty window"));
        }
        if past.is_empty() {
            return Err(Error::invalid("quenched sampling requires a past window"));
        }
        let l = past.len();
        self.check_cap(n + l)?;
        // Joint covariance of (future block xi_1..xi_n, past block xi_0..xi_{1-l}).
        let future_past = DMatrix::from_fn(n, l, |i, m| {
            // lag between xi_{i+1} and xi_{-m}.
            self.state_covariance((i + 1 + m) as u64)
        });
        let past_cov = self.covariance_matrix(l);
        // Solve Sigma_22 W = Sigma_21 for W = Sigma_22^{-1} Sigma_21.
        let chol = nalgebra::Cholesky::new(past_cov.clone()).ok_or_else(|| {
            Error::invalid("past covariance window is not positive definite")
        })?;
        let weights = chol.solve(&future_past.transpose());
        let past_vec = DVector::from_column_slice(past);
        let mean = weights.transpose() * &past_vec;
        let conditional = self.covariance_matrix(n) - &future_past * &weights;
        let factor = factor_covariance(conditional)?;
        Ok(GaussianSampler { mean, factor })
    }

    /// Conditional means `E[xi_k | past]` for `k = 1..=n` without drawing.
    pub fn conditional_state_means(&self, past: &[f64], n: usize) -> Result<Vec<f64>> {
        let sampler = self.quenched_sampler(past, n)?;
        Ok(sampler.mean.iter().copied().collect())
    }

    /// Conditional means of the observations `E[X_k | past]` for `k = 1..=n`.
    /// For the centered square this is `m_k^2 + v_k - 1` with `m_k`, `v_k` the
    /// conditional state mean and variance.
    pub fn conditional_observation_means(&self, past: &[f64], n: usize) -> Result<Vec<f64>> {
        let sampler = self.quenched_sampler(past, n)?;
        let out = (0..n)
            .map(|k| match self.observable {
                GaussianObservable::Identity => sampler.mean[k],
                GaussianObservable::CenteredSquare => {
                    let m = sampler.mean[k];
                    let v = sampler.factor.row(k).iter().map(|w| w * w).sum::<f64>();
                    m * m + v - 1.0
                }
            })
            .collect();
        Ok(out)
    }
}

/// A frozen Gaussian window sampler: draws `mean + F z` with `z` i.i.d.
/// standard normal. Build once, draw per replicate.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.len() == 0
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Draw one window of states.
    pub fn draw(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let z = DVector::from_iterator(
            self.factor.ncols(),
            (0..self.factor.ncols()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        let x = &self.mean + &self.factor * z;
        x.iter().copied().collect()
    }
}

/// Symmetric factorization `F F^T = Sigma` with eigenvalue clamping; rejects
/// windows whose smallest eigenvalue is below [`EIGEN_FLOOR`].
fn factor_covariance(sigma: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eigen = SymmetricEigen::new(sigma);
    let mut min_lambda = f64::INFINITY;
    for &lambda in eigen.eigenvalues.iter() {
        min_lambda = min_lambda.min(lambda);
    }
    if min_lambda < EIGEN_FLOOR {
        return Err(Error::invalid(format!(
            "covariance window is not positive semidefinite: \
             smallest eigenvalue {min_lambda:e}"
        )));
    }
    let mut factor = eigen.eigenvectors;
    for (j, &lambda) in eigen.eigenvalues.iter().enumerate() {
        let scale = lambda.max(0.0).sqrt();
        for i in 0..factor.nrows() {
            factor[(i, j)] *= scale;
        }
    }
    Ok(factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::derive_rng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn model() -> GaussianLrd {
        GaussianLrd::new(0.4, GaussianObservable::Identity).unwrap()
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(GaussianLrd::new(0.0, GaussianObservable::Identity).is_err());
        assert!(GaussianLrd::new(0.5, GaussianObservable::Identity).is_err());
        assert!(GaussianLrd::new(-0.1, GaussianObservable::Identity).is_err());
    }

    #[test]
    fn covariance_rule_reference_values() {
        let m = model();
        assert_relative_eq!(m.state_covariance(0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(
            m.state_covariance(1),
            2f64.powf(-0.2),
            max_relative = 1e-14
        );
        let sq = GaussianLrd::new(0.4, GaussianObservable::CenteredSquare).unwrap();
        assert_relative_eq!(sq.variance(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(
            sq.covariance(3),
            2.0 * 10f64.powf(-0.4),
            max_relative = 1e-14
        );
    }

    #[test]
    fn factor_reconstructs_covariance_at_scale() {
        let m = model();
        let n = 512;
        let sampler = m.stationary_sampler(n).unwrap();
        let product = &sampler.factor * sampler.factor.transpose();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = m.state_covariance(i.abs_diff(j) as u64);
                worst = worst.max((product[(i, j)] - target).abs());
            }
        }
        assert!(worst < 1e-10, "factor reconstruction error {worst:e}");
    }

    #[test]
    fn sample_covariance_matches_rule_entrywise() {
        let m = model();
        let n = 16;
        let reps = 40_000;
        let sampler = m.stationary_sampler(n).unwrap();
        let mut sums = vec![0.0; n * n];
        for i in 0..reps {
            let mut rng = derive_rng(31, "test.gaussian.cov", i);
            let x = sampler.draw(&mut rng);
            for a in 0..n {
                for b in 0..n {
                    sums[a * n + b] += x[a] * x[b];
                }
            }
        }
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let estimate = sums[a * n + b] / reps as f64;
                let target = m.state_covariance(a.abs_diff(b) as u64);
                worst = worst.max((estimate - target).abs());
            }
        }
        assert!(worst < 0.03, "sample covariance error {worst}");
    }

    #[test]
    fn pair_covariance_matches_closed_form() {
        // Covariance of two adjacent samples near (1+1)^{-0.2} ~ 0.8706.
        let m = model();
        let sampler = m.stationary_sampler(2).unwrap();
        let mut acc = 0.0;
        let reps = 100_000;
        for i in 0..reps {
            let mut rng = derive_rng(32, "test.gaussian.pair", i);
            let x = sampler.draw(&mut rng);
            acc += x[0] * x[1];
        }
        assert_abs_diff_eq!(acc / reps as f64, 0.8705505632961241, epsilon = 0.02);
    }

    #[test]
    fn conditional_law_matches_two_point_closed_form() {
        let m = model();
        let r = m.state_covariance(1);
        let sampler = m.quenched_sampler(&[2.0], 1).unwrap();
        assert_relative_eq!(sampler.mean[0], 2.0 * r, max_relative = 1e-12);
        let conditional_var: f64 =
            sampler.factor.row(0).iter().map(|w| w * w).sum();
        assert_relative_eq!(conditional_var, 1.0 - r * r, max_relative = 1e-10);
    }

    #[test]
    fn quenched_draws_center_on_conditional_mean() {
        let m = model();
        let past = [1.5, -0.5, 2.0];
        let n = 4;
        let sampler = m.quenched_sampler(&past, n).unwrap();
        let reps = 50_000;
        let mut sums = vec![0.0; n];
        for i in 0..reps {
            let mut rng = derive_rng(33, "test.gaussian.quenched", i);
            let x = sampler.draw(&mut rng);
            for (k, v) in x.iter().enumerate() {
                sums[k] += v;
            }
        }
        for k in 0..n {
            assert_abs_diff_eq!(sums[k] / reps as f64, sampler.mean[k], epsilon = 0.02);
        }
    }

    #[test]
    fn conditional_square_mean_uses_conditional_variance() {
        let sq = GaussianLrd::new(0.4, GaussianObservable::CenteredSquare).unwrap();
        let past = [2.0];
        let means = sq.conditional_observation_means(&past, 1).unwrap();
        let r = sq.state_covariance(1);
        let expected = (2.0 * r) * (2.0 * r) + (1.0 - r * r) - 1.0;
        assert_relative_eq!(means[0], expected, max_relative = 1e-10);
    }

    #[test]
    fn cap_is_enforced() {
        let m = GaussianLrd::with_cap(0.4, GaussianObservable::Identity, 64).unwrap();
        assert!(m.stationary_sampler(64).is_ok());
        let err = m.stationary_sampler(65).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)), "got: {err}");
        let err = m.quenched_sampler(&[0.0; 32], 33).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)), "got: {err}");
    }
}
