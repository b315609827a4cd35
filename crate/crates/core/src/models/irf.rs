//! Contractive random affine maps on the real line.
//!
//! One step applies `x -> A(eps) x + B(eps)` with `A(eps) = slope +
//! slope_noise * eps` and `B(eps) = intercept + intercept_noise * eps`, both
//! driven by the same innovation draw. The observed process is
//! `X_k = observable_scale * (state_k - stationary mean)`, so observations are
//! centered analytically.
//!
//! Validation demands `E[A(eps)^2] < 1`. That is stronger than the usual
//! contraction-on-average requirement `E log|A(eps)| < 0` (which it implies
//! via Jensen's inequality) and guarantees a square-integrable stationary law,
//! so second-moment statistics of the observed process are finite.

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::innovations::Innovation;

/// Relative bias allowed from finite burn-in when targeting the stationary law.
pub const BURN_IN_TOL: f64 = 1e-8;

/// A random affine map `x -> (slope + slope_noise eps) x + intercept +
/// intercept_noise eps` with a centered linear observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIteratedMap", into = "RawIteratedMap")]
pub struct IteratedMap {
    slope: f64,
    slope_noise: f64,
    intercept: f64,
    intercept_noise: f64,
    noise: Innovation,
    observable_scale: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawIteratedMap {
    slope: f64,
    #[serde(default)]
    slope_noise: f64,
    #[serde(default)]
    intercept: f64,
    #[serde(default)]
    intercept_noise: f64,
    noise: Innovation,
    #[serde(default = "default_scale")]
    observable_scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl TryFrom<RawIteratedMap> for IteratedMap {
    type Error = Error;

    fn try_from(raw: RawIteratedMap) -> Result<Self> {
        IteratedMap::new(
            raw.slope,
            raw.slope_noise,
            raw.intercept,
            raw.intercept_noise,
            raw.noise,
            raw.observable_scale,
        )
    }
}

impl From<IteratedMap> for RawIteratedMap {
    fn from(map: IteratedMap) -> Self {
        Self {
            slope: map.slope,
            slope_noise: map.slope_noise,
            intercept: map.intercept,
            intercept_noise: map.intercept_noise,
            noise: map.noise,
            observable_scale: map.observable_scale,
        }
    }
}

impl IteratedMap {
    pub fn new(
        slope: f64,
        slope_noise: f64,
        intercept: f64,
        intercept_noise: f64,
        noise: Innovation,
        observable_scale: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("slope", slope),
            ("slope_noise", slope_noise),
            ("intercept", intercept),
            ("intercept_noise", intercept_noise),
            ("observable_scale", observable_scale),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        let map = Self { slope, slope_noise, intercept, intercept_noise, noise, observable_scale };
        let mean_sq = map.mean_slope_sq();
        if mean_sq >= 1.0 {
            return Err(Error::NonContractive(format!(
                "mean squared multiplier E[A^2] = {mean_sq} is not below 1"
            )));
        }
        Ok(map)
    }

    /// Plain contraction `x -> slope x + eps` with centered identity observable.
    pub fn contraction(slope: f64, noise: Innovation) -> Result<Self> {
        Self::new(slope, 0.0, 0.0, 1.0, noise, 1.0)
    }

    pub fn noise(&self) -> &Innovation {
        &self.noise
    }

    pub fn observable_scale(&self) -> f64 {
        self.observable_scale
    }

    pub fn mean_slope(&self) -> f64 {
        self.slope
    }

    /// `E[A(eps)^2] = slope^2 + slope_noise^2 Var(eps)`.
    pub fn mean_slope_sq(&self) -> f64 {
        self.noise.mean_sq_affine(self.slope, self.slope_noise)
    }

    /// One-step L1 coupling rate `E|A(eps)| < 1`.
    pub fn contraction_rate(&self) -> f64 {
        self.noise.mean_abs_affine(self.slope, self.slope_noise)
    }

    /// `E log|A(eps)|` (negative here), with an exactness flag.
    pub fn log_contraction(&self) -> (f64, bool) {
        self.noise.mean_log_abs_affine(self.slope, self.slope_noise)
    }

    /// Steps until the coupling bound `contraction_rate^B` drops below
    /// [`BURN_IN_TOL`].
    pub fn burn_in_steps(&self) -> u64 {
        let r = self.contraction_rate();
        if r == 0.0 {
            return 1;
        }
        (BURN_IN_TOL.ln() / r.ln()).ceil() as u64
    }

    /// Stationary mean of the state: `intercept / (1 - slope)`.
    pub fn stationary_mean(&self) -> f64 {
        self.intercept / (1.0 - self.slope)
    }

    /// Stationary `E[state^2]` from the fixed-point equation
    /// `m2 = E[A^2] m2 + 2 E[A B] m1 + E[B^2]`.
    pub fn stationary_second_moment(&self) -> f64 {
        let var = self.noise.variance();
        let mean_ab = self.slope * self.intercept + self.slope_noise * self.intercept_noise * var;
        let mean_b_sq = self.intercept * self.intercept
            + self.intercept_noise * self.intercept_noise * var;
        (2.0 * mean_ab * self.stationary_mean() + mean_b_sq) / (1.0 - self.mean_slope_sq())
    }

    /// Stationary variance of the state.
    pub fn state_variance(&self) -> f64 {
        let mean = self.stationary_mean();
        (self.stationary_second_moment() - mean * mean).max(0.0)
    }

    /// Variance of the observed process `X_k`.
    pub fn variance(&self) -> f64 {
        self.observable_scale * self.observable_scale * self.state_variance()
    }

    /// Autocovariance of observations: `cov(X_0, X_lag) = scale^2 slope^lag
    /// Var(state)`, because the conditional state mean contracts by `slope`
    /// each step.
    pub fn covariance(&self, lag: u64) -> f64 {
        self.variance() * self.slope.powi(lag as i32)
    }

    /// Centered observable applied to a state.
    pub fn observe(&self, state: f64) -> f64 {
        self.observable_scale * (state - self.stationary_mean())
    }

    /// Lipschitz constant of the observable.
    pub fn lipschitz(&self) -> f64 {
        self.observable_scale.abs()
    }

    /// Apply the map with an explicit innovation (coupled runs share draws).
    pub fn apply(&self, state: f64, eps: f64) -> f64 {
        (self.slope + self.slope_noise * eps) * state
            + self.intercept
            + self.intercept_noise * eps
    }

    /// Apply the map with a fresh innovation draw.
    pub fn step(&self, state: f64, rng: &mut ChaCha12Rng) -> f64 {
        let eps = self.noise.sample(rng);
        self.apply(state, eps)
    }

    /// Approximate stationary state via burn-in from the stationary mean.
    pub fn draw_stationary_state(&self, rng: &mut ChaCha12Rng) -> f64 {
        let mut state = self.stationary_mean();
        for _ in 0..self.burn_in_steps() {
            state = self.step(state, rng);
        }
        state
    }

    /// Run `n` steps from `start`, observing after each step:
    /// `X_k = observe(state_k)` for `k = 1..=n`.
    pub fn simulate(
        &self,
        start: f64,
        n: usize,
        rng: &mut ChaCha12Rng,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut states = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let mut state = start;
        for _ in 0..n {
            state = self.step(state, rng);
            states.push(state);
            values.push(self.observe(state));
        }
        (values, states)
    }

    /// `E[X_k | state_0 = x] = scale slope^k (x - stationary mean)`.
    pub fn conditional_mean_x(&self, start: f64, k: u64) -> f64 {
        self.observable_scale
            * self.slope.powi(k as i32)
            * (start - self.stationary_mean())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::derive_rng;
    use crate::stats::{mean, variance};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn half_contraction() -> IteratedMap {
        IteratedMap::contraction(0.5, Innovation::standard_normal()).unwrap()
    }

    #[test]
    fn rejects_expanding_maps() {
        let err =
            IteratedMap::contraction(1.0, Innovation::standard_normal()).unwrap_err();
        assert!(matches!(err, Error::NonContractive(_)), "got: {err}");
        // slope^2 + slope_noise^2 = 0.64 + 0.64 >= 1.
        let err = IteratedMap::new(
            0.8,
            0.8,
            0.0,
            0.0,
            Innovation::standard_normal(),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonContractive(_)), "got: {err}");
    }

    #[test]
    fn contraction_closed_forms() {
        let map = half_contraction();
        assert_relative_eq!(map.stationary_mean(), 0.0, epsilon = 1e-15);
        // Var = 1 / (1 - 0.25).
        assert_relative_eq!(map.state_variance(), 4.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(map.contraction_rate(), 0.5, max_relative = 1e-12);
        let (log_rate, _) = map.log_contraction();
        assert_relative_eq!(log_rate, 0.5f64.ln(), max_relative = 1e-9);
        // ceil(ln 1e-8 / ln 0.5) = 27.
        assert_eq!(map.burn_in_steps(), 27);
    }

    #[test]
    fn one_step_forgetting_map() {
        let map = IteratedMap::contraction(0.0, Innovation::standard_normal()).unwrap();
        assert_eq!(map.burn_in_steps(), 1);
        // After one step the state is exactly the innovation.
        let state = map.apply(123.0, 0.7);
        assert_relative_eq!(state, 0.7, max_relative = 1e-15);
    }

    #[test]
    fn stationary_moments_match_monte_carlo() {
        let map = IteratedMap::new(
            0.3,
            0.4,
            1.0,
            0.5,
            Innovation::standard_normal(),
            1.0,
        )
        .unwrap();
        let mut rng = derive_rng(21, "test.irf.moments", 0);
        let reps = 60_000;
        let mut states = Vec::with_capacity(reps);
        for _ in 0..reps {
            states.push(map.draw_stationary_state(&mut rng));
        }
        assert_abs_diff_eq!(mean(&states), map.stationary_mean(), epsilon = 0.02);
        assert_relative_eq!(
            variance(&states),
            map.state_variance(),
            max_relative = 0.05
        );
    }

    #[test]
    fn conditional_mean_contracts_geometrically() {
        let map = half_contraction();
        let start = 5.0;
        let reps = 40_000;
        let n = 8;
        let mut sums = vec![0.0; n];
        for i in 0..reps {
            let mut rng = derive_rng(22, "test.irf.conditional", i as u64);
            let (values, _) = map.simulate(start, n, &mut rng);
            for (k, v) in values.iter().enumerate() {
                sums[k] += v;
            }
        }
        for k in 1..=n {
            let estimate = sums[k - 1] / reps as f64;
            assert_abs_diff_eq!(
                estimate,
                map.conditional_mean_x(start, k as u64),
                epsilon = 0.03
            );
        }
    }

    #[test]
    fn covariance_decays_by_mean_slope() {
        let map = IteratedMap::new(
            0.3,
            0.4,
            0.0,
            1.0,
            Innovation::standard_normal(),
            1.0,
        )
        .unwrap();
        let mut rng = derive_rng(23, "test.irf.cov", 0);
        let n = 400_000;
        let mut state = map.draw_stationary_state(&mut rng);
        let mut path = Vec::with_capacity(n);
        for _ in 0..n {
            state = map.step(state, &mut rng);
            path.push(map.observe(state));
        }
        for lag in 0..4usize {
            let mut acc = 0.0;
            for k in 0..(n - lag) {
                acc += path[k] * path[k + lag];
            }
            let estimate = acc / (n - lag) as f64;
            assert_abs_diff_eq!(estimate, map.covariance(lag as u64), epsilon = 0.02);
        }
    }
}
