//! Causal linear processes `X_k = sum_{j>=0} a_j xi_{k-j}`.
//!
//! Sampling freezes a finite past window of innovations (`xi_0, xi_{-1}, ...`)
//! and treats innovations beyond the window as zero; stationary draws choose
//! the window from the tail rule so the neglected variance is below `1e-8`
//! relative to `Var(X_0)`. Geometric tails use an exact one-step recursion for
//! the tail mass, so long trajectories cost `O(n * prefix)` instead of
//! `O(n^2)`.

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::coeffs::{CoeffTail, Coefficients};
use crate::error::Result;
use crate::models::innovations::Innovation;
use crate::stats::CompensatedSum;

/// Relative variance allowed to be lost to past-window truncation.
pub const TRUNCATION_REL_TOL: f64 = 1e-8;

/// A causal linear filter driven by i.i.d. innovations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProcess {
    pub coeffs: Coefficients,
    pub innovation: Innovation,
}

impl LinearProcess {
    pub fn new(coeffs: Coefficients, innovation: Innovation) -> Self {
        Self { coeffs, innovation }
    }

    /// Autoregressive model `a_j = rho^j` with the given innovation law.
    pub fn ar1(rho: f64, innovation: Innovation) -> Result<Self> {
        Ok(Self::new(Coefficients::ar1(rho)?, innovation))
    }

    /// `Var(X_0) = sigma^2 sum_j a_j^2`.
    pub fn variance(&self) -> f64 {
        self.innovation.variance() * self.coeffs.sum_sq()
    }

    /// Past window length for stationary sampling (certified truncation).
    pub fn stationary_window(&self) -> Result<u64> {
        self.coeffs.truncation_window(TRUNCATION_REL_TOL)
    }

    /// Deterministic evaluation of `X_1 .. X_n` given the frozen past
    /// `xi_0, xi_{-1}, ..` (index `m` holds `xi_{-m}`) and future innovations
    /// `xi_1 .. xi_n`; innovations beyond the past window are zero.
    pub fn evaluate(&self, past: &[f64], future: &[f64]) -> Vec<f64> {
        let n = future.len();
        // xi_m for m in [1 - past.len(), n].
        let xi = |m: i64| -> f64 {
            if m >= 1 {
                future[(m - 1) as usize]
            } else {
                let idx = (-m) as usize;
                if idx < past.len() {
                    past[idx]
                } else {
                    0.0
                }
            }
        };
        let prefix_len = self.coeffs.tail_start();
        if let CoeffTail::Geometric { scale, ratio } = *self.coeffs.tail() {
            // X_k = sum_{j < P} a_j xi_{k-j} + G_k,
            // G_k = sum_{j >= P} s r^j xi_{k-j} = s r^P xi_{k-P} + r G_{k-1}.
            let p = prefix_len as i64;
            let head = scale * ratio.powi(p as i32);
            let mut g = {
                let mut acc = CompensatedSum::new();
                for j in p..past.len() as i64 {
                    acc.add(scale * ratio.powi(j as i32) * xi(-j));
                }
                acc.value()
            };
            let mut values = Vec::with_capacity(n);
            for k in 1..=n as i64 {
                g = head * xi(k - p) + ratio * g;
                let mut acc = CompensatedSum::new();
                for j in 0..p {
                    acc.add(self.coeffs.coeff(j as u64) * xi(k - j));
                }
                acc.add(g);
                values.push(acc.value());
            }
            values
        } else {
            // Direct convolution over all available innovations.
            let max_lag = |k: i64| -> i64 {
                match self.coeffs.tail() {
                    CoeffTail::Zero => (prefix_len as i64 - 1).min(k - 1 + past.len() as i64),
                    _ => k - 1 + past.len() as i64,
                }
            };
            let mut values = Vec::with_capacity(n);
            for k in 1..=n as i64 {
                let mut acc = CompensatedSum::new();
                for j in 0..=max_lag(k) {
                    acc.add(self.coeffs.coeff(j as u64) * xi(k - j));
                }
                values.push(acc.value());
            }
            values
        }
    }

    /// Draw future innovations and evaluate the path from a frozen past.
    pub fn simulate(
        &self,
        past: &[f64],
        n: usize,
        rng: &mut ChaCha12Rng,
    ) -> (Vec<f64>, Vec<f64>) {
        let future: Vec<f64> = (0..n).map(|_| self.innovation.sample(rng)).collect();
        let values = self.evaluate(past, &future);
        (values, future)
    }

    /// Draw a stationary past window (most recent first: `xi_0, xi_{-1}, ..`).
    pub fn draw_past(&self, rng: &mut ChaCha12Rng) -> Result<Vec<f64>> {
        let window = self.stationary_window()?;
        Ok((0..window).map(|_| self.innovation.sample(rng)).collect())
    }

    /// Conditional mean `E_0 X_k = sum_{m>=0} a_{k+m} xi_{-m}` over the frozen past.
    pub fn conditional_mean_x(&self, past: &[f64], k: u64) -> f64 {
        let mut acc = CompensatedSum::new();
        for (m, xi) in past.iter().enumerate() {
            acc.add(self.coeffs.coeff(k + m as u64) * xi);
        }
        acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::innovations::InnovationKind;
    use crate::seeding::derive_rng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn brute_evaluate(p: &LinearProcess, past: &[f64], future: &[f64]) -> Vec<f64> {
        let n = future.len();
        let mut values = Vec::with_capacity(n);
        for k in 1..=n as i64 {
            let mut acc = 0.0;
            for j in 0..(k as usize + past.len() + 8) as i64 {
                let m = k - j;
                let xi = if m >= 1 {
                    future[(m - 1) as usize]
                } else if ((-m) as usize) < past.len() {
                    past[(-m) as usize]
                } else {
                    0.0
                };
                acc += p.coeffs.coeff(j as u64) * xi;
            }
            values.push(acc);
        }
        values
    }

    #[test]
    fn geometric_recursion_matches_convolution() {
        let p = LinearProcess::new(
            Coefficients::new(
                vec![1.0, -0.4],
                CoeffTail::Geometric { scale: 0.3, ratio: -0.7 },
            )
            .unwrap(),
            Innovation::standard_normal(),
        );
        let mut rng = derive_rng(3, "test.linear", 0);
        let past: Vec<f64> = (0..30).map(|_| p.innovation.sample(&mut rng)).collect();
        let future: Vec<f64> = (0..50).map(|_| p.innovation.sample(&mut rng)).collect();
        let fast = p.evaluate(&past, &future);
        let brute = brute_evaluate(&p, &past, &future);
        for (a, b) in fast.iter().zip(&brute) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn white_noise_quenched_path_is_iid_future() {
        let p = LinearProcess::new(Coefficients::white_noise(), Innovation::standard_normal());
        let future = vec![0.3, -1.2, 0.7];
        let values = p.evaluate(&[0.0], &future);
        assert_eq!(values, future);
    }

    #[test]
    fn zero_noise_ar1_path_is_deterministic_powers() {
        // xi_0 = 1 frozen, zero future noise: X_k = rho^k.
        let p = LinearProcess::ar1(
            0.5,
            Innovation::new(InnovationKind::Normal, 0.0).unwrap(),
        )
        .unwrap();
        let mut rng = derive_rng(1, "test.linear.zero", 0);
        let (values, future) = p.simulate(&[1.0], 10, &mut rng);
        assert!(future.iter().all(|x| *x == 0.0));
        for (k, v) in values.iter().enumerate() {
            assert_relative_eq!(*v, 0.5f64.powi(k as i32 + 1), max_relative = 1e-12);
        }
    }

    #[test]
    fn stationary_variance_matches_formula() {
        let p = LinearProcess::ar1(0.5, Innovation::standard_normal()).unwrap();
        let mut sum_sq = CompensatedSum::new();
        let reps = 4000usize;
        let n = 16usize;
        for i in 0..reps {
            let mut rng = derive_rng(5, "test.linear.stationary", i as u64);
            let past = p.draw_past(&mut rng).unwrap();
            let (values, _) = p.simulate(&past, n, &mut rng);
            for v in values {
                sum_sq.add(v * v);
            }
        }
        let est = sum_sq.value() / (reps * n) as f64;
        assert_relative_eq!(est, p.variance(), max_relative = 0.05);
    }

    #[test]
    fn conditional_mean_shifts_the_filter() {
        let p = LinearProcess::ar1(0.5, Innovation::standard_normal()).unwrap();
        // Past xi_0 = 1, all others 0: E_0 X_k = rho^k.
        for k in 1..10u64 {
            assert_relative_eq!(
                p.conditional_mean_x(&[1.0], k),
                0.5f64.powi(k as i32),
                max_relative = 1e-13
            );
        }
        // Richer past: compare with a direct sum.
        let past = [0.4, -1.0, 2.5];
        let direct: f64 = (0..3).map(|m| p.coeffs.coeff(3 + m) * past[m as usize]).sum();
        assert_relative_eq!(p.conditional_mean_x(&past, 3), direct, max_relative = 1e-13);
    }
}
