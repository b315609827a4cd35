//! Small numeric and statistical helpers shared across modules.
//!
//! Summation uses Neumaier compensation so reductions are accurate and, because
//! every caller reduces in fixed index order, bit-for-bit reproducible.

use num_complex::Complex64;

/// Compensated (Neumaier) accumulator for f64 sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator of f64 values, in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated complex sum (separate real/imaginary accumulators).
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Sample mean (compensated; 0 for an empty slice).
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

/// Unbiased sample variance (two-pass; 0 for fewer than two points).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss = compensated_sum(xs.iter().map(|x| (x - m) * (x - m)));
    ss / (xs.len() - 1) as f64
}

/// Unbiased sample covariance of paired slices (two-pass).
///
/// # Panics
/// Panics if the slices have different lengths.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "covariance needs paired samples");
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let ss = compensated_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    ss / (xs.len() - 1) as f64
}

/// Standard error of the mean of `xs`.
pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

/// One-sample Kolmogorov-Smirnov distance against a CDF.
///
/// Returns `sup_x |F_n(x) - F(x)|` computed at the jump points of the
/// empirical CDF. The input need not be sorted.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty(), "KS distance needs at least one sample");
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("KS samples must not contain NaN"));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        let lower = f - i as f64 / n;
        let upper = (i + 1) as f64 / n - f;
        d = d.max(lower).max(upper);
    }
    d
}

/// Standard normal CDF.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// CDF of a centered normal with the given variance.
///
/// Degenerates to a unit step at 0 when `variance == 0`.
pub fn normal_cdf(x: f64, variance: f64) -> f64 {
    assert!(variance >= 0.0, "variance must be nonnegative");
    if variance == 0.0 {
        return if x < 0.0 { 0.0 } else { 1.0 };
    }
    standard_normal_cdf(x / variance.sqrt())
}

/// CDF of the unit-mean exponential law.
pub fn exponential_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compensated_sum_beats_naive_on_cancellation() {
        // 1 + 2^-60 repeated: naive accumulation loses the small terms entirely.
        let mut values = vec![1.0f64];
        values.extend(std::iter::repeat(2f64.powi(-60)).take(1 << 16));
        let exact = 1.0 + (1 << 16) as f64 * 2f64.powi(-60);
        assert_relative_eq!(compensated_sum(values), exact, max_relative = 1e-15);
    }

    #[test]
    fn moments_match_hand_values() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(mean(&xs), 2.5);
        assert_relative_eq!(variance(&xs), 5.0 / 3.0, max_relative = 1e-14);
        let ys = [2.0, 4.0, 6.0, 8.0];
        assert_relative_eq!(covariance(&xs, &ys), 10.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn normal_cdf_reference_points() {
        // The underlying erfc is good to ~1e-11, far beyond what KS tests need.
        assert_relative_eq!(standard_normal_cdf(0.0), 0.5);
        assert_relative_eq!(standard_normal_cdf(1.0), 0.841344746068543, max_relative = 1e-9);
        assert_relative_eq!(normal_cdf(2.0, 4.0), 0.841344746068543, max_relative = 1e-9);
        assert_relative_eq!(standard_normal_cdf(-3.0), 1.349898031630095e-3, max_relative = 1e-9);
    }

    #[test]
    fn ks_distance_of_exact_uniform_grid_is_small() {
        // Points at (i + 0.5)/n: the empirical CDF straddles u perfectly.
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.5 / n as f64 + 1e-12, "d = {d}");
    }

    #[test]
    fn ks_distance_detects_wrong_scale() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_distance(&xs, |x| (x / 2.0).clamp(0.0, 1.0));
        assert!(d > 0.45, "d = {d}");
    }

    #[test]
    fn exponential_cdf_basics() {
        assert_eq!(exponential_cdf(-1.0), 0.0);
        assert_relative_eq!(exponential_cdf(1.0), 1.0 - (-1.0f64).exp(), max_relative = 1e-15);
    }
}
