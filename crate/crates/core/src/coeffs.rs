//! Coefficient sequences of causal linear filters.
//!
//! A sequence is an explicit prefix `a_0 .. a_{P-1}` followed by an analytic
//! tail rule valid for `j >= P`. Every analytic operation here (tail energies,
//! transfer sums, autocovariances) either evaluates in closed form or reports
//! a certified truncation bound, so callers can honor hard error contracts.
//!
//! Supported tail rules:
//!
//! * `zero` - finite support;
//! * `geometric` - `a_j = scale * ratio^j`, `|ratio| < 1`;
//! * `power` - `a_j = scale * (j + offset)^-exponent`;
//! * `power-log` - `a_j = scale * (j + offset)^-exponent * ln(j + offset)^-log_exponent`.
//!
//! Power-type rules must be square summable (`exponent > 1/2`, or `= 1/2` with
//! `log_exponent > 1/2`), which is exactly the admissibility condition for the
//! stationary processes built on top of them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{CompensatedSum, ComplexSum};

/// Largest number of terms any adaptive truncation may sum directly.
const MAX_DIRECT_TERMS: u64 = 1 << 22;

/// Analytic tail rule for coefficients beyond the explicit prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoeffTail {
    /// All coefficients beyond the prefix vanish.
    Zero,
    /// `a_j = scale * ratio^j` for `j >= prefix_len`.
    Geometric { scale: f64, ratio: f64 },
    /// `a_j = scale * (j + offset)^-exponent`.
    Power { scale: f64, exponent: f64, offset: f64 },
    /// `a_j = scale * (j + offset)^-exponent * ln(j + offset)^-log_exponent`.
    PowerLog {
        scale: f64,
        exponent: f64,
        log_exponent: f64,
        offset: f64,
    },
}

/// Validated coefficient sequence: explicit prefix plus tail rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoefficients", into = "RawCoefficients")]
pub struct Coefficients {
    prefix: Vec<f64>,
    tail: CoeffTail,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawCoefficients {
    #[serde(default)]
    prefix: Vec<f64>,
    #[serde(default = "default_tail")]
    tail: CoeffTail,
}

fn default_tail() -> CoeffTail {
    CoeffTail::Zero
}

impl TryFrom<RawCoefficients> for Coefficients {
    type Error = Error;
    fn try_from(raw: RawCoefficients) -> Result<Self> {
        Coefficients::new(raw.prefix, raw.tail)
    }
}

impl From<Coefficients> for RawCoefficients {
    fn from(c: Coefficients) -> Self {
        RawCoefficients {
            prefix: c.prefix,
            tail: c.tail,
        }
    }
}

impl Coefficients {
    /// Build and validate a coefficient sequence.
    pub fn new(prefix: Vec<f64>, tail: CoeffTail) -> Result<Self> {
        if prefix.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("coefficient prefix contains a non-finite value"));
        }
        let start = prefix.len() as f64;
        match &tail {
            CoeffTail::Zero => {
                if prefix.is_empty() {
                    return Err(Error::invalid("finite-support coefficients need a nonempty prefix"));
                }
            }
            CoeffTail::Geometric { scale, ratio } => {
                if !scale.is_finite() || !ratio.is_finite() {
                    return Err(Error::invalid("geometric tail parameters must be finite"));
                }
                if ratio.abs() >= 1.0 {
                    return Err(Error::invalid(format!(
                        "geometric tail ratio {ratio} is not inside (-1, 1)"
                    )));
                }
            }
            CoeffTail::Power { scale, exponent, offset } => {
                if !scale.is_finite() || !exponent.is_finite() || !offset.is_finite() {
                    return Err(Error::invalid("power tail parameters must be finite"));
                }
                if *exponent <= 0.5 {
                    return Err(Error::invalid(format!(
                        "power tail exponent {exponent} is not square summable (need > 1/2)"
                    )));
                }
                if *offset < 0.0 || start + offset < 1.0 {
                    return Err(Error::invalid(
                        "power tail needs j + offset >= 1 from the first tail index",
                    ));
                }
            }
            CoeffTail::PowerLog {
                scale,
                exponent,
                log_exponent,
                offset,
            } => {
                if ![*scale, *exponent, *log_exponent, *offset]
                    .iter()
                    .all(|x| x.is_finite())
                {
                    return Err(Error::invalid("power-log tail parameters must be finite"));
                }
                let square_summable =
                    *exponent > 0.5 || (*exponent == 0.5 && *log_exponent > 0.5);
                if !square_summable {
                    return Err(Error::invalid(
                        "power-log tail is not square summable (need exponent > 1/2, or = 1/2 with log_exponent > 1/2)",
                    ));
                }
                if *log_exponent < 0.0 {
                    return Err(Error::invalid("power-log tail needs log_exponent >= 0"));
                }
                if *offset < 0.0 || start + offset < 2.0 {
                    return Err(Error::invalid(
                        "power-log tail needs j + offset >= 2 from the first tail index",
                    ));
                }
            }
        }
        Ok(Self { prefix, tail })
    }

    /// White noise: `a = (1)`.
    pub fn white_noise() -> Self {
        Self::new(vec![1.0], CoeffTail::Zero).expect("white noise is valid")
    }

    /// Autoregressive filter `a_j = rho^j`, `|rho| < 1`.
    pub fn ar1(rho: f64) -> Result<Self> {
        Self::new(vec![], CoeffTail::Geometric { scale: 1.0, ratio: rho })
    }

    /// Finitely supported coefficients.
    pub fn finite(prefix: Vec<f64>) -> Result<Self> {
        Self::new(prefix, CoeffTail::Zero)
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn tail(&self) -> &CoeffTail {
        &self.tail
    }

    /// First index governed by the tail rule.
    pub fn tail_start(&self) -> u64 {
        self.prefix.len() as u64
    }

    /// Coefficient `a_j`.
    pub fn coeff(&self, j: u64) -> f64 {
        if (j as usize) < self.prefix.len() {
            return self.prefix[j as usize];
        }
        match &self.tail {
            CoeffTail::Zero => 0.0,
            CoeffTail::Geometric { scale, ratio } => {
                // Avoid subnormal churn for very deep geometric tails.
                if ratio.abs().ln() * (j as f64) < -745.0 {
                    return 0.0;
                }
                scale * ratio.powi(j as i32)
            }
            CoeffTail::Power { scale, exponent, offset } => {
                scale * (j as f64 + offset).powf(-exponent)
            }
            CoeffTail::PowerLog {
                scale,
                exponent,
                log_exponent,
                offset,
            } => {
                let x = j as f64 + offset;
                scale * x.powf(-exponent) * x.ln().powf(-log_exponent)
            }
        }
    }

    /// Certified upper bound on the squared-coefficient tail `sum_{j>=m} a_j^2`.
    pub fn l2_tail_upper(&self, m: u64) -> f64 {
        let start = self.tail_start();
        let mut acc = CompensatedSum::new();
        for j in m..start.max(m) {
            let a = self.coeff(j);
            acc.add(a * a);
        }
        let from = start.max(m);
        let tail = match &self.tail {
            CoeffTail::Zero => 0.0,
            CoeffTail::Geometric { scale, ratio } => {
                let r2 = ratio * ratio;
                scale * scale * pow_u64(r2, from) / (1.0 - r2)
            }
            CoeffTail::Power { scale, exponent, offset } => {
                // u(j) = scale^2 (j+offset)^{-2p}; sum_{j>=m} u <= u(m) + integral.
                let s2 = scale * scale;
                let p2 = 2.0 * exponent;
                let x = from as f64 + offset;
                s2 * (x.powf(-p2) + x.powf(1.0 - p2) / (p2 - 1.0))
            }
            CoeffTail::PowerLog {
                scale,
                exponent,
                log_exponent,
                offset,
            } => {
                let s2 = scale * scale;
                let p2 = 2.0 * exponent;
                let q2 = 2.0 * log_exponent;
                let x = from as f64 + offset;
                let u_m = x.powf(-p2) * x.ln().powf(-q2);
                let integral = if p2 > 1.0 {
                    // ln^{-2q}(y) <= ln^{-2q}(x) for y >= x once 2q >= 0.
                    x.ln().powf(-q2) * x.powf(1.0 - p2) / (p2 - 1.0)
                } else {
                    // 2p = 1, 2q > 1: exact integral of y^-1 ln^-2q y.
                    x.ln().powf(1.0 - q2) / (q2 - 1.0)
                };
                s2 * (u_m + integral)
            }
        };
        acc.add(tail);
        acc.value()
    }

    /// Squared-coefficient tail `sum_{j>=m} a_j^2`, summed directly with a
    /// certified remainder small relative to the reported value.
    pub fn l2_tail(&self, m: u64) -> f64 {
        match &self.tail {
            // Exact closed forms.
            CoeffTail::Zero | CoeffTail::Geometric { .. } => self.l2_tail_upper(m),
            _ => {
                let mut acc = CompensatedSum::new();
                let mut j = m;
                loop {
                    let stop = j >= m + MAX_DIRECT_TERMS;
                    let remainder = self.l2_tail_upper(j);
                    let a = self.coeff(j);
                    if stop || remainder <= 1e-12 * acc.value() + f64::MIN_POSITIVE {
                        // Midpoint of [sum, sum + remainder].
                        acc.add(0.5 * remainder);
                        return acc.value();
                    }
                    acc.add(a * a);
                    j += 1;
                }
            }
        }
    }

    /// Total squared mass `sum_j a_j^2`.
    pub fn sum_sq(&self) -> f64 {
        self.l2_tail(0)
    }

    /// Certified upper bound on `sum_{j>=m} (a_j - a_{j+1})^2`.
    pub fn diff_sq_tail_upper(&self, m: u64) -> f64 {
        let start = self.tail_start();
        let mut acc = CompensatedSum::new();
        // Differences that straddle the prefix are evaluated directly.
        for j in m..start.max(m) {
            let d = self.coeff(j) - self.coeff(j + 1);
            acc.add(d * d);
        }
        let from = start.max(m);
        let tail = match &self.tail {
            CoeffTail::Zero => 0.0,
            CoeffTail::Geometric { scale, ratio } => {
                // d_j = scale r^j (1 - r): exact geometric sum.
                let c = scale * (1.0 - ratio);
                let r2 = ratio * ratio;
                c * c * pow_u64(r2, from) / (1.0 - r2)
            }
            CoeffTail::Power { scale, exponent, offset } => {
                // 0 <= u(j) - u(j+1) <= -u'(j) = p (j+offset)^{-p-1} by convexity.
                let c = scale.abs() * exponent;
                let s = 2.0 * (exponent + 1.0);
                let x = from as f64 + offset;
                c * c * (x.powf(-s) + x.powf(1.0 - s) / (s - 1.0))
            }
            CoeffTail::PowerLog {
                scale,
                exponent,
                log_exponent,
                offset,
            } => {
                // -u'(x) = x^{-p-1} ln^{-q} x (p + q/ln x) <= (p+q) x^{-p-1} ln^{-q} x
                // using ln x >= ln 2 >= ... >= 1 is not guaranteed; bound q/ln x by
                // q / ln(x_from) instead.
                let x = from as f64 + offset;
                let c = scale.abs() * (exponent + log_exponent / x.ln());
                let s = 2.0 * (exponent + 1.0);
                let lnq = x.ln().powf(-2.0 * log_exponent);
                c * c * lnq * (x.powf(-s) + x.powf(1.0 - s) / (s - 1.0))
            }
        };
        acc.add(tail);
        acc.value()
    }

    /// Whether `sum_j |a_j|` is finite with a certified bound.
    pub fn is_absolutely_summable(&self) -> bool {
        match &self.tail {
            CoeffTail::Zero | CoeffTail::Geometric { .. } => true,
            CoeffTail::Power { exponent, .. } => *exponent > 1.0,
            CoeffTail::PowerLog {
                exponent,
                log_exponent,
                ..
            } => *exponent > 1.0 || (*exponent == 1.0 && *log_exponent > 1.0),
        }
    }

    /// Certified upper bound on `sum_{j>=m} |a_j|`; `None` when not summable.
    pub fn l1_tail_upper(&self, m: u64) -> Option<f64> {
        if !self.is_absolutely_summable() {
            return None;
        }
        let start = self.tail_start();
        let mut acc = CompensatedSum::new();
        for j in m..start.max(m) {
            acc.add(self.coeff(j).abs());
        }
        let from = start.max(m);
        let tail = match &self.tail {
            CoeffTail::Zero => 0.0,
            CoeffTail::Geometric { scale, ratio } => {
                scale.abs() * pow_u64(ratio.abs(), from) / (1.0 - ratio.abs())
            }
            CoeffTail::Power { scale, exponent, offset } => {
                let x = from as f64 + offset;
                scale.abs() * (x.powf(-exponent) + x.powf(1.0 - exponent) / (exponent - 1.0))
            }
            CoeffTail::PowerLog {
                scale,
                exponent,
                log_exponent,
                offset,
            } => {
                let x = from as f64 + offset;
                let u_m = x.powf(-exponent) * x.ln().powf(-log_exponent);
                let integral = if *exponent > 1.0 {
                    x.ln().powf(-log_exponent) * x.powf(1.0 - exponent) / (exponent - 1.0)
                } else {
                    // exponent = 1, log_exponent > 1.
                    x.ln().powf(1.0 - log_exponent) / (log_exponent - 1.0)
                };
                scale.abs() * (u_m + integral)
            }
        };
        acc.add(tail);
        Some(acc.value())
    }

    /// Smallest window `L` with `sum_{j>=L} a_j^2 <= rel_tol * sum_j a_j^2`.
    ///
    /// Errors when the tail decays too slowly for any practical window.
    pub fn truncation_window(&self, rel_tol: f64) -> Result<u64> {
        assert!(rel_tol > 0.0, "relative tolerance must be positive");
        let total = self.sum_sq();
        if total == 0.0 {
            return Ok(self.prefix.len().max(1) as u64);
        }
        let target = rel_tol * total;
        // Exponential search on the certified upper bound keeps this exact
        // enough: the bound is tight for geometric tails and within one term
        // plus an integral for power tails.
        let mut hi = self.prefix.len().max(1) as u64;
        while self.l2_tail_upper(hi) > target {
            hi = hi.saturating_mul(2);
            if hi > MAX_DIRECT_TERMS {
                return Err(Error::Unsupported(format!(
                    "tail decays too slowly to truncate at relative tolerance {rel_tol:e} \
                     within {MAX_DIRECT_TERMS} coefficients"
                )));
            }
        }
        let mut lo = 0u64;
        while lo + 1 < hi {
            let mid = lo + (hi - lo) / 2;
            if self.l2_tail_upper(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi.max(1))
    }

    /// Transfer sum `sum_{j>=from} a_j e^{ijt}` with absolute error below
    /// `target_abs` (certified).
    ///
    /// Errors when the coefficients are not absolutely summable, or when the
    /// certificate cannot reach the target within the direct-term budget.
    pub fn transfer_from(&self, from: u64, t: f64, target_abs: f64) -> Result<Complex64> {
        assert!(target_abs > 0.0, "target must be positive");
        if !self.is_absolutely_summable() {
            return Err(Error::NonSummable(
                "transfer sum needs absolutely summable coefficients".into(),
            ));
        }
        let z = Complex64::from_polar(1.0, t);
        let start = self.tail_start();
        let mut acc = ComplexSum::new();
        for j in from..start.max(from) {
            acc.add(phase(t, j) * self.coeff(j));
        }
        let tail_from = start.max(from);
        match &self.tail {
            CoeffTail::Zero => {}
            CoeffTail::Geometric { scale, ratio } => {
                // Exact: sum_{j>=m} s (r z)^j = s (r z)^m / (1 - r z).
                let rz = ratio * z;
                let m = tail_from;
                let head = Complex64::from_polar(ratio.abs().powi(m as i32), t * m as f64)
                    * if *ratio < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
                acc.add(*scale * head / (Complex64::new(1.0, 0.0) - rz));
            }
            _ => {
                let (value, err) = self.oscillating_tail(tail_from, t, target_abs * 0.5)?;
                if err > target_abs {
                    return Err(Error::NonSummable(format!(
                        "transfer tail certificate {err:e} exceeds target {target_abs:e}"
                    )));
                }
                acc.add(value);
            }
        }
        Ok(acc.value())
    }

    /// Transfer function value `A(e^{it}) = sum_{j>=0} a_j e^{ijt}`.
    pub fn transfer(&self, t: f64, target_abs: f64) -> Result<Complex64> {
        self.transfer_from(0, t, target_abs)
    }

    /// `sum_{j >= m} u(j) e^{ijt}` for a positive, completely-monotone-like
    /// power tail `u`, via repeated summation by parts:
    ///
    /// `T_d(m) = (u_d(m) z^m - z T_{d+1}(m)) / (1 - z)`, `u_{d+1}(j) = u_d(j) - u_d(j+1)`.
    ///
    /// The terminal depth is summed directly; its remainder telescopes to
    /// `u_{d-1}(J+1)`, and each level divides the certificate by `|1 - z|`.
    fn oscillating_tail(&self, m: u64, t: f64, target: f64) -> Result<(Complex64, f64)> {
        let z = Complex64::from_polar(1.0, t);
        let denom = Complex64::new(1.0, 0.0) - z;
        if denom.norm() < 1e-9 {
            return Err(Error::NonSummable(
                "transfer sum is evaluated at a frequency too close to 0 mod 2pi".into(),
            ));
        }
        let u = |j: u64| -> f64 { self.coeff(j) };
        for depth in 1..=4usize {
            // Remainder after summing Δ^depth u up to J telescopes to
            // Δ^{depth-1} u (J+1) <= depth-th derivative scale; find J.
            let gain = denom.norm().powi(depth as i32);
            let mut terms: u64 = 128;
            loop {
                let j_end = m + terms;
                let rem = forward_diff(&u, j_end + 1, depth - 1);
                if rem >= 0.0 && rem / gain <= target {
                    break;
                }
                terms *= 2;
                if terms > MAX_DIRECT_TERMS {
                    break;
                }
            }
            if terms > MAX_DIRECT_TERMS {
                continue;
            }
            let j_end = m + terms;
            // Direct sum of the deepest difference series.
            let mut inner = ComplexSum::new();
            let mut monotone_ok = true;
            for j in m..=j_end {
                let v = forward_diff(&u, j, depth);
                if v < 0.0 {
                    monotone_ok = false;
                    break;
                }
                inner.add(phase(t, j) * v);
            }
            if !monotone_ok {
                continue;
            }
            let mut value = inner.value();
            let mut err = forward_diff(&u, j_end + 1, depth - 1).max(0.0);
            // Unwind the parts recursion from depth back to the raw tail.
            for d in (0..depth).rev() {
                let head = phase(t, m) * forward_diff(&u, m, d);
                value = (head - z * value) / denom;
                err /= denom.norm();
            }
            if err <= target * 2.0 {
                return Ok((value, err));
            }
        }
        Err(Error::NonSummable(format!(
            "cannot certify transfer tail at t = {t} within the term budget"
        )))
    }

    /// Filter autocovariance `sum_j a_j a_{j+lag}` (innovation variance excluded).
    ///
    /// Exact (closed-form tail) for zero/geometric tails; certified adaptive
    /// truncation otherwise.
    pub fn filter_autocovariance(&self, lag: u64) -> Result<f64> {
        let p = self.tail_start();
        match &self.tail {
            CoeffTail::Zero => {
                let mut acc = CompensatedSum::new();
                for j in 0..p {
                    acc.add(self.coeff(j) * self.coeff(j + lag));
                }
                Ok(acc.value())
            }
            CoeffTail::Geometric { scale, ratio } => {
                let mut acc = CompensatedSum::new();
                for j in 0..p {
                    acc.add(self.coeff(j) * self.coeff(j + lag));
                }
                // Tail x tail: sum_{j>=P} s^2 r^{2j+lag}.
                let r2 = ratio * ratio;
                let tail = scale * scale * pow_u64(*ratio, lag) * pow_u64(r2, p) / (1.0 - r2);
                acc.add(tail);
                Ok(acc.value())
            }
            _ => {
                // Positive decreasing tail: remainder <= l2 tail (Cauchy-Schwarz).
                let mut acc = CompensatedSum::new();
                let mut j = 0u64;
                loop {
                    let rem = self.l2_tail_upper(j.max(p));
                    if j >= p && rem <= 1e-13 * (1.0 + acc.value().abs()) {
                        return Ok(acc.value());
                    }
                    if j > MAX_DIRECT_TERMS {
                        return Err(Error::Unsupported(
                            "autocovariance tail cannot be certified within the term budget"
                                .into(),
                        ));
                    }
                    acc.add(self.coeff(j) * self.coeff(j + lag));
                    j += 1;
                }
            }
        }
    }
}

/// e^{i j t} evaluated by direct argument reduction (stable for any j).
fn phase(t: f64, j: u64) -> Complex64 {
    let angle = (j as f64 * t) % std::f64::consts::TAU;
    Complex64::from_polar(1.0, angle)
}

/// x^n for u64 n without i32 truncation concerns.
fn pow_u64(x: f64, n: u64) -> f64 {
    if n <= i32::MAX as u64 {
        x.powi(n as i32)
    } else {
        x.powf(n as f64)
    }
}

/// Forward difference `Δ^d u (j)` with `Δu(j) = u(j) - u(j+1)`.
fn forward_diff(u: &impl Fn(u64) -> f64, j: u64, d: usize) -> f64 {
    // Binomial combination; d <= 4 in this crate so this stays exact enough.
    let mut acc = 0.0;
    let mut binom = 1.0f64;
    for i in 0..=d {
        acc += binom * u(j + i as u64);
        binom *= -((d - i) as f64) / (i as f64 + 1.0);
    }
    acc
}
