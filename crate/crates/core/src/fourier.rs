//! Finite Fourier transforms, periodograms, and per-frequency sample records.
//!
//! The transform is `S_n(t) = sum_{k=1}^n e^{ikt} X_k` (summation starts at
//! `k = 1`, matching every telescoping identity used elsewhere in the crate).
//! Normalized statistics are `V_n = (Re S_n, Im S_n)/sqrt(n)`, the centered
//! `W_n = (S_n - centering)/sqrt(n)` for a supplied conditional mean, and the
//! periodogram `I_n(t) = |S_n(t)|^2 / (2 pi n)`.
//!
//! Phases come from a rotation recurrence (one complex multiply per term)
//! re-synchronized every [`RESYNC_INTERVAL`] steps against a directly reduced
//! phase, so drift stays harmless out to `n = 2^20`; accumulation is
//! compensated.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::derive_rng;
use crate::stats::CompensatedSum;

/// Steps between rotor re-synchronizations.
pub const RESYNC_INTERVAL: usize = 4096;
/// Distance within which a grid point is flagged as an excluded frequency.
pub const EXCLUDED_TOL: f64 = 1e-12;

/// Frequencies where `e^{-2it}` is `+1` or `-1`; several eigenvalue-based
/// constructions are undefined there, so grids carry a per-point flag.
pub const EXCLUDED_FREQUENCIES: [f64; 4] = [
    0.0,
    std::f64::consts::FRAC_PI_2,
    std::f64::consts::PI,
    3.0 * std::f64::consts::FRAC_PI_2,
];

/// `e^{ikt}` with the phase `k t` reduced modulo `2 pi` in double-double
/// arithmetic, so the result is accurate to a few ulps even for `k ~ 2^20`.
pub fn unit_rotor(t: f64, k: u64) -> Complex64 {
    // Exact split of the product k*t.
    let kf = k as f64;
    let hi = t * kf;
    let lo = t.mul_add(kf, -hi);
    // Subtract q * 2pi with 2pi held as a double-double constant.
    const TAU_HI: f64 = std::f64::consts::TAU;
    const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;
    let q = (hi / TAU_HI).round();
    let p = TAU_HI * q;
    let p_err = TAU_HI.mul_add(q, -p);
    // hi - p is exact: the operands are close enough for Sterbenz's lemma.
    let phase = ((hi - p) - p_err - TAU_LO * q) + lo;
    Complex64::new(phase.cos(), phase.sin())
}

/// Finite Fourier transform `sum_{k=1}^n e^{ikt} X_k`.
pub fn dft(values: &[f64], t: f64) -> Result<Complex64> {
    if values.is_empty() {
        return Err(Error::invalid("cannot transform an empty trajectory"));
    }
    let step = unit_rotor(t, 1);
    let mut rotor = step;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (idx, &x) in values.iter().enumerate() {
        if idx > 0 {
            if idx % RESYNC_INTERVAL == 0 {
                rotor = unit_rotor(t, idx as u64 + 1);
            } else {
                rotor *= step;
            }
        }
        re.add(rotor.re * x);
        im.add(rotor.im * x);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Rotated sum `sum_{k=1}^{n} e^{ikt} z_k` for complex-valued terms.
///
/// Same rotor recurrence and compensated accumulation as [`dft`]; used for
/// partial sums whose summands are already complex (for example martingale
/// increments built from a complex-valued solved observable).
pub fn dft_complex(values: &[Complex64], t: f64) -> Result<Complex64> {
    if values.is_empty() {
        return Err(Error::invalid("cannot transform an empty trajectory"));
    }
    let step = unit_rotor(t, 1);
    let mut rotor = step;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (idx, &z) in values.iter().enumerate() {
        if idx > 0 {
            if idx % RESYNC_INTERVAL == 0 {
                rotor = unit_rotor(t, idx as u64 + 1);
            } else {
                rotor *= step;
            }
        }
        let term = rotor * z;
        re.add(term.re);
        im.add(term.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Periodogram `I_n(t) = |S_n(t)|^2 / (2 pi n)`.
pub fn periodogram(values: &[f64], t: f64) -> Result<f64> {
    let s = dft(values, t)?;
    Ok(s.norm_sqr() / (std::f64::consts::TAU * values.len() as f64))
}

/// How a frequency grid was generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridKind {
    /// Independent uniform draws on `(0, 2 pi)`.
    UniformRandom { count: usize, seed: u64 },
    /// `t_j = 2 pi j / n` for `j = 1 .. n-1`.
    FourierFrequencies { n: usize },
    /// Caller-supplied list.
    Explicit,
}

/// Frequencies to evaluate, each flagged if it sits on an excluded point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    kind: GridKind,
    points: Vec<f64>,
    excluded: Vec<bool>,
}

impl FrequencyGrid {
    /// Grid from an explicit list of frequencies in the open interval `(0, 2 pi)`.
    pub fn explicit(points: Vec<f64>) -> Result<Self> {
        Self::build(GridKind::Explicit, points)
    }

    /// `count` uniform draws on `(0, 2 pi)`, deterministic in `seed`.
    pub fn uniform_random(count: usize, seed: u64) -> Result<Self> {
        use rand::Rng;
        if count == 0 {
            return Err(Error::invalid("random grid needs at least one point"));
        }
        let mut rng = derive_rng(seed, "grid.uniform", 0);
        let points = (0..count)
            .map(|_| loop {
                let u: f64 = rng.gen();
                if u > 0.0 {
                    break u * std::f64::consts::TAU;
                }
            })
            .collect();
        Self::build(GridKind::UniformRandom { count, seed }, points)
    }

    /// The Fourier frequencies `2 pi j / n` for `j = 1 .. n-1`.
    pub fn fourier_frequencies(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(
                "Fourier-frequency grids need n >= 2 for a nonzero frequency",
            ));
        }
        let points = (1..n)
            .map(|j| std::f64::consts::TAU * j as f64 / n as f64)
            .collect();
        Self::build(GridKind::FourierFrequencies { n }, points)
    }

    fn build(kind: GridKind, points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("frequency grid must be non-empty"));
        }
        for &t in &points {
            if !t.is_finite() || t <= 0.0 || t >= std::f64::consts::TAU {
                return Err(Error::invalid(format!(
                    "frequency {t} lies outside the open interval (0, 2*pi)"
                )));
            }
        }
        let excluded = points.iter().map(|&t| is_excluded(t)).collect();
        Ok(Self { kind, points, excluded })
    }

    pub fn kind(&self) -> &GridKind {
        &self.kind
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whether the point at `index` sits on an excluded frequency.
    pub fn is_point_excluded(&self, index: usize) -> bool {
        self.excluded[index]
    }

    pub fn excluded_flags(&self) -> &[bool] {
        &self.excluded
    }
}

/// Distance to the nearest excluded frequency, modulo `2 pi`, within tolerance.
pub fn is_excluded(t: f64) -> bool {
    EXCLUDED_FREQUENCIES.iter().any(|&c| {
        let d = (t - c).abs() % std::f64::consts::TAU;
        d.min(std::f64::consts::TAU - d) <= EXCLUDED_TOL
    })
}

/// All per-frequency statistics of one trajectory at one grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierSample {
    pub t: f64,
    pub n: usize,
    /// `S_n(t)`.
    pub s: Complex64,
    /// `(Re S_n, Im S_n) / sqrt(n)`.
    pub v: [f64; 2],
    /// `(S_n - centering) / sqrt(n)`; equals `v` when no centering is given.
    pub w: [f64; 2],
    /// Periodogram `|S_n|^2 / (2 pi n)`.
    pub i: f64,
}

/// Evaluate one trajectory on a whole grid, optionally centering by supplied
/// conditional means `E_0 S_n(t)` (one per grid point).
pub fn fourier_batch(
    values: &[f64],
    grid: &FrequencyGrid,
    centering: Option<&[Complex64]>,
) -> Result<Vec<FourierSample>> {
    if let Some(centering) = centering {
        if centering.len() != grid.len() {
            return Err(Error::invalid(format!(
                "centering has {} entries for a grid of {} points",
                centering.len(),
                grid.len()
            )));
        }
    }
    let n = values.len();
    let sqrt_n = (n as f64).sqrt();
    grid.points()
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let s = dft(values, t)?;
            let v = [s.re / sqrt_n, s.im / sqrt_n];
            let w = match centering {
                Some(centering) => {
                    let c = s - centering[j];
                    [c.re / sqrt_n, c.im / sqrt_n]
                }
                None => v,
            };
            Ok(FourierSample {
                t,
                n,
                s,
                v,
                w,
                i: s.norm_sqr() / (std::f64::consts::TAU * n as f64),
            })
        })
        .collect()
}
