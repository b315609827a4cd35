//! Sufficient-condition lab.
//!
//! Each check evaluates one summability condition that certifies the quenched
//! central limit behavior of rotated partial sums for a process family. A
//! check combines three ingredients: exact closed-form term values, a partial
//! sum table at decade checkpoints, and a tail certificate (symbolic when the
//! tail has a closed comparison, numeric when it rests on an integral
//! estimate). The combination is graded into a [`Verdict`]:
//!
//! * `holds-analytic` — a symbolic tail bound certifies convergence;
//! * `holds-numeric` — partial sums are Cauchy **and** a numeric comparison
//!   tail closes; either signal alone is inconclusive, because partial sums
//!   of slowly divergent series look convergent;
//! * `fails-numeric` — terms are certified to dominate a divergent series;
//! * `inconclusive` — neither route closed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::stats::CompensatedSum;

mod functional;
mod linear;
mod map;
mod mixing;
mod rotated;

pub use functional::{check_functional_linear, FunctionalObservable, ProjectionMonteCarlo};
pub use linear::{
    check_coefficient_log_series, check_increment_series, check_mean_square_series,
    check_pathwise_mean_series,
};
pub use map::{check_coupling_integral, check_map_regime, MapMonteCarlo};
pub use mixing::{
    check_mixing_series, conditional_mean_norm_sq, mixing_coefficient, quantile_integral,
};
pub use rotated::check_rotated_mean_series;

/// Largest number of series terms summed directly.
pub const SERIES_CAP: u64 = 1_000_000;
/// Partial sums must move less than this over the final decade to count as
/// numerically Cauchy.
pub const CAUCHY_INCREMENT_TOL: f64 = 1e-6;

/// Wire identifier of a checked condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionId {
    /// `sum_k |E_0(X_{k+1} - X_k)|^2 / k < inf` almost surely, checked via
    /// its second-moment majorant.
    #[serde(rename = "cond-14")]
    IncrementMeanSeries,
    /// `sum_k |E_0 X_k|^2 / k < inf` almost surely, checked via its
    /// second-moment majorant.
    #[serde(rename = "cond-15")]
    PathwiseMeanSeries,
    /// `sum_k ||E_0 X_k||_2^2 / k < inf`.
    #[serde(rename = "cond-16")]
    MeanSquareSeries,
    /// `sum_k k^{-3/2} ||E_0 S_k(t)||_2 < inf` at a fixed frequency.
    #[serde(rename = "cond-18")]
    RotatedMeanSeries,
    /// `sum_{j>=3} (a_j - a_{j+1})^2 log j < inf` for a linear filter.
    #[serde(rename = "cond-lin23")]
    CoefficientIncrementLogSeries,
    /// Contraction regime of an iterated map: finite moment of the random
    /// Lipschitz factor, negative mean log factor, finite displacement
    /// moment, plus the empirical coupling-decay fit.
    #[serde(rename = "cond-irf20")]
    MapContractionRegime,
    /// `int_0^{1/2} coupling^2(u) / (u |log u|) du < inf` for the observable
    /// of an iterated map.
    #[serde(rename = "cond-irf21")]
    CouplingIntegral,
    /// `sum_{k>=3} a_k^2 log k < inf` plus the innovation moment order, for a
    /// function of a linear process.
    #[serde(rename = "cond-flin26")]
    FunctionalCoefficientSeries,
    /// `sum_k (1/k) int_0^{alpha(k)} Q^2(u) du < inf` for a finite chain,
    /// with `alpha` the threshold-event mixing coefficient and `Q` the
    /// upper-tail quantile of `|X_0|`.
    #[serde(rename = "cond-mix30")]
    MixingQuantileSeries,
}

impl ConditionId {
    pub fn wire_name(&self) -> &'static str {
        match self {
            ConditionId::IncrementMeanSeries => "cond-14",
            ConditionId::PathwiseMeanSeries => "cond-15",
            ConditionId::MeanSquareSeries => "cond-16",
            ConditionId::RotatedMeanSeries => "cond-18",
            ConditionId::CoefficientIncrementLogSeries => "cond-lin23",
            ConditionId::MapContractionRegime => "cond-irf20",
            ConditionId::CouplingIntegral => "cond-irf21",
            ConditionId::FunctionalCoefficientSeries => "cond-flin26",
            ConditionId::MixingQuantileSeries => "cond-mix30",
        }
    }
}

/// Outcome grade of a condition check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsAnalytic,
    HoldsNumeric,
    FailsNumeric,
    Inconclusive,
}

impl Verdict {
    pub fn wire_name(&self) -> &'static str {
        match self {
            Verdict::HoldsAnalytic => "holds-analytic",
            Verdict::HoldsNumeric => "holds-numeric",
            Verdict::FailsNumeric => "fails-numeric",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn holds(&self) -> bool {
        matches!(self, Verdict::HoldsAnalytic | Verdict::HoldsNumeric)
    }
}

/// Partial sums of a nonnegative-term series at decade checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTable {
    /// The summand, in words.
    pub term: String,
    /// Index of the first summed term.
    pub start: u64,
    /// Checkpoint indices (powers of ten, then the cap).
    pub checkpoints: Vec<u64>,
    /// Partial sum at each checkpoint.
    pub partial_sums: Vec<f64>,
    /// Growth of the partial sum across the final decade.
    pub last_decade_increment: f64,
}

impl SeriesTable {
    /// Partial sum at the evaluation cap.
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }

    /// Whether the last decade moved less than [`CAUCHY_INCREMENT_TOL`].
    pub fn is_cauchy(&self) -> bool {
        self.last_decade_increment.abs() < CAUCHY_INCREMENT_TOL
    }
}

/// Everything a verdict rests on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// Partial-sum table of the principal series, when one is evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesTable>,
    /// Statement of the tail certificate, when one closes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<String>,
    /// Bound on the sum of all terms past the cap, when certified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_value: Option<f64>,
    /// Further diagnostics: fits, Monte Carlo errors, auxiliary series.
    pub notes: Vec<String>,
}

impl Evidence {
    pub fn new() -> Self {
        Evidence {
            series: None,
            tail_bound: None,
            tail_value: None,
            notes: Vec::new(),
        }
    }
}

impl Default for Evidence {
    fn default() -> Self {
        Self::new()
    }
}

/// Verdict on one condition for one process, with its evidence and the
/// parameters that reproduce the tables bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_id: ConditionId,
    pub verdict: Verdict,
    pub evidence: Evidence,
    pub parameters: BTreeMap<String, f64>,
}

/// How a series tail past the evaluation cap is certified.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum TailCertificate {
    /// Closed-form comparison: the tail sum is at most `bound`.
    Symbolic { statement: String, bound: f64 },
    /// Integral/numeric comparison: the tail sum is at most `bound`, but the
    /// comparison rests on evaluated special values rather than a closed form.
    Numeric { statement: String, bound: f64 },
    /// Terms certified to dominate a divergent comparison series.
    Divergent { statement: String },
    /// No rule closed.
    None,
}

/// Evaluate partial sums of a nonnegative-term series from `start` to `cap`
/// with compensated accumulation, recording decade checkpoints.
pub(crate) fn decade_partial_sums(
    term_name: &str,
    start: u64,
    cap: u64,
    mut term: impl FnMut(u64) -> f64,
) -> SeriesTable {
    assert!(start >= 1 && cap >= start, "series range must be nonempty");
    let mut acc = CompensatedSum::new();
    let mut checkpoints = Vec::new();
    let mut partial_sums = Vec::new();
    // First power of ten at or above the start index.
    let mut next_checkpoint = 10u64;
    while next_checkpoint < start {
        next_checkpoint = next_checkpoint.saturating_mul(10);
    }
    let mut previous_decade_sum = 0.0;
    for k in start..=cap {
        let value = term(k);
        debug_assert!(value >= 0.0, "series terms must be nonnegative");
        acc.add(value);
        if k == next_checkpoint || k == cap {
            if k == cap && checkpoints.last() != Some(&cap) {
                checkpoints.push(cap);
                partial_sums.push(acc.value());
            } else if k == next_checkpoint {
                checkpoints.push(k);
                partial_sums.push(acc.value());
            }
            if k == next_checkpoint {
                next_checkpoint = next_checkpoint.saturating_mul(10);
            }
        }
        if k == cap / 10 {
            previous_decade_sum = acc.value();
        }
    }
    let total = acc.value();
    let last_decade_increment = if cap >= 10 * start {
        total - previous_decade_sum
    } else {
        total
    };
    SeriesTable {
        term: term_name.to_string(),
        start,
        checkpoints,
        partial_sums,
        last_decade_increment,
    }
}

/// Partial-sum increments between consecutive checkpoints of a table,
/// starting with the sum up to the first checkpoint. Growing increments are
/// the numeric signature of a divergent series.
pub(crate) fn decade_increments(table: &SeriesTable) -> Vec<f64> {
    let mut increments = Vec::with_capacity(table.partial_sums.len());
    let mut previous = 0.0;
    for &sum in &table.partial_sums {
        increments.push(sum - previous);
        previous = sum;
    }
    increments
}

/// Bound `sum_{k > from} h(k)` for a nonincreasing, nonnegative summand by
/// dyadic integral comparison: the block `(from 2^i, from 2^{i+1}]` holds
/// `from 2^i` terms, each at most `h(from 2^i)`. Returns `None` when the
/// dyadic series itself fails to converge numerically (divergent or too slow
/// to certify), `Some(bound)` otherwise. On success the unsummed blocks are
/// covered by twice the final block, which absorbs any geometric continuation
/// with ratio at most two thirds; a summand slow enough to break that ratio
/// cannot reach the relative floor within the index headroom in the first
/// place, so it lands in the `None` branch instead.
pub(crate) fn dyadic_tail_bound(from: u64, mut h: impl FnMut(u64) -> f64) -> Option<f64> {
    // A dyadic block below this fraction of the accumulated bound closes it.
    const BLOCK_RELATIVE_FLOOR: f64 = 1e-9;
    let mut total = CompensatedSum::new();
    let mut point = from.max(1);
    for _ in 0..200 {
        let value = h(point) * point as f64;
        if !value.is_finite() || value < 0.0 {
            return None;
        }
        if value == 0.0 {
            return Some(total.value());
        }
        total.add(value);
        if value < BLOCK_RELATIVE_FLOOR * total.value() {
            total.add(2.0 * value);
            return Some(total.value());
        }
        match point.checked_mul(2) {
            Some(next) if next < (1u64 << 53) => point = next,
            _ => return None,
        }
    }
    None
}

/// Fold a partial-sum table and a tail certificate into a verdict and the
/// corresponding evidence fields.
pub(crate) fn grade(table: SeriesTable, certificate: TailCertificate) -> (Verdict, Evidence) {
    let cauchy = table.is_cauchy();
    let mut evidence = Evidence::new();
    let verdict = match certificate {
        TailCertificate::Symbolic { statement, bound } => {
            evidence.tail_bound = Some(statement);
            evidence.tail_value = Some(bound);
            Verdict::HoldsAnalytic
        }
        TailCertificate::Numeric { statement, bound } => {
            evidence.tail_bound = Some(statement);
            evidence.tail_value = Some(bound);
            if cauchy {
                Verdict::HoldsNumeric
            } else {
                evidence
                    .notes
                    .push("partial sums are not Cauchy over the final decade".to_string());
                Verdict::Inconclusive
            }
        }
        TailCertificate::Divergent { statement } => {
            evidence.tail_bound = Some(statement);
            Verdict::FailsNumeric
        }
        TailCertificate::None => {
            evidence.notes.push(if cauchy {
                "partial sums look Cauchy but no tail rule closed".to_string()
            } else {
                "no tail rule closed".to_string()
            });
            Verdict::Inconclusive
        }
    };
    evidence.series = Some(table);
    (verdict, evidence)
}
