//! Mixing-rate summability for finite-state chains.
//!
//! The mixing coefficient used here measures how much the law of the
//! observable `k` steps ahead still remembers the frozen origin:
//! `alpha(k) = max_x E |P(X_k > x | state_0) - P(X_k > x)|`, with the
//! expectation over the stationary start. (Conditioning on the whole past
//! collapses to the current state by the Markov property; the tests confirm
//! the equivalent set form `2 sup_{A,B} |P(A and B) - P(A) P(B)|` by brute
//! force over two-step-past atoms.) The companion quantile function
//! `Q(u) = inf { t >= 0 : P(|X_0| > t) <= u }` is piecewise constant on a
//! finite state space, so `int_0^u Q^2` has an exact closed form, and the
//! covariance inequality `||E_0 X_k||_2^2 <= 2 int_0^{alpha(k)} Q^2(u) du`
//! holds term by term.
//!
//! The check sums `(1/k) int_0^{alpha(k)} Q^2(u) du` exactly over a direct
//! range. Past that range, a Dobrushin contraction of some transition-matrix
//! block bounds `alpha(k)` geometrically, closing the tail symbolically. When
//! no block contracts (a periodic chain), the scaled summands
//! `k * term_k` are checked against a positive floor: staying above it across
//! the final decade certifies domination of a harmonic tail, hence
//! divergence.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::models::MarkovChain;
use crate::stats::CompensatedSum;

use super::{decade_partial_sums, grade, ConditionId, ConditionReport, TailCertificate};

/// Exact terms are computed out to this index before the contraction tail.
const MIXING_DIRECT_CAP: u64 = 4_096;
/// Largest block size probed for a Dobrushin contraction.
const MAX_BLOCK: u64 = 64;
/// A usable block contraction must sit at or below this value.
const BLOCK_CONTRACTION_LIMIT: f64 = 0.9;
/// Scaled summands above this floor across the final decade certify
/// divergence.
const DIVERGENCE_FLOOR: f64 = 1e-9;
/// Slack allowed before flagging a monotonicity violation of `alpha`.
const MONOTONE_TOL: f64 = 1e-12;

/// `alpha(k)`: the largest stationary-average deviation between conditional
/// and unconditional threshold probabilities of the observable `k` steps
/// ahead.
pub fn mixing_coefficient(chain: &MarkovChain, k: u64) -> f64 {
    assert!(k >= 1, "the mixing coefficient needs at least one step");
    let transition = chain.transition();
    let mut rows: Vec<Vec<f64>> = transition.to_vec();
    for _ in 1..k {
        rows = multiply(&rows, transition);
    }
    mixing_from_rows(chain, &rows)
}

/// `alpha` evaluated from precomputed `k`-step transition rows.
fn mixing_from_rows(chain: &MarkovChain, rows: &[Vec<f64>]) -> f64 {
    let pi = chain.stationary();
    let h = chain.observable();
    let n = chain.state_count();
    let mut best = 0.0_f64;
    for threshold in h {
        let in_set: Vec<bool> = h.iter().map(|value| value > threshold).collect();
        let mut pi_mass = CompensatedSum::new();
        for s in 0..n {
            if in_set[s] {
                pi_mass.add(pi[s]);
            }
        }
        let pi_b = pi_mass.value();
        let mut average = CompensatedSum::new();
        for s in 0..n {
            let mut row_mass = CompensatedSum::new();
            for y in 0..n {
                if in_set[y] {
                    row_mass.add(rows[s][y]);
                }
            }
            average.add(pi[s] * (row_mass.value() - pi_b).abs());
        }
        best = best.max(average.value());
    }
    best
}

/// Row-stochastic matrix product `rows * q` with compensated accumulation.
fn multiply(rows: &[Vec<f64>], q: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    (0..n)
        .map(|s| {
            (0..n)
                .map(|y| {
                    let mut acc = CompensatedSum::new();
                    for z in 0..n {
                        acc.add(rows[s][z] * q[z][y]);
                    }
                    acc.value()
                })
                .collect()
        })
        .collect()
}

/// Observable levels `(|h|, stationary mass)` sorted by decreasing absolute
/// value: the quantile function takes the value `|h|_i` on an interval of
/// length equal to that state's mass.
fn quantile_levels(chain: &MarkovChain) -> Vec<(f64, f64)> {
    let mut levels: Vec<(f64, f64)> = chain
        .observable()
        .iter()
        .zip(chain.stationary())
        .map(|(h, pi)| (h.abs(), *pi))
        .collect();
    levels.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite observable values"));
    levels
}

/// Exact `int_0^{min(upper, 1)} Q^2(u) du` for the piecewise-constant upper
/// quantile of `|X_0|`.
pub fn quantile_integral(chain: &MarkovChain, upper: f64) -> f64 {
    let cut = upper.clamp(0.0, 1.0);
    integral_over_levels(&quantile_levels(chain), cut)
}

fn integral_over_levels(levels: &[(f64, f64)], cut: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut lower = 0.0;
    for &(value, mass) in levels {
        let upper_edge = lower + mass;
        let overlap = (cut.min(upper_edge) - lower).max(0.0);
        acc.add(value * value * overlap);
        lower = upper_edge;
    }
    acc.value()
}

/// `||E_0 X_k||_2^2 = ||Q^k h||^2` in `L^2(pi)`.
pub fn conditional_mean_norm_sq(chain: &MarkovChain, k: u64) -> f64 {
    chain.norm_sq(&chain.iterated_observable(k))
}

/// Dobrushin coefficient of a stochastic matrix: half the largest L1
/// distance between rows. Submultiplicative over blocks, and the total
/// variation to stationarity never exceeds it.
fn dobrushin_coefficient(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut worst = 0.0_f64;
    for s in 0..n {
        for t in (s + 1)..n {
            let mut distance = CompensatedSum::new();
            for y in 0..n {
                distance.add((rows[s][y] - rows[t][y]).abs());
            }
            worst = worst.max(0.5 * distance.value());
        }
    }
    worst
}

/// First block size whose Dobrushin coefficient contracts usably.
fn contracting_block(chain: &MarkovChain) -> Option<(u64, f64)> {
    let transition = chain.transition();
    let mut power: Vec<Vec<f64>> = transition.to_vec();
    for block in 1..=MAX_BLOCK {
        if block > 1 {
            power = multiply(&power, transition);
        }
        let delta = dobrushin_coefficient(&power);
        if delta <= BLOCK_CONTRACTION_LIMIT {
            return Some((block, delta));
        }
    }
    None
}

/// Check the mixing series `sum_k (1/k) int_0^{alpha(k)} Q^2(u) du`.
pub fn check_mixing_series(chain: &MarkovChain) -> Result<ConditionReport> {
    let transition = chain.transition();
    let levels = quantile_levels(chain);
    let h_sup = chain
        .observable()
        .iter()
        .fold(0.0_f64, |acc, value| acc.max(value.abs()));

    let mut rows: Vec<Vec<f64>> = transition.to_vec();
    let mut previous_alpha = f64::INFINITY;
    let mut monotone_violated = false;
    let mut first_alpha = 0.0;
    let mut shortcut = CompensatedSum::new();
    let mut scaled_floor = f64::INFINITY;
    let table = decade_partial_sums("quantile-integral-over-k", 1, MIXING_DIRECT_CAP, |k| {
        if k > 1 {
            rows = multiply(&rows, transition);
        }
        let alpha = mixing_from_rows(chain, &rows);
        if k == 1 {
            first_alpha = alpha;
        }
        if alpha > previous_alpha + MONOTONE_TOL {
            monotone_violated = true;
        }
        previous_alpha = alpha;
        shortcut.add(alpha / k as f64);
        let term = integral_over_levels(&levels, alpha.clamp(0.0, 1.0)) / k as f64;
        if k > MIXING_DIRECT_CAP / 10 {
            scaled_floor = scaled_floor.min(k as f64 * term);
        }
        term
    });

    let mut notes = Vec::new();
    let mut parameters = BTreeMap::new();
    parameters.insert("direct-cap".to_string(), MIXING_DIRECT_CAP as f64);
    parameters.insert("observable-sup".to_string(), h_sup);
    parameters.insert("shortcut-sum".to_string(), shortcut.value());
    notes.push(format!(
        "bounded-observable shortcut: sum of alpha(k)/k over the direct range is {:.6e}",
        shortcut.value()
    ));
    if first_alpha == 0.0 {
        notes.push("the chain decorrelates threshold events in one step".to_string());
    }
    if monotone_violated {
        notes.push(
            "alpha(k) increased along the direct range, which contradicts its data-processing \
             monotonicity; inspect the chain's arithmetic"
                .to_string(),
        );
    }

    let certificate = match contracting_block(chain) {
        Some((block, delta)) => {
            parameters.insert("dobrushin-block".to_string(), block as f64);
            parameters.insert("dobrushin-delta".to_string(), delta);
            // alpha(k) <= delta^floor(k/block); sum the geometric blocks past
            // the cap and scale by the crude per-term integral bound
            // H^2 alpha(k).
            let exponent = ((MIXING_DIRECT_CAP + 1) / block) as i32;
            let bound = h_sup * h_sup / MIXING_DIRECT_CAP as f64 * block as f64
                * delta.powi(exponent)
                / (1.0 - delta).max(f64::MIN_POSITIVE);
            TailCertificate::Symbolic {
                statement: format!(
                    "the {block}-step transition block has Dobrushin coefficient \
                     {delta:.6} <= {BLOCK_CONTRACTION_LIMIT}, so alpha decays geometrically \
                     and the quantile integral is at most the squared observable bound times \
                     alpha"
                ),
                bound,
            }
        }
        None => {
            if scaled_floor.is_finite() && scaled_floor > DIVERGENCE_FLOOR {
                TailCertificate::Divergent {
                    statement: format!(
                        "k times the summand stays above {scaled_floor:.3e} across the final \
                         decade, so the series dominates a harmonic tail"
                    ),
                }
            } else {
                notes.push(
                    "no transition block contracts within the probed range and the summands \
                     decay too fast to certify divergence"
                        .to_string(),
                );
                TailCertificate::None
            }
        }
    };

    let (verdict, mut evidence) = grade(table, certificate);
    evidence.notes.extend(notes);
    Ok(ConditionReport {
        condition_id: ConditionId::MixingQuantileSeries,
        verdict,
        evidence,
        parameters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::derive_rng;

    const EXACT_TOL: f64 = 1e-12;

    #[test]
    fn flip_chain_coefficient_is_geometric() {
        // Two-state flip with hold probability 0.75: the k-step law deviates
        // from stationarity by (1 - 2p)^k / 2 at the only useful threshold.
        let chain = MarkovChain::two_state_flip(0.25).expect("valid chain");
        for k in 1..=10u64 {
            let oracle = 0.5_f64.powi(k as i32) / 2.0;
            let alpha = mixing_coefficient(&chain, k);
            assert!(
                (alpha - oracle).abs() <= EXACT_TOL,
                "alpha({k}) = {alpha} deviates from the geometric oracle {oracle}"
            );
        }
    }

    #[test]
    fn balanced_flip_chain_decorrelates_in_one_step() {
        let chain = MarkovChain::two_state_flip(0.5).expect("valid chain");
        assert_eq!(mixing_coefficient(&chain, 1), 0.0);
        let report = check_mixing_series(&chain).expect("check runs");
        assert_eq!(report.verdict, super::super::Verdict::HoldsAnalytic);
        assert_eq!(
            report.evidence.series.as_ref().expect("series recorded").total(),
            0.0,
            "independent steps leave nothing to sum"
        );
        assert!(
            report.evidence.notes.iter().any(|n| n.contains("one step")),
            "the one-step decorrelation should be noted"
        );
    }

    #[test]
    fn set_form_matches_threshold_form_by_brute_force() {
        // Enumerate every event over the atoms (state_{-1}, state_0) and
        // every threshold event B on X_k; twice the best covariance gap must
        // equal the threshold-average form, confirming both the two-step-past
        // collapse and the convention without the 1/2.
        let mut rng = derive_rng(41, "conditions.mixing.test", 0);
        for trial in 0..5 {
            let chain = MarkovChain::random(2, &mut rng).expect("random chain");
            let pi = chain.stationary();
            let q = chain.transition();
            let h = chain.observable();
            for k in 1..=3u64 {
                let mut rows: Vec<Vec<f64>> = q.to_vec();
                for _ in 1..k {
                    rows = multiply(&rows, q);
                }
                // Atoms (i, j) with probability pi[i] q[i][j].
                let atoms: Vec<(usize, usize, f64)> = (0..2)
                    .flat_map(|i| (0..2).map(move |j| (i, j)))
                    .map(|(i, j)| (i, j, pi[i] * q[i][j]))
                    .collect();
                let mut best = 0.0_f64;
                for threshold in h {
                    let in_b: Vec<bool> = h.iter().map(|v| v > threshold).collect();
                    let p_b: f64 = (0..2).filter(|&y| in_b[y]).map(|y| pi[y]).sum();
                    for mask in 0u32..16 {
                        let mut p_a = 0.0;
                        let mut p_ab = 0.0;
                        for (bit, &(_, j, weight)) in atoms.iter().enumerate() {
                            if mask & (1 << bit) != 0 {
                                p_a += weight;
                                let forward: f64 =
                                    (0..2).filter(|&y| in_b[y]).map(|y| rows[j][y]).sum();
                                p_ab += weight * forward;
                            }
                        }
                        best = best.max((p_ab - p_a * p_b).abs());
                    }
                }
                let alpha = mixing_coefficient(&chain, k);
                assert!(
                    (2.0 * best - alpha).abs() <= 1e-12,
                    "trial {trial}, k = {k}: set form {} vs threshold form {alpha}",
                    2.0 * best
                );
            }
        }
    }

    #[test]
    fn quantile_integral_closed_form_matches_identities() {
        let mut rng = derive_rng(43, "conditions.mixing.test", 1);
        for states in 2..=4usize {
            let chain = MarkovChain::random(states, &mut rng).expect("random chain");
            // Full integral equals the second moment of the observable.
            let full = quantile_integral(&chain, 1.0);
            let second = chain.norm_sq(chain.observable());
            assert!(
                (full - second).abs() <= 1e-12,
                "{states} states: full quantile integral {full} vs second moment {second}"
            );
            // Brute grid integration agrees at interior cuts.
            for cut in [0.1, 0.35, 0.8] {
                let exact = quantile_integral(&chain, cut);
                let step = 1e-5;
                let mut brute = 0.0;
                let mut u = step / 2.0;
                while u < cut {
                    brute += quantile_value(&chain, u) * quantile_value(&chain, u) * step;
                    u += step;
                }
                assert!(
                    (exact - brute).abs() <= 1e-3,
                    "cut {cut}: exact {exact} vs brute {brute}"
                );
            }
        }
    }

    /// Reference quantile by direct scan: smallest level whose exceedance
    /// probability drops to `u`.
    fn quantile_value(chain: &MarkovChain, u: f64) -> f64 {
        let levels = quantile_levels(chain);
        let mut lower = 0.0;
        for &(value, mass) in &levels {
            let upper = lower + mass;
            if u < upper {
                return value;
            }
            lower = upper;
        }
        0.0
    }

    #[test]
    fn covariance_inequality_holds_exactly_on_random_chains() {
        let mut rng = derive_rng(47, "conditions.mixing.test", 2);
        for trial in 0..10 {
            let states = 2 + (trial % 3);
            let chain = MarkovChain::random(states, &mut rng).expect("random chain");
            for k in 1..=8u64 {
                let norm = conditional_mean_norm_sq(&chain, k);
                let alpha = mixing_coefficient(&chain, k);
                let bound = 2.0 * quantile_integral(&chain, alpha);
                assert!(
                    norm <= bound + 1e-12,
                    "trial {trial}, k = {k}: ||E_0 X_k||^2 = {norm} breaks the bound {bound}"
                );
            }
        }
    }

    #[test]
    fn alpha_is_nonincreasing_on_random_chains() {
        let mut rng = derive_rng(53, "conditions.mixing.test", 3);
        for _ in 0..5 {
            let chain = MarkovChain::random(3, &mut rng).expect("random chain");
            let mut previous = f64::INFINITY;
            for k in 1..=12u64 {
                let alpha = mixing_coefficient(&chain, k);
                assert!(
                    alpha <= previous + 1e-12,
                    "alpha({k}) = {alpha} exceeds alpha({}) = {previous}",
                    k - 1
                );
                previous = alpha;
            }
        }
    }

    #[test]
    fn geometric_mixing_series_matches_logarithm_oracle() {
        // For the flip chain alpha(k) = rho^k / 2 and the quantile is
        // identically one, so the series telescopes to -ln(1 - rho)/2.
        let chain = MarkovChain::two_state_flip(0.25).expect("valid chain");
        let report = check_mixing_series(&chain).expect("check runs");
        assert_eq!(report.verdict, super::super::Verdict::HoldsAnalytic);
        let total = report.evidence.series.as_ref().expect("series recorded").total();
        let oracle = -(1.0 - 0.5_f64).ln() / 2.0;
        assert!(
            (total - oracle).abs() <= 1e-10,
            "series total {total} deviates from the closed oracle {oracle}"
        );
        assert!(report.evidence.tail_value.expect("tail recorded") < 1e-50);
        assert_eq!(report.parameters["dobrushin-block"], 1.0);
    }

    #[test]
    fn periodic_chain_fails_numerically() {
        // The deterministic swap never contracts and alpha(k) = 1/2 forever,
        // so the series dominates a harmonic tail.
        let chain = MarkovChain::two_state_flip(1.0).expect("valid chain");
        let report = check_mixing_series(&chain).expect("check runs");
        assert_eq!(report.verdict, super::super::Verdict::FailsNumeric);
        assert!(
            report
                .evidence
                .tail_bound
                .as_ref()
                .expect("divergence statement recorded")
                .contains("harmonic"),
            "the divergence certificate should cite the harmonic comparison"
        );
    }
}
