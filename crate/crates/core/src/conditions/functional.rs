//! Coefficient and projection checks for functions of a linear process.
//!
//! For `Y_j = h(X_j)` with `X` a causal linear process and `h` Holder-smooth
//! (`|h(x) - h(y)| <= K |x - y|^gamma (1 + |x|^beta + |y|^beta)`), the
//! quenched behaviour of rotated sums rests on two ingredients checked here:
//!
//! * the coefficient series `sum_{k>=3} a_k^2 log k` must converge, and
//! * the innovations must carry the moment `E |xi_0|^max(2, 2 gamma, 2 beta)`.
//!
//! The series is evaluated exactly with the same decade/tail machinery as the
//! plain linear checks. Every built-in innovation kind has all polynomial
//! moments, so the moment clause is recorded with its closed value rather
//! than estimated.
//!
//! The theory controls the one-step projections `P_0(Y_j)` — the parts of
//! `Y_j` revealed by the innovation at the origin — through the coupling
//! identity `P_0(Y_j) = E'[h(W + a_j xi_0) - h(W + a_j xi_0')]`, where `W`
//! collects every other innovation's contribution and the prime marks an
//! independent copy averaged out. An optional Monte Carlo stage estimates
//! `||P_0(Y_j)||_2^2` without bias by multiplying two independent half-sample
//! means of the inner difference, then reports the ratio against `a_j^2`,
//! which stays bounded exactly when the projections inherit the coefficient
//! decay.

use std::collections::BTreeMap;

use crate::coeffs::CoeffTail;
use crate::error::Result;
use crate::models::LinearProcess;
use crate::seeding::derive_rng;
use crate::stats::{mean, standard_error, CompensatedSum};

use super::{
    decade_partial_sums, dyadic_tail_bound, grade, ConditionId, ConditionReport,
    TailCertificate, SERIES_CAP,
};

/// Window of past innovations kept when simulating the fixed part of the
/// coupling identity.
const PROJECTION_PAST_WINDOW: usize = 512;

/// Observables whose Holder data is known in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionalObservable {
    /// `h(x) = x`: Lipschitz, no growth factor.
    Identity,
    /// `h(x) = x^2 - E[X^2]`: locally Lipschitz with linear growth.
    CenteredSquare,
}

impl FunctionalObservable {
    /// Holder exponents `(gamma, beta)` of the smoothness envelope.
    pub fn holder_exponents(&self) -> (f64, f64) {
        match self {
            FunctionalObservable::Identity => (1.0, 0.0),
            FunctionalObservable::CenteredSquare => (1.0, 1.0),
        }
    }

    /// The observable applied to a process value, centered to mean zero
    /// under the stationary law of `model`.
    pub fn apply_centered(&self, model: &LinearProcess, x: f64) -> f64 {
        match self {
            FunctionalObservable::Identity => x,
            FunctionalObservable::CenteredSquare => {
                x * x - model.innovation.variance() * model.coeffs.sum_sq()
            }
        }
    }

    /// `h(a) - h(b)`; centering constants cancel.
    fn difference(&self, a: f64, b: f64) -> f64 {
        match self {
            FunctionalObservable::Identity => a - b,
            FunctionalObservable::CenteredSquare => a * a - b * b,
        }
    }
}

/// Monte Carlo budget for the projection estimates.
#[derive(Clone, Debug)]
pub struct ProjectionMonteCarlo {
    /// Outer replicates: draws of the origin innovation and the past.
    pub outer: usize,
    /// Inner replicates per half-sample mean.
    pub inner: usize,
    /// Lags at which projections are estimated.
    pub lags: Vec<u64>,
    /// Seed for all derived streams.
    pub seed: u64,
}

impl Default for ProjectionMonteCarlo {
    fn default() -> Self {
        ProjectionMonteCarlo {
            outer: 400,
            inner: 200,
            lags: vec![1, 2, 4, 8, 16, 32],
            seed: 0,
        }
    }
}

/// Check the coefficient-log series and moment clause for a function of a
/// linear process, optionally corroborating the projection decay by seeded
/// Monte Carlo.
pub fn check_functional_linear(
    model: &LinearProcess,
    observable: FunctionalObservable,
    mc: Option<&ProjectionMonteCarlo>,
) -> Result<ConditionReport> {
    let coeffs = &model.coeffs;
    let term = |j: u64| {
        let a = coeffs.coeff(j);
        a * a * (j as f64).ln()
    };
    let table = decade_partial_sums("coefficient-sq-log", 3, SERIES_CAP, term);

    let certificate = match coeffs.tail() {
        CoeffTail::Zero => TailCertificate::Symbolic {
            statement: "coefficients vanish beyond the stored prefix, so every summand past it \
                        is exactly zero"
                .to_string(),
            bound: 0.0,
        },
        CoeffTail::Geometric { scale, ratio } => {
            // log j <= log(J+1) + (j - J - 1)/(J+1) past the cap by concavity.
            let j1 = (SERIES_CAP + 1) as f64;
            let r2 = ratio * ratio;
            let head = scale * scale * r2.powf(j1);
            let bound = head * (j1.ln() / (1.0 - r2) + r2 / (j1 * (1.0 - r2) * (1.0 - r2)));
            TailCertificate::Symbolic {
                statement: "geometric coefficient tail: the logarithm is dominated by its \
                            tangent at the cap and the remainder telescopes in closed form"
                    .to_string(),
                bound,
            }
        }
        CoeffTail::Power { .. } | CoeffTail::PowerLog { .. } => {
            match dyadic_tail_bound(SERIES_CAP, term) {
                Some(bound) => TailCertificate::Numeric {
                    statement: "remainder bounded by dyadic integral comparison of the exact \
                                nonincreasing summand"
                        .to_string(),
                    bound,
                },
                None => TailCertificate::None,
            }
        }
    };

    let (verdict, mut evidence) = grade(table, certificate);

    let (gamma, beta) = observable.holder_exponents();
    let order = 2.0_f64.max(2.0 * gamma).max(2.0 * beta);
    let moment = model.innovation.abs_moment(order);
    evidence.notes.push(format!(
        "smoothness envelope has gamma = {gamma}, beta = {beta}; the required innovation \
         moment E|xi|^{order} = {moment:.6} is finite in closed form"
    ));

    let mut parameters = BTreeMap::new();
    parameters.insert("cap".to_string(), SERIES_CAP as f64);
    parameters.insert("start".to_string(), 3.0);
    parameters.insert("gamma".to_string(), gamma);
    parameters.insert("beta".to_string(), beta);
    parameters.insert("moment-order".to_string(), order);
    parameters.insert("moment-value".to_string(), moment);

    if let Some(mc) = mc {
        let mut worst_ratio = 0.0_f64;
        for &lag in &mc.lags {
            let (estimate, error) = projection_norm_sq(model, observable, lag, mc);
            let a = coeffs.coeff(lag);
            let ratio = if a != 0.0 { estimate / (a * a) } else { f64::NAN };
            if ratio.is_finite() {
                worst_ratio = worst_ratio.max(ratio);
            }
            evidence.notes.push(format!(
                "lag {lag}: ||P_0 Y||^2 = {estimate:.6e} (se {error:.1e}), ratio to a_j^2 = \
                 {ratio:.4}"
            ));
        }
        if worst_ratio > 0.0 {
            parameters.insert("projection-ratio-max".to_string(), worst_ratio);
        }
        parameters.insert("projection-outer".to_string(), mc.outer as f64);
        parameters.insert("projection-inner".to_string(), mc.inner as f64);
    }

    Ok(ConditionReport {
        condition_id: ConditionId::FunctionalCoefficientSeries,
        verdict,
        evidence,
        parameters,
    })
}

/// Unbiased estimate of `||P_0(Y_lag)||_2^2` with its standard error.
///
/// Outer replicates draw the origin innovation and a window of past
/// innovations; two independent half-sample means of the inner coupling
/// difference multiply into an unbiased estimate of the squared conditional
/// expectation, which averages over the outer draws to the squared norm.
fn projection_norm_sq(
    model: &LinearProcess,
    observable: FunctionalObservable,
    lag: u64,
    mc: &ProjectionMonteCarlo,
) -> (f64, f64) {
    let coeffs = &model.coeffs;
    let innovation = &model.innovation;
    let mut rng = derive_rng(mc.seed, "conditions.functional.projection", lag);
    let outer = mc.outer.max(2);
    let inner = mc.inner.max(2);
    let a_lag = coeffs.coeff(lag);

    let mut products = Vec::with_capacity(outer);
    for _ in 0..outer {
        let origin = innovation.sample(&mut rng);
        // Fixed part of W from the conditioned past: positions -1, -2, ...
        // enter Y_lag through coefficients a_{lag+1}, a_{lag+2}, ...
        let mut past = CompensatedSum::new();
        for m in 1..=PROJECTION_PAST_WINDOW as u64 {
            past.add(coeffs.coeff(lag + m) * innovation.sample(&mut rng));
        }
        let past_sum = past.value();

        let mut halves = [0.0_f64; 2];
        for half in &mut halves {
            let mut acc = CompensatedSum::new();
            for _ in 0..inner {
                // Fresh future innovations at positions 1..=lag.
                let mut w = CompensatedSum::new();
                w.add(past_sum);
                for i in 0..lag {
                    w.add(coeffs.coeff(i) * innovation.sample(&mut rng));
                }
                let ghost = innovation.sample(&mut rng);
                let w = w.value();
                acc.add(observable.difference(w + a_lag * origin, w + a_lag * ghost));
            }
            *half = acc.value() / inner as f64;
        }
        products.push(halves[0] * halves[1]);
    }
    (mean(&products), standard_error(&products))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::Coefficients;
    use crate::models::Innovation;

    fn ar1(rho: f64) -> LinearProcess {
        LinearProcess::new(
            Coefficients::new(vec![1.0], CoeffTail::Geometric { scale: 1.0, ratio: rho })
                .expect("valid AR(1) coefficients"),
            Innovation::standard_normal(),
        )
    }

    #[test]
    fn identity_on_ar1_is_analytic_with_moment_note() {
        let model = ar1(0.5);
        let report = check_functional_linear(&model, FunctionalObservable::Identity, None)
            .expect("check runs");
        assert_eq!(report.verdict, super::super::Verdict::HoldsAnalytic);
        assert_eq!(report.parameters["moment-order"], 2.0);
        assert!(
            report.evidence.notes.iter().any(|n| n.contains("finite in closed form")),
            "moment clause should be recorded"
        );
    }

    #[test]
    fn power_tail_square_observable_is_numeric() {
        // Terms a_k^2 log k ~ log k / k^3 leave far less than the decade
        // tolerance past the cap, so the numeric grade can actually close.
        let model = LinearProcess::new(
            Coefficients::new(
                vec![],
                CoeffTail::Power { scale: 1.0, exponent: 1.5, offset: 1.0 },
            )
            .expect("valid power coefficients"),
            Innovation::standard_normal(),
        );
        let report =
            check_functional_linear(&model, FunctionalObservable::CenteredSquare, None)
                .expect("check runs");
        assert_eq!(report.verdict, super::super::Verdict::HoldsNumeric);
        assert_eq!(report.parameters["moment-order"], 2.0);
        let table = report.evidence.series.as_ref().expect("series recorded");
        assert_eq!(table.start, 3);
    }

    #[test]
    fn identity_projection_estimates_match_sharp_oracle() {
        // For h(x) = x the inner difference is a_j (xi_0 - xi_0') with the
        // ghost averaging to zero, so ||P_0 Y_j||^2 = a_j^2 exactly.
        let model = ar1(0.5);
        let mc = ProjectionMonteCarlo {
            outer: 500,
            inner: 150,
            lags: vec![1, 3],
            seed: 11,
        };
        for &lag in &mc.lags {
            let (estimate, error) =
                projection_norm_sq(&model, FunctionalObservable::Identity, lag, &mc);
            let a = model.coeffs.coeff(lag);
            let oracle = a * a;
            assert!(
                (estimate - oracle).abs() <= 4.0 * error + 1e-12,
                "lag {lag}: estimate {estimate} deviates from oracle {oracle} \
                 beyond 4 x {error}"
            );
        }
    }

    #[test]
    fn squared_observable_projection_matches_closed_oracle() {
        // For h(x) = x^2 and standard normal innovations,
        // P_0(Y_j) = 2 a_j S xi_0 + a_j^2 (xi_0^2 - 1) with S the fixed past
        // part, so ||P_0 Y_j||^2 = 4 a_j^2 sum_{m>lag} a_m^2 + 2 a_j^4.
        let model = ar1(0.6);
        let mc = ProjectionMonteCarlo {
            outer: 600,
            inner: 300,
            lags: vec![2],
            seed: 13,
        };
        let lag = 2u64;
        let (estimate, error) =
            projection_norm_sq(&model, FunctionalObservable::CenteredSquare, lag, &mc);
        let a = model.coeffs.coeff(lag);
        let past_energy = model.coeffs.l2_tail(lag + 1);
        let oracle = 4.0 * a * a * past_energy + 2.0 * a.powi(4);
        assert!(
            (estimate - oracle).abs() <= 4.0 * error + 1e-9,
            "estimate {estimate} deviates from oracle {oracle} beyond 4 x {error}"
        );
    }

    #[test]
    fn projection_ratios_recorded_for_square_observable() {
        let model = ar1(0.5);
        let mc = ProjectionMonteCarlo {
            outer: 200,
            inner: 100,
            lags: vec![1, 2, 4],
            seed: 7,
        };
        let report =
            check_functional_linear(&model, FunctionalObservable::CenteredSquare, Some(&mc))
                .expect("check runs");
        assert_eq!(report.verdict, super::super::Verdict::HoldsAnalytic);
        assert!(report.parameters.contains_key("projection-ratio-max"));
        let ratio = report.parameters["projection-ratio-max"];
        assert!(ratio.is_finite() && ratio > 0.0, "ratio should be recorded, got {ratio}");
        assert!(
            report.evidence.notes.iter().filter(|n| n.contains("lag")).count() >= 3,
            "every requested lag should be reported"
        );
    }

    #[test]
    fn centered_square_centering_uses_process_variance() {
        let model = ar1(0.5);
        // Var(X) = 1 / (1 - 0.25).
        let x = 2.0;
        let centered =
            FunctionalObservable::CenteredSquare.apply_centered(&model, x);
        assert!((centered - (4.0 - 4.0 / 3.0)).abs() < 1e-12);
        assert_eq!(FunctionalObservable::Identity.apply_centered(&model, x), x);
    }
}
