//! Finite-state stationary Markov chains with a centered observable.
//!
//! A chain is specified by a transition matrix `Q`, a stationary law `pi`,
//! and an observable `h` with `pi . h = 0`. The observed process is
//! `X_k = h(state_k)` with the chain started from `pi` (stationary draws) or
//! from a fixed state (quenched draws). Reversible chains get a validated
//! newtype so spectral arguments that need detailed balance can demand it in
//! the type.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

/// Row-stochasticity defect allowed in a transition matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Defect allowed in `pi Q = pi`, `pi . h = 0`, and detailed balance.
pub const STATIONARITY_TOL: f64 = 1e-10;

/// A finite-state chain with stationary law and centered observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarkovChain", into = "RawMarkovChain")]
pub struct MarkovChain {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
    observable: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawMarkovChain {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
    observable: Vec<f64>,
}

impl TryFrom<RawMarkovChain> for MarkovChain {
    type Error = Error;

    fn try_from(raw: RawMarkovChain) -> Result<Self> {
        MarkovChain::new(raw.transition, raw.stationary, raw.observable)
    }
}

impl From<MarkovChain> for RawMarkovChain {
    fn from(chain: MarkovChain) -> Self {
        Self {
            transition: chain.transition,
            stationary: chain.stationary,
            observable: chain.observable,
        }
    }
}

impl MarkovChain {
    pub fn new(
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
        observable: Vec<f64>,
    ) -> Result<Self> {
        let n = transition.len();
        if n == 0 {
            return Err(Error::invalid("transition matrix must be non-empty"));
        }
        if stationary.len() != n || observable.len() != n {
            return Err(Error::invalid(
                "stationary law and observable must match the state count",
            ));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "transition row {i} has length {} instead of {n}",
                    row.len()
                )));
            }
            let mut sum = CompensatedSum::new();
            for &q in row {
                if !q.is_finite() || q < 0.0 {
                    return Err(Error::invalid(format!(
                        "transition row {i} has a negative or non-finite entry"
                    )));
                }
                sum.add(q);
            }
            if (sum.value() - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!(
                    "transition row {i} sums to {} instead of 1",
                    sum.value()
                )));
            }
        }
        let mut total = CompensatedSum::new();
        for &p in &stationary {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::invalid(
                    "stationary law has a negative or non-finite entry",
                ));
            }
            total.add(p);
        }
        if (total.value() - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::invalid(format!(
                "stationary law sums to {} instead of 1",
                total.value()
            )));
        }
        for x in 0..n {
            let mut flow = CompensatedSum::new();
            for y in 0..n {
                flow.add(stationary[y] * transition[y][x]);
            }
            if (flow.value() - stationary[x]).abs() > STATIONARITY_TOL {
                return Err(Error::invalid(format!(
                    "law is not stationary: (pi Q - pi)[{x}] = {:e}",
                    flow.value() - stationary[x]
                )));
            }
        }
        if observable.iter().any(|h| !h.is_finite()) {
            return Err(Error::invalid("observable has a non-finite entry"));
        }
        let mut mean = CompensatedSum::new();
        for x in 0..n {
            mean.add(stationary[x] * observable[x]);
        }
        if mean.value().abs() > STATIONARITY_TOL {
            return Err(Error::invalid(format!(
                "observable is not centered: pi . h = {:e}",
                mean.value()
            )));
        }
        Ok(Self { transition, stationary, observable })
    }

    /// Symmetric random walk on two states with flip probability `p`;
    /// observable `(1, -1)` has autocovariance `(1 - 2p)^k`.
    pub fn two_state_flip(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("flip probability must lie in [0, 1]"));
        }
        Self::new(
            vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
            vec![0.5, 0.5],
            vec![1.0, -1.0],
        )
    }

    /// Random ergodic chain with a centered observable, for randomized
    /// property tests and calibration sweeps.
    ///
    /// Rows are normalized positive uniforms (so the chain is irreducible and
    /// aperiodic), the stationary law is recovered by power iteration, and the
    /// observable is a uniform draw recentered to mean zero under that law.
    pub fn random(states: usize, rng: &mut ChaCha12Rng) -> Result<Self> {
        if states == 0 {
            return Err(Error::invalid("a random chain needs at least one state"));
        }
        let mut transition = vec![vec![0.0; states]; states];
        for row in &mut transition {
            let mut total = 0.0;
            for entry in row.iter_mut() {
                // Bounded away from zero so no transition is vanishingly rare.
                *entry = 0.05 + rng.gen::<f64>();
                total += *entry;
            }
            for entry in row.iter_mut() {
                *entry /= total;
            }
        }

        // Power iteration for the stationary row vector.
        let mut pi = vec![1.0 / states as f64; states];
        for _ in 0..100_000 {
            let mut next = vec![0.0; states];
            for (x, row) in transition.iter().enumerate() {
                for (y, &q) in row.iter().enumerate() {
                    next[y] += pi[x] * q;
                }
            }
            let total: f64 = next.iter().sum();
            for entry in &mut next {
                *entry /= total;
            }
            let sup_diff = pi
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            pi = next;
            if sup_diff < 1e-15 {
                break;
            }
        }

        let raw: Vec<f64> = (0..states).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let mean: f64 = raw.iter().zip(&pi).map(|(h, p)| h * p).sum();
        let observable: Vec<f64> = raw.iter().map(|h| h - mean).collect();
        Self::new(transition, pi, observable)
    }

    pub fn state_count(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn observable(&self) -> &[f64] {
        &self.observable
    }

    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let n = self.state_count();
        DMatrix::from_fn(n, n, |i, j| self.transition[i][j])
    }

    /// `(Q^k h)(x)` for all states `x`, computed by repeated application.
    pub fn iterated_observable(&self, k: u64) -> Vec<f64> {
        let mut v = self.observable.clone();
        for _ in 0..k {
            v = self.apply(&v);
        }
        v
    }

    /// `(Q g)(x) = sum_y Q(x, y) g(y)`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n = self.state_count();
        let mut out = Vec::with_capacity(n);
        for x in 0..n {
            let mut acc = CompensatedSum::new();
            for y in 0..n {
                acc.add(self.transition[x][y] * g[y]);
            }
            out.push(acc.value());
        }
        out
    }

    /// Stationary inner product `<g, w> = sum_x pi(x) g(x) w(x)`.
    pub fn inner(&self, g: &[f64], w: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for x in 0..self.state_count() {
            acc.add(self.stationary[x] * g[x] * w[x]);
        }
        acc.value()
    }

    /// Stationary squared norm `sum_x pi(x) g(x)^2`.
    pub fn norm_sq(&self, g: &[f64]) -> f64 {
        self.inner(g, g)
    }

    /// Autocovariance `cov(h(state_0), h(state_j)) = <h, Q^j h>`.
    pub fn covariance(&self, lag: u64) -> f64 {
        self.inner(&self.observable, &self.iterated_observable(lag))
    }

    /// Largest eigenvalue modulus of `Q` after excluding one unit eigenvalue.
    pub fn second_eigenvalue_modulus(&self) -> f64 {
        let eigen = self.transition_matrix().complex_eigenvalues();
        let mut moduli: Vec<f64> = eigen.iter().map(|z| z.norm()).collect();
        moduli.sort_by(|a, b| b.partial_cmp(a).expect("eigenvalue moduli are finite"));
        if moduli.len() < 2 {
            0.0
        } else {
            moduli[1].min(1.0)
        }
    }

    fn step(&self, state: usize, rng: &mut ChaCha12Rng) -> usize {
        let u: f64 = rng.gen();
        let row = &self.transition[state];
        let mut acc = 0.0;
        for (y, &q) in row.iter().enumerate() {
            acc += q;
            if u < acc {
                return y;
            }
        }
        row.len() - 1
    }

    /// Draw a state from the stationary law.
    pub fn draw_stationary_state(&self, rng: &mut ChaCha12Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (x, &p) in self.stationary.iter().enumerate() {
            acc += p;
            if u < acc {
                return x;
            }
        }
        self.stationary.len() - 1
    }

    /// Run `n` steps from `start` and return (observations, visited states).
    /// The start state itself is not observed; `X_k = h(state_k)` for
    /// `k = 1..=n`.
    pub fn simulate(
        &self,
        start: usize,
        n: usize,
        rng: &mut ChaCha12Rng,
    ) -> (Vec<f64>, Vec<usize>) {
        let mut states = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let mut state = start;
        for _ in 0..n {
            state = self.step(state, rng);
            states.push(state);
            values.push(self.observable[state]);
        }
        (values, states)
    }
}

/// A chain satisfying detailed balance `pi(x) Q(x, y) = pi(y) Q(y, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarkovChain", into = "MarkovChain")]
pub struct ReversibleChain(MarkovChain);

impl TryFrom<MarkovChain> for ReversibleChain {
    type Error = Error;

    fn try_from(chain: MarkovChain) -> Result<Self> {
        let n = chain.state_count();
        for x in 0..n {
            for y in (x + 1)..n {
                let forward = chain.stationary[x] * chain.transition[x][y];
                let backward = chain.stationary[y] * chain.transition[y][x];
                if (forward - backward).abs() > STATIONARITY_TOL {
                    return Err(Error::invalid(format!(
                        "detailed balance fails between states {x} and {y}: \
                         {forward} vs {backward}"
                    )));
                }
            }
        }
        Ok(Self(chain))
    }
}

impl From<ReversibleChain> for MarkovChain {
    fn from(chain: ReversibleChain) -> Self {
        chain.0
    }
}

impl ReversibleChain {
    pub fn chain(&self) -> &MarkovChain {
        &self.0
    }

    /// Random reversible chain built from symmetric positive edge weights:
    /// `Q(x, y) = w(x, y) / r(x)` with `r(x) = sum_y w(x, y)` is reversible
    /// with respect to `pi(x) = r(x) / sum_z r(z)` by construction.
    pub fn random(states: usize, rng: &mut ChaCha12Rng) -> Result<Self> {
        if states == 0 {
            return Err(Error::invalid("a random chain needs at least one state"));
        }
        let mut weights = vec![vec![0.0; states]; states];
        for x in 0..states {
            for y in x..states {
                let w = 0.1 + rng.gen::<f64>();
                weights[x][y] = w;
                weights[y][x] = w;
            }
        }
        let row_sums: Vec<f64> = weights.iter().map(|row| row.iter().sum()).collect();
        let total: f64 = row_sums.iter().sum();
        let transition: Vec<Vec<f64>> = weights
            .iter()
            .zip(&row_sums)
            .map(|(row, &r)| row.iter().map(|w| w / r).collect())
            .collect();
        let pi: Vec<f64> = row_sums.iter().map(|r| r / total).collect();
        let raw: Vec<f64> = (0..states).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let mean: f64 = raw.iter().zip(&pi).map(|(h, p)| h * p).sum();
        let observable: Vec<f64> = raw.iter().map(|h| h - mean).collect();
        MarkovChain::new(transition, pi, observable)?.try_into()
    }
}

impl std::ops::Deref for ReversibleChain {
    type Target = MarkovChain;

    fn deref(&self) -> &MarkovChain {
        &self.0
    }
}
