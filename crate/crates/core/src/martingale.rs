//! Martingale approximation of rotated partial sums.
//!
//! At a fixed frequency `t`, the rotated sum `S_n(t) = sum_{k=1}^n e^{ikt} X_k`
//! splits as `S_n - E_0 S_n = M_n + R_n`, where `E_0` conditions on the frozen
//! origin, `M_n` is a martingale under the quenched law, and the normalized
//! remainder `(1/n) E_0 |R_n|^2` vanishes as `n` grows. This module builds the
//! approximation kernel analytically (linear filters via the one-sided
//! transfer sum, finite-state chains via a resolvent solve), evaluates
//! conditional Fourier means in closed form, checks the telescoping identity
//! behind those means, and estimates the remainder by seeded Monte Carlo.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{dft, dft_complex, unit_rotor};
use crate::models::{Drivers, LinearProcess, MarkovChain, ProcessSpec, QuenchedOrigin};
use crate::seeding::derive_seed;
use crate::stats::{mean, standard_error, CompensatedSum};

/// Certified absolute error for the one-sided transfer sum `c(t)`.
pub const TRANSFER_TAIL_TOL: f64 = 1e-10;
/// Largest acceptable sup-norm residual of the resolvent solve.
pub const RESOLVENT_RESIDUAL_TOL: f64 = 1e-10;
/// Condition estimate above which the resolvent is treated as singular.
pub const RESOLVENT_CONDITION_LIMIT: f64 = 1e12;
/// Largest acceptable defect in the telescoping identity.
pub const TELESCOPING_TOL: f64 = 1e-9;

/// Projection of `X_j` onto the time-zero innovation of a linear filter:
/// `E[X_j xi_0] / sigma^2 = a_j`.
pub fn innovation_projection(model: &LinearProcess, j: u64) -> f64 {
    model.coeffs.coeff(j)
}

/// Kernel of the martingale approximation for a linear filter at frequency
/// `t`: the one-sided transfer value `c(t) = sum_{j>=1} a_j e^{ijt}`.
#[derive(Clone, Debug)]
pub struct LinearKernel {
    t: f64,
    c: Complex64,
    full: Complex64,
}

impl LinearKernel {
    pub fn new(model: &LinearProcess, t: f64) -> Result<Self> {
        let c = model.coeffs.transfer_from(1, t, TRANSFER_TAIL_TOL)?;
        let full = c + model.coeffs.coeff(0);
        Ok(Self { t, c, full })
    }

    pub fn frequency(&self) -> f64 {
        self.t
    }

    /// One-sided transfer value `c(t) = sum_{j>=1} a_j e^{ijt}`.
    pub fn one_sided_transfer(&self) -> Complex64 {
        self.c
    }

    /// Full transfer value `A(e^{it}) = a_0 + c(t)`.
    pub fn full_transfer(&self) -> Complex64 {
        self.full
    }

    /// Strict-future martingale difference `D_k = e^{ikt} c(t) xi_k`: the
    /// projection of `sum_{j>k} e^{ijt} X_j` onto the innovation at time `k`.
    pub fn difference(&self, k: u64, xi: f64) -> Complex64 {
        unit_rotor(self.t, k) * self.c * xi
    }

    /// `k`-th summand of the approximating martingale:
    /// `e^{ikt} A(e^{it}) xi_k` for `k = 1..=n`.
    pub fn summand(&self, k: u64, xi: f64) -> Complex64 {
        unit_rotor(self.t, k) * self.full * xi
    }

    /// Approximating martingale `M_n = A(e^{it}) sum_{k=1}^n e^{ikt} xi_k`.
    pub fn approximation(&self, future: &[f64]) -> Result<Complex64> {
        Ok(self.full * dft(future, self.t)?)
    }
}

/// Kernel of the martingale approximation for a finite-state chain at
/// frequency `t`: the solved observable `g` with `(I - e^{it} Q) g = h`.
#[derive(Clone, Debug)]
pub struct MarkovKernel {
    t: f64,
    g: Vec<Complex64>,
    qg: Vec<Complex64>,
    residual: f64,
    g_norm: f64,
    chain: MarkovChain,
}

impl MarkovKernel {
    /// Solves `(I - e^{it} Q) g = h` by dense LU with one step of iterative
    /// refinement. Errors with [`Error::ResolventSingular`] when the solve
    /// fails outright, the condition estimate exceeds
    /// [`RESOLVENT_CONDITION_LIMIT`], or the refined residual is still above
    /// [`RESOLVENT_RESIDUAL_TOL`].
    pub fn new(chain: &MarkovChain, t: f64) -> Result<Self> {
        let m = chain.state_count();
        let z = Complex64::from_polar(1.0, t);
        let a = DMatrix::from_fn(m, m, |i, j| {
            let delta = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            delta - z * chain.transition()[i][j]
        });
        let h = DVector::from_fn(m, |i, _| Complex64::new(chain.observable()[i], 0.0));

        let lu = a.clone().lu();
        let mut g = lu.solve(&h).ok_or_else(|| {
            Error::ResolventSingular(format!("resolvent solve failed at frequency {t}"))
        })?;
        let defect = &h - &a * &g;
        if let Some(correction) = lu.solve(&defect) {
            g += correction;
        }

        let inverse = a.clone().try_inverse().ok_or_else(|| {
            Error::ResolventSingular(format!("resolvent is not invertible at frequency {t}"))
        })?;
        let condition = inf_norm(&a) * inf_norm(&inverse);
        if !condition.is_finite() || condition > RESOLVENT_CONDITION_LIMIT {
            return Err(Error::ResolventSingular(format!(
                "resolvent condition estimate {condition:.3e} exceeds \
                 {RESOLVENT_CONDITION_LIMIT:.0e} at frequency {t}"
            )));
        }

        let residual = (&h - &a * &g).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !residual.is_finite() || residual > RESOLVENT_RESIDUAL_TOL {
            return Err(Error::ResolventSingular(format!(
                "resolvent residual {residual:.3e} exceeds {RESOLVENT_RESIDUAL_TOL:.0e} \
                 at frequency {t}"
            )));
        }

        let g_vec: Vec<Complex64> = g.iter().copied().collect();
        let qg = apply_complex(chain, &g_vec);
        let mut norm_sq = CompensatedSum::new();
        for (x, value) in g_vec.iter().enumerate() {
            norm_sq.add(chain.stationary()[x] * value.norm_sqr());
        }
        Ok(Self {
            t,
            g: g_vec,
            qg,
            residual,
            g_norm: norm_sq.value().max(0.0).sqrt(),
            chain: chain.clone(),
        })
    }

    pub fn frequency(&self) -> f64 {
        self.t
    }

    /// Solved observable `g`.
    pub fn solved_observable(&self) -> &[Complex64] {
        &self.g
    }

    /// `Q g`, the one-step conditional mean of the solved observable.
    pub fn applied_observable(&self) -> &[Complex64] {
        &self.qg
    }

    /// Sup-norm residual of `(I - e^{it} Q) g - h` after refinement.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `L^2(pi)` norm of the solved observable.
    pub fn solved_norm(&self) -> f64 {
        self.g_norm
    }

    /// Martingale difference
    /// `D_k = e^{i(k+1)t} [g(s_{k+1}) - (Qg)(s_k)]` for the transition
    /// `s_k -> s_{k+1}`.
    pub fn difference(&self, k: u64, state: usize, next_state: usize) -> Complex64 {
        unit_rotor(self.t, k + 1) * (self.g[next_state] - self.qg[state])
    }

    /// Approximating martingale `M_n = sum_{k=0}^{n-1} D_k` along the visited
    /// states, with `s_0 = start`.
    pub fn approximation(&self, start: usize, visited: &[usize]) -> Result<Complex64> {
        let mut previous = start;
        let summands: Vec<Complex64> = visited
            .iter()
            .map(|&state| {
                let d = self.g[state] - self.qg[previous];
                previous = state;
                d
            })
            .collect();
        dft_complex(&summands, self.t)
    }

    /// Closed-form conditional Fourier mean from a fixed starting state:
    /// `E_0 S_n(t) = e^{it} (Qg)(x) - e^{i(n+1)t} (Q^{n+1} g)(x)`.
    pub fn conditional_mean(&self, start: usize, n: usize) -> Complex64 {
        let mut iterated = self.qg.clone();
        for _ in 0..n {
            iterated = apply_complex(&self.chain, &iterated);
        }
        unit_rotor(self.t, 1) * self.qg[start] - unit_rotor(self.t, n as u64 + 1) * iterated[start]
    }

    /// Exact `E_pi |E_0 S_n(t)|^2` over stationary starting states. Bounded
    /// by `4 ||g||^2` uniformly in `n`, since `Q` contracts `L^2(pi)`.
    pub fn stationary_mean_square(&self, n: usize) -> f64 {
        let mut iterated = self.qg.clone();
        for _ in 0..n {
            iterated = apply_complex(&self.chain, &iterated);
        }
        let first = unit_rotor(self.t, 1);
        let last = unit_rotor(self.t, n as u64 + 1);
        let mut acc = CompensatedSum::new();
        for x in 0..self.chain.state_count() {
            let value = first * self.qg[x] - last * iterated[x];
            acc.add(self.chain.stationary()[x] * value.norm_sqr());
        }
        acc.value().max(0.0)
    }
}

/// Family-dispatched martingale approximation kernel.
#[derive(Clone, Debug)]
pub enum MartingaleKernel {
    Linear(LinearKernel),
    Markov(MarkovKernel),
}

impl MartingaleKernel {
    /// Builds the kernel for the given process. Linear filters need an
    /// absolutely summable coefficient tail; chains need a non-singular
    /// resolvent. Iterated maps and the long-range Gaussian family carry no
    /// analytic kernel here.
    pub fn for_spec(spec: &ProcessSpec, t: f64) -> Result<Self> {
        match spec {
            ProcessSpec::Linear(model) => Ok(Self::Linear(LinearKernel::new(model, t)?)),
            ProcessSpec::FiniteMarkov(chain) => Ok(Self::Markov(MarkovKernel::new(chain, t)?)),
            ProcessSpec::ReversibleMarkov(chain) => {
                Ok(Self::Markov(MarkovKernel::new(chain.chain(), t)?))
            }
            _ => Err(Error::Unsupported(format!(
                "no analytic martingale kernel for the {} family",
                spec.family_name()
            ))),
        }
    }

    /// Approximating martingale `M_n` rebuilt from a trajectory's drivers.
    pub fn approximation(&self, drivers: &Drivers) -> Result<Complex64> {
        match (self, drivers) {
            (Self::Linear(kernel), Drivers::Innovations { future, .. }) => {
                kernel.approximation(future)
            }
            (Self::Markov(kernel), Drivers::ChainStates { start, visited }) => {
                kernel.approximation(*start, visited)
            }
            _ => Err(Error::invalid(
                "trajectory drivers do not match the martingale kernel family",
            )),
        }
    }

    /// The `n` martingale increments whose sum is `M_n`, in path order.
    pub fn increments(&self, drivers: &Drivers) -> Result<Vec<Complex64>> {
        match (self, drivers) {
            (Self::Linear(kernel), Drivers::Innovations { future, .. }) => Ok(future
                .iter()
                .enumerate()
                .map(|(idx, &xi)| kernel.summand(idx as u64 + 1, xi))
                .collect()),
            (Self::Markov(kernel), Drivers::ChainStates { start, visited }) => {
                let mut previous = *start;
                Ok(visited
                    .iter()
                    .enumerate()
                    .map(|(idx, &state)| {
                        let d = kernel.difference(idx as u64, previous, state);
                        previous = state;
                        d
                    })
                    .collect())
            }
            _ => Err(Error::invalid(
                "trajectory drivers do not match the martingale kernel family",
            )),
        }
    }
}

/// Conditional Fourier mean `E_0 S_n(t) = sum_{k=1}^n e^{ikt} E[X_k | origin]`.
///
/// Finite-state chains use the closed form
/// `e^{it} (Qg)(x) - e^{i(n+1)t} (Q^{n+1} g)(x)` when the resolvent solve
/// succeeds, and fall back to the direct rotated sum of conditional means
/// when it is singular. All other families evaluate the direct sum.
pub fn conditional_mean_s(
    spec: &ProcessSpec,
    origin: &QuenchedOrigin,
    n: usize,
    t: f64,
) -> Result<Complex64> {
    if let (Some(chain), QuenchedOrigin::MarkovStart { state_index }) = (spec.as_markov(), origin)
    {
        if *state_index >= chain.state_count() {
            return Err(Error::OriginMismatch(format!(
                "start state {state_index} is out of range for a {}-state chain",
                chain.state_count()
            )));
        }
        match MarkovKernel::new(chain, t) {
            Ok(kernel) => return Ok(kernel.conditional_mean(*state_index, n)),
            Err(Error::ResolventSingular(_)) => {}
            Err(other) => return Err(other),
        }
    }
    let means = spec.conditional_observation_means(origin, n)?;
    if means.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    dft(&means, t)
}

/// The three terms of the telescoped conditional Fourier mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TelescopingTerms {
    /// `e^{it} E_0 X_1`.
    pub first: Complex64,
    /// `-e^{i(n+1)t} E_0 X_n`.
    pub last: Complex64,
    /// `sum_{k=1}^{n-1} e^{i(k+1)t} E_0 (X_{k+1} - X_k)`.
    pub increments: Complex64,
}

impl TelescopingTerms {
    pub fn total(&self) -> Complex64 {
        self.first + self.last + self.increments
    }
}

/// Telescopes `(1 - e^{it}) E_0 S_n(t)` into boundary and increment terms:
///
/// `(1 - e^{it}) sum_{k=1}^n e^{ikt} m_k
///   = e^{it} m_1 - e^{i(n+1)t} m_n + sum_{k=1}^{n-1} e^{i(k+1)t} (m_{k+1} - m_k)`
///
/// with `m_k = E[X_k | origin]`. The returned terms satisfy this identity to
/// within [`TELESCOPING_TOL`].
pub fn telescoping_decomposition(
    spec: &ProcessSpec,
    origin: &QuenchedOrigin,
    n: usize,
    t: f64,
) -> Result<TelescopingTerms> {
    if n == 0 {
        return Err(Error::invalid(
            "the telescoping decomposition needs at least one observation",
        ));
    }
    let means = spec.conditional_observation_means(origin, n)?;
    let first = unit_rotor(t, 1) * means[0];
    let last = -unit_rotor(t, n as u64 + 1) * means[n - 1];
    let increments = if n == 1 {
        Complex64::new(0.0, 0.0)
    } else {
        let differences: Vec<f64> = means.windows(2).map(|pair| pair[1] - pair[0]).collect();
        unit_rotor(t, 1) * dft(&differences, t)?
    };
    Ok(TelescopingTerms { first, last, increments })
}

/// Monte Carlo estimate of the normalized approximation remainder
/// `(1/n) E_0 |S_n - E_0 S_n - M_n|^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub n: usize,
    pub t: f64,
    pub gap: f64,
    pub stderr: f64,
    pub replicates: u64,
}

/// Estimates the approximation remainder at frequency `t` from `replicates`
/// quenched draws started at `origin`. Stream seeds derive from `seed`, so
/// the estimate is reproducible bit for bit.
pub fn approximation_gap(
    spec: &ProcessSpec,
    origin: &QuenchedOrigin,
    n: usize,
    t: f64,
    replicates: u64,
    seed: u64,
) -> Result<GapEstimate> {
    if replicates < 2 {
        return Err(Error::invalid(
            "the gap estimate needs at least two replicates",
        ));
    }
    let kernel = MartingaleKernel::for_spec(spec, t)?;
    let centering = conditional_mean_s(spec, origin, n, t)?;
    let sampler = spec.prepare(Some(origin), n)?;
    let mut samples = Vec::with_capacity(replicates as usize);
    for replicate in 0..replicates {
        let stream = derive_seed(seed, "gap.replicate", replicate);
        let drawn = sampler.draw(stream);
        let s = dft(&drawn.trajectory.values, t)?;
        let m = kernel.approximation(&drawn.drivers)?;
        samples.push((s - centering - m).norm_sqr() / n as f64);
    }
    Ok(GapEstimate {
        n,
        t,
        gap: mean(&samples),
        stderr: standard_error(&samples),
        replicates,
    })
}

/// `Q v` for a complex-valued observable `v`.
fn apply_complex(chain: &MarkovChain, v: &[Complex64]) -> Vec<Complex64> {
    let m = chain.state_count();
    let mut out = Vec::with_capacity(m);
    for x in 0..m {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for (y, value) in v.iter().enumerate() {
            re.add(chain.transition()[x][y] * value.re);
            im.add(chain.transition()[x][y] * value.im);
        }
        out.push(Complex64::new(re.value(), im.value()));
    }
    out
}

/// Max row sum of entry moduli.
fn inf_norm(a: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0_f64;
    for row in 0..a.nrows() {
        let mut sum = 0.0;
        for col in 0..a.ncols() {
            sum += a[(row, col)].norm();
        }
        worst = worst.max(sum);
    }
    worst
}
