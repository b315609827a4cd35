//! Process families and trajectory sampling.
//!
//! Five stationary model families share one umbrella type, [`ProcessSpec`]:
//! causal linear filters, finite-state Markov chains (plus a reversible
//! refinement), contractive random affine maps, and a long-memory Gaussian
//! family. Every family supports sampling under the stationary law and under
//! the quenched law obtained by freezing a realized past, plus analytic
//! autocovariances and conditional means given the frozen past.
//!
//! Sampling is deterministic: a trajectory is a pure function of the process
//! description, the origin, the length, and a 64-bit stream seed. Replicated
//! experiments derive one stream seed per replicate with
//! [`crate::seeding::derive_seed`] and may draw them in any order or in
//! parallel.

pub mod gaussian;
pub mod innovations;
pub mod irf;
pub mod linear;
pub mod markov;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{derive_rng, digest_hex};

pub use gaussian::{GaussianLrd, GaussianObservable, GaussianSampler, DEFAULT_PAST_WINDOW};
pub use innovations::{Innovation, InnovationKind};
pub use irf::IteratedMap;
pub use linear::LinearProcess;
pub use markov::{MarkovChain, ReversibleChain};

/// One of the five stationary model families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ProcessSpec {
    Linear(LinearProcess),
    FiniteMarkov(MarkovChain),
    ReversibleMarkov(ReversibleChain),
    IteratedMap(IteratedMap),
    GaussianLrd(GaussianLrd),
}

/// A frozen past from which quenched replicates are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuenchedOrigin {
    /// Past innovations, most recent first: `xi_0, xi_{-1}, ...`.
    LinearPast { past_innovations: Vec<f64> },
    /// Starting state of a finite chain.
    MarkovStart { state_index: usize },
    /// Starting point of an iterated map.
    MapStart { x0: f64 },
    /// Past Gaussian states, most recent first: `xi_0, xi_{-1}, ...`.
    GaussianPast { past_values: Vec<f64> },
}

impl QuenchedOrigin {
    fn kind_name(&self) -> &'static str {
        match self {
            QuenchedOrigin::LinearPast { .. } => "linear-past",
            QuenchedOrigin::MarkovStart { .. } => "markov-start",
            QuenchedOrigin::MapStart { .. } => "map-start",
            QuenchedOrigin::GaussianPast { .. } => "gaussian-past",
        }
    }
}

/// One sampled path `X_1, ..., X_n` with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub values: Vec<f64>,
    /// Frozen past, or `None` for a stationary draw.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<QuenchedOrigin>,
    /// Stream seed that reproduces the draw bit for bit.
    pub seed: u64,
    /// Digest of the canonical process description.
    pub spec_hash: String,
}

/// The randomness underlying a trajectory, kept so martingale increments can
/// be rebuilt from the same draw.
#[derive(Clone, Debug, PartialEq)]
pub enum Drivers {
    /// Linear models: frozen past (most recent first) and fresh `xi_1..xi_n`.
    Innovations { past: Vec<f64>, future: Vec<f64> },
    /// Markov models: starting state and the `n` visited states.
    ChainStates { start: usize, visited: Vec<usize> },
    /// Iterated maps: starting point and the `n` visited states.
    MapStates { start: f64, visited: Vec<f64> },
    /// Gaussian models: frozen past and the `n` fresh states.
    GaussianStates { past: Vec<f64>, states: Vec<f64> },
}

/// A trajectory together with its drivers.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivenTrajectory {
    pub trajectory: Trajectory,
    pub drivers: Drivers,
}

impl ProcessSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            ProcessSpec::Linear(_) => "linear",
            ProcessSpec::FiniteMarkov(_) => "finite-markov",
            ProcessSpec::ReversibleMarkov(_) => "reversible-markov",
            ProcessSpec::IteratedMap(_) => "iterated-map",
            ProcessSpec::GaussianLrd(_) => "gaussian-lrd",
        }
    }

    pub fn as_linear(&self) -> Option<&LinearProcess> {
        match self {
            ProcessSpec::Linear(model) => Some(model),
            _ => None,
        }
    }

    /// The chain behind either Markov variant.
    pub fn as_markov(&self) -> Option<&MarkovChain> {
        match self {
            ProcessSpec::FiniteMarkov(chain) => Some(chain),
            ProcessSpec::ReversibleMarkov(chain) => Some(chain.chain()),
            _ => None,
        }
    }

    pub fn as_reversible(&self) -> Option<&ReversibleChain> {
        match self {
            ProcessSpec::ReversibleMarkov(chain) => Some(chain),
            _ => None,
        }
    }

    pub fn as_iterated_map(&self) -> Option<&IteratedMap> {
        match self {
            ProcessSpec::IteratedMap(map) => Some(map),
            _ => None,
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianLrd> {
        match self {
            ProcessSpec::GaussianLrd(model) => Some(model),
            _ => None,
        }
    }

    /// Canonical structured-text serialization (field order is fixed by the
    /// type definitions, so equal specs produce equal text).
    pub fn canonical_text(&self) -> String {
        toml::to_string(self).expect("a validated process spec always serializes")
    }

    /// Stable digest of the canonical serialization.
    pub fn spec_hash(&self) -> String {
        digest_hex(&self.canonical_text())
    }

    /// Analytic autocovariance of the observed process at a lag.
    pub fn covariance(&self, lag: u64) -> Result<f64> {
        match self {
            ProcessSpec::Linear(model) => {
                Ok(model.innovation.variance() * model.coeffs.filter_autocovariance(lag)?)
            }
            ProcessSpec::FiniteMarkov(chain) => Ok(chain.covariance(lag)),
            ProcessSpec::ReversibleMarkov(chain) => Ok(chain.covariance(lag)),
            ProcessSpec::IteratedMap(map) => Ok(map.covariance(lag)),
            ProcessSpec::GaussianLrd(model) => Ok(model.covariance(lag)),
        }
    }

    /// Analytic variance of one observation.
    pub fn variance(&self) -> Result<f64> {
        self.covariance(0)
    }

    /// Conditional means `E[X_k | origin]` for `k = 1..=n`.
    pub fn conditional_observation_means(
        &self,
        origin: &QuenchedOrigin,
        n: usize,
    ) -> Result<Vec<f64>> {
        match (self, origin) {
            (ProcessSpec::Linear(model), QuenchedOrigin::LinearPast { past_innovations }) => {
                Ok((1..=n as u64)
                    .map(|k| model.conditional_mean_x(past_innovations, k))
                    .collect())
            }
            (ProcessSpec::FiniteMarkov(chain), QuenchedOrigin::MarkovStart { state_index }) => {
                conditional_chain_means(chain, *state_index, n)
            }
            (
                ProcessSpec::ReversibleMarkov(chain),
                QuenchedOrigin::MarkovStart { state_index },
            ) => conditional_chain_means(chain, *state_index, n),
            (ProcessSpec::IteratedMap(map), QuenchedOrigin::MapStart { x0 }) => {
                Ok((1..=n as u64).map(|k| map.conditional_mean_x(*x0, k)).collect())
            }
            (ProcessSpec::GaussianLrd(model), QuenchedOrigin::GaussianPast { past_values }) => {
                model.conditional_observation_means(past_values, n)
            }
            _ => Err(self.mismatch(origin)),
        }
    }

    /// Draw an origin from the stationary law of the past.
    pub fn draw_origin(&self, seed: u64) -> Result<QuenchedOrigin> {
        let mut rng = derive_rng(seed, "draw.origin", 0);
        match self {
            ProcessSpec::Linear(model) => Ok(QuenchedOrigin::LinearPast {
                past_innovations: model.draw_past(&mut rng)?,
            }),
            ProcessSpec::FiniteMarkov(chain) => Ok(QuenchedOrigin::MarkovStart {
                state_index: chain.draw_stationary_state(&mut rng),
            }),
            ProcessSpec::ReversibleMarkov(chain) => Ok(QuenchedOrigin::MarkovStart {
                state_index: chain.draw_stationary_state(&mut rng),
            }),
            ProcessSpec::IteratedMap(map) => Ok(QuenchedOrigin::MapStart {
                x0: map.draw_stationary_state(&mut rng),
            }),
            ProcessSpec::GaussianLrd(model) => Ok(QuenchedOrigin::GaussianPast {
                past_values: model.stationary_sampler(DEFAULT_PAST_WINDOW)?.draw(&mut rng),
            }),
        }
    }

    /// Build a reusable sampler; `origin: None` samples the stationary law.
    pub fn prepare(&self, origin: Option<&QuenchedOrigin>, n: usize) -> Result<PreparedSampler> {
        if n == 0 {
            return Err(Error::invalid("trajectory length must be at least 1"));
        }
        if let Some(origin) = origin {
            self.validate_origin(origin)?;
        }
        let inner = match (self, origin) {
            (ProcessSpec::Linear(model), _) => PreparedInner::Linear {
                model: model.clone(),
                window: model.stationary_window()?,
            },
            (ProcessSpec::FiniteMarkov(chain), _) => {
                PreparedInner::Markov { chain: chain.clone() }
            }
            (ProcessSpec::ReversibleMarkov(chain), _) => {
                PreparedInner::Markov { chain: chain.chain().clone() }
            }
            (ProcessSpec::IteratedMap(map), _) => PreparedInner::Map { map: map.clone() },
            (ProcessSpec::GaussianLrd(model), None) => PreparedInner::Gaussian {
                model: model.clone(),
                sampler: model.stationary_sampler(n)?,
                past: Vec::new(),
            },
            (
                ProcessSpec::GaussianLrd(model),
                Some(QuenchedOrigin::GaussianPast { past_values }),
            ) => PreparedInner::Gaussian {
                model: model.clone(),
                sampler: model.quenched_sampler(past_values, n)?,
                past: past_values.clone(),
            },
            (ProcessSpec::GaussianLrd(_), Some(origin)) => {
                return Err(self.mismatch(origin));
            }
        };
        Ok(PreparedSampler {
            spec_hash: self.spec_hash(),
            origin: origin.cloned(),
            n,
            inner,
        })
    }

    /// Sample `X_1..X_n` under the stationary law.
    pub fn sample_stationary(&self, n: usize, seed: u64) -> Result<Trajectory> {
        Ok(self.prepare(None, n)?.draw(seed).trajectory)
    }

    /// Sample `X_1..X_n` under the quenched law given a frozen past.
    pub fn sample_quenched(
        &self,
        origin: &QuenchedOrigin,
        n: usize,
        seed: u64,
    ) -> Result<Trajectory> {
        Ok(self.prepare(Some(origin), n)?.draw(seed).trajectory)
    }

    fn validate_origin(&self, origin: &QuenchedOrigin) -> Result<()> {
        match (self, origin) {
            (ProcessSpec::Linear(_), QuenchedOrigin::LinearPast { past_innovations }) => {
                if past_innovations.is_empty() {
                    return Err(Error::invalid("past innovation window must be non-empty"));
                }
                if past_innovations.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("past innovations must be finite"));
                }
                Ok(())
            }
            (ProcessSpec::FiniteMarkov(chain), QuenchedOrigin::MarkovStart { state_index }) => {
                validate_state_index(chain, *state_index)
            }
            (
                ProcessSpec::ReversibleMarkov(chain),
                QuenchedOrigin::MarkovStart { state_index },
            ) => validate_state_index(chain, *state_index),
            (ProcessSpec::IteratedMap(_), QuenchedOrigin::MapStart { x0 }) => {
                if !x0.is_finite() {
                    return Err(Error::invalid("map starting point must be finite"));
                }
                Ok(())
            }
            (ProcessSpec::GaussianLrd(_), QuenchedOrigin::GaussianPast { past_values }) => {
                if past_values.is_empty() {
                    return Err(Error::invalid("past state window must be non-empty"));
                }
                if past_values.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("past states must be finite"));
                }
                Ok(())
            }
            _ => Err(self.mismatch(origin)),
        }
    }

    fn mismatch(&self, origin: &QuenchedOrigin) -> Error {
        Error::OriginMismatch(format!(
            "origin kind `{}` cannot start a `{}` process",
            origin.kind_name(),
            self.family_name()
        ))
    }
}

fn conditional_chain_means(chain: &MarkovChain, start: usize, n: usize) -> Result<Vec<f64>> {
    validate_state_index(chain, start)?;
    let mut v = chain.observable().to_vec();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        v = chain.apply(&v);
        out.push(v[start]);
    }
    Ok(out)
}

fn validate_state_index(chain: &MarkovChain, state_index: usize) -> Result<()> {
    if state_index >= chain.state_count() {
        return Err(Error::invalid(format!(
            "state index {state_index} out of range for a {}-state chain",
            chain.state_count()
        )));
    }
    Ok(())
}

/// A sampler frozen to one `(spec, origin, n)`; factorizations and truncation
/// windows are computed once, then each replicate is one cheap draw.
#[derive(Clone, Debug)]
pub struct PreparedSampler {
    spec_hash: String,
    origin: Option<QuenchedOrigin>,
    n: usize,
    inner: PreparedInner,
}

#[derive(Clone, Debug)]
enum PreparedInner {
    Linear { model: LinearProcess, window: u64 },
    Markov { chain: MarkovChain },
    Map { map: IteratedMap },
    Gaussian { model: GaussianLrd, sampler: GaussianSampler, past: Vec<f64> },
}

impl PreparedSampler {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn origin(&self) -> Option<&QuenchedOrigin> {
        self.origin.as_ref()
    }

    /// Draw one replicate from a stream seed; pure in `(self, stream_seed)`.
    pub fn draw(&self, stream_seed: u64) -> DrivenTrajectory {
        let label = if self.origin.is_some() {
            "sample.quenched"
        } else {
            "sample.stationary"
        };
        let mut rng = derive_rng(stream_seed, label, 0);
        let (values, drivers) = match &self.inner {
            PreparedInner::Linear { model, window } => {
                let past: Vec<f64> = match &self.origin {
                    Some(QuenchedOrigin::LinearPast { past_innovations }) => {
                        past_innovations.clone()
                    }
                    _ => (0..*window).map(|_| model.innovation.sample(&mut rng)).collect(),
                };
                let (values, future) = model.simulate(&past, self.n, &mut rng);
                (values, Drivers::Innovations { past, future })
            }
            PreparedInner::Markov { chain } => {
                let start = match &self.origin {
                    Some(QuenchedOrigin::MarkovStart { state_index }) => *state_index,
                    _ => chain.draw_stationary_state(&mut rng),
                };
                let (values, visited) = chain.simulate(start, self.n, &mut rng);
                (values, Drivers::ChainStates { start, visited })
            }
            PreparedInner::Map { map } => {
                let start = match &self.origin {
                    Some(QuenchedOrigin::MapStart { x0 }) => *x0,
                    _ => map.draw_stationary_state(&mut rng),
                };
                let (values, visited) = map.simulate(start, self.n, &mut rng);
                (values, Drivers::MapStates { start, visited })
            }
            PreparedInner::Gaussian { model, sampler, past } => {
                let states = sampler.draw(&mut rng);
                let values = states.iter().map(|&x| model.observe(x)).collect();
                (values, Drivers::GaussianStates { past: past.clone(), states })
            }
        };
        DrivenTrajectory {
            trajectory: Trajectory {
                values,
                origin: self.origin.clone(),
                seed: stream_seed,
                spec_hash: self.spec_hash.clone(),
            },
            drivers,
        }
    }
}
