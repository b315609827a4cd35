//! Run configuration: one TOML document drives every command.
//!
//! A config names the process under study, the single run seed, and one
//! section per command it supports. Every random stream in a run derives
//! from the one seed by labeled hashing, so a config plus a seed reproduces
//! all artifacts byte for byte. Command-line flags may override scalar
//! choices (seed, frequency selection); each applied override is recorded in
//! the run manifest.

use serde::{Deserialize, Serialize};

use qclt::conditions::{FunctionalObservable, MapMonteCarlo, ProjectionMonteCarlo};
use qclt::fourier::FrequencyGrid;
use qclt::models::{ProcessSpec, QuenchedOrigin};
use qclt::quenched::{CenteringMode, Tolerances};
use qclt::seeding::derive_seed;
use qclt::{Error, Result};

/// A full run description, parsed from one TOML file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// The stationary process every command operates on.
    pub process: ProcessSpec,
    /// Root seed; all stream seeds derive from it by labeled hashing.
    pub seed: u64,
    pub simulate: Option<SimulateSection>,
    pub periodogram: Option<PeriodogramSection>,
    pub quenched: Option<QuenchedSection>,
    pub conditions: Option<ConditionsSection>,
    pub martingale: Option<MartingaleSection>,
}

impl RunConfig {
    /// Replace the frequency selection of every section that has one.
    pub fn override_frequencies(&mut self, selection: &FrequencySpec) -> Result<()> {
        let points = || selection.resolve_points(self.seed);
        if let Some(section) = &mut self.periodogram {
            section.frequencies = selection.clone();
        }
        if let Some(section) = &mut self.quenched {
            section.frequencies = selection.clone();
        }
        if let Some(section) = &mut self.conditions {
            section.frequencies = points()?;
        }
        if let Some(section) = &mut self.martingale {
            section.frequencies = points()?;
        }
        Ok(())
    }
}

/// Frequency selection, resolvable to a concrete grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FrequencySpec {
    /// The listed points, each in the open interval (0, 2 pi).
    Explicit { points: Vec<f64> },
    /// `count` points drawn uniformly from (0, 2 pi), seeded from the run.
    UniformRandom { count: usize },
    /// The Fourier frequencies `2 pi j / n` in (0, 2 pi).
    Fourier { n: usize },
}

impl FrequencySpec {
    /// Parse the `--frequencies` flag: `LIST | random:K | fourier:N`.
    pub fn parse_flag(text: &str) -> Result<Self> {
        if let Some(count) = text.strip_prefix("random:") {
            let count = count
                .parse()
                .map_err(|_| Error::invalid(format!("bad random frequency count {count:?}")))?;
            return Ok(FrequencySpec::UniformRandom { count });
        }
        if let Some(n) = text.strip_prefix("fourier:") {
            let n = n
                .parse()
                .map_err(|_| Error::invalid(format!("bad Fourier grid length {n:?}")))?;
            return Ok(FrequencySpec::Fourier { n });
        }
        let points = text
            .split(',')
            .map(|part| {
                part.trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad frequency {part:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(FrequencySpec::Explicit { points })
    }

    /// Manifest record of the selection, in the flag grammar.
    pub fn describe(&self) -> String {
        match self {
            FrequencySpec::Explicit { points } => points
                .iter()
                .map(|t| format!("{t}"))
                .collect::<Vec<_>>()
                .join(","),
            FrequencySpec::UniformRandom { count } => format!("random:{count}"),
            FrequencySpec::Fourier { n } => format!("fourier:{n}"),
        }
    }

    /// Build the concrete grid, deriving the draw seed from the run seed.
    pub fn resolve(&self, seed: u64) -> Result<FrequencyGrid> {
        match self {
            FrequencySpec::Explicit { points } => FrequencyGrid::explicit(points.clone()),
            FrequencySpec::UniformRandom { count } => {
                FrequencyGrid::uniform_random(*count, derive_seed(seed, "cli.frequencies", 0))
            }
            FrequencySpec::Fourier { n } => FrequencyGrid::fourier_frequencies(*n),
        }
    }

    /// The grid's points, for commands that take plain frequency lists.
    pub fn resolve_points(&self, seed: u64) -> Result<Vec<f64>> {
        Ok(self.resolve(seed)?.points().to_vec())
    }
}

fn default_frequencies() -> Vec<f64> {
    vec![1.0]
}

/// `simulate`: sample one trajectory.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Trajectory length.
    pub n: usize,
    /// Frozen past; a stationary draw when absent.
    pub origin: Option<QuenchedOrigin>,
}

/// `periodogram`: Fourier statistics of one trajectory over a grid.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodogramSection {
    pub n: usize,
    pub frequencies: FrequencySpec,
    /// Frozen past; a stationary draw when absent.
    pub origin: Option<QuenchedOrigin>,
}

fn default_centering() -> CenteringMode {
    CenteringMode::None
}

/// `quenched`: replicated futures from one frozen past.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchedSection {
    pub n: usize,
    pub replicates: u64,
    pub frequencies: FrequencySpec,
    /// Frozen past; drawn from the stationary law of the past when absent.
    pub origin: Option<QuenchedOrigin>,
    #[serde(default = "default_centering")]
    pub centering: CenteringMode,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub allow_excluded: bool,
    /// Also evaluate the conditional-mean decay on this ladder of lengths.
    pub decay_ladder: Option<Vec<usize>>,
}

/// `conditions`: evaluate every sufficient condition that applies.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsSection {
    /// Frequencies at which the rotated conditional-mean series is checked.
    #[serde(default = "default_frequencies")]
    pub frequencies: Vec<f64>,
    /// Monte Carlo budget for the iterated-map checks.
    #[serde(default)]
    pub map_monte_carlo: Option<MapMcSection>,
    /// Run the function-of-linear-process check with this observable.
    #[serde(default)]
    pub functional: Option<FunctionalSection>,
    /// Lengths of the exact variance-divergence table emitted for the
    /// long-memory family, which the series conditions do not cover.
    #[serde(default = "default_divergence_ladder")]
    pub divergence_ladder: Vec<usize>,
}

fn default_divergence_ladder() -> Vec<usize> {
    vec![256, 1024, 4096]
}

impl Default for ConditionsSection {
    /// Matches the serde field defaults, so a missing `[conditions]` section
    /// behaves exactly like an empty one.
    fn default() -> Self {
        ConditionsSection {
            frequencies: default_frequencies(),
            map_monte_carlo: None,
            functional: None,
            divergence_ladder: default_divergence_ladder(),
        }
    }
}

/// Monte Carlo budget for the iterated-map condition checks; unset fields
/// keep the library defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapMcSection {
    pub pairs: Option<usize>,
    pub grid_points: Option<usize>,
    pub min_scale: Option<f64>,
    pub decay_replicates: Option<usize>,
    pub decay_steps: Option<usize>,
}

impl MapMcSection {
    pub fn build(&self, seed: u64) -> MapMonteCarlo {
        let defaults = MapMonteCarlo::default();
        MapMonteCarlo {
            pairs: self.pairs.unwrap_or(defaults.pairs),
            grid_points: self.grid_points.unwrap_or(defaults.grid_points),
            min_scale: self.min_scale.unwrap_or(defaults.min_scale),
            decay_replicates: self.decay_replicates.unwrap_or(defaults.decay_replicates),
            decay_steps: self.decay_steps.unwrap_or(defaults.decay_steps),
            seed: derive_seed(seed, "cli.conditions.map", 0),
        }
    }
}

/// Observable of a function-of-linear-process check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    Identity,
    CenteredSquare,
}

impl ObservableKind {
    pub fn to_core(self) -> FunctionalObservable {
        match self {
            ObservableKind::Identity => FunctionalObservable::Identity,
            ObservableKind::CenteredSquare => FunctionalObservable::CenteredSquare,
        }
    }
}

/// Function-of-linear-process check configuration.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSection {
    pub observable: ObservableKind,
    /// Projection-estimate Monte Carlo diagnostics; skipped when absent.
    #[serde(default)]
    pub projection: Option<ProjectionMcSection>,
}

/// Monte Carlo budget for projection-norm diagnostics; unset fields keep
/// the library defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionMcSection {
    pub outer: Option<usize>,
    pub inner: Option<usize>,
    pub lags: Option<Vec<u64>>,
}

impl ProjectionMcSection {
    pub fn build(&self, seed: u64) -> ProjectionMonteCarlo {
        let defaults = ProjectionMonteCarlo::default();
        ProjectionMonteCarlo {
            outer: self.outer.unwrap_or(defaults.outer),
            inner: self.inner.unwrap_or(defaults.inner),
            lags: self.lags.clone().unwrap_or(defaults.lags),
            seed: derive_seed(seed, "cli.conditions.projection", 0),
        }
    }
}

/// `martingale`: approximation gap curves and telescoping residuals.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleSection {
    #[serde(default = "default_frequencies")]
    pub frequencies: Vec<f64>,
    /// Trajectory lengths of the gap curve, strictly increasing.
    pub ladder: Vec<usize>,
    pub replicates: u64,
    /// Frozen past; drawn from the stationary law of the past when absent.
    pub origin: Option<QuenchedOrigin>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_grammar_covers_all_three_forms() {
        assert_eq!(
            FrequencySpec::parse_flag("0.7, 1.0,2").unwrap(),
            FrequencySpec::Explicit { points: vec![0.7, 1.0, 2.0] }
        );
        assert_eq!(
            FrequencySpec::parse_flag("random:16").unwrap(),
            FrequencySpec::UniformRandom { count: 16 }
        );
        assert_eq!(
            FrequencySpec::parse_flag("fourier:64").unwrap(),
            FrequencySpec::Fourier { n: 64 }
        );
        assert!(FrequencySpec::parse_flag("random:x").is_err());
        assert!(FrequencySpec::parse_flag("0.7;1.0").is_err());
    }

    #[test]
    fn random_selection_is_seed_stable() {
        let spec = FrequencySpec::UniformRandom { count: 8 };
        let a = spec.resolve_points(41).unwrap();
        let b = spec.resolve_points(41).unwrap();
        assert_eq!(a, b, "same run seed, same grid");
        let c = spec.resolve_points(42).unwrap();
        assert_ne!(a, c, "the grid seed derives from the run seed");
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let text = r#"
            seed = 7

            [process]
            family = "linear"

            [process.coeffs]
            prefix = [1.0]

            [process.innovation]
            kind = "normal"
            variance = 1.0

            [quenched]
            n = 64
            replicates = 100

            [quenched.frequencies]
            kind = "explicit"
            points = [1.0]
        "#;
        let config: RunConfig = toml::from_str(text).unwrap();
        let quenched = config.quenched.unwrap();
        assert_eq!(quenched.centering, CenteringMode::None);
        assert!(!quenched.allow_excluded);
        assert_eq!(quenched.tolerances, Tolerances::default());
        assert!(config.conditions.is_none());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"
            seed = 7
            typo = 1

            [process]
            family = "linear"

            [process.coeffs]
            prefix = [1.0]

            [process.innovation]
            kind = "normal"
            variance = 1.0
        "#;
        let err = toml::from_str::<RunConfig>(text).unwrap_err();
        assert!(err.to_string().contains("typo"), "{err}");
    }

    #[test]
    fn overrides_reach_every_section_with_frequencies() {
        let text = r#"
            seed = 7

            [process]
            family = "linear"

            [process.coeffs]
            prefix = [1.0]

            [process.innovation]
            kind = "normal"
            variance = 1.0

            [conditions]

            [martingale]
            ladder = [64, 256]
            replicates = 100
        "#;
        let mut config: RunConfig = toml::from_str(text).unwrap();
        config
            .override_frequencies(&FrequencySpec::Explicit { points: vec![0.5, 2.5] })
            .unwrap();
        assert_eq!(config.conditions.unwrap().frequencies, vec![0.5, 2.5]);
        assert_eq!(config.martingale.unwrap().frequencies, vec![0.5, 2.5]);
    }
}
