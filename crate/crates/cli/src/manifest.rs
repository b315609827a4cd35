//! Run manifests: the provenance record of every artifact.
//!
//! A manifest names the command, the config file, the resolved seed, every
//! applied override, and each output file with its SHA-256 digest. Running
//! the recorded command again with the recorded config and seed reproduces
//! every listed output byte for byte; only the wall-clock entry varies.

use serde::{Deserialize, Serialize};

/// Format version of the emitted artifacts.
pub const ARTIFACT_VERSION: u32 = 1;

/// One output file with its content digest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// The provenance record written alongside every run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: u32,
    pub command: String,
    pub config_path: String,
    pub resolved_seed: u64,
    /// Flag overrides applied on top of the config, as `name=value` pairs.
    #[serde(default)]
    pub overrides: Vec<String>,
    pub outputs: Vec<OutputRecord>,
    /// Failed checks; the process exits nonzero when any are present.
    #[serde(default)]
    pub failures: Vec<String>,
    pub wall_clock_seconds: f64,
}
