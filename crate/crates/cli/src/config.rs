//! Experiment configuration files.

use std::path::{Path, PathBuf};

use boundcut::data::ModelSpec;
use boundcut::density::BandwidthSpec;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Convergence experiments. The short identifiers `thm2`, `lemma6` and
/// `thm6` are accepted for the first three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Soft nearest-neighbour risk against the pairwise H bound.
    #[serde(alias = "thm2")]
    #[value(alias = "thm2")]
    NnGap,
    /// Rescaled G(½,½) cut against the density mass on the Bayes boundary.
    #[serde(alias = "lemma6")]
    #[value(alias = "lemma6")]
    BoundaryCut,
    /// Plug-in partition error over h·(boundary mass).
    #[serde(alias = "thm6")]
    #[value(alias = "thm6")]
    PluginCeiling,
    /// Diffusion-map recovery of a nonuniformly sampled circle.
    Diffusion,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::NnGap => "nn-gap",
            Experiment::BoundaryCut => "boundary-cut",
            Experiment::PluginCeiling => "plugin-ceiling",
            Experiment::Diffusion => "diffusion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    SoftNn,
    NearestNeighbor,
    PlugIn,
    PlugInSoft,
    Bayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskMethodArg {
    #[default]
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Report JSON; `--out` takes precedence.
    pub report: Option<PathBuf>,
    /// Optional CSV trace of the records.
    pub trace_csv: Option<PathBuf>,
}

/// Everything `converge` and `risk` read from a config file. Keys that a
/// given command does not use are accepted but ignored; unknown keys fail.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub bandwidth: BandwidthSpec,
    #[serde(default)]
    pub n_list: Vec<usize>,
    /// Defaults to the global `--seed`.
    pub seeds: Option<Vec<u64>>,
    /// Monte Carlo draws per risk estimate.
    pub n_eval: Option<usize>,
    /// Circle density amplitude a in 1 + a·cos θ.
    pub amplitude: Option<f64>,
    /// Density-normalization exponents of the diffusion affinities.
    pub alphas: Option<Vec<f64>>,
    pub classifier: Option<ClassifierKind>,
    /// Training sample size for `risk`.
    pub n: Option<usize>,
    #[serde(default)]
    pub method: RiskMethodArg,
    pub resolution: Option<usize>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A parsed config with the SHA-256 of its bytes.
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    if let Some(seeds) = &config.seeds {
        if seeds.is_empty() {
            return Err(CliError::Usage("seeds must not be empty".into()));
        }
    }
    Ok(LoadedConfig {
        config,
        sha256: sha256_hex(&bytes),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ExperimentConfig {
    pub fn model(&self) -> Result<&ModelSpec, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Usage("config is missing the model".into()))
    }

    pub fn seeds_or(&self, seed: u64) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| vec![seed])
    }
}
