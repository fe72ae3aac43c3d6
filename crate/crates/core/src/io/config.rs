use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::SeasonStart;
use crate::error::{Error, Result};
use crate::mcmc::ChainConfig;
use crate::model::PriorConfig;
use crate::simgen::SimDesign;

/// How performance files are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataOptions {
    pub season_start: SeasonStart,
    pub min_performances: usize,
    pub confounders: Vec<String>,
}

impl Default for DataOptions {
    fn default() -> Self {
        Self {
            season_start: SeasonStart::default(),
            min_performances: 1,
            confounders: Vec::new(),
        }
    }
}

/// Everything a run can be configured with, one TOML table per part:
///
/// ```toml
/// [prior]
/// max_order = 4
/// direction = "negative"
///
/// [chain]
/// iterations = 20000
/// burn_in = 10000
///
/// [data]
/// season_start = "09-01"
/// confounders = ["pool_length"]
///
/// [sim]
/// num_athletes = 200
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prior: PriorConfig,
    pub chain: ChainConfig,
    pub data: DataOptions,
    pub sim: SimDesign,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(hex(&Sha256::digest(serde_json::to_vec(self)?)))
    }

    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        self.chain.validate()?;
        self.sim.validate()
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance of a fit: with the same inputs and build it reproduces the
/// archive byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub inputs: Vec<PathBuf>,
    /// SHA-256 of each input file, in the same order.
    pub input_hashes: Vec<String>,
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: u64,
    pub software_version: String,
    pub started: String,
    pub finished: String,
    pub archive: PathBuf,
    pub archive_sha256: String,
}

impl RunManifest {
    pub fn new(inputs: &[PathBuf], config: &RunConfig) -> Result<Self> {
        let input_hashes = inputs
            .iter()
            .map(|p| Ok(hex(&Sha256::digest(std::fs::read(p)?))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            inputs: inputs.to_vec(),
            input_hashes,
            config: config.clone(),
            config_hash: config.hash()?,
            seed: config.chain.seed,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            started: now(),
            finished: String::new(),
            archive: PathBuf::new(),
            archive_sha256: String::new(),
        })
    }

    /// Record the finished archive.
    pub fn finish(&mut self, archive: &Path) -> Result<()> {
        self.archive = archive.to_path_buf();
        self.archive_sha256 = hex(&Sha256::digest(std::fs::read(archive)?));
        self.finished = now();
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
