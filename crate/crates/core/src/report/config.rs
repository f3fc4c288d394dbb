//! Run configuration: a TOML file with `[train]`, `[cv]`, `[canonical]` and
//! `[sweep]` sections. Every field has a default, so an empty file is valid.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::models::TrainConfig;

use super::ReportError;

pub const DEFAULT_DATA_PATH: &str = "data/human_responses.csv";
pub const DEFAULT_OUT_DIR: &str = "runs/latest";
/// Overrides the output directory of every command.
pub const OUT_ENV: &str = "DUALPATH_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub k: usize,
    /// Seed of the shared fold plan.
    pub fold_seed: u64,
    pub resamples: usize,
    pub bootstrap_seed: u64,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection {
            k: 5,
            fold_seed: 42,
            resamples: 5000,
            bootstrap_seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CanonicalSection {
    /// Drives both the 80:20 split and the model initialization.
    pub seed: u64,
    pub train_fraction: f64,
}

impl Default for CanonicalSection {
    fn default() -> Self {
        CanonicalSection {
            seed: 42,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub seeds: Vec<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: PathBuf,
    pub out: PathBuf,
    pub train: TrainConfig,
    pub cv: CvSection,
    pub canonical: CanonicalSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DEFAULT_DATA_PATH.into(),
            out: DEFAULT_OUT_DIR.into(),
            train: TrainConfig::default(),
            cv: CvSection::default(),
            canonical: CanonicalSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ReportError> {
        toml::from_str(text).map_err(|e| ReportError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, ReportError> {
        toml::to_string(self).map_err(|e| ReportError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReportError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Rejects values no command can run with.
    pub fn validate(&self) -> Result<(), ReportError> {
        self.train
            .validate()
            .map_err(|e| ReportError::Config(e.to_string()))?;
        if self.cv.k < 2 {
            return Err(ReportError::Config(format!("k must be >= 2, got {}", self.cv.k)));
        }
        if self.cv.resamples == 0 {
            return Err(ReportError::Config("resamples must be >= 1".into()));
        }
        let f = self.canonical.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(ReportError::Config(format!(
                "train_fraction must be in (0, 1), got {f}"
            )));
        }
        if self.sweep.seeds.is_empty() {
            return Err(ReportError::Config("sweep needs at least one seed".into()));
        }
        Ok(())
    }

    /// SHA-256 over the configuration (paths blanked) and the data file
    /// contents. Runs with equal hashes produce equal tables.
    pub fn hash(&self, data_bytes: &[u8]) -> Result<String, ReportError> {
        let mut blank = self.clone();
        blank.data = PathBuf::new();
        blank.out = PathBuf::new();
        let mut h = Sha256::new();
        h.update(blank.to_toml()?.as_bytes());
        h.update(b"\ndata_sha256 = ");
        h.update(hex::encode(Sha256::digest(data_bytes)).as_bytes());
        Ok(hex::encode(h.finalize()))
    }
}
