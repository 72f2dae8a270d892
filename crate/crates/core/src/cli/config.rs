//! Run configuration file: the model config plus dataset and output paths.
//! Relative paths resolve against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{binarize, read_idx_file, BinarizedDataset};
use crate::error::{Error, Result};
use crate::vae::VaeConfig;

pub const SEED_ENV: &str = "GMVAE_SEED";

fn default_threshold() -> f64 {
    0.5
}

fn default_every() -> usize {
    10
}

fn default_iwae_k() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub train_images: PathBuf,
    pub test_images: PathBuf,
    /// Examples kept from each file (seeded subset); all when absent.
    #[serde(default)]
    pub train_size: Option<usize>,
    #[serde(default)]
    pub test_size: Option<usize>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub subset_seed: u64,
    /// Hex SHA-256 of the raw files, checked when present.
    #[serde(default)]
    pub train_sha256: Option<String>,
    #[serde(default)]
    pub test_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub model: VaeConfig,
    pub data: DataSection,
    pub output_dir: PathBuf,
    #[serde(default = "default_every")]
    pub checkpoint_every: usize,
    #[serde(default = "default_iwae_k")]
    pub iwae_k: usize,
}

impl RunConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfigFile =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.model.validate()?;
        if !(cfg.data.threshold > 0.0 && cfg.data.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold must lie in (0, 1), got {}",
                cfg.data.threshold
            )));
        }
        Ok(cfg)
    }

    /// Reads the file, resolves relative paths and applies the seed override.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfigFile::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.data.train_images,
            &mut cfg.data.test_images,
            &mut cfg.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())?;
        Ok(cfg)
    }

    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.model.seed = v.trim().parse().map_err(|_| {
                Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))
            })?;
        }
        Ok(())
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.output_dir.join("metrics.csv")
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.output_dir.join("checkpoints")
    }

    pub fn load_train(&self) -> Result<BinarizedDataset> {
        load_split(
            &self.data.train_images,
            self.data.train_sha256.as_deref(),
            self.data.train_size,
            &self.data,
        )
    }

    pub fn load_test(&self) -> Result<BinarizedDataset> {
        load_split(
            &self.data.test_images,
            self.data.test_sha256.as_deref(),
            self.data.test_size,
            &self.data,
        )
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn load_split(
    path: &Path,
    sha: Option<&str>,
    size: Option<usize>,
    d: &DataSection,
) -> Result<BinarizedDataset> {
    if let Some(want) = sha {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let got = sha256_hex(&bytes);
        if !got.eq_ignore_ascii_case(want.trim()) {
            return Err(Error::Format(format!(
                "{}: sha256 {got} does not match {want}",
                path.display()
            )));
        }
    }
    let full = binarize(&read_idx_file(path)?, d.threshold)?;
    match size {
        Some(n) => full.subset(n, d.subset_seed),
        None => Ok(full),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{
        "model": {"n_factors": 2, "curvature": 1.0, "epochs": 1, "seed": 3},
        "data": {"train_images": "a.gz", "test_images": "b.gz"},
        "output_dir": "out"
    }"#;

    #[test]
    fn defaults_and_unknown_keys() {
        let c = RunConfigFile::from_json(MIN).unwrap();
        assert_eq!(c.model.hidden, 200);
        assert_eq!(
            (c.iwae_k, c.checkpoint_every, c.data.threshold),
            (100, 10, 0.5)
        );
        let extra = MIN.replacen("\"output_dir\"", "\"bogus\": 1, \"output_dir\"", 1);
        assert!(matches!(
            RunConfigFile::from_json(&extra),
            Err(Error::Config(_))
        ));
        let nested = MIN.replacen("\"seed\": 3", "\"seed\": 3, \"width\": 9", 1);
        assert!(RunConfigFile::from_json(&nested).is_err());
        let missing = MIN.replacen("\"output_dir\": \"out\"", "\"iwae_k\": 5", 1);
        assert!(RunConfigFile::from_json(&missing).is_err());
    }

    #[test]
    fn seed_override() {
        let mut c = RunConfigFile::from_json(MIN).unwrap();
        c.apply_seed_override(Some("42")).unwrap();
        assert_eq!(c.model.seed, 42);
        assert!(c.apply_seed_override(Some("x")).is_err());
        c.apply_seed_override(None).unwrap();
        assert_eq!(c.model.seed, 42);
    }

    #[test]
    fn sha_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
