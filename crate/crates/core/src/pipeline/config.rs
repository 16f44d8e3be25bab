use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calendar::{AgeGroups, Event, GroundTruthSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pc,
    Ges,
    Both,
}

/// Full run configuration. Either `input` (a calendar CSV) or `synthetic`
/// (a ground-truth spec plus `n_persons`) supplies the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub synthetic: Option<GroundTruthSpec>,
    pub n_persons: usize,
    pub alpha: f64,
    pub algorithm: Algorithm,
    pub bic_penalty: f64,
    pub train_frac: f64,
    pub l2: f64,
    pub seed: u64,
    /// Not part of the config hash.
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub extra_pairs: Vec<(Event, Event)>,
    pub age_groups: AgeGroups,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            synthetic: None,
            n_persons: 1000,
            alpha: 0.05,
            algorithm: Algorithm::Both,
            bic_penalty: 1.0,
            train_frac: 0.6,
            l2: 0.1,
            seed: 0,
            out_dir: None,
            extra_pairs: vec![(Event::Wedding, Event::Divorce)],
            age_groups: AgeGroups::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))
    }

    /// Read a config file; a relative `input` path is taken relative to the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let (Some(input), Some(dir)) = (&cfg.input, path.parent()) {
            if input.is_relative() {
                cfg.input = Some(dir.join(input));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.input, &self.synthetic) {
            (None, None) => return Err(Error::config("config needs either input or synthetic")),
            (Some(_), Some(_)) => return Err(Error::config("config has both input and synthetic")),
            (None, Some(spec)) => {
                if self.n_persons == 0 {
                    return Err(Error::config("n_persons must be at least 1"));
                }
                spec.validate()?;
            }
            (Some(_), None) => {}
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha {} outside (0,1)", self.alpha)));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::config(format!(
                "train_frac {} outside (0,1)",
                self.train_frac
            )));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::config(format!(
                "l2 {} must be non-negative",
                self.l2
            )));
        }
        if !(self.bic_penalty > 0.0 && self.bic_penalty.is_finite()) {
            return Err(Error::config(format!(
                "bic_penalty {} must be positive",
                self.bic_penalty
            )));
        }
        if let Some((a, _)) = self.extra_pairs.iter().find(|(a, b)| a == b) {
            return Err(Error::config(format!(
                "extra pair {a} -> {a} has cause equal to effect"
            )));
        }
        AgeGroups::new(self.age_groups.0.clone())?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (output directory excluded).
    pub fn hash(&self) -> Result<String> {
        let text = serde_json::to_string(self)?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }
}
