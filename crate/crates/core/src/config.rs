//! Run configuration read from a TOML file.
//!
//! Every section is optional. A top-level `seed` (or `--seed`) is copied into
//! each stage whose own `seed` is not set in the file. Without either, every
//! stage uses 42.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::GenConfig;
use crate::error::{Error, Result};
use crate::eval::{PairConfig, RankConfig};
use crate::features::DEFAULT_GROWTH_WINDOW;
use crate::models::ModelParams;
use crate::topics::LdaConfig;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Root for every default file below.
    pub work_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self { work_dir: PathBuf::from("work") }
    }
}

impl Paths {
    pub fn corpus(&self) -> PathBuf {
        self.work_dir.join("corpus")
    }
    pub fn ingested(&self) -> PathBuf {
        self.work_dir.join("ingested")
    }
    pub fn links(&self) -> PathBuf {
        self.work_dir.join("links.csv")
    }
    pub fn topics(&self) -> PathBuf {
        self.work_dir.join("topics.lda")
    }
    pub fn features(&self) -> PathBuf {
        self.work_dir.join("features.csv")
    }
    pub fn model(&self) -> PathBuf {
        self.work_dir.join("model.txt")
    }
    pub fn reports(&self) -> PathBuf {
        self.work_dir.join("reports")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    /// Share of the campaign after launch used for the growth rate.
    pub growth_window: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self { growth_window: DEFAULT_GROWTH_WINDOW }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalParams {
    /// Model kind and feature set used by `train`.
    pub model: String,
    pub features: String,
    pub folds: usize,
    /// Negatives per positive in test folds; 1 is balanced, 4 is 20/80.
    pub ratios: Vec<f64>,
    /// Also cross-validate every subset of the six behavioural features.
    pub ablation: bool,
    pub seed: u64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            model: "svm-rbf".into(),
            features: "all".into(),
            folds: 5,
            ratios: vec![1.0, 4.0],
            ablation: false,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub gen: GenConfig,
    pub lda: LdaConfig,
    pub pairs: PairConfig,
    pub features: FeatureParams,
    pub model: ModelParams,
    pub eval: EvalParams,
    pub rank: RankConfig,
}


const SEEDED: [&str; 6] = ["gen", "lda", "pairs", "model", "eval", "rank"];

impl RunConfig {
    /// Parse TOML text. Unknown keys are errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut cfg: RunConfig = table.clone().try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let explicit: Vec<&str> = SEEDED
            .iter()
            .copied()
            .filter(|s| table.get(*s).and_then(|v| v.get("seed")).is_some())
            .collect();
        if let Some(seed) = cfg.seed {
            cfg.apply_seed(seed, &explicit);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput("config file", path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Set every stage seed not listed in `keep`.
    pub fn apply_seed(&mut self, seed: u64, keep: &[&str]) {
        self.seed = Some(seed);
        let set = |name: &str| !keep.contains(&name);
        if set("gen") {
            self.gen.seed = seed;
        }
        if set("lda") {
            self.lda.seed = seed;
        }
        if set("pairs") {
            self.pairs.seed = seed;
        }
        if set("model") {
            self.model.seed = seed;
        }
        if set("eval") {
            self.eval.seed = seed;
        }
        if set("rank") {
            self.rank.seed = seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gen.validate()?;
        if self.eval.folds < 2 {
            return Err(Error::Config("eval.folds must be at least 2".into()));
        }
        if self.eval.ratios.iter().any(|r| !(*r >= 1.0)) {
            return Err(Error::Config("eval.ratios must be at least 1".into()));
        }
        if !(self.features.growth_window > 0.0 && self.features.growth_window <= 1.0) {
            return Err(Error::Config("features.growth_window must lie in (0, 1]".into()));
        }
        if self.lda.topics < 2 {
            return Err(Error::Config("lda.topics must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.gen.seed, DEFAULT_SEED);
        assert_eq!(cfg.rank.seed, DEFAULT_SEED);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        assert!(RunConfig::from_toml("[model]\ncc = 2.0").is_err());
        assert!(RunConfig::from_toml("[gen.effects]\ntaste2 = 1.0").is_err());
    }

    #[test]
    fn global_seed_fills_unset_stage_seeds() {
        let cfg = RunConfig::from_toml("seed = 7\n[lda]\nseed = 3\n").unwrap();
        assert_eq!(cfg.gen.seed, 7);
        assert_eq!(cfg.pairs.seed, 7);
        assert_eq!(cfg.lda.seed, 3);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_toml("[eval]\nfolds = 1").is_err());
        assert!(RunConfig::from_toml("[gen]\nsuccess_rate = 2.0").is_err());
    }
}
