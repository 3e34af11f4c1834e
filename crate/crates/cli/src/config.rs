//! The pipeline configuration document (TOML). Every section and key is
//! optional; unknown keys are rejected and values are range-checked on load.

use std::fs;
use std::path::{Path, PathBuf};

use notewatch::assertion::DEFAULT_WINDOW;
use notewatch::classifier::TrainConfig;
use notewatch::corpus::{SplitSpec, SynthConfig};
use notewatch::embeddings::EmbeddingConfig;
use notewatch::features::{DEFAULT_MAX_DF_RATIO, DEFAULT_MIN_DF};
use notewatch::lexicon::{load_lexicon, Lexicon, LexiconSet};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub lexicon: LexiconSection,
    pub assertion: AssertionSection,
    pub embeddings: EmbeddingConfig,
    pub expansion: ExpansionSection,
    pub features: FeatureSection,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub synth: SynthSection,
    pub classify: ClassifySection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconSection {
    /// Directory with the six list files; the built-in starter lexicon when absent.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssertionSection {
    pub window: usize,
}

impl Default for AssertionSection {
    fn default() -> Self {
        AssertionSection { window: DEFAULT_WINDOW }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionSection {
    pub target: String,
    pub k: usize,
    pub min_cosine: f64,
}

impl Default for ExpansionSection {
    fn default() -> Self {
        ExpansionSection {
            target: "antibiotics".into(),
            k: 20,
            min_cosine: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub min_df: u32,
    pub max_df_ratio: f64,
}

impl Default for FeatureSection {
    fn default() -> Self {
        FeatureSection {
            min_df: DEFAULT_MIN_DF,
            max_df_ratio: DEFAULT_MAX_DF_RATIO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub size: usize,
    pub positive_rate: f64,
    pub speculated_rate: f64,
    pub seed: u64,
    pub variant_rate: f64,
    pub oov_misspelling_rate: f64,
    pub negated_rate: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let c = SynthConfig::new(20_000, 0.29, 0.005, 7);
        SynthSection {
            size: c.size,
            positive_rate: c.positive_rate,
            speculated_rate: c.speculated_rate,
            seed: c.seed,
            variant_rate: c.variant_rate,
            oov_misspelling_rate: c.oov_misspelling_rate,
            negated_rate: c.negated_rate,
        }
    }
}

impl SynthSection {
    pub fn to_config(&self) -> SynthConfig {
        SynthConfig {
            variant_rate: self.variant_rate,
            oov_misspelling_rate: self.oov_misspelling_rate,
            negated_rate: self.negated_rate,
            ..SynthConfig::new(self.size, self.positive_rate, self.speculated_rate, self.seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    pub workers: usize,
    pub batch_size: usize,
    /// Vocabulary fingerprint the model must carry.
    pub expected_vocab_hash: Option<String>,
}

impl Default for ClassifySection {
    fn default() -> Self {
        ClassifySection {
            workers: 1,
            batch_size: 1024,
            expected_vocab_hash: None,
        }
    }
}

fn invalid(message: String) -> Failure {
    Failure::new("config", message)
}

impl PipelineConfig {
    /// Reads `path`, or the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let config: PipelineConfig =
            toml::from_str(&text).map_err(|e| invalid(format!("{}: {}", path.display(), e.message())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let core = |r: notewatch::Result<()>| r.map_err(|e| invalid(e.to_string()));
        core(self.embeddings.validate())?;
        core(self.train.validate())?;
        core(self.split.validate())?;
        if self.assertion.window == 0 {
            return Err(invalid("assertion.window must be >= 1".into()));
        }
        self.expansion_target()?;
        if self.expansion.k == 0 {
            return Err(invalid("expansion.k must be >= 1".into()));
        }
        if !(-1.0..=1.0).contains(&self.expansion.min_cosine) {
            return Err(invalid(format!(
                "expansion.min_cosine must lie in [-1, 1], got {}",
                self.expansion.min_cosine
            )));
        }
        if self.features.min_df == 0 {
            return Err(invalid("features.min_df must be >= 1".into()));
        }
        if !(self.features.max_df_ratio > 0.0 && self.features.max_df_ratio <= 1.0) {
            return Err(invalid(format!(
                "features.max_df_ratio must lie in (0, 1], got {}",
                self.features.max_df_ratio
            )));
        }
        if self.synth.size == 0 {
            return Err(invalid("synth.size must be >= 1".into()));
        }
        for (name, r) in [
            ("synth.positive_rate", self.synth.positive_rate),
            ("synth.speculated_rate", self.synth.speculated_rate),
            ("synth.variant_rate", self.synth.variant_rate),
            ("synth.oov_misspelling_rate", self.synth.oov_misspelling_rate),
            ("synth.negated_rate", self.synth.negated_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {r}")));
            }
        }
        if self.synth.positive_rate + self.synth.speculated_rate > 1.0 + 1e-12 {
            return Err(invalid("synth.positive_rate + synth.speculated_rate must not exceed 1".into()));
        }
        if self.classify.workers == 0 || self.classify.batch_size == 0 {
            return Err(invalid("classify.workers and classify.batch_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn expansion_target(&self) -> Result<LexiconSet, Failure> {
        self.expansion
            .target
            .parse()
            .map_err(|e: notewatch::Error| invalid(format!("expansion.target: {e}")))
    }

    pub fn lexicon(&self) -> Result<Lexicon, Failure> {
        match &self.lexicon.dir {
            Some(dir) => Ok(load_lexicon(dir)?),
            None => Ok(Lexicon::starter()),
        }
    }
}
