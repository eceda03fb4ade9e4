//! Experiment configuration, read from TOML and adjusted by flags.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use emoxling_core::features::{FeatureKind, FeatureSettings};
use emoxling_core::models::{MlpConfig, SvmConfig};
use emoxling_core::projection::ProjectionConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Cross-lingual training strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Approach {
    /// Source-language training set over multilingual sentence embeddings.
    M,
    /// Training set machine-translated into the target language.
    T,
    /// Target side of a parallel corpus labeled by projection.
    P,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::M => "M",
            Approach::T => "T",
            Approach::P => "P",
        })
    }
}

impl FromStr for Approach {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M" => Ok(Approach::M),
            "T" => Ok(Approach::T),
            "P" => Ok(Approach::P),
            other => Err(CliError::ConfigInvalid(format!("unknown approach `{other}`"))),
        }
    }
}

/// `"M,T"` or `""`.
pub fn parse_approaches(s: &str) -> Result<BTreeSet<Approach>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Svm,
    Mlp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
        })
    }
}

impl FromStr for ModelKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svm" => Ok(ModelKind::Svm),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(CliError::ConfigInvalid(format!("unknown model `{other}`"))),
        }
    }
}

pub fn parse_features(s: &str) -> Result<Vec<FeatureKind>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|e| CliError::ConfigInvalid(format!("{e}"))))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    /// Target-language training set.
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Translated training set for approach T.
    pub translated: Option<PathBuf>,
    /// Source-language training set for approach M, and for training the
    /// source-side tagger of approach P when no predictions are supplied.
    pub source_train: Option<PathBuf>,
    /// Parallel corpus for approach P.
    pub parallel: Option<PathBuf>,
    /// External source-side predictions over the parallel corpus.
    pub parallel_predictions: Option<PathBuf>,
    pub word_embeddings: Option<PathBuf>,
    /// Sentence vectors keyed by example id.
    pub sentence_embeddings: Option<PathBuf>,
}

impl DataPaths {
    fn resolve_against(&mut self, base: &Path) {
        for p in [
            &mut self.train,
            &mut self.dev,
            &mut self.test,
            &mut self.translated,
            &mut self.source_train,
            &mut self.parallel,
            &mut self.parallel_predictions,
            &mut self.word_embeddings,
            &mut self.sentence_embeddings,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// `(name, path)` for every set path, in field order.
    pub fn named(&self) -> Vec<(&'static str, &Path)> {
        [
            ("train", &self.train),
            ("dev", &self.dev),
            ("test", &self.test),
            ("translated", &self.translated),
            ("source_train", &self.source_train),
            ("parallel", &self.parallel),
            ("parallel_predictions", &self.parallel_predictions),
            ("word_embeddings", &self.word_embeddings),
            ("sentence_embeddings", &self.sentence_embeddings),
        ]
        .into_iter()
        .filter_map(|(n, p)| p.as_deref().map(|p| (n, p)))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub approach: BTreeSet<Approach>,
    /// Adds the target-language training set to the approach data.
    pub combined_with_target: bool,
    pub model: ModelKind,
    pub features: Vec<FeatureKind>,
    pub seed: u64,
    pub source_language: String,
    pub target_language: String,
    pub data: DataPaths,
    pub feature_settings: FeatureSettings,
    pub svm: SvmConfig,
    pub mlp: MlpConfig,
    pub projection: ProjectionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            approach: BTreeSet::new(),
            combined_with_target: false,
            model: ModelKind::Svm,
            features: vec![FeatureKind::CharNgram],
            seed: 0,
            source_language: "en".into(),
            target_language: "ar".into(),
            data: DataPaths::default(),
            feature_settings: FeatureSettings::default(),
            svm: SvmConfig::default(),
            mlp: MlpConfig::default(),
            projection: ProjectionConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(content: &str) -> Result<Self, CliError> {
        toml::from_str(content).map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }

    /// Reads a config file; relative data paths are taken from the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let content = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml_str(&content)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.data.resolve_against(base);
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_json(content: &str) -> Result<Self, CliError> {
        serde_json::from_str(content).map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }

    /// Row label such as `SVM C[1-6] T+target`.
    pub fn label(&self) -> String {
        let feats: Vec<&str> = self.features.iter().map(|f| f.name()).collect();
        let approach = if self.approach.is_empty() {
            "target".to_string()
        } else {
            let a: Vec<String> = self.approach.iter().map(Approach::to_string).collect();
            let mut s = a.join("+");
            if self.combined_with_target {
                s.push_str("+target");
            }
            s
        };
        format!("{} {} {}", self.model, feats.join("+"), approach)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |m: &str| Err(CliError::ConfigInvalid(m.to_string()));
        if self.data.test.is_none() {
            return invalid("data.test is required");
        }
        if self.approach.is_empty() && self.data.train.is_none() {
            return invalid("no approach selected and no target-language train set given");
        }
        if self.combined_with_target && self.data.train.is_none() {
            return invalid("combined_with_target needs data.train");
        }
        if self.features.is_empty() {
            return invalid("at least one feature is required");
        }
        if self.approach.contains(&Approach::T) && self.data.translated.is_none() {
            return invalid("approach T needs data.translated");
        }
        if self.approach.contains(&Approach::M) {
            if self.data.source_train.is_none() {
                return invalid("approach M needs data.source_train");
            }
            if !self.features.contains(&FeatureKind::SentenceEmbed) {
                return invalid("approach M needs the sentence_embed feature");
            }
        }
        if self.approach.contains(&Approach::P) {
            if self.data.parallel.is_none() {
                return invalid("approach P needs data.parallel");
            }
            if self.data.parallel_predictions.is_none() && self.data.source_train.is_none() {
                return invalid("approach P needs data.parallel_predictions or data.source_train");
            }
            if self.features.contains(&FeatureKind::SentenceEmbed) {
                return invalid("approach P cannot use sentence_embed: parallel pairs have no sentence vectors");
            }
        }
        if self.features.contains(&FeatureKind::WordEmbed) && self.data.word_embeddings.is_none() {
            return invalid("word_embed needs data.word_embeddings");
        }
        if self.features.contains(&FeatureKind::SentenceEmbed) && self.data.sentence_embeddings.is_none() {
            return invalid("sentence_embed needs data.sentence_embeddings");
        }
        if self.model == ModelKind::Mlp {
            if self.features != [FeatureKind::SentenceEmbed] {
                return invalid("the mlp model takes exactly the sentence_embed feature");
            }
            if self.data.dev.is_none() {
                return invalid("the mlp model needs data.dev for early stopping");
            }
            self.mlp.validate().map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        } else {
            self.svm.validate().map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        }
        self.projection
            .validate()
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        self.feature_settings
            .normalization
            .validate()
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        Ok(())
    }
}
