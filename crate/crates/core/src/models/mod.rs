//! Multi-label classifiers over feature vectors and the on-disk model
//! artifact.

mod mlp;
mod svm;

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, PredictionMatrix};
use crate::features::{FeatureError, FeaturePipeline, FeatureVector};
use crate::labels::{EmotionLabel, NUM_LABELS};

pub use mlp::{
    predict_mlp, train_mlp, EarlyStopping, EpochRecord, MlpConfig, MlpModel, StopDecision,
};
pub use svm::{train_svm_ovr, train_svm_ovr_traced, LabelTrace, MultiLabelLinearModel, SvmConfig};

pub const ARTIFACT_FORMAT: &str = "emoxling-model";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("{what} differ in length: {left} vs {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("model artifact: {0}")]
    Serialization(String),
}

/// Common dimension of all rows.
pub fn check_uniform_dim(xs: &[FeatureVector]) -> Result<usize, ModelError> {
    let dim = xs.first().ok_or(ModelError::EmptyTrainingSet)?.dim();
    if let Some(x) = xs.iter().find(|x| x.dim() != dim) {
        return Err(ModelError::DimensionMismatch {
            expected: dim,
            found: x.dim(),
        });
    }
    Ok(dim)
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Svm(MultiLabelLinearModel),
    Mlp(MlpModel),
}

impl Classifier {
    pub fn name(&self) -> &'static str {
        match self {
            Classifier::Svm(_) => "svm",
            Classifier::Mlp(_) => "mlp",
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Classifier::Svm(m) => m.dim(),
            Classifier::Mlp(m) => m.input_dim(),
        }
    }

    pub fn probabilities(&self, x: &FeatureVector) -> Result<[f64; NUM_LABELS], ModelError> {
        match self {
            Classifier::Svm(m) => m.probabilities(x),
            Classifier::Mlp(m) => m.probabilities(&x.to_dense()),
        }
    }

    pub fn predict(&self, ids: &[String], xs: &[FeatureVector]) -> Result<PredictionMatrix, ModelError> {
        match self {
            Classifier::Svm(m) => m.predict(ids, xs),
            Classifier::Mlp(m) => {
                let dense: Vec<Vec<f64>> = xs.iter().map(FeatureVector::to_dense).collect();
                m.predict(ids, &dense)
            }
        }
    }
}

/// Everything needed to score raw text: the fitted feature pipeline and
/// the classifier. Embedding tables are not stored and must be attached
/// again after loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub labels: Vec<String>,
    pub feature_dim: usize,
    pub pipeline: FeaturePipeline,
    pub classifier: Classifier,
}

impl ModelArtifact {
    pub fn new(pipeline: FeaturePipeline, classifier: Classifier) -> Result<Self, ModelError> {
        if pipeline.dim() != classifier.input_dim() {
            return Err(ModelError::DimensionMismatch {
                expected: pipeline.dim(),
                found: classifier.input_dim(),
            });
        }
        Ok(ModelArtifact {
            format: ARTIFACT_FORMAT.to_string(),
            version: ARTIFACT_VERSION,
            labels: EmotionLabel::ALL.iter().map(|l| l.name().to_string()).collect(),
            feature_dim: pipeline.dim(),
            pipeline,
            classifier,
        })
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        serde_json::to_string(self).map_err(|e| ModelError::Serialization(e.to_string()))
    }

    pub fn from_json(content: &str) -> Result<Self, ModelError> {
        let artifact: ModelArtifact =
            serde_json::from_str(content).map_err(|e| ModelError::Serialization(e.to_string()))?;
        if artifact.format != ARTIFACT_FORMAT || artifact.version != ARTIFACT_VERSION {
            return Err(ModelError::Serialization(format!(
                "unsupported format {} version {}",
                artifact.format, artifact.version
            )));
        }
        let expected: Vec<&str> = EmotionLabel::ALL.iter().map(|l| l.name()).collect();
        if artifact.labels != expected {
            return Err(ModelError::Serialization("label order differs".into()));
        }
        if artifact.feature_dim != artifact.pipeline.dim()
            || artifact.feature_dim != artifact.classifier.input_dim()
        {
            return Err(ModelError::DimensionMismatch {
                expected: artifact.feature_dim,
                found: artifact.classifier.input_dim(),
            });
        }
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()?).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let content = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&content)
    }

    /// Scores raw text; fails for pipelines keyed by example id.
    pub fn probabilities_for_text(&self, text: &str) -> Result<[f64; NUM_LABELS], ModelError> {
        self.classifier.probabilities(&self.pipeline.transform_text(text)?)
    }

    /// Featurizes and scores `(id, text)` rows.
    pub fn predict_texts(&self, ids: &[String], texts: &[String]) -> Result<PredictionMatrix, ModelError> {
        let xs = ids
            .iter()
            .zip(texts)
            .map(|(id, text)| self.pipeline.transform(Some(id), text))
            .collect::<Result<Vec<_>, _>>()?;
        self.classifier.predict(ids, &xs)
    }
}
