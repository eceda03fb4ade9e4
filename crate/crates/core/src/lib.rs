//! Multi-label emotion classification for tweets across languages: corpus
//! I/O, feature extraction, one-vs-rest SVM and feed-forward models,
//! evaluation, label projection over parallel corpora and perturbation
//! explanations.

pub mod corpus;
pub mod explain;
pub mod features;
pub mod labels;
pub mod metrics;
pub mod models;
pub mod projection;

pub use corpus::{CorpusError, Dataset, Example, ParallelPair, PredictionMatrix, Split};
pub use explain::{compare_models, explain, Attribution, ComparisonReport, ExplainConfig, TextPredictor};
pub use features::{FeatureKind, FeaturePipeline, FeatureSettings, FeatureVector};
pub use labels::{EmotionLabel, LabelVector, NUM_LABELS};
pub use metrics::{evaluate, jaccard_difference, jaccard_sample, EvalReport};
pub use models::{Classifier, MlpConfig, ModelArtifact, MultiLabelLinearModel, SvmConfig};
pub use projection::{filter_report, project_labels, Comparison, FilterReport, ProjectionConfig};
