use std::io;
use std::path::PathBuf;

use emoxling_core::corpus::CorpusError;
use emoxling_core::explain::ExplainError;
use emoxling_core::features::FeatureError;
use emoxling_core::metrics::MetricsError;
use emoxling_core::models::ModelError;
use emoxling_core::projection::ProjectionError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

/// Wraps a module error with the pipeline stage it came from.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

macro_rules! stage_context {
    ($($err:ty),*) => {$(
        impl<T> StageContext<T> for Result<T, $err> {
            fn stage(self, stage: &'static str) -> Result<T, CliError> {
                self.map_err(|e| CliError::Stage { stage, source: Box::new(e) })
            }
        }
    )*};
}

stage_context!(CorpusError, FeatureError, ModelError, MetricsError, ProjectionError, ExplainError);
