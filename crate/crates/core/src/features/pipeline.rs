//! Fitted multi-block feature extraction.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::embedding::{embed_average, EmbeddingTable};
use super::ngram::NgramConfig;
use super::text::{tokenize, NormalizationConfig};
use super::tfidf::TfidfModel;
use super::{concat_blocks, FeatureError, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    WordUnigram,
    CharNgram,
    WordEmbed,
    SentenceEmbed,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::WordUnigram => "word_unigram",
            FeatureKind::CharNgram => "char_ngram",
            FeatureKind::WordEmbed => "word_embed",
            FeatureKind::SentenceEmbed => "sentence_embed",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "word_unigram" => Ok(FeatureKind::WordUnigram),
            "char_ngram" => Ok(FeatureKind::CharNgram),
            "word_embed" => Ok(FeatureKind::WordEmbed),
            "sentence_embed" => Ok(FeatureKind::SentenceEmbed),
            other => Err(FeatureError::InvalidConfig(format!(
                "unknown feature kind `{other}`"
            ))),
        }
    }
}

/// Per-feature settings shared by all blocks of a pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSettings {
    pub normalization: NormalizationConfig,
    pub word_unigram: NgramConfig,
    pub char_ngram: NgramConfig,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings {
            normalization: NormalizationConfig::default(),
            word_unigram: NgramConfig::word_unigrams(),
            char_ngram: NgramConfig::char_1_to_6(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedBlock {
    WordUnigram { model: TfidfModel },
    CharNgram { model: TfidfModel },
    WordEmbed { dim: usize },
    SentenceEmbed { dim: usize },
}

impl FittedBlock {
    pub fn kind(&self) -> FeatureKind {
        match self {
            FittedBlock::WordUnigram { .. } => FeatureKind::WordUnigram,
            FittedBlock::CharNgram { .. } => FeatureKind::CharNgram,
            FittedBlock::WordEmbed { .. } => FeatureKind::WordEmbed,
            FittedBlock::SentenceEmbed { .. } => FeatureKind::SentenceEmbed,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FittedBlock::WordUnigram { model } | FittedBlock::CharNgram { model } => model.dim(),
            FittedBlock::WordEmbed { dim } | FittedBlock::SentenceEmbed { dim } => *dim,
        }
    }
}

/// Feature blocks fitted on a training set. Embedding tables are not
/// serialized; attach them after loading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeaturePipeline {
    normalization: NormalizationConfig,
    blocks: Vec<FittedBlock>,
    #[serde(skip)]
    word_table: Option<Arc<EmbeddingTable>>,
    #[serde(skip)]
    sentence_table: Option<Arc<EmbeddingTable>>,
}

impl PartialEq for FeaturePipeline {
    fn eq(&self, other: &Self) -> bool {
        self.normalization == other.normalization && self.blocks == other.blocks
    }
}

impl FeaturePipeline {
    /// Fits every requested block on `texts`. Embedding blocks need the
    /// matching table.
    pub fn fit<S: AsRef<str> + Sync>(
        kinds: &[FeatureKind],
        settings: &FeatureSettings,
        texts: &[S],
        word_table: Option<Arc<EmbeddingTable>>,
        sentence_table: Option<Arc<EmbeddingTable>>,
    ) -> Result<Self, FeatureError> {
        if kinds.is_empty() {
            return Err(FeatureError::InvalidConfig("no feature blocks requested".into()));
        }
        let mut blocks = Vec::with_capacity(kinds.len());
        for (i, kind) in kinds.iter().enumerate() {
            if kinds[..i].contains(kind) {
                return Err(FeatureError::InvalidConfig(format!(
                    "feature `{kind}` listed twice"
                )));
            }
            let block = match kind {
                FeatureKind::WordUnigram => FittedBlock::WordUnigram {
                    model: TfidfModel::fit(texts, settings.word_unigram, settings.normalization.clone())?,
                },
                FeatureKind::CharNgram => FittedBlock::CharNgram {
                    model: TfidfModel::fit(texts, settings.char_ngram, settings.normalization.clone())?,
                },
                FeatureKind::WordEmbed => FittedBlock::WordEmbed {
                    dim: word_table
                        .as_ref()
                        .ok_or(FeatureError::MissingTable(FeatureKind::WordEmbed))?
                        .dim(),
                },
                FeatureKind::SentenceEmbed => FittedBlock::SentenceEmbed {
                    dim: sentence_table
                        .as_ref()
                        .ok_or(FeatureError::MissingTable(FeatureKind::SentenceEmbed))?
                        .dim(),
                },
            };
            blocks.push(block);
        }
        Ok(FeaturePipeline {
            normalization: settings.normalization.clone(),
            blocks,
            word_table,
            sentence_table,
        })
    }

    pub fn blocks(&self) -> &[FittedBlock] {
        &self.blocks
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        self.blocks.iter().map(FittedBlock::kind).collect()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(FittedBlock::dim).sum()
    }

    pub fn needs(&self, kind: FeatureKind) -> bool {
        self.blocks.iter().any(|b| b.kind() == kind)
    }

    /// True when every block can be computed from text alone.
    pub fn is_text_only(&self) -> bool {
        !self.needs(FeatureKind::SentenceEmbed)
    }

    pub fn attach_word_embeddings(&mut self, table: Arc<EmbeddingTable>) -> Result<(), FeatureError> {
        self.check_dim(FeatureKind::WordEmbed, &table)?;
        self.word_table = Some(table);
        Ok(())
    }

    pub fn attach_sentence_embeddings(
        &mut self,
        table: Arc<EmbeddingTable>,
    ) -> Result<(), FeatureError> {
        self.check_dim(FeatureKind::SentenceEmbed, &table)?;
        self.sentence_table = Some(table);
        Ok(())
    }

    fn check_dim(&self, kind: FeatureKind, table: &EmbeddingTable) -> Result<(), FeatureError> {
        if let Some(block) = self.blocks.iter().find(|b| b.kind() == kind) {
            if block.dim() != table.dim() {
                return Err(FeatureError::DimensionMismatch {
                    expected: block.dim(),
                    found: table.dim(),
                });
            }
        }
        Ok(())
    }

    /// Features for one example. `id` keys the sentence-embedding lookup.
    pub fn transform(&self, id: Option<&str>, text: &str) -> Result<FeatureVector, FeatureError> {
        let mut parts = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let part = match block {
                FittedBlock::WordUnigram { model } | FittedBlock::CharNgram { model } => {
                    model.transform(text)
                }
                FittedBlock::WordEmbed { .. } => {
                    let table = self
                        .word_table
                        .as_ref()
                        .ok_or(FeatureError::MissingTable(FeatureKind::WordEmbed))?;
                    embed_average(&tokenize(text, &self.normalization), table)
                }
                FittedBlock::SentenceEmbed { .. } => {
                    let table = self
                        .sentence_table
                        .as_ref()
                        .ok_or(FeatureError::MissingTable(FeatureKind::SentenceEmbed))?;
                    let id = id.ok_or(FeatureError::TextOnlyUnsupported)?;
                    let v = table
                        .get(id)
                        .ok_or_else(|| FeatureError::MissingEmbedding(id.to_string()))?;
                    FeatureVector::from_dense(v)
                }
            };
            parts.push(part);
        }
        Ok(concat_blocks(&parts))
    }

    pub fn transform_text(&self, text: &str) -> Result<FeatureVector, FeatureError> {
        self.transform(None, text)
    }
}
