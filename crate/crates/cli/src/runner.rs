//! End-to-end experiments: assemble training data per approach, fit
//! features and model, score the target test set, write the run directory.

use std::path::Path;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use emoxling_core::corpus::{parse_dataset, parse_parallel, parse_predictions, Dataset, PredictionMatrix, Split};
use emoxling_core::features::{load_embedding_table, EmbeddingTable, FeatureKind, FeaturePipeline, FeatureVector};
use emoxling_core::metrics::{evaluate, EvalReport};
use emoxling_core::models::{train_mlp, train_svm_ovr, Classifier, ModelArtifact};
use emoxling_core::projection::{filter_report, project_labels};

use crate::config::{Approach, ExperimentConfig, ModelKind};
use crate::error::{CliError, StageContext};
use crate::manifest::{write_file, Manifest};

pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_KV: &str = "report.kv";
pub const PREDICTIONS: &str = "predictions.tsv";
pub const MODEL: &str = "model.json";

#[derive(Debug, Clone, Default)]
pub struct Tables {
    pub word: Option<Arc<EmbeddingTable>>,
    pub sentence: Option<Arc<EmbeddingTable>>,
}

impl Tables {
    pub fn load(word: Option<&Path>, sentence: Option<&Path>) -> Result<Self, CliError> {
        let load = |p: Option<&Path>| -> Result<Option<Arc<EmbeddingTable>>, CliError> {
            p.map(|p| load_embedding_table(p).map(Arc::new))
                .transpose()
                .stage("loading embeddings")
        };
        Ok(Tables {
            word: load(word)?,
            sentence: load(sentence)?,
        })
    }

    /// Reattaches the tables a loaded artifact's pipeline needs.
    pub fn attach(&self, artifact: &mut ModelArtifact) -> Result<(), CliError> {
        for (kind, table) in [
            (FeatureKind::WordEmbed, &self.word),
            (FeatureKind::SentenceEmbed, &self.sentence),
        ] {
            if !artifact.pipeline.needs(kind) {
                continue;
            }
            let table = table.clone().ok_or_else(|| {
                CliError::ConfigInvalid(format!("the model uses `{kind}`; pass its embedding file"))
            })?;
            let attached = match kind {
                FeatureKind::WordEmbed => artifact.pipeline.attach_word_embeddings(table),
                _ => artifact.pipeline.attach_sentence_embeddings(table),
            };
            attached.stage("attaching embeddings")?;
        }
        Ok(())
    }
}

pub fn featurize(pipeline: &FeaturePipeline, data: &Dataset) -> Result<Vec<FeatureVector>, CliError> {
    data.iter()
        .map(|ex| pipeline.transform(Some(&ex.id), &ex.text))
        .collect::<Result<_, _>>()
        .stage("extracting features")
}

fn labels_of(data: &Dataset, what: &str) -> Result<Vec<emoxling_core::LabelVector>, CliError> {
    data.label_vectors()
        .ok_or_else(|| CliError::ConfigInvalid(format!("{what} must be labeled")))
}

/// Fits the feature pipeline on `train` and trains the configured model.
/// The MLP input size is taken from the fitted pipeline.
pub fn fit_model(
    config: &ExperimentConfig,
    train: &Dataset,
    dev: Option<&Dataset>,
    tables: &Tables,
) -> Result<ModelArtifact, CliError> {
    if train.is_empty() {
        return Err(CliError::ConfigInvalid("training set is empty".into()));
    }
    let texts: Vec<&str> = train.texts().collect();
    let pipeline = FeaturePipeline::fit(
        &config.features,
        &config.feature_settings,
        &texts,
        tables.word.clone(),
        tables.sentence.clone(),
    )
    .stage("fitting features")?;
    let xs = featurize(&pipeline, train)?;
    let ys = labels_of(train, "training data")?;
    log::info!("training {} on {} examples, {} features", config.model, xs.len(), pipeline.dim());
    let classifier = match config.model {
        ModelKind::Svm => {
            let svm = emoxling_core::SvmConfig {
                seed: config.seed,
                ..config.svm.clone()
            };
            Classifier::Svm(train_svm_ovr(&xs, &ys, &svm).stage("training svm")?)
        }
        ModelKind::Mlp => {
            let dev = dev.ok_or_else(|| CliError::ConfigInvalid("the mlp model needs a dev set".into()))?;
            let mlp = emoxling_core::MlpConfig {
                seed: config.seed,
                input_dim: pipeline.dim(),
                ..config.mlp.clone()
            };
            let dense = |v: Vec<FeatureVector>| v.iter().map(FeatureVector::to_dense).collect::<Vec<_>>();
            let dev_x = dense(featurize(&pipeline, dev)?);
            let dev_y = labels_of(dev, "dev data")?;
            let model = train_mlp(&dense(xs), &ys, (&dev_x, &dev_y), &mlp).stage("training mlp")?;
            Classifier::Mlp(model)
        }
    };
    ModelArtifact::new(pipeline, classifier).stage("building model")
}

pub fn predict_dataset(artifact: &ModelArtifact, data: &Dataset) -> Result<PredictionMatrix, CliError> {
    let xs = featurize(&artifact.pipeline, data)?;
    artifact.classifier.predict(&data.ids(), &xs).stage("predicting")
}

fn load_labeled(path: &Path, what: &'static str) -> Result<Dataset, CliError> {
    parse_dataset(path, true).stage(what)
}

/// Training set for the configured approaches, in M, T, P order, followed
/// by the target-language set when combined. Also returns the projection
/// filter report text when approach P ran.
pub fn assemble_training_set(
    config: &ExperimentConfig,
    tables: &Tables,
) -> Result<(Dataset, Option<(Dataset, String)>), CliError> {
    let data = &config.data;
    let mut parts: Vec<Dataset> = Vec::new();
    let mut projected = None;
    for approach in &config.approach {
        match approach {
            Approach::M => {
                let path = data.source_train.as_deref().expect("validated");
                parts.push(
                    load_labeled(path, "reading source training set")?
                        .with_language(config.source_language.clone()),
                );
            }
            Approach::T => {
                let path = data.translated.as_deref().expect("validated");
                parts.push(
                    load_labeled(path, "reading translated training set")?
                        .with_language(config.target_language.clone())
                        .with_split(Split::Translated),
                );
            }
            Approach::P => {
                let pairs = parse_parallel(data.parallel.as_deref().expect("validated"))
                    .stage("reading parallel corpus")?;
                let source_preds = match &data.parallel_predictions {
                    Some(p) => parse_predictions(p).stage("reading source predictions")?,
                    None => {
                        let source = load_labeled(
                            data.source_train.as_deref().expect("validated"),
                            "reading source training set",
                        )?;
                        let tagger = fit_model(config, &source, None, tables)?;
                        let ids: Vec<String> = pairs.iter().map(|p| p.pair_id.clone()).collect();
                        let texts: Vec<String> = pairs.iter().map(|p| p.source_text.clone()).collect();
                        tagger.predict_texts(&ids, &texts).stage("tagging source side")?
                    }
                };
                let report = filter_report(&pairs, &source_preds, &config.projection).stage("projecting labels")?;
                let set = project_labels(&pairs, &source_preds, &config.projection, &config.target_language)
                    .stage("projecting labels")?;
                log::info!("projection kept {} of {} pairs", set.len(), pairs.len());
                projected = Some((set.clone(), report.to_text()));
                parts.push(set);
            }
        }
    }
    if config.approach.is_empty() || config.combined_with_target {
        let path = data.train.as_deref().expect("validated");
        parts.push(
            load_labeled(path, "reading target training set")?.with_language(config.target_language.clone()),
        );
    }
    let mut iter = parts.into_iter();
    let mut train = iter.next().expect("at least one part");
    for part in iter {
        train = train.concat(&part).map_err(|e| {
            CliError::ConfigInvalid(format!("training sources cannot be combined: {e}"))
        })?;
    }
    Ok((train.with_split(Split::Train), projected))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub predictions: PredictionMatrix,
    pub manifest: Manifest,
    pub n_train: usize,
}

/// Deterministic metrics file: same config and inputs give identical bytes.
pub fn report_kv(config: &ExperimentConfig, n_train: usize, report: &EvalReport) -> String {
    format!(
        "name={}\nlabel={}\nn_train={}\n{}",
        config.name,
        config.label(),
        n_train,
        report.to_kv()
    )
}

pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    config.validate()?;
    let tables = Tables::load(
        config.data.word_embeddings.as_deref(),
        config.data.sentence_embeddings.as_deref(),
    )?;
    let (train, projected) = assemble_training_set(config, &tables)?;
    let test = load_labeled(config.data.test.as_deref().expect("validated"), "reading test set")?;
    let dev = config
        .data
        .dev
        .as_deref()
        .map(|p| load_labeled(p, "reading dev set"))
        .transpose()?;

    let artifact = fit_model(config, &train, dev.as_ref(), &tables)?;
    let predictions = predict_dataset(&artifact, &test)?;
    let report = evaluate(&predictions, &test).stage("evaluating")?;

    let mut manifest = Manifest::new("run");
    manifest.set("name", &config.name);
    manifest.set("label", config.label());
    manifest.set("seed", config.seed);
    manifest.set("model", config.model);
    let approaches: Vec<String> = config.approach.iter().map(Approach::to_string).collect();
    manifest.set("approach", approaches.join(","));
    manifest.set("combined_with_target", config.combined_with_target);
    let feats: Vec<&str> = config.features.iter().map(|f| f.name()).collect();
    manifest.set("features", feats.join(","));
    manifest.set("n_train", train.len());
    manifest.set("n_test", test.len());
    manifest.set("feature_dim", artifact.feature_dim);
    manifest.set(
        "dev_usage",
        match (config.model, &dev) {
            (ModelKind::Mlp, _) => "early_stopping",
            (_, Some(_)) => "unused",
            (_, None) => "none",
        },
    );
    if let Classifier::Mlp(m) = &artifact.classifier {
        manifest.set("mlp_best_epoch", m.best_epoch());
        manifest.set("mlp_epochs_run", m.history().len());
    }
    for (name, path) in config.data.named() {
        manifest.add_input(name, path)?;
    }

    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    if let Some((set, filter)) = &projected {
        write_file(&out_dir.join("projected.tsv"), &set.to_tsv())?;
        write_file(&out_dir.join("filter_report.txt"), filter)?;
    }
    write_file(&out_dir.join(PREDICTIONS), &predictions.to_tsv())?;
    let text = format!("{}\n\n{}", config.label(), report.to_text());
    write_file(&out_dir.join(REPORT_TEXT), &text)?;
    write_file(&out_dir.join(REPORT_KV), &report_kv(config, train.len(), &report))?;
    write_file(&out_dir.join(MODEL), &artifact.to_json().stage("saving model")?)?;

    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    manifest.set("finished_at_unix", now);
    manifest.set("wall_clock_seconds", format!("{:.3}", started.elapsed().as_secs_f64()));
    manifest.set("resolved_config_json", config.to_json());
    manifest.write(out_dir)?;

    Ok(RunOutcome {
        report,
        predictions,
        manifest,
        n_train: train.len(),
    })
}

/// Re-runs the experiment recorded in a manifest, refusing if any input
/// file changed since.
pub fn rerun(manifest_path: &Path, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let manifest = Manifest::load(manifest_path)?;
    if manifest.get("command") != Some("run") {
        return Err(CliError::Manifest("not an experiment manifest".into()));
    }
    let json = manifest
        .get("resolved_config_json")
        .ok_or_else(|| CliError::Manifest("missing resolved_config_json".into()))?;
    let changed = manifest.changed_inputs()?;
    if !changed.is_empty() {
        return Err(CliError::Manifest(format!(
            "inputs changed since the recorded run: {}",
            changed.join(", ")
        )));
    }
    run_experiment(&ExperimentConfig::from_json(json)?, out_dir)
}
