//! Command-line surface. Each subcommand writes its outputs and a
//! `manifest.kv` into `--out`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emoxling_core::corpus::{parse_dataset, parse_parallel, parse_predictions, Dataset};
use emoxling_core::explain::{compare_models, explain, ExplainConfig};
use emoxling_core::metrics::evaluate;
use emoxling_core::models::ModelArtifact;
use emoxling_core::projection::{filter_report, project_labels, Comparison, ProjectionConfig};
use emoxling_core::EmotionLabel;
use serde::Deserialize;

use crate::config::{parse_approaches, parse_features, ExperimentConfig};
use crate::error::{CliError, StageContext};
use crate::manifest::{write_file, Manifest};
use crate::runner::{self, Tables};
use crate::table::emit_result_table;

#[derive(Debug, Parser)]
#[command(name = "emoxling", version, about = "Cross-lingual multi-label emotion classification")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit features and a classifier, write model.json.
    Train(TrainArgs),
    /// Score a dataset with a saved model.
    Predict(PredictArgs),
    /// Compare a prediction file against gold labels.
    Evaluate(EvaluateArgs),
    /// Transfer source-side labels onto the target side of a parallel corpus.
    Project(ProjectArgs),
    /// Word attributions for sentences under one model.
    Explain(ExplainArgs),
    /// Side-by-side attributions on the examples where two models disagree most.
    Compare(CompareArgs),
    /// Run one experiment from a config file and flags.
    Run(RunArgs),
    /// Re-run the experiment recorded in a manifest.
    Rerun(RerunArgs),
    /// Run a list of experiments and print the results table.
    Matrix(MatrixArgs),
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbeddingArgs {
    #[arg(long)]
    pub word_embeddings: Option<PathBuf>,
    /// Sentence vectors keyed by example id.
    #[arg(long)]
    pub sentence_embeddings: Option<PathBuf>,
}

impl EmbeddingArgs {
    fn tables(&self) -> Result<Tables, CliError> {
        Tables::load(self.word_embeddings.as_deref(), self.sentence_embeddings.as_deref())
    }

    fn record(&self, manifest: &mut Manifest) -> Result<(), CliError> {
        if let Some(p) = &self.word_embeddings {
            manifest.add_input("word_embeddings", p)?;
        }
        if let Some(p) = &self.sentence_embeddings {
            manifest.add_input("sentence_embeddings", p)?;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct ExperimentFlags {
    /// TOML experiment config; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    /// Comma-separated, e.g. `char_ngram,word_embed`.
    #[arg(long)]
    pub features: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ExperimentFlags {
    fn base_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(m) = &self.model {
            config.model = m.parse()?;
        }
        if let Some(f) = &self.features {
            config.features = parse_features(f)?;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled training files, concatenated in order.
    #[arg(long, required = true, num_args = 1..)]
    pub train: Vec<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[command(flatten)]
    pub experiment: ExperimentFlags,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset to score; label columns, if any, are ignored.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ComparisonArg {
    AtLeast,
    MoreThan,
}

impl From<ComparisonArg> for Comparison {
    fn from(c: ComparisonArg) -> Self {
        match c {
            ComparisonArg::AtLeast => Comparison::AtLeast,
            ComparisonArg::MoreThan => Comparison::MoreThan,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub parallel: PathBuf,
    /// Source-side predictions keyed by pair id.
    #[arg(long, required_unless_present = "tagger", conflicts_with = "tagger")]
    pub source_pred: Option<PathBuf>,
    /// Model used to tag the source side instead of a prediction file.
    #[arg(long)]
    pub tagger: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub min_emotions: usize,
    #[arg(long, value_enum, default_value = "at-least")]
    pub comparison: ComparisonArg,
    #[arg(long, default_value_t = 0.5)]
    pub source_threshold: f64,
    #[arg(long, default_value = "ar")]
    pub target_language: String,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct ExplainFlags {
    #[arg(long, default_value_t = 1000)]
    pub n_variants: usize,
    #[arg(long, default_value_t = 0.5)]
    pub keep_probability: f64,
    #[arg(long, default_value_t = 12)]
    pub exhaustive_max_words: usize,
    #[arg(long, default_value_t = 0)]
    pub explain_seed: u64,
    #[arg(long)]
    pub include_empty_variant: bool,
}

impl ExplainFlags {
    fn config(&self) -> ExplainConfig {
        ExplainConfig {
            n_variants: self.n_variants,
            keep_probability: self.keep_probability,
            exhaustive_max_words: self.exhaustive_max_words,
            seed: self.explain_seed,
            include_empty_variant: self.include_empty_variant,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    pub text: Option<String>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Restrict `--input` to these ids (comma-separated).
    #[arg(long, requires = "input")]
    pub ids: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    #[command(flatten)]
    pub explain: ExplainFlags,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub model_a: PathBuf,
    #[arg(long)]
    pub model_b: PathBuf,
    #[arg(long)]
    pub pred_a: PathBuf,
    #[arg(long)]
    pub pred_b: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[command(flatten)]
    pub explain: ExplainFlags,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub experiment: ExperimentFlags,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Comma-separated subset of M,T,P; empty for target-only training.
    #[arg(long)]
    pub approach: Option<String>,
    #[arg(long)]
    pub combined: Option<bool>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    /// TOML file with `[[run]]` entries of `label` and `config`.
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
}

fn finish(mut manifest: Manifest, out: &Path, started: Instant) -> Result<(), CliError> {
    manifest.set("wall_clock_seconds", format!("{:.3}", started.elapsed().as_secs_f64()));
    manifest.write(out)
}

fn load_model(path: &Path, embeddings: &EmbeddingArgs) -> Result<ModelArtifact, CliError> {
    let mut artifact = ModelArtifact::load(path).stage("loading model")?;
    embeddings.tables()?.attach(&mut artifact)?;
    Ok(artifact)
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut config = args.experiment.base_config()?;
    config.data.word_embeddings = args.embeddings.word_embeddings.clone();
    config.data.sentence_embeddings = args.embeddings.sentence_embeddings.clone();
    let mut train: Option<Dataset> = None;
    let mut manifest = Manifest::new("train");
    for (i, path) in args.train.iter().enumerate() {
        let part = parse_dataset(path, true).stage("reading training set")?;
        manifest.add_input(&format!("train{i}"), path)?;
        train = Some(match train {
            None => part,
            Some(t) => t.concat(&part).stage("combining training sets")?,
        });
    }
    let train = train.expect("clap requires --train");
    let dev = args
        .dev
        .as_deref()
        .map(|p| parse_dataset(p, true).stage("reading dev set"))
        .transpose()?;
    if let Some(p) = &args.dev {
        manifest.add_input("dev", p)?;
    }
    args.embeddings.record(&mut manifest)?;
    let tables = args.embeddings.tables()?;
    let artifact = runner::fit_model(&config, &train, dev.as_ref(), &tables)?;
    write_file(&args.out.out.join(runner::MODEL), &artifact.to_json().stage("saving model")?)?;
    manifest.set("model", config.model);
    manifest.set("seed", config.seed);
    manifest.set("n_train", train.len());
    manifest.set("feature_dim", artifact.feature_dim);
    manifest.set("resolved_config_json", config.to_json());
    finish(manifest, &args.out.out, started)
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let artifact = load_model(&args.model, &args.embeddings)?;
    let data = parse_dataset(&args.input, false).stage("reading input")?;
    let preds = runner::predict_dataset(&artifact, &data)?
        .with_threshold(args.threshold)
        .stage("applying threshold")?;
    write_file(&args.out.out.join(runner::PREDICTIONS), &preds.to_tsv())?;
    let mut manifest = Manifest::new("predict");
    manifest.add_input("model", &args.model)?;
    manifest.add_input("input", &args.input)?;
    args.embeddings.record(&mut manifest)?;
    manifest.set("threshold", args.threshold);
    manifest.set("n_examples", preds.len());
    finish(manifest, &args.out.out, started)
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let preds = parse_predictions(&args.pred).stage("reading predictions")?;
    let gold = parse_dataset(&args.gold, true).stage("reading gold labels")?;
    let report = evaluate(&preds, &gold).stage("evaluating")?;
    write_file(&args.out.out.join(runner::REPORT_TEXT), &report.to_text())?;
    write_file(&args.out.out.join(runner::REPORT_KV), &report.to_kv())?;
    let mut manifest = Manifest::new("evaluate");
    manifest.add_input("pred", &args.pred)?;
    manifest.add_input("gold", &args.gold)?;
    finish(manifest, &args.out.out, started)
}

pub fn project(args: &ProjectArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let pairs = parse_parallel(&args.parallel).stage("reading parallel corpus")?;
    let mut manifest = Manifest::new("project");
    manifest.add_input("parallel", &args.parallel)?;
    let source_preds = match (&args.source_pred, &args.tagger) {
        (Some(p), _) => {
            manifest.add_input("source_pred", p)?;
            parse_predictions(p).stage("reading source predictions")?
        }
        (None, Some(m)) => {
            manifest.add_input("tagger", m)?;
            args.embeddings.record(&mut manifest)?;
            let tagger = load_model(m, &args.embeddings)?;
            let ids: Vec<String> = pairs.iter().map(|p| p.pair_id.clone()).collect();
            let texts: Vec<String> = pairs.iter().map(|p| p.source_text.clone()).collect();
            tagger.predict_texts(&ids, &texts).stage("tagging source side")?
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let config = ProjectionConfig {
        min_emotions: args.min_emotions,
        comparison: args.comparison.into(),
        source_threshold: args.source_threshold,
    };
    let report = filter_report(&pairs, &source_preds, &config).stage("projecting labels")?;
    let projected = project_labels(&pairs, &source_preds, &config, &args.target_language)
        .stage("projecting labels")?;
    write_file(&args.out.out.join("projected.tsv"), &projected.to_tsv())?;
    write_file(&args.out.out.join("filter_report.txt"), &report.to_text())?;
    manifest.set("min_emotions", config.min_emotions);
    manifest.set("comparison", config.comparison);
    manifest.set("source_threshold", config.source_threshold);
    manifest.set("retained", projected.len());
    manifest.set("total", pairs.len());
    finish(manifest, &args.out.out, started)
}

pub fn explain_cmd(args: &ExplainArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let artifact = load_model(&args.model, &args.embeddings)?;
    let mut manifest = Manifest::new("explain");
    manifest.add_input("model", &args.model)?;
    let rows: Vec<(String, String)> = match (&args.text, &args.input) {
        (Some(t), _) => vec![("text".into(), t.clone())],
        (None, Some(p)) => {
            manifest.add_input("input", p)?;
            let data = parse_dataset(p, false).stage("reading input")?;
            let wanted: Option<Vec<&str>> = args.ids.as_deref().map(|s| s.split(',').map(str::trim).collect());
            data.iter()
                .filter(|ex| wanted.as_ref().is_none_or(|w| w.contains(&ex.id.as_str())))
                .map(|ex| (ex.id.clone(), ex.text.clone()))
                .collect()
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let config = args.explain.config();
    let mut text = String::new();
    let mut json = Vec::new();
    for (id, sentence) in &rows {
        let att = explain(&artifact, sentence, &config).stage("explaining")?;
        text.push_str(&format!("[{id}] {sentence}\n"));
        for label in EmotionLabel::ALL {
            let top: Vec<String> = att
                .top_words(label, args.top)
                .iter()
                .map(|(w, s)| format!("{w}:{s:.4}"))
                .collect();
            text.push_str(&format!("  {:<12} {}\n", label.name(), top.join(" ")));
        }
        text.push('\n');
        json.push(serde_json::json!({ "id": id, "attribution": att }));
    }
    let dir = args.out.out.join("explain");
    write_file(&dir.join("attributions.txt"), &text)?;
    write_file(
        &dir.join("attributions.json"),
        &serde_json::to_string_pretty(&json).expect("serializable"),
    )?;
    manifest.set("explain_config_json", serde_json::to_string(&config).expect("serializable"));
    manifest.set("n_sentences", rows.len());
    finish(manifest, &args.out.out, started)
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let model_a = load_model(&args.model_a, &args.embeddings)?;
    let model_b = load_model(&args.model_b, &args.embeddings)?;
    let pred_a = parse_predictions(&args.pred_a).stage("reading predictions A")?;
    let pred_b = parse_predictions(&args.pred_b).stage("reading predictions B")?;
    let gold = parse_dataset(&args.gold, true).stage("reading gold labels")?;
    let config = args.explain.config();
    let name = |p: &Path| p.display().to_string();
    let report = compare_models(
        &pred_a,
        &pred_b,
        &gold,
        (&name(&args.model_a), &model_a),
        (&name(&args.model_b), &model_b),
        args.k,
        &config,
    )
    .stage("comparing models")?;
    let dir = args.out.out.join("explain");
    write_file(&dir.join("comparison.txt"), &report.to_text())?;
    write_file(&dir.join("comparison.json"), &report.to_json())?;
    let mut manifest = Manifest::new("compare");
    for (n, p) in [
        ("model_a", &args.model_a),
        ("model_b", &args.model_b),
        ("pred_a", &args.pred_a),
        ("pred_b", &args.pred_b),
        ("gold", &args.gold),
    ] {
        manifest.add_input(n, p)?;
    }
    manifest.set("k", args.k);
    manifest.set("explain_config_json", serde_json::to_string(&config).expect("serializable"));
    finish(manifest, &args.out.out, started)
}

pub fn run_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = args.experiment.base_config()?;
    if let Some(n) = &args.name {
        config.name = n.clone();
    }
    for (flag, slot) in [
        (&args.train, &mut config.data.train),
        (&args.dev, &mut config.data.dev),
        (&args.test, &mut config.data.test),
    ] {
        if let Some(p) = flag {
            *slot = Some(p.clone());
        }
    }
    if let Some(a) = &args.approach {
        config.approach = parse_approaches(a)?;
    }
    if let Some(c) = args.combined {
        config.combined_with_target = c;
    }
    Ok(config)
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let config = run_config(args)?;
    let outcome = runner::run_experiment(&config, &args.out.out)?;
    print!("{}", emit_result_table(&[(config.label(), outcome.report)]));
    Ok(())
}

pub fn rerun(args: &RerunArgs) -> Result<(), CliError> {
    let outcome = runner::rerun(&args.manifest, &args.out.out)?;
    let label = outcome.manifest.get("label").unwrap_or("rerun").to_string();
    print!("{}", emit_result_table(&[(label, outcome.report)]));
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    run: Vec<MatrixRow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixRow {
    label: Option<String>,
    config: PathBuf,
}

pub fn matrix(args: &MatrixArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let content = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let file: MatrixFile = toml::from_str(&content).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    if file.run.is_empty() {
        return Err(CliError::ConfigInvalid("matrix has no runs".into()));
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::with_capacity(file.run.len());
    let mut manifest = Manifest::new("matrix");
    manifest.add_input("matrix", &args.config)?;
    for (i, row) in file.run.iter().enumerate() {
        let path = base.join(&row.config);
        let config = ExperimentConfig::load(&path)?;
        let label = row.label.clone().unwrap_or_else(|| config.label());
        let dir = args.out.out.join(format!("run{:02}", i + 1));
        log::info!("matrix row {}: {label}", i + 1);
        let outcome = runner::run_experiment(&config, &dir)?;
        manifest.set(&format!("run{:02}.label", i + 1), &label);
        manifest.set(&format!("run{:02}.dir", i + 1), dir.display());
        rows.push((label, outcome.report));
    }
    let table = emit_result_table(&rows);
    write_file(&args.out.out.join("table.txt"), &table)?;
    print!("{table}");
    finish(manifest, &args.out.out, started)
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Project(a) => project(a),
        Command::Explain(a) => explain_cmd(a),
        Command::Compare(a) => compare(a),
        Command::Run(a) => run(a),
        Command::Rerun(a) => rerun(a),
        Command::Matrix(a) => matrix(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn run_flags_override_config() {
        let cli = Cli::try_parse_from([
            "emoxling", "run", "--train", "tr.tsv", "--test", "te.tsv", "--approach", "T",
            "--model", "svm", "--features", "char_ngram,word_unigram", "--seed", "9", "--out", "o",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else { panic!() };
        let c = run_config(&args).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.features.len(), 2);
        assert_eq!(c.data.test.as_deref(), Some(Path::new("te.tsv")));
        assert!(c.approach.contains(&crate::config::Approach::T));
    }

    #[test]
    fn missing_required_flag_is_a_usage_error() {
        let err = Cli::try_parse_from(["emoxling", "evaluate", "--pred", "p.tsv", "--out", "o"]).unwrap_err();
        assert_eq!(err.kind(), clap::error::ErrorKind::MissingRequiredArgument);
        assert!(Cli::try_parse_from(["emoxling", "project", "--parallel", "x", "--out", "o"]).is_err());
    }
}
