mod common;

use std::collections::BTreeSet;

use common::Fixture;
use emoxling_cli::config::{Approach, DataPaths, ExperimentConfig, ModelKind};
use emoxling_cli::manifest::Manifest;
use emoxling_cli::runner::{self, REPORT_KV, PREDICTIONS};
use emoxling_cli::CliError;
use emoxling_core::corpus::parse_dataset;
use emoxling_core::features::FeatureKind;
use emoxling_core::models::ModelArtifact;

fn target_only(fx: &Fixture) -> ExperimentConfig {
    ExperimentConfig {
        name: "fixture".into(),
        data: DataPaths {
            train: Some(fx.path("train.tsv")),
            dev: Some(fx.path("dev.tsv")),
            test: Some(fx.path("test.tsv")),
            ..DataPaths::default()
        },
        ..ExperimentConfig::default()
    }
}

fn read(p: &std::path::Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn char_ngram_svm_learns_the_fixture_and_is_repeatable() {
    let fx = Fixture::new(1, 200);
    let config = target_only(&fx);
    let a = runner::run_experiment(&config, &fx.path("run_a")).unwrap();
    let b = runner::run_experiment(&config, &fx.path("run_b")).unwrap();
    assert!(a.report.jaccard > 0.8, "J = {}", a.report.jaccard);
    assert_eq!(a.report, b.report);
    for f in [REPORT_KV, PREDICTIONS, runner::MODEL] {
        assert_eq!(read(&fx.path("run_a").join(f)), read(&fx.path("run_b").join(f)), "{f}");
    }
    for f in ["report.txt", "manifest.kv"] {
        assert!(fx.path("run_a").join(f).is_file());
    }
    let m = Manifest::load(&fx.path("run_a/manifest.kv")).unwrap();
    assert_eq!(m.get("n_train"), Some("200"));
    assert_eq!(m.get("dev_usage"), Some("unused"));
    assert!(m.get("input.test.sha256").unwrap().starts_with("sha256:"));
    assert!(m.get("wall_clock_seconds").is_some());
}

#[test]
fn rerun_from_manifest_reproduces_outputs() {
    let fx = Fixture::new(2, 80);
    let mut config = target_only(&fx);
    config.features = vec![FeatureKind::WordUnigram, FeatureKind::CharNgram];
    config.seed = 17;
    runner::run_experiment(&config, &fx.path("first")).unwrap();
    let again = runner::rerun(&fx.path("first/manifest.kv"), &fx.path("second")).unwrap();
    assert_eq!(again.manifest.get("seed"), Some("17"));
    for f in [REPORT_KV, PREDICTIONS] {
        assert_eq!(read(&fx.path("first").join(f)), read(&fx.path("second").join(f)));
    }
}

#[test]
fn rerun_refuses_changed_inputs() {
    let fx = Fixture::new(3, 40);
    runner::run_experiment(&target_only(&fx), &fx.path("first")).unwrap();
    let mut test = std::fs::read_to_string(fx.path("test.tsv")).unwrap();
    test = test.replacen("te0000\t", "te0000\tzzz ", 1);
    std::fs::write(fx.path("test.tsv"), test).unwrap();
    assert!(matches!(
        runner::rerun(&fx.path("first/manifest.kv"), &fx.path("second")),
        Err(CliError::Manifest(_))
    ));
}

#[test]
fn translated_combined_with_target_concatenates() {
    let fx = Fixture::new(4, 60);
    let mut config = target_only(&fx);
    config.approach = BTreeSet::from([Approach::T]);
    config.combined_with_target = true;
    config.data.translated = Some(fx.path("translated.tsv"));
    let out = runner::run_experiment(&config, &fx.path("run")).unwrap();
    assert_eq!(out.n_train, 120);

    config.combined_with_target = false;
    let out = runner::run_experiment(&config, &fx.path("run2")).unwrap();
    assert_eq!(out.n_train, 60);
}

#[test]
fn no_approach_and_no_target_train_is_invalid() {
    let fx = Fixture::new(5, 10);
    let mut config = target_only(&fx);
    config.data.train = None;
    assert!(matches!(
        runner::run_experiment(&config, &fx.path("run")),
        Err(CliError::ConfigInvalid(_))
    ));
    assert!(!fx.path("run").exists());
}

#[test]
fn projection_approach_with_internal_tagger() {
    let fx = Fixture::new(6, 120);
    let mut config = target_only(&fx);
    config.approach = BTreeSet::from([Approach::P]);
    config.data.parallel = Some(fx.path("parallel.tsv"));
    config.data.source_train = Some(fx.path("source_train.tsv"));
    config.projection.min_emotions = 2;
    let out = runner::run_experiment(&config, &fx.path("run")).unwrap();
    let projected = parse_dataset(&fx.path("run/projected.tsv"), true).unwrap();
    assert_eq!(out.n_train, projected.len());
    assert!(projected.len() > 10 && projected.len() < 120);
    assert!(projected.iter().all(|e| e.labels.unwrap().count() >= 2));
    let filter = std::fs::read_to_string(fx.path("run/filter_report.txt")).unwrap();
    assert!(filter.contains(&format!("retained\t{}", projected.len())));
    assert!(out.report.jaccard > 0.5, "J = {}", out.report.jaccard);
}

#[test]
fn projection_approach_with_external_predictions() {
    let fx = Fixture::new(7, 30);
    // the external tagger predicts exactly three emotions for even pairs
    let mut preds = String::from("ID\tanger\tanticipation\tdisgust\tfear\tjoy\tlove\toptimism\tpessimism\tsadness\tsurprise\ttrust\n");
    for i in 0..30 {
        let p = if i % 2 == 0 { "0.9" } else { "0.1" };
        preds.push_str(&format!("pp{i:04}\t{p}\t{p}\t{p}\t0.2\t0.2\t0.2\t0.2\t0.2\t0.2\t0.2\t0.2\n"));
    }
    let mut config = target_only(&fx);
    config.approach = BTreeSet::from([Approach::P]);
    config.combined_with_target = true;
    config.data.parallel = Some(fx.path("parallel.tsv"));
    config.data.parallel_predictions = Some(fx.write("source_preds.tsv", &preds));
    let out = runner::run_experiment(&config, &fx.path("run")).unwrap();
    assert_eq!(out.n_train, 15 + 30);
}

#[test]
fn multilingual_sentence_embeddings_with_svm_and_mlp() {
    let fx = Fixture::new(8, 120);
    let mut config = target_only(&fx);
    config.approach = BTreeSet::from([Approach::M]);
    config.features = vec![FeatureKind::SentenceEmbed];
    config.data.source_train = Some(fx.path("source_train.tsv"));
    config.data.sentence_embeddings = Some(fx.path("sentence_embeddings.txt"));
    let svm = runner::run_experiment(&config, &fx.path("svm")).unwrap();
    assert!(svm.report.jaccard > 0.8, "J = {}", svm.report.jaccard);

    config.model = ModelKind::Mlp;
    config.mlp.hidden_dims = vec![32, 16];
    config.mlp.learning_rate = 1e-2;
    config.mlp.max_epochs = 60;
    let mlp = runner::run_experiment(&config, &fx.path("mlp")).unwrap();
    assert!(mlp.report.jaccard > 0.7, "J = {}", mlp.report.jaccard);
    assert_eq!(mlp.manifest.get("dev_usage"), Some("early_stopping"));
    let again = runner::run_experiment(&config, &fx.path("mlp2")).unwrap();
    assert_eq!(read(&fx.path("mlp/report.kv")), read(&fx.path("mlp2/report.kv")));
    assert_eq!(again.report, mlp.report);
}

#[test]
fn missing_sentence_vector_fails_fast() {
    let fx = Fixture::new(9, 20);
    let table = std::fs::read_to_string(fx.path("sentence_embeddings.txt")).unwrap();
    let trimmed: Vec<&str> = table.lines().filter(|l| !l.starts_with("te0000 ")).collect();
    fx.write("sentence_embeddings.txt", &(trimmed.join("\n") + "\n"));
    let mut config = target_only(&fx);
    config.features = vec![FeatureKind::SentenceEmbed];
    config.data.sentence_embeddings = Some(fx.path("sentence_embeddings.txt"));
    let err = runner::run_experiment(&config, &fx.path("run")).unwrap_err();
    assert!(err.to_string().contains("extracting features"), "{err}");
}

#[test]
fn word_embedding_features_and_model_reload() {
    let fx = Fixture::new(10, 80);
    let mut config = target_only(&fx);
    config.features = vec![FeatureKind::WordEmbed, FeatureKind::CharNgram];
    config.data.word_embeddings = Some(fx.path("word_embeddings.txt"));
    let out = runner::run_experiment(&config, &fx.path("run")).unwrap();
    let mut artifact = ModelArtifact::load(&fx.path("run/model.json")).unwrap();
    let tables = runner::Tables::load(Some(&fx.path("word_embeddings.txt")), None).unwrap();
    tables.attach(&mut artifact).unwrap();
    let test = parse_dataset(&fx.path("test.tsv"), true).unwrap();
    let preds = runner::predict_dataset(&artifact, &test).unwrap();
    assert_eq!(preds.to_tsv(), out.predictions.to_tsv());
    let mut bare = ModelArtifact::load(&fx.path("run/model.json")).unwrap();
    assert!(runner::Tables::default().attach(&mut bare).is_err());
}
