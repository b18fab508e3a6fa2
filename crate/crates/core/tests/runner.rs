use std::fs;

use lexxfer::runner::*;
use lexxfer::strategies::Role;
use lexxfer::Error;

const SMALL: &str = r#"
languages = ["en", "de", "fr"]
source = "en"
seeds = [1, 2]
workers = 3

[corpus]
kind = "synthetic"
n_documents = 600
n_labels = 8
languages = ["en", "de", "fr"]

[splits]
n_train = 140
n_dev = 10
n_test = 150

[train]
epochs = 5

[translator]
kind = "cipher"
seed = 7
noise = 0.2
universe_size = 508
base_language = "en"

[[strategies]]
id = "cross"
kind = "crosslingual-ft"

[[strategies]]
id = "tt"
kind = "translate-test"

[[strategies]]
id = "bi"
kind = "teacher-student"
mode = "bilingual"
"#;

fn small() -> ExperimentConfig {
    let c = ExperimentConfig::from_toml(SMALL).unwrap();
    c.validate_for_run().unwrap();
    c
}

#[test]
fn defaults_fill_in() {
    let c = small();
    assert_eq!(c.splits.seed, 1);
    let specs = c.strategy_specs().unwrap();
    assert_eq!(specs[0].targets, vec!["de", "fr"]);
    assert_eq!(specs[0].seeds, vec![1, 2]);
    assert!(specs[0].translator.is_none());
    assert!(specs[1].translator.is_some());
    let min = ExperimentConfig::from_toml(
        "languages=['en']\nsource='en'\n[corpus]\nkind='file'\npath='c.jsonl'\nlabels='l.txt'\n[splits]\nn_train=1\nn_dev=0\nn_test=1\n",
    )
    .unwrap();
    assert_eq!(min.seeds, vec![1, 2, 3]);
}

#[test]
fn config_errors() {
    let empty = ExperimentConfig {
        strategies: vec![],
        ..small()
    };
    assert!(matches!(empty.validate_for_run(), Err(Error::Config(_))));
    let unknown = SMALL.replace("workers = 3", "workers = 3\nbogus = 1");
    assert!(ExperimentConfig::from_toml(&unknown).is_err());
    let mut c = small();
    c.source = "xx".into();
    assert!(c.validate().is_err());
    let mut c = small();
    c.strategies[0].targets = Some(vec!["it".into()]);
    assert!(c.validate().is_err());
    let mut c = small();
    c.translator = None;
    assert!(c.validate().is_err(), "translate-test without translator");
}

#[test]
fn run_writes_reports_and_aggregates_two_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let c = small();
    let outcome = cmd_run(&c, dir.path()).unwrap();
    assert!(!outcome.is_partial());
    for r in &outcome.results {
        for lang in ["de", "fr"] {
            assert_eq!(r.summary(r.primary_role(), lang).unwrap().n, 2);
        }
    }
    let md = fs::read_to_string(dir.path().join("results.md")).unwrap();
    assert!(md.contains("| Model | #M | MT | BS+SL | en | de | fr | Target Avg |"));
    assert!(md.contains("bi (student)") && md.contains("bi (teacher)"));
    assert!(md.contains(&c.hash()));
    assert!(!md.contains("## Errors"));
    let summary = fs::read_to_string(dir.path().join("results_summary.csv")).unwrap();
    assert!(summary.contains(&format!("# config-sha256 {}", c.hash())));

    // Target Avg recomputes exactly from the per-language cells, and each
    // cell from the raw records.
    let records = fs::read_to_string(dir.path().join("results_records.csv")).unwrap();
    for r in &outcome.results {
        let role = r.primary_role();
        let mut means = vec![];
        for lang in ["de", "fr"] {
            let raw: Vec<f64> = records
                .lines()
                .filter(|l| !l.starts_with('#'))
                .map(|l| l.split(',').collect::<Vec<_>>())
                .filter(|f| f[0] == r.strategy_id && f[5] == role.as_str() && f[6] == lang)
                .map(|f| f[7].parse().unwrap())
                .collect();
            assert_eq!(raw.len(), 2);
            let m = (raw[0] + raw[1]) / 2.0;
            let sd = ((raw[0] - m).powi(2) + (raw[1] - m).powi(2)).sqrt();
            let s = r.summary(role, lang).unwrap();
            assert!((s.mean - m).abs() < 1e-15 && (s.std - sd).abs() < 1e-15);
            means.push(s.mean);
        }
        assert_eq!(r.target_avg(role).unwrap(), (means[0] + means[1]) / 2.0);
    }
    let soft = fs::read_to_string(dir.path().join("softlabels.csv")).unwrap();
    assert!(soft.contains("target-unlabeled"));
}

#[test]
fn rerun_is_byte_identical() {
    let c = small();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_run(&c, a.path()).unwrap();
    let c1 = ExperimentConfig {
        workers: Some(1),
        ..c.clone()
    };
    // Worker count only changes scheduling, not the results.
    assert_ne!(c.hash(), c1.hash());
    cmd_run(&c, b.path()).unwrap();
    for f in ["results_records.csv", "results_summary.csv", "results.md", "softlabels.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let d = tempfile::tempdir().unwrap();
    let one = cmd_run(&c1, d.path()).unwrap();
    let two = cmd_run(&c, a.path()).unwrap();
    for (x, y) in one.results.iter().zip(&two.results) {
        assert_eq!(x.records, y.records);
    }
}

#[test]
fn failing_runs_are_reported_without_stopping_siblings() {
    let mut c = small();
    c.strategies[2].filter.enabled = true;
    c.strategies[2].filter.delta = 0.49999;
    c.strategies[2].filter.max_uncertain_fraction = 0.0;
    c.strategies[2].train = Some(lexxfer::classifier::TrainConfig {
        learning_rate: 0.01,
        epochs: 1,
        ..Default::default()
    });
    let dir = tempfile::tempdir().unwrap();
    let outcome = cmd_run(&c, dir.path()).unwrap();
    assert!(outcome.is_partial());
    assert_eq!(outcome.results[2].errors.len(), 2);
    assert!(outcome.results[0].summary(Role::Model, "de").is_some());
    let errors = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert_eq!(errors.lines().filter(|l| l.starts_with("bi,")).count(), 2);
    let md = fs::read_to_string(dir.path().join("results.md")).unwrap();
    assert!(md.contains("## Errors") && md.contains("empty student training set"));
}

#[test]
fn seed_override_replaces_every_seed_list() {
    let mut c = small();
    c.strategies[0].seeds = Some(vec![9]);
    c.override_seeds(&[4]);
    assert!(c.strategy_specs().unwrap().iter().all(|s| s.seeds == vec![4]));
}

#[test]
fn endpoint_override_reaches_remote_translators() {
    let text = SMALL.replace(
        "kind = \"cipher\"\nseed = 7\nnoise = 0.2\nuniverse_size = 508\nbase_language = \"en\"",
        "kind = \"remote\"\nendpoint = \"http://a\"",
    );
    let mut c = ExperimentConfig::from_toml(&text).unwrap();
    c.override_endpoint("http://b:1");
    match c.translator.unwrap() {
        lexxfer::translation::TranslatorSpec::Remote(r) => assert_eq!(r.endpoint, "http://b:1"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn synth_split_and_file_corpus_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let c = small();
    let files = cmd_synth(&c, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    let manifest_synth = cmd_split(&c, &dir.path().join("a")).unwrap();

    let cfg_path = dir.path().join("file.toml");
    let file_cfg = SMALL
        .replace(
            "kind = \"synthetic\"\nn_documents = 600\nn_labels = 8\nlanguages = [\"en\", \"de\", \"fr\"]",
            "kind = \"file\"\npath = \"corpus.jsonl\"\nlabels = \"labels.txt\"",
        );
    fs::write(&cfg_path, file_cfg).unwrap();
    let loaded = ExperimentConfig::load(&cfg_path).unwrap();
    let manifest_file = cmd_split(&loaded, &dir.path().join("b")).unwrap();
    assert_eq!(
        fs::read(manifest_synth).unwrap(),
        fs::read(manifest_file).unwrap()
    );
}

#[test]
fn drift_report_files() {
    let mut c = small();
    c.drift = Some(DriftConfig {
        lang: "fr".into(),
        strength: 1.0,
        weights: None,
    });
    c.validate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (report, files) = cmd_drift(&c, dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let shifted = report.get("test", "fr").unwrap();
    let plain = report.get("test", "de").unwrap();
    assert!(shifted.kendall_tau.unwrap() < plain.kendall_tau.unwrap());
    assert!(shifted.wasserstein > plain.wasserstein);
    let svg = fs::read_to_string(dir.path().join("drift.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let md = fs::read_to_string(dir.path().join("drift.md")).unwrap();
    assert!(md.contains("Kendall τ") && md.contains("| test |"));
}

#[test]
fn mtquality_table() {
    let c = small();
    let dir = tempfile::tempdir().unwrap();
    let (rows, _) = cmd_mtquality(&c, dir.path()).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r.meteor > 0.0 && r.meteor < 1.0, "{r:?}");
    }
    let md = fs::read_to_string(dir.path().join("mtquality.md")).unwrap();
    assert!(md.contains("| en→de |"));
}

#[test]
fn softlabels_command_selects_teacher_student() {
    let c = small();
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_softlabels(&c, Some("bi"), dir.path()).unwrap();
    assert_eq!(out.results.len(), 1);
    let md = fs::read_to_string(dir.path().join("softlabels.md")).unwrap();
    assert!(md.contains("source-original") && md.contains("mt-translated"));
    assert!(cmd_softlabels(&c, Some("cross"), dir.path()).is_err());
}
