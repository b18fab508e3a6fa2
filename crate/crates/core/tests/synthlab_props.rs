mod common;

use common::*;
use lexxfer::corpus::{label_distribution, Document};
use lexxfer::metrics::{kendall_tau, wasserstein};
use lexxfer::strategies::{run_monolingual_ft, Role};
use lexxfer::synthlab::*;
use lexxfer::translation::CipherTranslator;

#[test]
fn label_frequencies_follow_configured_weights() {
    let cfg = SynthConfig {
        n_documents: 10_000,
        n_labels: 10,
        labels_per_doc: CountRange { min: 1, max: 1 },
        tokens_per_doc: CountRange { min: 1, max: 2 },
        label_weights: LabelWeights::Zipf { exponent: 1.2 },
        ..SynthConfig::default()
    };
    let (vocab, docs) = generate_base_corpus(&cfg).unwrap();
    let expected = cfg.label_weights.resolve(cfg.n_labels).unwrap();
    let got = label_distribution(&docs, &vocab);
    for (e, g) in expected.iter().zip(&got.frequencies) {
        assert!((e - g).abs() <= 0.02, "expected {e}, got {g}");
    }
}

/// Scores each label by how many of its signature tokens a document holds.
fn frequency_scores(cfg: &SynthConfig, cipher: &CipherTranslator, doc: &Document) -> Vec<f64> {
    let pools = cfg.signature_pools();
    let mut scores = vec![0.0; cfg.n_labels];
    for tok in doc.text.split(' ') {
        let i = cipher.parse(&doc.lang, tok).unwrap().unwrap();
        for (l, pool) in pools.iter().enumerate() {
            if pool.contains(&i) {
                scores[l] += 1.0;
            }
        }
    }
    scores
}

#[test]
fn exclusive_signatures_are_perfectly_separable() {
    let cfg = small_config();
    let (vocab, docs) = generate_base_corpus(&cfg).unwrap();
    let cipher = CipherTranslator::new(cfg.cipher_spec(0.0)).unwrap();
    let rows: Vec<(Vec<f64>, Vec<usize>)> = docs
        .iter()
        .map(|d| (frequency_scores(&cfg, &cipher, d), d.label_indices(&vocab)))
        .collect();
    let rp = lexxfer::metrics::mean_r_precision(
        rows.iter().map(|(s, g)| (s.as_slice(), g.as_slice())),
    )
    .unwrap();
    assert_eq!(rp, 1.0);
}

#[test]
fn separability_grows_with_exclusivity() {
    let mut prev = 0.0;
    for exclusivity in [0.0, 0.5, 1.0] {
        let cfg = SynthConfig {
            exclusivity,
            ..small_config()
        };
        let lab = lab_from(&cfg, 160, 150, 10);
        let r = run_monolingual_ft(&lab, &langs(&["en"]), &train_config(), &[1, 2, 3]).unwrap();
        let rp = r.summary(Role::Model, "en").unwrap().mean;
        assert!(rp >= prev, "exclusivity {exclusivity}: {rp} < {prev}");
        prev = rp;
    }
}

#[test]
fn drift_injection_shifts_only_the_chosen_language() {
    let cfg = SynthConfig {
        n_documents: 10_000,
        n_labels: 10,
        ..SynthConfig::default()
    };
    let lab = lab_from(&cfg, 1000, 2000, 50);
    let base = cfg.label_weights.resolve(cfg.n_labels).unwrap();
    let test = label_distribution(lab.splits.test("en").unwrap(), &lab.vocab);
    let dist = |splits: &lexxfer::corpus::CorpusSplits, l: &str| {
        label_distribution(splits.train(l).unwrap(), &lab.vocab)
    };

    // Untouched: every language close to the test distribution.
    let taus: Vec<f64> = cfg
        .languages
        .iter()
        .map(|l| kendall_tau(&dist(&lab.splits, l), &test).unwrap())
        .collect();
    assert!(taus.iter().all(|&t| t > 0.8), "{taus:?}");

    let mild = drift_injection(&cfg, &lab.splits, "el", &mix_weights(&base, &reversed_weights(&base), 0.5)).unwrap();
    let strong = drift_injection(&cfg, &lab.splits, "el", &reversed_weights(&base)).unwrap();
    assert_eq!(strong.test, lab.splits.test);
    assert_eq!(strong.train["de"], lab.splits.train["de"]);
    lexxfer::corpus::check_split_invariants(&strong).unwrap();

    let w_mild = wasserstein(&dist(&mild, "el"), &test).unwrap();
    let w_strong = wasserstein(&dist(&strong, "el"), &test).unwrap();
    let w_plain = wasserstein(&dist(&lab.splits, "el"), &test).unwrap();
    assert!(w_plain < w_mild && w_mild < w_strong, "{w_plain} {w_mild} {w_strong}");
    assert!(kendall_tau(&dist(&strong, "el"), &test).unwrap() < 0.0);
}

#[test]
fn raw_pool_is_parallel_with_identical_label_distributions() {
    let cfg = small_config();
    let (vocab, docs) = generate_multilingual(&cfg).unwrap();
    let by_lang = |l: &str| -> Vec<Document> { docs.iter().filter(|d| d.lang == l).cloned().collect() };
    let base = by_lang("en");
    for l in &cfg.languages {
        let v = by_lang(l);
        assert_eq!(v.len(), cfg.n_documents);
        assert_eq!(label_distribution(&v, &vocab), label_distribution(&base, &vocab));
        for (a, b) in v.iter().zip(&base) {
            assert_eq!(a.source_id, b.source_id);
        }
    }
}
