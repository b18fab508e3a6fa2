//! Browser demo: three small experiments exposed through wasm-bindgen.
//!
//! Each exported function takes plain numbers and returns a JSON string, so
//! the page needs no bindings beyond `JSON.parse`.

use lexxfer::classifier::{HashingConfig, TrainConfig};
use lexxfer::corpus::{build_nonparallel_splits, label_distribution, SplitSizes};
use lexxfer::metrics::{kendall_tau, wasserstein};
use lexxfer::strategies::{
    run_crosslingual_ft, run_translate_test, run_translate_train, Lab, Role, RunResult,
};
use lexxfer::synthlab::{
    drift_injection, generate_base_corpus, generate_multilingual, mix_weights, reversed_weights,
    SynthConfig,
};
use lexxfer::translation::{corpus_translation_quality, CipherTranslator, Translator, TranslatorSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const SOURCE: &str = "en";
const TARGETS: [&str; 2] = ["de", "fr"];
const SHIFTED: &str = "fr";

fn demo_config(seed: u64, n_documents: usize) -> SynthConfig {
    SynthConfig {
        seed,
        n_documents,
        n_labels: 10,
        languages: ["de", "en", "fr"].map(String::from).to_vec(),
        ..SynthConfig::default()
    }
}

fn lab(cfg: &SynthConfig, sizes: SplitSizes) -> lexxfer::Result<Lab> {
    let (vocab, docs) = generate_multilingual(cfg)?;
    let splits = build_nonparallel_splits(&docs, &cfg.languages, sizes, cfg.seed)?;
    Ok(Lab {
        splits,
        vocab,
        hashing: HashingConfig::default(),
    })
}

#[derive(Debug, Serialize)]
pub struct NoisePoint {
    pub noise: f64,
    pub meteor: f64,
    pub sample: String,
}

#[derive(Debug, Serialize)]
pub struct NoiseCurve {
    pub original: String,
    pub points: Vec<NoisePoint>,
}

/// METEOR of a noisy cipher "MT system" against the noiseless one, for each
/// noise level, plus how the first document reads at that level.
pub fn meteor_curve(noise_levels: &[f64], n_documents: usize, seed: u64) -> lexxfer::Result<NoiseCurve> {
    let cfg = demo_config(seed, n_documents.max(1));
    let docs: Vec<String> = generate_base_corpus(&cfg)?.1.into_iter().map(|d| d.text).collect();
    let clean = CipherTranslator::new(cfg.cipher_spec(0.0))?;
    let reference = docs
        .iter()
        .map(|d| clean.translate(d, SOURCE, TARGETS[0]))
        .collect::<lexxfer::Result<Vec<_>>>()?;
    let points = noise_levels
        .iter()
        .map(|&noise| {
            let noisy = CipherTranslator::new(cfg.cipher_spec(noise))?;
            let pairs = docs
                .iter()
                .zip(&reference)
                .map(|(d, r)| Ok((noisy.translate(d, SOURCE, TARGETS[0])?, r.clone())))
                .collect::<lexxfer::Result<Vec<_>>>()?;
            Ok(NoisePoint {
                noise,
                meteor: corpus_translation_quality(&pairs)?,
                sample: pairs[0].0.clone(),
            })
        })
        .collect::<lexxfer::Result<Vec<_>>>()?;
    Ok(NoiseCurve {
        original: docs[0].clone(),
        points,
    })
}

#[derive(Debug, Serialize)]
pub struct DriftRow {
    pub lang: String,
    pub shifted: bool,
    pub tau: f64,
    pub wasserstein: f64,
    pub train_frequencies: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct DriftView {
    pub strength: f64,
    pub test_frequencies: Vec<f64>,
    pub rows: Vec<DriftRow>,
}

/// Train-vs-test label drift per language after pushing one language's
/// training labels towards the reversed distribution by `strength`.
pub fn drift_view(strength: f64, seed: u64) -> lexxfer::Result<DriftView> {
    let cfg = demo_config(seed, 3000);
    let lab = lab(
        &cfg,
        SplitSizes {
            n_train: 800,
            n_dev: 0,
            n_test: 500,
        },
    )?;
    let base = cfg.label_weights.resolve(cfg.n_labels)?;
    let weights = mix_weights(&base, &reversed_weights(&base), strength.clamp(0.0, 1.0));
    let splits = drift_injection(&cfg, &lab.splits, SHIFTED, &weights)?;
    let test = label_distribution(splits.test(SOURCE)?, &lab.vocab);
    let rows = cfg
        .languages
        .iter()
        .map(|l| {
            let train = label_distribution(splits.train(l)?, &lab.vocab);
            Ok(DriftRow {
                lang: l.clone(),
                shifted: l == SHIFTED,
                tau: kendall_tau(&train, &test)?,
                wasserstein: wasserstein(&train, &test)?,
                train_frequencies: train.frequencies,
            })
        })
        .collect::<lexxfer::Result<Vec<_>>>()?;
    Ok(DriftView {
        strength,
        test_frequencies: test.frequencies,
        rows,
    })
}

#[derive(Debug, Serialize)]
pub struct TransferRow {
    pub strategy: String,
    pub target_avg: f64,
    pub per_target: Vec<(String, f64)>,
}

#[derive(Debug, Serialize)]
pub struct TransferView {
    pub noise: f64,
    pub zero_model: f64,
    pub rows: Vec<TransferRow>,
}

/// Zero-shot transfer from English with a cipher MT system of the given
/// noise: cross-lingual fine-tuning against both translation strategies.
pub fn transfer_comparison(noise: f64, seed: u64) -> lexxfer::Result<TransferView> {
    let cfg = demo_config(seed, 900);
    let lab = lab(
        &cfg,
        SplitSizes {
            n_train: 250,
            n_dev: 0,
            n_test: 150,
        },
    )?;
    let targets: Vec<String> = TARGETS.map(String::from).to_vec();
    let translator = Translator::new(&TranslatorSpec::Cipher(cfg.cipher_spec(noise)))?;
    let train = TrainConfig {
        epochs: 10,
        ..TrainConfig::default()
    };
    let seeds = [seed];
    let runs = [
        run_crosslingual_ft(&lab, SOURCE, &targets, &train, &seeds)?,
        run_translate_test(&lab, SOURCE, &targets, &translator, &train, &seeds)?,
        run_translate_train(&lab, SOURCE, &targets, &translator, &train, &seeds)?,
    ];
    let row = |r: &RunResult| TransferRow {
        strategy: r.kind.as_str().to_string(),
        target_avg: r.target_avg(Role::Model).unwrap_or(f64::NAN),
        per_target: targets
            .iter()
            .map(|t| (t.clone(), r.summary(Role::Model, t).map_or(f64::NAN, |s| s.mean)))
            .collect(),
    };
    let zero = targets
        .iter()
        .map(|t| lab.zero_model_rp(lab.splits.test(t)?))
        .sum::<lexxfer::Result<f64>>()?
        / targets.len() as f64;
    Ok(TransferView {
        noise,
        zero_model: zero,
        rows: runs.iter().map(row).collect(),
    })
}

fn to_js<T: Serialize>(value: lexxfer::Result<T>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = meteorCurve)]
pub fn meteor_curve_js(noise_levels: Vec<f64>, n_documents: usize, seed: u64) -> Result<String, JsError> {
    to_js(meteor_curve(&noise_levels, n_documents, seed))
}

#[wasm_bindgen(js_name = driftView)]
pub fn drift_view_js(strength: f64, seed: u64) -> Result<String, JsError> {
    to_js(drift_view(strength, seed))
}

#[wasm_bindgen(js_name = transferComparison)]
pub fn transfer_comparison_js(noise: f64, seed: u64) -> Result<String, JsError> {
    to_js(transfer_comparison(noise, seed))
}
