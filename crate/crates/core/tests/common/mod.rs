#![allow(dead_code)]

pub mod oracles;

use lexxfer::classifier::{HashingConfig, TrainConfig};
use lexxfer::corpus::{build_nonparallel_splits, SplitSizes};
use lexxfer::strategies::Lab;
use lexxfer::synthlab::{generate_multilingual, SynthConfig};
use lexxfer::translation::{Translator, TranslatorSpec};

pub fn langs(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// A multilingual synthetic lab whose non-base languages are noiseless
/// ciphers of the base. `n_test` groups are parallel; the rest are split
/// evenly into non-parallel train/dev blocks.
pub fn lab_from(cfg: &SynthConfig, n_test: usize, n_train: usize, n_dev: usize) -> Lab {
    let (vocab, docs) = generate_multilingual(cfg).unwrap();
    let splits = build_nonparallel_splits(
        &docs,
        &cfg.languages,
        SplitSizes {
            n_train,
            n_dev,
            n_test,
        },
        11,
    )
    .unwrap();
    Lab {
        splits,
        vocab,
        hashing: HashingConfig::default(),
    }
}

pub fn small_config() -> SynthConfig {
    SynthConfig {
        n_documents: 800,
        ..SynthConfig::default()
    }
}

pub fn small_lab() -> (SynthConfig, Lab) {
    let cfg = small_config();
    let lab = lab_from(&cfg, 160, 150, 10);
    (cfg, lab)
}

/// 4 languages, 2k documents: 400 parallel test groups, 350 + 50 per language.
pub fn standard_lab() -> (SynthConfig, Lab) {
    let cfg = SynthConfig {
        n_documents: 2000,
        ..SynthConfig::default()
    };
    let lab = lab_from(&cfg, 400, 350, 50);
    (cfg, lab)
}

pub fn cipher(cfg: &SynthConfig, noise: f64) -> Translator {
    Translator::new(&TranslatorSpec::Cipher(cfg.cipher_spec(noise))).unwrap()
}

pub fn train_config() -> TrainConfig {
    TrainConfig::default()
}
