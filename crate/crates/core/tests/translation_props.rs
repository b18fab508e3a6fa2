mod common;

use common::small_config;
use lexxfer::synthlab::{generate_base_corpus, SynthConfig};
use lexxfer::translation::*;
use proptest::prelude::*;

fn texts(cfg: &SynthConfig) -> Vec<String> {
    generate_base_corpus(cfg).unwrap().1.into_iter().map(|d| d.text).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_cipher_round_trips(seed in any::<u64>(), cipher_seed in any::<u64>(), n in 1usize..30) {
        let cfg = SynthConfig { seed, cipher_seed, n_documents: n, ..SynthConfig::default() };
        let t = CipherTranslator::new(cfg.cipher_spec(0.0)).unwrap();
        for text in texts(&cfg) {
            for lang in ["de", "el", "fr"] {
                let there = t.translate(&text, "en", lang).unwrap();
                prop_assert_ne!(&there, &text);
                prop_assert_eq!(t.translate(&there, lang, "en").unwrap(), text.clone());
            }
        }
    }

    #[test]
    fn cipher_output_is_deterministic(seed in any::<u64>(), noise in 0.0f64..=1.0) {
        let cfg = SynthConfig { seed, n_documents: 5, ..SynthConfig::default() };
        let a = CipherTranslator::new(cfg.cipher_spec(noise)).unwrap();
        let b = CipherTranslator::new(cfg.cipher_spec(noise)).unwrap();
        for text in texts(&cfg) {
            prop_assert_eq!(a.translate(&text, "en", "fr").unwrap(), b.translate(&text, "en", "fr").unwrap());
        }
    }

    #[test]
    fn meteor_is_bounded(a in "[a-d ]{0,30}", b in "[a-d ]{0,30}") {
        let s = meteor(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s.score));
        prop_assert_eq!(s.score == 0.0, s.matches == 0);
    }
}

#[test]
fn noise_rate_is_respected() {
    let cfg = SynthConfig {
        n_documents: 300,
        ..small_config()
    };
    let clean = CipherTranslator::new(cfg.cipher_spec(0.0)).unwrap();
    let noisy = CipherTranslator::new(cfg.cipher_spec(0.3)).unwrap();
    let (mut changed, mut total) = (0usize, 0usize);
    for text in texts(&cfg) {
        let a = clean.translate(&text, "en", "de").unwrap();
        let b = noisy.translate(&text, "en", "de").unwrap();
        for (x, y) in a.split(' ').zip(b.split(' ')) {
            total += 1;
            changed += usize::from(x != y);
        }
    }
    let rate = changed as f64 / total as f64;
    assert!((rate - 0.3).abs() <= 0.02, "observed corruption rate {rate}");
}

#[test]
fn corrupted_tokens_are_nested_across_noise_levels() {
    let cfg = small_config();
    let clean = CipherTranslator::new(cfg.cipher_spec(0.0)).unwrap();
    let low = CipherTranslator::new(cfg.cipher_spec(0.1)).unwrap();
    let high = CipherTranslator::new(cfg.cipher_spec(0.5)).unwrap();
    for text in texts(&cfg).iter().take(50) {
        let c = clean.translate(text, "en", "el").unwrap();
        let l = low.translate(text, "en", "el").unwrap();
        let h = high.translate(text, "en", "el").unwrap();
        for ((x, y), z) in c.split(' ').zip(l.split(' ')).zip(h.split(' ')) {
            if x != y {
                assert_eq!(y, z, "a token corrupted at p=0.1 is corrupted the same way at p=0.5");
            }
        }
    }
}

#[test]
fn meteor_degrades_with_noise_on_500_docs() {
    let cfg = SynthConfig {
        n_documents: 500,
        ..small_config()
    };
    let docs = texts(&cfg);
    let clean = CipherTranslator::new(cfg.cipher_spec(0.0)).unwrap();
    let mut prev = f64::INFINITY;
    for p in [0.0, 0.1, 0.3, 0.5] {
        let t = CipherTranslator::new(cfg.cipher_spec(p)).unwrap();
        let pairs: Vec<(String, String)> = docs
            .iter()
            .map(|d| {
                (
                    t.translate(d, "en", "fr").unwrap(),
                    clean.translate(d, "en", "fr").unwrap(),
                )
            })
            .collect();
        let q = corpus_translation_quality(&pairs).unwrap();
        assert!(q < prev, "p={p}: {q} not below {prev}");
        prev = q;
    }
}
