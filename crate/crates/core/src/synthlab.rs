//! Label-conditioned synthetic corpora rendered into cipher languages.
//!
//! Each label owns a pool of signature tokens; a document draws its gold
//! labels, then emits tokens that are either signature tokens of one of its
//! labels or background tokens. `exclusivity` sets how much of each pool is
//! private to its label (the rest comes from a pool shared by all labels).

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusSplits, Document, LabelVocabulary};
use crate::error::{Error, Result};
use crate::seeding;
use crate::translation::{CipherSpec, CipherTranslator, Translator, TranslatorSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LabelWeights {
    Uniform,
    Zipf { exponent: f64 },
    Explicit { weights: Vec<f64> },
}

impl LabelWeights {
    /// Normalized weights for `n` labels.
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        let raw: Vec<f64> = match self {
            LabelWeights::Uniform => vec![1.0; n],
            LabelWeights::Zipf { exponent } => {
                (1..=n).map(|r| (r as f64).powf(-exponent)).collect()
            }
            LabelWeights::Explicit { weights } => {
                if weights.len() != n {
                    return Err(Error::Config(format!(
                        "{} label weights given for {n} labels",
                        weights.len()
                    )));
                }
                weights.clone()
            }
        };
        normalize_weights(&raw)
    }
}

pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Config("label weights must be finite and >= 0".into()));
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::Config("label weights are all zero".into()));
    }
    Ok(raw.iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_labels: usize,
    pub labels_per_doc: CountRange,
    /// Optional weights over `labels_per_doc.min..=max`.
    #[serde(default)]
    pub labels_per_doc_weights: Option<Vec<f64>>,
    pub tokens_per_doc: CountRange,
    pub signature_pool_size: usize,
    pub exclusivity: f64,
    /// Probability that a token is a signature token of one of the labels.
    pub signal_ratio: f64,
    pub background_pool_size: usize,
    pub label_weights: LabelWeights,
    pub base_language: String,
    /// Every language of the corpus, including the base language.
    pub languages: Vec<String>,
    pub cipher_seed: u64,
    #[serde(default)]
    pub overlap: BTreeMap<String, f64>,
    pub n_documents: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_labels: 20,
            labels_per_doc: CountRange { min: 1, max: 3 },
            labels_per_doc_weights: None,
            tokens_per_doc: CountRange { min: 40, max: 80 },
            signature_pool_size: 12,
            exclusivity: 1.0,
            signal_ratio: 0.5,
            background_pool_size: 400,
            label_weights: LabelWeights::Zipf { exponent: 0.7 },
            base_language: "en".into(),
            languages: ["de", "el", "en", "fr"].map(String::from).to_vec(),
            cipher_seed: 7,
            overlap: BTreeMap::new(),
            n_documents: 2000,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_labels < 2 {
            return bad("synthetic corpora need at least two labels");
        }
        let lpd = self.labels_per_doc;
        if lpd.min == 0 || lpd.min > lpd.max {
            return bad("labels per document must satisfy 1 <= min <= max");
        }
        if lpd.max > self.n_labels {
            return bad("max labels per document exceeds the number of labels");
        }
        if let Some(w) = &self.labels_per_doc_weights {
            if w.len() != lpd.max - lpd.min + 1 {
                return bad("labels_per_doc_weights must cover min..=max");
            }
            normalize_weights(w)?;
        }
        let tpd = self.tokens_per_doc;
        if tpd.min == 0 || tpd.min > tpd.max {
            return bad("tokens per document must satisfy 1 <= min <= max");
        }
        if self.signature_pool_size == 0 || self.background_pool_size == 0 {
            return bad("token pools must be non-empty");
        }
        if !(0.0..=1.0).contains(&self.exclusivity) || !(0.0..=1.0).contains(&self.signal_ratio) {
            return bad("exclusivity and signal_ratio must lie in [0, 1]");
        }
        if self.n_documents == 0 {
            return bad("n_documents must be positive");
        }
        if !self.languages.contains(&self.base_language) {
            return bad("base language must be listed in languages");
        }
        self.label_weights.resolve(self.n_labels)?;
        TranslatorSpec::Cipher(self.cipher_spec(0.0)).validate()
    }

    pub fn universe_size(&self) -> usize {
        (self.n_labels + 1) * self.signature_pool_size + self.background_pool_size
    }

    /// Cipher family matching this corpus's languages, with the given noise.
    pub fn cipher_spec(&self, noise: f64) -> CipherSpec {
        CipherSpec {
            seed: self.cipher_seed,
            noise,
            universe_size: self.universe_size(),
            base_language: self.base_language.clone(),
            overlap: self.overlap.clone(),
        }
    }

    pub fn vocabulary(&self) -> LabelVocabulary {
        let width = (self.n_labels - 1).to_string().len();
        LabelVocabulary::new((0..self.n_labels).map(|i| format!("L{i:0width$}")))
            .expect("generated label ids are unique")
    }

    fn exclusive_count(&self) -> usize {
        (self.exclusivity * self.signature_pool_size as f64).round() as usize
    }

    /// Universe indices of each label's signature pool.
    pub fn signature_pools(&self) -> Vec<Vec<usize>> {
        let p = self.signature_pool_size;
        let shared_base = self.n_labels * p;
        let e = self.exclusive_count();
        (0..self.n_labels)
            .map(|l| {
                let mut pool: Vec<usize> = (l * p..l * p + e).collect();
                let mut rng = seeding::derive_rng(self.seed, &[b"pool", &(l as u64).to_le_bytes()]);
                pool.extend(sample(&mut rng, p, p - e).into_iter().map(|k| shared_base + k));
                pool
            })
            .collect()
    }

    fn background_base(&self) -> usize {
        (self.n_labels + 1) * self.signature_pool_size
    }
}

/// Draws gold labels and token indices for one document.
struct DocSampler<'a> {
    config: &'a SynthConfig,
    label_weights: Vec<f64>,
    count_weights: Option<Vec<f64>>,
    pools: Vec<Vec<usize>>,
}

impl<'a> DocSampler<'a> {
    fn new(config: &'a SynthConfig, label_weights: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let count_weights = config
            .labels_per_doc_weights
            .as_ref()
            .map(|w| normalize_weights(w))
            .transpose()?;
        Ok(Self {
            config,
            label_weights,
            count_weights,
            pools: config.signature_pools(),
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
        let c = self.config;
        let lpd = c.labels_per_doc;
        let k = match &self.count_weights {
            Some(w) => lpd.min + categorical(rng, w),
            None => rng.random_range(lpd.min..=lpd.max),
        };
        let mut weights = self.label_weights.clone();
        let mut labels = Vec::with_capacity(k);
        for _ in 0..k {
            if weights.iter().all(|&w| w == 0.0) {
                break;
            }
            let l = categorical(rng, &weights);
            weights[l] = 0.0;
            labels.push(l);
        }
        labels.sort_unstable();
        let n_tokens = rng.random_range(c.tokens_per_doc.min..=c.tokens_per_doc.max);
        let bg = c.background_base();
        let tokens = (0..n_tokens)
            .map(|_| {
                if rng.random::<f64>() < c.signal_ratio {
                    let pool = &self.pools[labels[rng.random_range(0..labels.len())]];
                    pool[rng.random_range(0..pool.len())]
                } else {
                    bg + rng.random_range(0..c.background_pool_size)
                }
            })
            .collect();
        (labels, tokens)
    }
}

/// Index drawn proportionally to `weights` (which need not be normalized).
fn categorical(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

pub fn source_id(index: usize) -> String {
    format!("s{index:06}")
}

fn make_document(
    vocab: &LabelVocabulary,
    sid: String,
    lang: &str,
    text: String,
    labels: &[usize],
) -> Document {
    Document {
        doc_id: format!("{sid}-{lang}"),
        source_id: sid,
        lang: lang.to_string(),
        text,
        gold_labels: labels.iter().map(|&l| vocab.label(l).to_string()).collect(),
    }
}

/// Base-language corpus; one document per source id, deterministic in the
/// seed and independent of generation order.
pub fn generate_base_corpus(config: &SynthConfig) -> Result<(LabelVocabulary, Vec<Document>)> {
    let sampler = DocSampler::new(config, config.label_weights.resolve(config.n_labels)?)?;
    let vocab = config.vocabulary();
    let cipher = CipherTranslator::new(config.cipher_spec(0.0))?;
    let docs = (0..config.n_documents)
        .map(|i| {
            let mut rng = seeding::derive_rng(config.seed, &[b"doc", &(i as u64).to_le_bytes()]);
            let (labels, tokens) = sampler.sample(&mut rng);
            let text = cipher.render(&config.base_language, &tokens)?;
            Ok(make_document(&vocab, source_id(i), &config.base_language, text, &labels))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((vocab, docs))
}

/// Adds a version of every base document in every other language, using
/// the translator given for that language. Output is grouped by source id.
pub fn derive_language_versions(
    base: &[Document],
    languages: &[String],
    specs: &BTreeMap<String, TranslatorSpec>,
) -> Result<Vec<Document>> {
    let mut translators = BTreeMap::new();
    let base_lang = base.first().map(|d| d.lang.clone());
    for lang in languages {
        if Some(lang) == base_lang.as_ref() {
            continue;
        }
        let spec = specs
            .get(lang)
            .ok_or_else(|| Error::Config(format!("no translator spec for language {lang:?}")))?;
        translators.insert(lang.clone(), Translator::new(spec)?);
    }
    let mut out = Vec::with_capacity(base.len() * (translators.len() + 1));
    for doc in base {
        out.push(doc.clone());
        for (lang, t) in &translators {
            let text = t.translate(&doc.text, &doc.lang, lang)?;
            out.push(Document {
                doc_id: format!("{}-{lang}", doc.source_id),
                lang: lang.clone(),
                text,
                ..doc.clone()
            });
        }
    }
    Ok(out)
}

/// Full multilingual pool: base corpus plus noiseless cipher versions in
/// every configured language.
pub fn generate_multilingual(config: &SynthConfig) -> Result<(LabelVocabulary, Vec<Document>)> {
    let (vocab, base) = generate_base_corpus(config)?;
    let spec = TranslatorSpec::Cipher(config.cipher_spec(0.0));
    let specs = config
        .languages
        .iter()
        .map(|l| (l.clone(), spec.clone()))
        .collect();
    let docs = derive_language_versions(&base, &config.languages, &specs)?;
    Ok((vocab, docs))
}

/// Label weights with the rank order reversed (rarest label most common).
pub fn reversed_weights(weights: &[f64]) -> Vec<f64> {
    weights.iter().rev().copied().collect()
}

/// `(1 - strength) * base + strength * shifted`.
pub fn mix_weights(base: &[f64], shifted: &[f64], strength: f64) -> Vec<f64> {
    base.iter()
        .zip(shifted)
        .map(|(a, b)| (1.0 - strength) * a + strength * b)
        .collect()
}

/// Regenerates the training documents of `lang` under different label
/// weights, keeping their source ids. Test and dev sets are untouched, so
/// the split invariants still hold.
pub fn drift_injection(
    config: &SynthConfig,
    splits: &CorpusSplits,
    lang: &str,
    label_weights: &[f64],
) -> Result<CorpusSplits> {
    if label_weights.len() != config.n_labels {
        return Err(Error::Config(format!(
            "{} drift weights given for {} labels",
            label_weights.len(),
            config.n_labels
        )));
    }
    let weights = normalize_weights(label_weights)?;
    let train = splits.train(lang)?;
    let sampler = DocSampler::new(config, weights)?;
    let vocab = config.vocabulary();
    let cipher = CipherTranslator::new(config.cipher_spec(0.0))?;
    let regenerated = train
        .iter()
        .map(|doc| {
            let mut rng =
                seeding::derive_rng(config.seed, &[b"drift", doc.source_id.as_bytes()]);
            let (labels, tokens) = sampler.sample(&mut rng);
            let text = cipher.render(lang, &tokens)?;
            Ok(make_document(&vocab, doc.source_id.clone(), lang, text, &labels))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = splits.clone();
    out.train.insert(lang.to_string(), regenerated);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::label_distribution;

    fn small() -> SynthConfig {
        SynthConfig {
            n_documents: 50,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = small();
        assert_eq!(generate_base_corpus(&c).unwrap(), generate_base_corpus(&c).unwrap());
        let other = SynthConfig { seed: 2, ..c.clone() };
        assert_ne!(generate_base_corpus(&c).unwrap().1, generate_base_corpus(&other).unwrap().1);
    }

    #[test]
    fn infeasible_configs_rejected() {
        let c = SynthConfig {
            labels_per_doc: CountRange { min: 1, max: 30 },
            ..small()
        };
        assert!(generate_base_corpus(&c).is_err());
        let c = SynthConfig {
            n_labels: 1,
            labels_per_doc: CountRange { min: 1, max: 1 },
            ..small()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn exclusive_pools_are_disjoint() {
        let pools = small().signature_pools();
        for (i, a) in pools.iter().enumerate() {
            for b in &pools[i + 1..] {
                assert!(a.iter().all(|t| !b.contains(t)));
            }
        }
        let shared = SynthConfig {
            exclusivity: 0.0,
            ..small()
        }
        .signature_pools();
        assert!(shared.iter().all(|p| p.iter().all(|&t| (20 * 12..21 * 12).contains(&t))));
    }

    #[test]
    fn language_versions_are_parallel_and_label_preserving() {
        let c = small();
        let (vocab, docs) = generate_multilingual(&c).unwrap();
        assert_eq!(docs.len(), 50 * 4);
        for lang in &c.languages {
            let subset: Vec<_> = docs.iter().filter(|d| &d.lang == lang).cloned().collect();
            assert_eq!(subset.len(), 50);
            let base: Vec<_> = docs.iter().filter(|d| d.lang == "en").cloned().collect();
            assert_eq!(label_distribution(&subset, &vocab), label_distribution(&base, &vocab));
        }
        let (_, base) = generate_base_corpus(&c).unwrap();
        let err = derive_language_versions(&base, &c.languages, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn identity_version_is_a_copy() {
        let (_, base) = generate_base_corpus(&small()).unwrap();
        let mut specs = BTreeMap::new();
        specs.insert("xx".to_string(), TranslatorSpec::Identity);
        let docs = derive_language_versions(&base, &["en".into(), "xx".into()], &specs).unwrap();
        for pair in docs.chunks(2) {
            assert_eq!(pair[0].text, pair[1].text);
            assert_eq!(pair[1].lang, "xx");
        }
    }

    #[test]
    fn reversed_and_mixed_weights() {
        assert_eq!(reversed_weights(&[0.5, 0.3, 0.2]), vec![0.2, 0.3, 0.5]);
        let m = mix_weights(&[1.0, 0.0], &[0.0, 1.0], 0.25);
        assert_eq!(m, vec![0.75, 0.25]);
        assert!(normalize_weights(&[0.0, 0.0]).is_err());
    }
}
