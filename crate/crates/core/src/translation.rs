//! Pluggable translators (identity, synthetic cipher languages, remote NMT
//! service) and exact-match METEOR scoring.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;
use crate::text::tokenize;

/// Synthetic language family. Every language renders a shared token
/// universe through its own seeded permutation, with language-tagged surface
/// forms (`{lang}_{n}`), so alphabets are disjoint unless `overlap` makes a
/// language reuse the base language's surface form for a fraction of the
/// universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CipherSpec {
    pub seed: u64,
    #[serde(default)]
    pub noise: f64,
    pub universe_size: usize,
    pub base_language: String,
    /// Fraction of the universe each language shares with the base language.
    #[serde(default)]
    pub overlap: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteSpec {
    pub endpoint: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}
fn default_retries() -> u32 {
    2
}
fn default_in_flight() -> usize {
    4
}
fn default_backoff_ms() -> u64 {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TranslatorSpec {
    Identity,
    Cipher(CipherSpec),
    Remote(RemoteSpec),
}

impl TranslatorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TranslatorSpec::Identity => Ok(()),
            TranslatorSpec::Cipher(c) => {
                if !(0.0..=1.0).contains(&c.noise) {
                    return Err(Error::Config(format!("noise {} outside [0, 1]", c.noise)));
                }
                if c.universe_size == 0 || c.universe_size > u32::MAX as usize {
                    return Err(Error::Config("universe size must be positive".into()));
                }
                if c.base_language.is_empty() || c.base_language.contains('_') {
                    return Err(Error::Config("invalid base language code".into()));
                }
                if c.overlap.values().any(|f| !(0.0..=1.0).contains(f)) {
                    return Err(Error::Config("overlap fractions must lie in [0, 1]".into()));
                }
                Ok(())
            }
            TranslatorSpec::Remote(r) => {
                if r.endpoint.is_empty() {
                    return Err(Error::Config("remote endpoint is empty".into()));
                }
                if r.timeout_ms == 0 {
                    return Err(Error::Config("remote timeout must be > 0".into()));
                }
                if r.max_in_flight == 0 {
                    return Err(Error::Config("max in-flight requests must be >= 1".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, TranslatorSpec::Identity)
    }
}

/// One cipher language: universe index <-> surface number.
#[derive(Debug)]
struct Alphabet {
    forward: Vec<u32>,
    inverse: Vec<u32>,
    overlap: f64,
}

#[derive(Debug)]
pub struct CipherTranslator {
    spec: CipherSpec,
    share_keys: OnceLock<Vec<f64>>,
    alphabets: Mutex<HashMap<String, Arc<Alphabet>>>,
}

impl CipherTranslator {
    pub fn new(spec: CipherSpec) -> Result<Self> {
        TranslatorSpec::Cipher(spec.clone()).validate()?;
        Ok(Self {
            spec,
            share_keys: OnceLock::new(),
            alphabets: Mutex::new(HashMap::new()),
        })
    }

    pub fn spec(&self) -> &CipherSpec {
        &self.spec
    }

    fn share_keys(&self) -> &[f64] {
        self.share_keys.get_or_init(|| {
            let mut rng = seeding::derive_rng(self.spec.seed, &[b"share"]);
            (0..self.spec.universe_size).map(|_| rng.random::<f64>()).collect()
        })
    }

    fn alphabet(&self, lang: &str) -> Result<Arc<Alphabet>> {
        if lang.is_empty() || lang.contains('_') {
            return Err(Error::InvalidInput(format!("invalid language code {lang:?}")));
        }
        let mut cache = self.alphabets.lock().expect("alphabet cache poisoned");
        if let Some(a) = cache.get(lang) {
            return Ok(a.clone());
        }
        let u = self.spec.universe_size;
        let mut forward: Vec<u32> = (0..u as u32).collect();
        forward.shuffle(&mut seeding::derive_rng(self.spec.seed, &[b"alphabet", lang.as_bytes()]));
        let mut inverse = vec![0u32; u];
        for (i, &j) in forward.iter().enumerate() {
            inverse[j as usize] = i as u32;
        }
        let overlap = if lang == self.spec.base_language {
            0.0
        } else {
            self.spec.overlap.get(lang).copied().unwrap_or(0.0)
        };
        let a = Arc::new(Alphabet {
            forward,
            inverse,
            overlap,
        });
        cache.insert(lang.to_string(), a.clone());
        Ok(a)
    }

    fn borrows_base(&self, alpha: &Alphabet, index: usize) -> bool {
        alpha.overlap > 0.0 && self.share_keys()[index] < alpha.overlap
    }

    /// Surface form of universe token `index` in `lang`.
    pub fn surface(&self, lang: &str, index: usize) -> Result<String> {
        let alpha = self.alphabet(lang)?;
        Ok(self.surface_in(lang, &alpha, index))
    }

    fn surface_in(&self, lang: &str, alpha: &Alphabet, index: usize) -> String {
        if self.borrows_base(alpha, index) {
            let base = self
                .alphabet(&self.spec.base_language)
                .expect("base language code validated");
            format!("{}_{}", self.spec.base_language, base.forward[index])
        } else {
            format!("{lang}_{}", alpha.forward[index])
        }
    }

    /// Universe index of a surface token in `lang`, if it belongs to the
    /// language's alphabet.
    pub fn parse(&self, lang: &str, token: &str) -> Result<Option<usize>> {
        let alpha = self.alphabet(lang)?;
        Ok(self.parse_in(lang, &alpha, token))
    }

    fn parse_in(&self, lang: &str, alpha: &Alphabet, token: &str) -> Option<usize> {
        let (prefix, number) = token.rsplit_once('_')?;
        let j: usize = number.parse().ok()?;
        if j >= self.spec.universe_size {
            return None;
        }
        if prefix == lang {
            let i = alpha.inverse[j] as usize;
            (!self.borrows_base(alpha, i)).then_some(i)
        } else if prefix == self.spec.base_language && alpha.overlap > 0.0 {
            let base = self.alphabet(&self.spec.base_language).ok()?;
            let i = base.inverse[j] as usize;
            self.borrows_base(alpha, i).then_some(i)
        } else {
            None
        }
    }

    /// Maps each whitespace-separated token through the bijection, then
    /// replaces each output token by a random target-alphabet token with
    /// probability `noise`. Tokens outside the source alphabet pass through.
    pub fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String> {
        if src == tgt {
            return Err(Error::InvalidInput(format!(
                "cipher translation needs distinct languages, got {src:?} twice"
            )));
        }
        let from = self.alphabet(src)?;
        let to = self.alphabet(tgt)?;
        let mut rng = seeding::derive_rng(
            self.spec.seed,
            &[b"noise", src.as_bytes(), tgt.as_bytes(), text.as_bytes()],
        );
        let u = self.spec.universe_size;
        let mut out = Vec::new();
        for token in text.split_whitespace() {
            // Both draws are taken for every token so that corruption sets
            // are nested across noise levels.
            let roll: f64 = rng.random();
            let replacement = rng.random_range(0..u);
            let word = if roll < self.spec.noise {
                self.surface_in(tgt, &to, replacement)
            } else {
                match self.parse_in(src, &from, token) {
                    Some(i) => self.surface_in(tgt, &to, i),
                    None => token.to_string(),
                }
            };
            out.push(word);
        }
        Ok(out.join(" "))
    }

    /// Renders a sequence of universe indices as text in `lang`.
    pub fn render(&self, lang: &str, indices: &[usize]) -> Result<String> {
        let alpha = self.alphabet(lang)?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.spec.universe_size) {
            return Err(Error::InvalidInput(format!("token index {bad} outside universe")));
        }
        Ok(indices
            .iter()
            .map(|&i| self.surface_in(lang, &alpha, i))
            .collect::<Vec<_>>()
            .join(" "))
    }
}

/// A ready-to-use translator built from a [`TranslatorSpec`].
#[derive(Debug)]
pub enum Translator {
    Identity,
    Cipher(CipherTranslator),
    #[cfg(feature = "remote")]
    Remote(crate::remote::RemoteClient),
}

impl Translator {
    pub fn new(spec: &TranslatorSpec) -> Result<Self> {
        spec.validate()?;
        match spec {
            TranslatorSpec::Identity => Ok(Translator::Identity),
            TranslatorSpec::Cipher(c) => Ok(Translator::Cipher(CipherTranslator::new(c.clone())?)),
            #[cfg(feature = "remote")]
            TranslatorSpec::Remote(r) => Ok(Translator::Remote(crate::remote::RemoteClient::new(
                r.clone(),
            ))),
            #[cfg(not(feature = "remote"))]
            TranslatorSpec::Remote(_) => Err(Error::Config(
                "remote translation support is not compiled in".into(),
            )),
        }
    }

    pub fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String> {
        match self {
            Translator::Identity => Ok(text.to_string()),
            Translator::Cipher(c) => c.translate(text, src, tgt),
            #[cfg(feature = "remote")]
            Translator::Remote(r) => r.translate(text, src, tgt),
        }
    }

    /// Translates many texts; output order matches input order.
    pub fn translate_many(&self, texts: &[&str], src: &str, tgt: &str) -> Result<Vec<String>> {
        match self {
            #[cfg(feature = "remote")]
            Translator::Remote(r) => r.translate_many(texts, src, tgt),
            _ => texts.iter().map(|t| self.translate(t, src, tgt)).collect(),
        }
    }
}

/// Exact-match METEOR score with its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorScore {
    pub score: f64,
    pub matches: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmean: f64,
    pub penalty: f64,
}

impl MeteorScore {
    fn zero() -> Self {
        Self {
            score: 0.0,
            matches: 0,
            chunks: 0,
            precision: 0.0,
            recall: 0.0,
            fmean: 0.0,
            penalty: 0.0,
        }
    }
}

/// Number of chunks in an alignment: maximal runs of candidate positions
/// mapped to consecutive reference positions.
pub fn count_chunks(alignment: &[Option<usize>]) -> usize {
    let mut chunks = 0;
    for (i, a) in alignment.iter().enumerate() {
        let Some(j) = a else { continue };
        let continues = i > 0 && alignment[i - 1].is_some_and(|p| p + 1 == *j);
        if !continues {
            chunks += 1;
        }
    }
    chunks
}

/// Maximum-match unigram alignment of `candidate` onto `reference`.
///
/// Greedy left to right: extend the current chunk when possible, otherwise
/// take the unused occurrence starting the longest exact run. Repair passes
/// then move or swap single links while that removes a chunk.
pub fn align(candidate: &[String], reference: &[String]) -> Vec<Option<usize>> {
    let mut occurrences: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, tok) in reference.iter().enumerate() {
        occurrences.entry(tok.as_str()).or_default().push(j);
    }
    let mut used = vec![false; reference.len()];
    let mut alignment: Vec<Option<usize>> = vec![None; candidate.len()];
    for i in 0..candidate.len() {
        let Some(occ) = occurrences.get(candidate[i].as_str()) else {
            continue;
        };
        let extension = (i > 0)
            .then(|| alignment[i - 1])
            .flatten()
            .map(|p| p + 1)
            .filter(|&j| j < reference.len() && !used[j] && reference[j] == candidate[i]);
        let choice = extension.or_else(|| {
            let run = |j: usize| {
                (0..)
                    .take_while(|&t| {
                        i + t < candidate.len()
                            && j + t < reference.len()
                            && !used[j + t]
                            && candidate[i + t] == reference[j + t]
                    })
                    .count()
            };
            occ.iter()
                .copied()
                .filter(|&j| !used[j])
                .fold(None, |best: Option<(usize, usize)>, j| {
                    let r = run(j);
                    match best {
                        Some((_, br)) if br >= r => best,
                        _ => Some((j, r)),
                    }
                })
                .map(|(j, _)| j)
        });
        if let Some(j) = choice {
            used[j] = true;
            alignment[i] = Some(j);
        }
    }

    let mut best = count_chunks(&alignment);
    while let Some(better) = repair_step(candidate, &occurrences, &alignment, best) {
        best = count_chunks(&better);
        alignment = better;
    }
    alignment
}

/// First single-link change that lowers the chunk count: retarget a link
/// to another occurrence (swapping with its owner if taken), or hand a link
/// over to an unlinked candidate token of the same word.
fn repair_step(
    candidate: &[String],
    occurrences: &HashMap<&str, Vec<usize>>,
    alignment: &[Option<usize>],
    best: usize,
) -> Option<Vec<Option<usize>>> {
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (i, a) in alignment.iter().enumerate() {
        if let Some(j) = a {
            owner.insert(*j, i);
        }
    }
    for i in 0..candidate.len() {
        let Some(current) = alignment[i] else { continue };
        for &alt in &occurrences[candidate[i].as_str()] {
            if alt == current {
                continue;
            }
            let mut trial = alignment.to_vec();
            trial[i] = Some(alt);
            if let Some(&other) = owner.get(&alt) {
                trial[other] = Some(current);
            }
            if count_chunks(&trial) < best {
                return Some(trial);
            }
        }
        for k in 0..candidate.len() {
            if alignment[k].is_none() && candidate[k] == candidate[i] {
                let mut trial = alignment.to_vec();
                trial[k] = Some(current);
                trial[i] = None;
                if count_chunks(&trial) < best {
                    return Some(trial);
                }
            }
        }
    }
    None
}

/// Score from match count, chunk count and sentence lengths.
pub fn meteor_from_counts(matches: usize, chunks: usize, cand_len: usize, ref_len: usize) -> MeteorScore {
    if matches == 0 {
        return MeteorScore::zero();
    }
    let m = matches as f64;
    let precision = m / cand_len as f64;
    let recall = m / ref_len as f64;
    let fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    MeteorScore {
        score: fmean * (1.0 - penalty),
        matches,
        chunks,
        precision,
        recall,
        fmean,
        penalty,
    }
}

pub fn meteor(candidate: &str, reference: &str) -> MeteorScore {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    let alignment = align(&cand, &refr);
    let matches = alignment.iter().filter(|a| a.is_some()).count();
    meteor_from_counts(matches, count_chunks(&alignment), cand.len(), refr.len())
}

/// Mean METEOR over (machine translation, human reference) pairs.
pub fn corpus_translation_quality<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("no translation pairs".into()));
    }
    let total: f64 = pairs
        .iter()
        .map(|(mt, reference)| meteor(mt.as_ref(), reference.as_ref()).score)
        .sum();
    Ok(total / pairs.len() as f64)
}
