//! Multilingual labeled documents: loading, validation, non-parallel split
//! construction and label distributions.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// Ordered, canonical list of label identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocabulary {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelVocabulary {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Vocabulary("vocabulary must hold at least one label".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::Vocabulary(format!("empty label id at position {i}")));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::Vocabulary(format!("duplicate label id {label:?}")));
            }
        }
        Ok(Self { labels, index })
    }

    /// One label id per line; blank lines are skipped.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for label in &self.labels {
            out.push_str(label);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

/// One text in one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub source_id: String,
    pub doc_id: String,
    pub lang: String,
    pub text: String,
    #[serde(rename = "labels")]
    pub gold_labels: Vec<String>,
}

impl Document {
    /// Gold label indices in canonical vocabulary order.
    ///
    /// Panics if a label is outside the vocabulary; documents coming from
    /// [`load_corpus`] are validated.
    pub fn label_indices(&self, vocab: &LabelVocabulary) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .gold_labels
            .iter()
            .map(|l| {
                vocab
                    .index_of(l)
                    .unwrap_or_else(|| panic!("label {l:?} not in vocabulary"))
            })
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// Binary gold vector over the vocabulary.
    pub fn gold_vector(&self, vocab: &LabelVocabulary) -> Vec<f64> {
        let mut v = vec![0.0; vocab.len()];
        for i in self.label_indices(vocab) {
            v[i] = 1.0;
        }
        v
    }
}

fn validate_document(doc: &Document, vocab: &LabelVocabulary, line: usize) -> Result<()> {
    if doc.text.trim().is_empty() {
        return Err(Error::MalformedLine {
            line,
            message: "empty text".into(),
        });
    }
    let mut seen = HashSet::new();
    for label in &doc.gold_labels {
        if vocab.index_of(label).is_none() {
            return Err(Error::UnknownLabel {
                line,
                label: label.clone(),
            });
        }
        if !seen.insert(label.as_str()) {
            return Err(Error::MalformedLine {
                line,
                message: format!("label {label:?} listed twice"),
            });
        }
    }
    Ok(())
}

/// Parses JSON-lines corpus text. Line numbers in errors are 1-based.
pub fn parse_corpus(reader: impl BufRead, vocab: &LabelVocabulary) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut keys = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        validate_document(&doc, vocab, line_no)?;
        if !keys.insert((doc.source_id.clone(), doc.lang.clone())) {
            return Err(Error::DuplicateDocument {
                line: line_no,
                source_id: doc.source_id,
                lang: doc.lang,
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus(path: impl AsRef<Path>, vocab: &LabelVocabulary) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), vocab)
}

pub fn write_corpus(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        let line = serde_json::to_string(doc).expect("documents always serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
}

/// Per-language non-parallel train/dev sets and a shared parallel test set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplits {
    pub languages: Vec<String>,
    pub seed: u64,
    pub train: BTreeMap<String, Vec<Document>>,
    pub dev: BTreeMap<String, Vec<Document>>,
    pub test: BTreeMap<String, Vec<Document>>,
}

impl CorpusSplits {
    pub fn train(&self, lang: &str) -> Result<&[Document]> {
        Self::get(&self.train, lang, "train")
    }

    pub fn dev(&self, lang: &str) -> Result<&[Document]> {
        Self::get(&self.dev, lang, "dev")
    }

    pub fn test(&self, lang: &str) -> Result<&[Document]> {
        Self::get(&self.test, lang, "test")
    }

    fn get<'a>(
        map: &'a BTreeMap<String, Vec<Document>>,
        lang: &str,
        which: &str,
    ) -> Result<&'a [Document]> {
        map.get(lang)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidInput(format!("no {which} split for language {lang:?}")))
    }

    /// Doc id lists per split and language, for manifests.
    pub fn manifest(&self) -> SplitManifest {
        let ids = |m: &BTreeMap<String, Vec<Document>>| {
            m.iter()
                .map(|(l, d)| (l.clone(), d.iter().map(|d| d.doc_id.clone()).collect()))
                .collect()
        };
        SplitManifest {
            seed: self.seed,
            languages: self.languages.clone(),
            train: ids(&self.train),
            dev: ids(&self.dev),
            test: ids(&self.test),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub languages: Vec<String>,
    pub train: BTreeMap<String, Vec<String>>,
    pub dev: BTreeMap<String, Vec<String>>,
    pub test: BTreeMap<String, Vec<String>>,
}

/// Builds per-language train/dev sets that share no source group across
/// languages, plus a test set parallel across every language.
///
/// Groups are sorted by source id, shuffled with `seed`, the first `n_test`
/// groups complete in every language become the test set, and each language
/// (in lexicographic order) then takes the next `n_train + n_dev` groups
/// that carry a version in that language.
pub fn build_nonparallel_splits(
    raw: &[Document],
    languages: &[String],
    sizes: SplitSizes,
    seed: u64,
) -> Result<CorpusSplits> {
    let mut languages: Vec<String> = languages.to_vec();
    languages.sort();
    languages.dedup();
    if languages.is_empty() {
        return Err(Error::InvalidInput("no languages given".into()));
    }

    let mut groups: BTreeMap<&str, BTreeMap<&str, &Document>> = BTreeMap::new();
    for doc in raw {
        groups
            .entry(doc.source_id.as_str())
            .or_default()
            .insert(doc.lang.as_str(), doc);
    }
    let needed = sizes.n_test + languages.len() * (sizes.n_train + sizes.n_dev);
    if groups.len() < needed {
        return Err(Error::InsufficientGroups {
            needed,
            available: groups.len(),
        });
    }

    let mut order: Vec<&str> = groups.keys().copied().collect();
    order.shuffle(&mut seeding::derive_rng(seed, &[b"splits"]));

    let complete = |sid: &str| languages.iter().all(|l| groups[sid].contains_key(l.as_str()));
    let mut used = vec![false; order.len()];
    let mut test_ids = Vec::with_capacity(sizes.n_test);
    for (i, sid) in order.iter().enumerate() {
        if test_ids.len() == sizes.n_test {
            break;
        }
        if complete(sid) {
            test_ids.push(*sid);
            used[i] = true;
        }
    }
    if test_ids.len() < sizes.n_test {
        let sid = order
            .iter()
            .find(|s| !complete(s))
            .copied()
            .unwrap_or_default();
        let lang = languages
            .iter()
            .find(|l| !groups.get(sid).is_some_and(|g| g.contains_key(l.as_str())))
            .cloned()
            .unwrap_or_default();
        return Err(Error::MissingLanguageVersion {
            source_id: sid.to_string(),
            lang,
        });
    }

    let mut splits = CorpusSplits {
        languages: languages.clone(),
        seed,
        train: BTreeMap::new(),
        dev: BTreeMap::new(),
        test: BTreeMap::new(),
    };
    let block = sizes.n_train + sizes.n_dev;
    let mut cursor = 0;
    for lang in &languages {
        let mut taken = Vec::with_capacity(block);
        while taken.len() < block && cursor < order.len() {
            if !used[cursor] {
                if let Some(doc) = groups[order[cursor]].get(lang.as_str()) {
                    used[cursor] = true;
                    taken.push((*doc).clone());
                }
            }
            cursor += 1;
        }
        if taken.len() < block {
            return Err(Error::InsufficientGroups {
                needed,
                available: groups.len(),
            });
        }
        let dev = taken.split_off(sizes.n_train);
        splits.train.insert(lang.clone(), taken);
        splits.dev.insert(lang.clone(), dev);
        let test = test_ids
            .iter()
            .map(|sid| groups[sid][lang.as_str()].clone())
            .collect();
        splits.test.insert(lang.clone(), test);
    }
    Ok(splits)
}

/// Checks the split invariants, returning a description of the first
/// violation found.
pub fn check_split_invariants(splits: &CorpusSplits) -> std::result::Result<(), String> {
    let ids = |docs: &[Document]| -> BTreeSet<String> {
        docs.iter().map(|d| d.source_id.clone()).collect()
    };
    let mut pools: Vec<(String, BTreeSet<String>)> = Vec::new();
    for lang in &splits.languages {
        let train = ids(splits.train.get(lang).ok_or("missing train")?);
        let dev = ids(splits.dev.get(lang).ok_or("missing dev")?);
        let test = ids(splits.test.get(lang).ok_or("missing test")?);
        if !train.is_disjoint(&dev) || !train.is_disjoint(&test) || !dev.is_disjoint(&test) {
            return Err(format!("{lang}: train/dev/test overlap"));
        }
        let pool: BTreeSet<String> = train.union(&dev).cloned().collect();
        for (other, other_pool) in &pools {
            if !pool.is_disjoint(other_pool) {
                return Err(format!("{lang} and {other} share training groups"));
            }
        }
        pools.push((lang.clone(), pool));
    }
    let mut tests = splits.test.values().map(|d| ids(d));
    if let Some(first) = tests.next() {
        if tests.any(|t| t != first) {
            return Err("test sets are not parallel".into());
        }
    }
    Ok(())
}

/// Relative label frequencies normalized by total label assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub frequencies: Vec<f64>,
    pub n_documents: usize,
}

impl LabelDistribution {
    pub fn is_zero(&self) -> bool {
        self.frequencies.iter().all(|&f| f == 0.0)
    }
}

pub fn label_distribution(docs: &[Document], vocab: &LabelVocabulary) -> LabelDistribution {
    let mut counts = vec![0usize; vocab.len()];
    for doc in docs {
        for i in doc.label_indices(vocab) {
            counts[i] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let frequencies = if total == 0 {
        vec![0.0; vocab.len()]
    } else {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };
    LabelDistribution {
        frequencies,
        n_documents: docs.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> LabelVocabulary {
        LabelVocabulary::new(["A", "B", "C"]).unwrap()
    }

    fn doc(sid: &str, lang: &str, labels: &[&str]) -> Document {
        Document {
            source_id: sid.into(),
            doc_id: format!("{sid}-{lang}"),
            lang: lang.into(),
            text: format!("text of {sid}"),
            gold_labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn vocabulary_rejects_duplicates_and_empty() {
        assert!(LabelVocabulary::new(Vec::<String>::new()).is_err());
        assert!(LabelVocabulary::new(["a", "a"]).is_err());
        let v = vocab();
        assert_eq!(v.index_of("C"), Some(2));
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn parse_preserves_order() {
        let text = [
            r#"{"source_id":"s1","doc_id":"d1","lang":"en","text":"a","labels":["A"]}"#,
            r#"{"source_id":"s2","doc_id":"d2","lang":"en","text":"b","labels":[]}"#,
            r#"{"source_id":"s1","doc_id":"d3","lang":"fr","text":"c","labels":["B","C"]}"#,
        ]
        .join("\n");
        let docs = parse_corpus(text.as_bytes(), &vocab()).unwrap();
        let ids: Vec<_> = docs.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["d1", "d2", "d3"]);
    }

    #[test]
    fn unknown_label_names_label_and_line() {
        let text = [
            r#"{"source_id":"s1","doc_id":"d1","lang":"en","text":"a","labels":["A"]}"#,
            r#"{"source_id":"s2","doc_id":"d2","lang":"en","text":"b","labels":["x9"]}"#,
        ]
        .join("\n");
        let err = parse_corpus(text.as_bytes(), &vocab()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("x9") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        let err = parse_corpus("{not json".as_bytes(), &vocab()).unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 1, .. }));
        let dup = [
            r#"{"source_id":"s1","doc_id":"d1","lang":"en","text":"a","labels":[]}"#,
            r#"{"source_id":"s1","doc_id":"d2","lang":"en","text":"b","labels":[]}"#,
        ]
        .join("\n");
        let err = parse_corpus(dup.as_bytes(), &vocab()).unwrap_err();
        assert!(matches!(err, Error::DuplicateDocument { line: 2, .. }));
        let empty = r#"{"source_id":"s1","doc_id":"d1","lang":"en","text":"  ","labels":[]}"#;
        assert!(parse_corpus(empty.as_bytes(), &vocab()).is_err());
    }

    #[test]
    fn label_distribution_examples() {
        let v = vocab();
        let empty = label_distribution(&[], &v);
        assert_eq!(empty.frequencies, vec![0.0; 3]);
        let d = label_distribution(&[doc("1", "en", &["A"]), doc("2", "en", &["A", "B"])], &v);
        assert!((d.frequencies[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.frequencies[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.frequencies[2], 0.0);
        let point = label_distribution(&[doc("1", "en", &["B"]), doc("2", "en", &["B"])], &v);
        assert_eq!(point.frequencies, vec![0.0, 1.0, 0.0]);
    }

    fn pool(n_groups: usize, langs: &[&str]) -> Vec<Document> {
        let mut docs = Vec::new();
        for g in 0..n_groups {
            for l in langs {
                docs.push(doc(&format!("g{g:03}"), l, &["A"]));
            }
        }
        docs
    }

    #[test]
    fn ten_groups_two_languages() {
        let raw = pool(10, &["a", "b"]);
        let langs = vec!["b".to_string(), "a".to_string()];
        let sizes = SplitSizes {
            n_train: 3,
            n_dev: 1,
            n_test: 2,
        };
        let s = build_nonparallel_splits(&raw, &langs, sizes, 7).unwrap();
        check_split_invariants(&s).unwrap();
        assert_eq!(s.languages, ["a", "b"]);
        for l in ["a", "b"] {
            assert_eq!(s.train[l].len(), 3);
            assert_eq!(s.dev[l].len(), 1);
            assert_eq!(s.test[l].len(), 2);
        }
        let again = build_nonparallel_splits(&raw, &langs, sizes, 7).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn single_language_counts_exact() {
        let raw = pool(12, &["a"]);
        let sizes = SplitSizes {
            n_train: 5,
            n_dev: 2,
            n_test: 4,
        };
        let s = build_nonparallel_splits(&raw, &["a".into()], sizes, 1).unwrap();
        assert_eq!((s.train["a"].len(), s.dev["a"].len(), s.test["a"].len()), (5, 2, 4));
    }

    #[test]
    fn insufficient_groups_and_missing_versions() {
        let raw = pool(5, &["a", "b"]);
        let sizes = SplitSizes {
            n_train: 2,
            n_dev: 0,
            n_test: 2,
        };
        let err = build_nonparallel_splits(&raw, &["a".into(), "b".into()], sizes, 0).unwrap_err();
        assert!(matches!(err, Error::InsufficientGroups { needed: 6, available: 5 }));

        let mut raw = pool(4, &["a"]);
        raw.extend(pool(4, &["a", "b"]).into_iter().filter(|d| d.lang == "b").take(1));
        let sizes = SplitSizes {
            n_train: 1,
            n_dev: 0,
            n_test: 2,
        };
        let err = build_nonparallel_splits(&raw, &["a".into(), "b".into()], sizes, 0).unwrap_err();
        assert!(matches!(err, Error::MissingLanguageVersion { .. }));
    }
}
