//! Transfer strategies: monolingual, multilingual and cross-lingual
//! fine-tuning, translate-test, translate-train and teacher-student
//! distillation with soft labels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::{
    featurize, predict_proba, train, HashingConfig, ModelParams, Provenance, SoftLabeledExample,
    TrainConfig,
};
use crate::corpus::{CorpusSplits, Document, LabelVocabulary};
use crate::error::{Error, Result};
use crate::metrics::{mean_r_precision, mean_std, MeanStd, SoftLabelReport};
use crate::translation::{Translator, TranslatorSpec};

/// Everything a strategy run reads: splits, label space and featurization.
#[derive(Debug, Clone)]
pub struct Lab {
    pub splits: CorpusSplits,
    pub vocab: LabelVocabulary,
    pub hashing: HashingConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    MonolingualFt,
    MultilingualFt,
    CrosslingualFt,
    TranslateTest,
    TranslateTrain,
    TeacherStudent,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::MonolingualFt => "monolingual-ft",
            StrategyKind::MultilingualFt => "multilingual-ft",
            StrategyKind::CrosslingualFt => "crosslingual-ft",
            StrategyKind::TranslateTest => "translate-test",
            StrategyKind::TranslateTrain => "translate-train",
            StrategyKind::TeacherStudent => "teacher-student",
        }
    }

    pub fn uses_mt(self) -> bool {
        matches!(
            self,
            StrategyKind::TranslateTest | StrategyKind::TranslateTrain | StrategyKind::TeacherStudent
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeacherMode {
    Monolingual,
    Bilingual,
    Multilingual,
}

impl TeacherMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TeacherMode::Monolingual => "monolingual",
            TeacherMode::Bilingual => "bilingual",
            TeacherMode::Multilingual => "multilingual",
        }
    }
}

/// Optional treatment of uncertain soft labels. A label is uncertain when
/// its probability lies within `delta` of 0.5; a document's uncertainty is
/// the fraction of uncertain labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftLabelFilter {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_max_uncertain")]
    pub max_uncertain_fraction: f64,
    #[serde(default)]
    pub certainty_weighting: bool,
}

fn default_delta() -> f64 {
    0.1
}
fn default_max_uncertain() -> f64 {
    0.5
}

impl Default for SoftLabelFilter {
    fn default() -> Self {
        Self {
            enabled: false,
            delta: default_delta(),
            max_uncertain_fraction: default_max_uncertain(),
            certainty_weighting: false,
        }
    }
}

impl SoftLabelFilter {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Config(format!("delta {} outside (0, 0.5)", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.max_uncertain_fraction) {
            return Err(Error::Config("max uncertain fraction outside [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub id: String,
    pub kind: StrategyKind,
    pub source: String,
    pub targets: Vec<String>,
    #[serde(default)]
    pub mode: Option<TeacherMode>,
    #[serde(default)]
    pub filter: SoftLabelFilter,
    #[serde(default)]
    pub translator: Option<TranslatorSpec>,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
}

impl StrategySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("strategy {:?}: {m}", self.id)));
        if self.targets.contains(&self.source) {
            return bad("source language listed among targets".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        let needs_targets = !matches!(
            self.kind,
            StrategyKind::MonolingualFt | StrategyKind::MultilingualFt
        );
        if needs_targets && self.targets.is_empty() {
            return bad("no target languages".into());
        }
        if self.kind.uses_mt() && self.translator.is_none() {
            return bad(format!("{} requires a translator", self.kind.as_str()));
        }
        if self.kind == StrategyKind::TeacherStudent && self.mode.is_none() {
            return bad("teacher-student requires a mode".into());
        }
        if let Some(t) = &self.translator {
            t.validate()?;
        }
        self.filter.validate()?;
        self.train.validate()
    }

    /// Source first, then targets.
    pub fn languages(&self) -> Vec<String> {
        std::iter::once(self.source.clone())
            .chain(self.targets.iter().cloned())
            .collect()
    }

    pub fn n_models(&self) -> usize {
        let t = self.targets.len();
        match (self.kind, self.mode) {
            (StrategyKind::MonolingualFt, _) => t + 1,
            (StrategyKind::TranslateTrain, _) => t + 1,
            (StrategyKind::TeacherStudent, Some(TeacherMode::Multilingual)) => 1,
            (StrategyKind::TeacherStudent, _) => t + 1,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Model,
    Teacher,
    Student,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Model => "model",
            Role::Teacher => "teacher",
            Role::Student => "student",
        }
    }
}

/// Test R-Precision (fraction) of one model on one language for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpRecord {
    pub seed: u64,
    pub lang: String,
    pub model: String,
    pub role: Role,
    pub rp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabelRecord {
    pub seed: u64,
    pub teacher: String,
    pub report: SoftLabelReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunError {
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub strategy_id: String,
    pub kind: StrategyKind,
    pub mode: Option<TeacherMode>,
    pub source: String,
    pub targets: Vec<String>,
    pub n_models: usize,
    pub uses_mt: bool,
    pub uses_bssl: bool,
    pub seeds: Vec<u64>,
    pub records: Vec<RpRecord>,
    pub soft_labels: Vec<SoftLabelRecord>,
    pub errors: Vec<RunError>,
}

impl RunResult {
    fn empty(kind: StrategyKind, source: &str, targets: &[String], seeds: &[u64]) -> Self {
        Self {
            strategy_id: kind.as_str().to_string(),
            kind,
            mode: None,
            source: source.to_string(),
            targets: targets.to_vec(),
            n_models: 1,
            uses_mt: kind.uses_mt(),
            uses_bssl: kind == StrategyKind::TeacherStudent,
            seeds: seeds.to_vec(),
            records: Vec::new(),
            soft_labels: Vec::new(),
            errors: Vec::new(),
        }
    }

    /// A result with no records yet, shaped after `spec`.
    pub fn for_spec(spec: &StrategySpec) -> Self {
        let mut r = Self::empty(spec.kind, &spec.source, &spec.targets, &spec.seeds);
        r.strategy_id = spec.id.clone();
        r.mode = spec.mode;
        r.n_models = spec.n_models();
        r
    }

    /// The role reported in the main results table.
    pub fn primary_role(&self) -> Role {
        if self.uses_bssl {
            Role::Student
        } else {
            Role::Model
        }
    }

    pub fn is_partial(&self) -> bool {
        !self.errors.is_empty()
    }

    /// One score per seed (in seed order) for `lang`: the mean over the
    /// models of that role evaluated on `lang` under the seed.
    pub fn seed_scores(&self, role: Role, lang: &str) -> Vec<f64> {
        self.seeds
            .iter()
            .filter_map(|&seed| {
                let rps: Vec<f64> = self
                    .records
                    .iter()
                    .filter(|r| r.seed == seed && r.role == role && r.lang == lang)
                    .map(|r| r.rp)
                    .collect();
                (!rps.is_empty()).then(|| rps.iter().sum::<f64>() / rps.len() as f64)
            })
            .collect()
    }

    pub fn summary(&self, role: Role, lang: &str) -> Option<MeanStd> {
        mean_std(&self.seed_scores(role, lang))
    }

    /// Unweighted mean of the per-target means; `None` if any target lacks
    /// results for `role`.
    pub fn target_avg(&self, role: Role) -> Option<f64> {
        if self.targets.is_empty() {
            return None;
        }
        let means: Option<Vec<f64>> = self
            .targets
            .iter()
            .map(|t| self.summary(role, t).map(|s| s.mean))
            .collect();
        means.map(|m| m.iter().sum::<f64>() / m.len() as f64)
    }

    /// Appends another result of the same strategy (e.g. a different seed).
    pub fn merge(&mut self, other: RunResult) {
        self.records.extend(other.records);
        self.soft_labels.extend(other.soft_labels);
        self.errors.extend(other.errors);
    }
}

/// A document text with its gold labels and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledText {
    pub doc_id: String,
    pub lang: String,
    pub text: String,
    pub gold: Vec<usize>,
    pub provenance: Provenance,
}

impl LabeledText {
    pub fn from_document(doc: &Document, vocab: &LabelVocabulary, provenance: Provenance) -> Self {
        Self {
            doc_id: doc.doc_id.clone(),
            lang: doc.lang.clone(),
            text: doc.text.clone(),
            gold: doc.label_indices(vocab),
            provenance,
        }
    }
}

impl Lab {
    pub fn labeled(&self, docs: &[Document], provenance: Provenance) -> Vec<LabeledText> {
        docs.iter()
            .map(|d| LabeledText::from_document(d, &self.vocab, provenance))
            .collect()
    }

    pub fn hard_examples(&self, items: &[LabeledText]) -> Vec<SoftLabeledExample> {
        items
            .iter()
            .map(|it| {
                SoftLabeledExample::hard(
                    featurize(&it.text, &self.hashing),
                    &it.gold,
                    self.vocab.len(),
                    it.provenance,
                    it.lang.clone(),
                )
            })
            .collect()
    }

    pub fn train_hard(&self, items: &[LabeledText], config: &TrainConfig) -> Result<ModelParams> {
        train(&self.hard_examples(items), &self.hashing, config)
    }

    /// Probability vectors for each document, optionally translating each
    /// text from its own language into `into` first.
    pub fn predictions(
        &self,
        model: &ModelParams,
        docs: &[Document],
        translate: Option<(&Translator, &str)>,
    ) -> Result<Vec<Vec<f64>>> {
        let texts: Vec<String> = match translate {
            Some((t, into)) => {
                let mut out = Vec::with_capacity(docs.len());
                let mut by_lang: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
                for (i, d) in docs.iter().enumerate() {
                    by_lang.entry(d.lang.as_str()).or_default().push(i);
                }
                out.resize(docs.len(), String::new());
                for (lang, idx) in by_lang {
                    let src: Vec<&str> = idx.iter().map(|&i| docs[i].text.as_str()).collect();
                    for (i, t) in idx.iter().zip(t.translate_many(&src, lang, into)?) {
                        out[*i] = t;
                    }
                }
                out
            }
            None => docs.iter().map(|d| d.text.clone()).collect(),
        };
        texts
            .iter()
            .map(|t| predict_proba(model, &featurize(t, &self.hashing)))
            .collect()
    }

    pub fn mean_rp(&self, docs: &[Document], predictions: &[Vec<f64>]) -> Result<f64> {
        let gold: Vec<Vec<usize>> = docs.iter().map(|d| d.label_indices(&self.vocab)).collect();
        mean_r_precision(
            predictions
                .iter()
                .zip(&gold)
                .map(|(p, g)| (p.as_slice(), g.as_slice())),
        )
    }

    pub fn evaluate(
        &self,
        model: &ModelParams,
        docs: &[Document],
        translate: Option<(&Translator, &str)>,
    ) -> Result<f64> {
        let preds = self.predictions(model, docs, translate)?;
        self.mean_rp(docs, &preds)
    }

    /// R-Precision of the all-zero model: every probability 0.5, so the
    /// ranking is canonical label order.
    pub fn zero_model_rp(&self, docs: &[Document]) -> Result<f64> {
        let flat = vec![vec![0.5; self.vocab.len()]; docs.len()];
        self.mean_rp(docs, &flat)
    }

    /// Translates labeled texts into `tgt`, keeping their labels.
    pub fn machine_translate(
        &self,
        items: &[LabeledText],
        translator: &Translator,
        tgt: &str,
    ) -> Result<Vec<LabeledText>> {
        let mut out = Vec::with_capacity(items.len());
        let mut by_lang: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, it) in items.iter().enumerate() {
            by_lang.entry(it.lang.as_str()).or_default().push(i);
        }
        let mut texts = vec![String::new(); items.len()];
        for (lang, idx) in by_lang {
            let src: Vec<&str> = idx.iter().map(|&i| items[i].text.as_str()).collect();
            for (i, t) in idx.iter().zip(translator.translate_many(&src, lang, tgt)?) {
                texts[*i] = t;
            }
        }
        for (it, text) in items.iter().zip(texts) {
            out.push(LabeledText {
                doc_id: format!("{}>{tgt}", it.doc_id),
                lang: tgt.to_string(),
                text,
                gold: it.gold.clone(),
                provenance: Provenance::MtTranslated,
            });
        }
        Ok(out)
    }
}

fn record(seed: u64, lang: &str, model: &str, role: Role, rp: f64) -> RpRecord {
    RpRecord {
        seed,
        lang: lang.to_string(),
        model: model.to_string(),
        role,
        rp,
    }
}

/// One model per (language, seed) trained on that language's labeled
/// training documents, evaluated on that language's test set.
pub fn run_monolingual_ft(
    lab: &Lab,
    langs: &[String],
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<RunResult> {
    let source = langs
        .first()
        .ok_or_else(|| Error::InvalidInput("no languages".into()))?;
    let mut result = RunResult::empty(StrategyKind::MonolingualFt, source, &langs[1..], seeds);
    result.n_models = langs.len();
    for lang in langs {
        let items = lab.labeled(lab.splits.train(lang)?, Provenance::SourceOriginal);
        let test = lab.splits.test(lang)?;
        for &seed in seeds {
            let model = lab.train_hard(&items, &config.with_seed(seed))?;
            result
                .records
                .push(record(seed, lang, lang, Role::Model, lab.evaluate(&model, test, None)?));
        }
    }
    Ok(result)
}

/// One model per seed trained on the concatenated training sets of all
/// languages, evaluated per language.
pub fn run_multilingual_ft(
    lab: &Lab,
    langs: &[String],
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<RunResult> {
    let source = langs
        .first()
        .ok_or_else(|| Error::InvalidInput("no languages".into()))?;
    let mut result = RunResult::empty(StrategyKind::MultilingualFt, source, &langs[1..], seeds);
    let mut items = Vec::new();
    for lang in langs {
        items.extend(lab.labeled(lab.splits.train(lang)?, Provenance::SourceOriginal));
    }
    for &seed in seeds {
        let model = lab.train_hard(&items, &config.with_seed(seed))?;
        for lang in langs {
            let rp = lab.evaluate(&model, lab.splits.test(lang)?, None)?;
            result.records.push(record(seed, lang, "joint", Role::Model, rp));
        }
    }
    Ok(result)
}

fn source_model(lab: &Lab, source: &str, config: &TrainConfig, seed: u64) -> Result<ModelParams> {
    let items = lab.labeled(lab.splits.train(source)?, Provenance::SourceOriginal);
    lab.train_hard(&items, &config.with_seed(seed))
}

/// Source-trained model applied directly to each target's test set.
pub fn run_crosslingual_ft(
    lab: &Lab,
    source: &str,
    targets: &[String],
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<RunResult> {
    let mut result = RunResult::empty(StrategyKind::CrosslingualFt, source, targets, seeds);
    for &seed in seeds {
        let model = source_model(lab, source, config, seed)?;
        for t in targets {
            let rp = lab.evaluate(&model, lab.splits.test(t)?, None)?;
            result.records.push(record(seed, t, source, Role::Model, rp));
        }
    }
    Ok(result)
}

/// Source-trained model applied to target test documents machine-translated
/// into the source language.
pub fn run_translate_test(
    lab: &Lab,
    source: &str,
    targets: &[String],
    translator: &Translator,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<RunResult> {
    let mut result = RunResult::empty(StrategyKind::TranslateTest, source, targets, seeds);
    for &seed in seeds {
        let model = source_model(lab, source, config, seed)?;
        for t in targets {
            let rp = lab.evaluate(&model, lab.splits.test(t)?, Some((translator, source)))?;
            result.records.push(record(seed, t, source, Role::Model, rp));
        }
    }
    Ok(result)
}

/// Per target, a model trained on the source training documents
/// machine-translated into the target (original labels), evaluated on the
/// target's own test set.
pub fn run_translate_train(
    lab: &Lab,
    source: &str,
    targets: &[String],
    translator: &Translator,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<RunResult> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("translate-train needs at least one target".into()));
    }
    let mut result = RunResult::empty(StrategyKind::TranslateTrain, source, targets, seeds);
    result.n_models = targets.len() + 1;
    let items = lab.labeled(lab.splits.train(source)?, Provenance::SourceOriginal);
    for t in targets {
        let translated = lab.machine_translate(&items, translator, t)?;
        for &seed in seeds {
            let model = lab.train_hard(&translated, &config.with_seed(seed))?;
            let rp = lab.evaluate(&model, lab.splits.test(t)?, None)?;
            result.records.push(record(seed, t, t, Role::Model, rp));
        }
    }
    Ok(result)
}

/// Which documents a teacher is trained on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TeacherScope {
    /// Source documents machine-translated into the target only.
    Monolingual(String),
    /// Source documents plus their translations into one target.
    Bilingual(String),
    /// Source documents plus their translations into every target.
    Multilingual(Vec<String>),
}

impl TeacherScope {
    pub fn targets(&self) -> Vec<String> {
        match self {
            TeacherScope::Monolingual(t) | TeacherScope::Bilingual(t) => vec![t.clone()],
            TeacherScope::Multilingual(ts) => ts.clone(),
        }
    }

    fn id(&self, source: &str) -> String {
        match self {
            TeacherScope::Monolingual(t) => format!("mt:{source}>{t}"),
            TeacherScope::Bilingual(t) => format!("{source}+{t}"),
            TeacherScope::Multilingual(ts) => format!("{source}+{}", ts.join("+")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Teacher {
    pub id: String,
    pub model: ModelParams,
    pub training: Vec<LabeledText>,
}

pub fn teacher_training_set(
    lab: &Lab,
    scope: &TeacherScope,
    source: &str,
    translator: &Translator,
) -> Result<Vec<LabeledText>> {
    let originals = lab.labeled(lab.splits.train(source)?, Provenance::SourceOriginal);
    let mut items = Vec::new();
    if !matches!(scope, TeacherScope::Monolingual(_)) {
        items.extend(originals.iter().cloned());
    }
    for t in scope.targets() {
        items.extend(lab.machine_translate(&originals, translator, &t)?);
    }
    Ok(items)
}

/// Trains a teacher on hard labels over its scope's training documents.
pub fn make_teacher(
    lab: &Lab,
    scope: &TeacherScope,
    source: &str,
    translator: &Translator,
    config: &TrainConfig,
    seed: u64,
) -> Result<Teacher> {
    let training = teacher_training_set(lab, scope, source, translator)?;
    let model = lab.train_hard(&training, &config.with_seed(seed))?;
    Ok(Teacher {
        id: scope.id(source),
        model,
        training,
    })
}

/// Target training documents with their labels set aside (kept only for
/// soft-label quality reporting).
pub fn unlabeled_pool(lab: &Lab, targets: &[String]) -> Result<Vec<LabeledText>> {
    let mut out = Vec::new();
    for t in targets {
        out.extend(lab.labeled(lab.splits.train(t)?, Provenance::TargetUnlabeled));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelBatch {
    pub teacher_id: String,
    pub examples: Vec<SoftLabeledExample>,
    /// Gold label indices per example; never used for training.
    pub gold: Vec<Vec<usize>>,
}

impl SoftLabelBatch {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Gold-vs-soft error per (provenance, language) subset.
    pub fn report(&self, n_labels: usize) -> Result<SoftLabelReport> {
        let gold: Vec<Vec<f64>> = self
            .gold
            .iter()
            .map(|g| {
                let mut v = vec![0.0; n_labels];
                g.iter().for_each(|&i| v[i] = 1.0);
                v
            })
            .collect();
        SoftLabelReport::build(self.examples.iter().zip(&gold).map(|(ex, g)| {
            (
                ex.provenance,
                ex.lang.as_str(),
                g.as_slice(),
                ex.target.as_slice(),
            )
        }))
    }
}

/// Teacher probabilities become the targets of every document, including
/// the originally labeled ones.
pub fn soft_label(lab: &Lab, teacher: &Teacher, docs: &[LabeledText]) -> Result<SoftLabelBatch> {
    let mut examples = Vec::with_capacity(docs.len());
    let mut gold = Vec::with_capacity(docs.len());
    for d in docs {
        let features = featurize(&d.text, &lab.hashing);
        let target = predict_proba(&teacher.model, &features)?;
        examples.push(SoftLabeledExample {
            features,
            target,
            weight: 1.0,
            provenance: d.provenance,
            lang: d.lang.clone(),
        });
        gold.push(d.gold.clone());
    }
    Ok(SoftLabelBatch {
        teacher_id: teacher.id.clone(),
        examples,
        gold,
    })
}

/// Fraction of labels whose probability lies within `delta` of 0.5.
pub fn uncertainty(target: &[f64], delta: f64) -> f64 {
    if target.is_empty() {
        return 0.0;
    }
    target.iter().filter(|&&s| (s - 0.5).abs() < delta).count() as f64 / target.len() as f64
}

pub fn filter_and_weight(batch: SoftLabelBatch, filter: &SoftLabelFilter) -> Result<SoftLabelBatch> {
    filter.validate()?;
    if !filter.enabled && !filter.certainty_weighting {
        return Ok(batch);
    }
    let mut examples = Vec::with_capacity(batch.examples.len());
    let mut gold = Vec::with_capacity(batch.gold.len());
    for (mut ex, g) in batch.examples.into_iter().zip(batch.gold) {
        let u = uncertainty(&ex.target, filter.delta);
        if filter.enabled && u > filter.max_uncertain_fraction {
            continue;
        }
        if filter.certainty_weighting {
            ex.weight = 1.0 - u;
        }
        examples.push(ex);
        gold.push(g);
    }
    Ok(SoftLabelBatch {
        teacher_id: batch.teacher_id,
        examples,
        gold,
    })
}

/// Soft-labels the teacher's training documents plus the unlabeled pool of
/// its targets, then trains a student from scratch on the soft targets.
fn distill(
    lab: &Lab,
    teacher: &Teacher,
    targets: &[String],
    filter: &SoftLabelFilter,
    config: &TrainConfig,
    seed: u64,
) -> Result<(ModelParams, SoftLabelReport)> {
    let mut docs = teacher.training.clone();
    docs.extend(unlabeled_pool(lab, targets)?);
    let batch = soft_label(lab, teacher, &docs)?;
    let report = batch.report(lab.vocab.len())?;
    let batch = filter_and_weight(batch, filter)?;
    if batch.is_empty() {
        return Err(Error::Empty("empty student training set".into()));
    }
    let student = train(&batch.examples, &lab.hashing, &config.with_seed(seed))?;
    Ok((student, report))
}

pub fn run_teacher_student(
    lab: &Lab,
    spec: &StrategySpec,
    translator: &Translator,
) -> Result<RunResult> {
    let mode = spec
        .mode
        .ok_or_else(|| Error::Config("teacher-student requires a mode".into()))?;
    let source = spec.source.as_str();
    let mut result = RunResult::empty(StrategyKind::TeacherStudent, source, &spec.targets, &spec.seeds);
    result.mode = Some(mode);
    result.n_models = spec.n_models();
    let scopes: Vec<TeacherScope> = match mode {
        TeacherMode::Monolingual => spec
            .targets
            .iter()
            .map(|t| TeacherScope::Monolingual(t.clone()))
            .collect(),
        TeacherMode::Bilingual => spec
            .targets
            .iter()
            .map(|t| TeacherScope::Bilingual(t.clone()))
            .collect(),
        TeacherMode::Multilingual => vec![TeacherScope::Multilingual(spec.targets.clone())],
    };
    for &seed in &spec.seeds {
        for scope in &scopes {
            let teacher = make_teacher(lab, scope, source, translator, &spec.train, seed)?;
            let targets = scope.targets();
            let (student, report) =
                distill(lab, &teacher, &targets, &spec.filter, &spec.train, seed)?;
            let mut eval_langs = targets.clone();
            if mode != TeacherMode::Monolingual {
                eval_langs.insert(0, source.to_string());
            }
            for lang in &eval_langs {
                let test = lab.splits.test(lang)?;
                let rp_t = lab.evaluate(&teacher.model, test, None)?;
                result.records.push(record(seed, lang, &teacher.id, Role::Teacher, rp_t));
                let rp_s = lab.evaluate(&student, test, None)?;
                result.records.push(record(seed, lang, &teacher.id, Role::Student, rp_s));
            }
            result.soft_labels.push(SoftLabelRecord {
                seed,
                teacher: teacher.id.clone(),
                report,
            });
        }
    }
    Ok(result)
}

/// Runs one strategy seed by seed. A failing seed is recorded in `errors`
/// and does not stop the others.
pub fn run_strategy(lab: &Lab, spec: &StrategySpec) -> Result<RunResult> {
    spec.validate()?;
    let translator = spec.translator.as_ref().map(Translator::new).transpose()?;
    let mut merged: Option<RunResult> = None;
    let mut errors = Vec::new();
    for &seed in &spec.seeds {
        match run_strategy_seed(lab, spec, translator.as_ref(), seed) {
            Ok(r) => match &mut merged {
                Some(m) => m.merge(r),
                None => merged = Some(r),
            },
            Err(e) => errors.push(RunError {
                seed,
                message: e.to_string(),
            }),
        }
    }
    let mut result = RunResult::for_spec(spec);
    if let Some(m) = merged {
        result.merge(m);
    }
    result.errors.extend(errors);
    Ok(result)
}

/// A single seed of a strategy; errors propagate.
pub fn run_strategy_seed(
    lab: &Lab,
    spec: &StrategySpec,
    translator: Option<&Translator>,
    seed: u64,
) -> Result<RunResult> {
    let seeds = [seed];
    let translator = || {
        translator.ok_or_else(|| Error::Config(format!("strategy {:?} needs a translator", spec.id)))
    };
    let mut r = match spec.kind {
        StrategyKind::MonolingualFt => run_monolingual_ft(lab, &spec.languages(), &spec.train, &seeds),
        StrategyKind::MultilingualFt => {
            run_multilingual_ft(lab, &spec.languages(), &spec.train, &seeds)
        }
        StrategyKind::CrosslingualFt => {
            run_crosslingual_ft(lab, &spec.source, &spec.targets, &spec.train, &seeds)
        }
        StrategyKind::TranslateTest => run_translate_test(
            lab,
            &spec.source,
            &spec.targets,
            translator()?,
            &spec.train,
            &seeds,
        ),
        StrategyKind::TranslateTrain => run_translate_train(
            lab,
            &spec.source,
            &spec.targets,
            translator()?,
            &spec.train,
            &seeds,
        ),
        StrategyKind::TeacherStudent => {
            let single = StrategySpec {
                seeds: seeds.to_vec(),
                ..spec.clone()
            };
            run_teacher_student(lab, &single, translator()?)
        }
    }?;
    r.strategy_id = spec.id.clone();
    r.mode = spec.mode;
    Ok(r)
}
