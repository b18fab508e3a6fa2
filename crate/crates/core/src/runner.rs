//! Experiment configuration, execution and report emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{HashingConfig, TrainConfig};
use crate::corpus::{
    build_nonparallel_splits, label_distribution, load_corpus, write_corpus, Document,
    LabelVocabulary, SplitSizes,
};
use crate::error::{Error, Result};
use crate::metrics::{mean_std, DriftReport, TEST_KEY};
use crate::strategies::{
    run_strategy_seed, Lab, Role, RunError, RunResult, SoftLabelFilter, StrategyKind,
    StrategySpec, TeacherMode,
};
use crate::synthlab::{
    drift_injection, generate_multilingual, mix_weights, reversed_weights, SynthConfig,
};
use crate::translation::{meteor, Translator, TranslatorSpec};

/// Overrides the endpoint of every remote translator in the config.
pub const ENDPOINT_ENV: &str = "LEXXFER_NMT_ENDPOINT";

pub const DEFAULT_SEEDS: [u64; 3] = [1, 2, 3];

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_split_seed() -> u64 {
    1
}

fn default_strength() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorpusSource {
    Synthetic(SynthConfig),
    /// A JSON-lines corpus and its label vocabulary (one label per line).
    /// Relative paths are resolved against the config file's directory.
    File { path: PathBuf, labels: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    #[serde(default = "default_split_seed")]
    pub seed: u64,
}

impl SplitConfig {
    pub fn sizes(&self) -> SplitSizes {
        SplitSizes {
            n_train: self.n_train,
            n_dev: self.n_dev,
            n_test: self.n_test,
        }
    }
}

/// Resamples one language's training documents under shifted label
/// weights (synthetic corpora only). Without explicit `weights` the
/// configured weights are reversed; `strength` mixes base and shifted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub lang: String,
    #[serde(default = "default_strength")]
    pub strength: f64,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

/// A strategy as written in the config; omitted fields fall back to the
/// experiment-level values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyEntry {
    pub id: String,
    pub kind: StrategyKind,
    #[serde(default)]
    pub targets: Option<Vec<String>>,
    #[serde(default)]
    pub mode: Option<TeacherMode>,
    #[serde(default)]
    pub filter: SoftLabelFilter,
    #[serde(default)]
    pub translator: Option<TranslatorSpec>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub languages: Vec<String>,
    pub source: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Worker threads for (strategy, seed) runs; defaults to the number of
    /// available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    pub corpus: CorpusSource,
    pub splits: SplitConfig,
    #[serde(default)]
    pub hashing: HashingConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub translator: Option<TranslatorSpec>,
    #[serde(default)]
    pub drift: Option<DriftConfig>,
    #[serde(default)]
    pub strategies: Vec<StrategyEntry>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads, resolves relative paths and applies the endpoint override.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let CorpusSource::File { path, labels } = &mut cfg.corpus {
            *path = base.join(&*path);
            *labels = base.join(&*labels);
        }
        if let Ok(endpoint) = std::env::var(ENDPOINT_ENV) {
            cfg.override_endpoint(&endpoint);
        }
        Ok(cfg)
    }

    pub fn override_endpoint(&mut self, endpoint: &str) {
        let specs = self
            .translator
            .iter_mut()
            .chain(self.strategies.iter_mut().filter_map(|s| s.translator.as_mut()));
        for spec in specs {
            if let TranslatorSpec::Remote(r) = spec {
                r.endpoint = endpoint.to_string();
            }
        }
    }

    /// Replaces the experiment seeds and every per-strategy seed list.
    pub fn override_seeds(&mut self, seeds: &[u64]) {
        self.seeds = seeds.to_vec();
        for s in &mut self.strategies {
            s.seeds = None;
        }
    }

    /// Checks everything that does not need the corpus.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.languages.is_empty() {
            return bad("no languages configured".into());
        }
        let mut sorted = self.languages.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.languages.len() {
            return bad("duplicate language codes".into());
        }
        if !self.languages.contains(&self.source) {
            return bad(format!("source language {:?} not in languages", self.source));
        }
        if self.seeds.is_empty() {
            return bad("seeds must be non-empty".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        self.hashing.validate()?;
        self.train.validate()?;
        if let Some(t) = &self.translator {
            t.validate()?;
        }
        match &self.corpus {
            CorpusSource::Synthetic(s) => {
                s.validate()?;
                let mut synth = s.languages.clone();
                synth.sort();
                if synth != sorted {
                    return bad("synthetic corpus languages differ from experiment languages".into());
                }
            }
            CorpusSource::File { .. } => {
                if self.drift.is_some() {
                    return bad("drift injection needs a synthetic corpus".into());
                }
            }
        }
        if let Some(d) = &self.drift {
            if !self.languages.contains(&d.lang) {
                return bad(format!("drift language {:?} not in languages", d.lang));
            }
            if !(0.0..=1.0).contains(&d.strength) {
                return bad("drift strength outside [0, 1]".into());
            }
        }
        let mut ids: Vec<&str> = self.strategies.iter().map(|s| s.id.as_str()).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate strategy ids".into());
        }
        for spec in self.strategy_specs()? {
            for lang in spec.languages() {
                if !self.languages.contains(&lang) {
                    return bad(format!("strategy {:?} uses unknown language {lang:?}", spec.id));
                }
            }
            spec.validate()?;
        }
        Ok(())
    }

    /// Validation for `run`: additionally requires strategies.
    pub fn validate_for_run(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("strategy list is empty".into()));
        }
        self.validate()
    }

    pub fn strategy_specs(&self) -> Result<Vec<StrategySpec>> {
        self.strategies
            .iter()
            .map(|e| {
                let targets = e.targets.clone().unwrap_or_else(|| {
                    self.languages
                        .iter()
                        .filter(|l| **l != self.source)
                        .cloned()
                        .collect()
                });
                let translator = if e.kind.uses_mt() {
                    e.translator.clone().or_else(|| self.translator.clone())
                } else {
                    e.translator.clone()
                };
                Ok(StrategySpec {
                    id: e.id.clone(),
                    kind: e.kind,
                    source: self.source.clone(),
                    targets,
                    mode: e.mode,
                    filter: e.filter.clone(),
                    translator,
                    train: e.train.clone().unwrap_or_else(|| self.train.clone()),
                    seeds: e.seeds.clone().unwrap_or_else(|| self.seeds.clone()),
                })
            })
            .collect()
    }

    /// SHA-256 over the canonical JSON form, ignoring the output directory
    /// so the same experiment hashes identically wherever it is written.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Lines written at the top of every report.
pub fn provenance_lines(config: &ExperimentConfig) -> Vec<String> {
    vec![
        format!("lexxfer {}", env!("CARGO_PKG_VERSION")),
        format!("config-sha256 {}", config.hash()),
        "rp: fraction of gold labels among the top-|gold| ranked labels; ties keep label order"
            .into(),
        "std: sample standard deviation over seeds (n-1 denominator)".into(),
        "wasserstein: 1-d earth mover's distance over canonical label-index order, unit spacing"
            .into(),
        "meteor: exact token matches only (no stemming, synonyms or paraphrase)".into(),
    ]
}

fn csv_header(config: &ExperimentConfig) -> String {
    provenance_lines(config)
        .iter()
        .map(|l| format!("# {l}\n"))
        .collect()
}

fn md_header(config: &ExperimentConfig) -> String {
    let mut s = String::new();
    for l in provenance_lines(config) {
        let _ = writeln!(s, "<!-- {l} -->");
    }
    s
}

/// Raw pool, splits and label space for an experiment.
pub struct Prepared {
    pub raw: Vec<Document>,
    pub lab: Lab,
}

pub fn load_raw(config: &ExperimentConfig) -> Result<(LabelVocabulary, Vec<Document>)> {
    match &config.corpus {
        CorpusSource::Synthetic(s) => generate_multilingual(s),
        CorpusSource::File { path, labels } => {
            let vocab = LabelVocabulary::from_file(labels)?;
            let docs = load_corpus(path, &vocab)?;
            Ok((vocab, docs))
        }
    }
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let (vocab, raw) = load_raw(config)?;
    let mut splits =
        build_nonparallel_splits(&raw, &config.languages, config.splits.sizes(), config.splits.seed)?;
    if let (Some(d), CorpusSource::Synthetic(s)) = (&config.drift, &config.corpus) {
        let base = s.label_weights.resolve(s.n_labels)?;
        let shifted = d.weights.clone().unwrap_or_else(|| reversed_weights(&base));
        let weights = mix_weights(&base, &shifted, d.strength);
        splits = drift_injection(s, &splits, &d.lang, &weights)?;
    }
    Ok(Prepared {
        raw,
        lab: Lab {
            splits,
            vocab,
            hashing: config.hashing.clone(),
        },
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the raw corpus and its label vocabulary.
pub fn cmd_synth(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let (vocab, raw) = load_raw(config)?;
    create_dir(out)?;
    let corpus = out.join("corpus.jsonl");
    write_corpus(&corpus, &raw)?;
    let labels = out.join("labels.txt");
    vocab.write_file(&labels)?;
    info!("wrote {} documents to {}", raw.len(), corpus.display());
    Ok(vec![corpus, labels])
}

/// Writes the split manifest (doc ids per split and language).
pub fn cmd_split(config: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    config.validate()?;
    let prepared = prepare(config)?;
    create_dir(out)?;
    let json = serde_json::to_string_pretty(&prepared.lab.splits.manifest())
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    write(out, "splits.json", &json)
}

/// Outcome of a `run`: per-strategy results plus the files written.
#[derive(Debug)]
pub struct RunOutcome {
    pub results: Vec<RunResult>,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn is_partial(&self) -> bool {
        self.results.iter().any(RunResult::is_partial)
    }
}

/// Runs every (strategy, seed) pair on a bounded pool of workers. Results
/// are assembled in configuration order regardless of completion order.
pub fn execute(lab: &Lab, specs: &[StrategySpec], workers: usize) -> Vec<RunResult> {
    let translators: Vec<Result<Option<Translator>>> = specs
        .iter()
        .map(|s| s.translator.as_ref().map(Translator::new).transpose())
        .collect();
    let jobs: Vec<(usize, u64)> = specs
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.seeds.iter().map(move |&seed| (i, seed)))
        .collect();
    let slots: Vec<Mutex<Option<Result<RunResult>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, seed)) = jobs.get(k) else { break };
                let spec = &specs[i];
                let outcome = match &translators[i] {
                    Ok(t) => run_strategy_seed(lab, spec, t.as_ref(), seed),
                    Err(e) => Err(Error::Translation(e.to_string())),
                };
                match &outcome {
                    Ok(_) => info!("finished {} seed {seed}", spec.id),
                    Err(e) => warn!("{} seed {seed} failed: {e}", spec.id),
                }
                *slots[k].lock().expect("slot lock") = Some(outcome);
            });
        }
    });
    let mut results: Vec<RunResult> = specs.iter().map(RunResult::for_spec).collect();
    for (&(i, seed), slot) in jobs.iter().zip(slots) {
        match slot.into_inner().expect("slot lock").expect("job ran") {
            Ok(r) => results[i].merge(r),
            Err(e) => results[i].errors.push(RunError {
                seed,
                message: e.to_string(),
            }),
        }
    }
    results
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn cmd_run(config: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    config.validate_for_run()?;
    let prepared = prepare(config)?;
    let specs = config.strategy_specs()?;
    let results = execute(
        &prepared.lab,
        &specs,
        config.workers.unwrap_or_else(default_workers),
    );
    create_dir(out)?;
    let mut files = vec![
        write(out, "results_records.csv", &records_csv(config, &results))?,
        write(out, "results_summary.csv", &summary_csv(config, &results))?,
        write(out, "results.md", &results_markdown(config, &results))?,
        write(out, "errors.csv", &errors_csv(config, &results))?,
    ];
    if results.iter().any(|r| r.uses_bssl) {
        files.push(write(out, "softlabels.csv", &softlabels_csv(config, &results))?);
    }
    Ok(RunOutcome { results, files })
}

/// Runs only teacher-student strategies (optionally a single one by id) and
/// writes their soft-label reports.
pub fn cmd_softlabels(
    config: &ExperimentConfig,
    strategy: Option<&str>,
    out: &Path,
) -> Result<RunOutcome> {
    config.validate()?;
    let specs: Vec<StrategySpec> = config
        .strategy_specs()?
        .into_iter()
        .filter(|s| s.kind == StrategyKind::TeacherStudent)
        .filter(|s| strategy.is_none_or(|id| s.id == id))
        .collect();
    if specs.is_empty() {
        return Err(Error::Config(match strategy {
            Some(id) => format!("no teacher-student strategy with id {id:?}"),
            None => "no teacher-student strategies configured".into(),
        }));
    }
    let prepared = prepare(config)?;
    let results = execute(
        &prepared.lab,
        &specs,
        config.workers.unwrap_or_else(default_workers),
    );
    create_dir(out)?;
    let files = vec![
        write(out, "softlabels.csv", &softlabels_csv(config, &results))?,
        write(out, "softlabels.md", &softlabels_markdown(config, &results))?,
        write(out, "errors.csv", &errors_csv(config, &results))?,
    ];
    Ok(RunOutcome { results, files })
}

pub fn records_csv(config: &ExperimentConfig, results: &[RunResult]) -> String {
    let mut s = csv_header(config);
    s.push_str("strategy,kind,mode,seed,model,role,lang,rp\n");
    for r in results {
        let mode = r.mode.map_or("", |m| m.as_str());
        let mut recs = r.records.clone();
        recs.sort_by(|a, b| {
            (a.seed, a.role, &a.model, &a.lang).cmp(&(b.seed, b.role, &b.model, &b.lang))
        });
        for rec in recs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.strategy_id,
                r.kind.as_str(),
                mode,
                rec.seed,
                rec.model,
                rec.role.as_str(),
                rec.lang,
                rec.rp
            );
        }
    }
    s
}

fn roles(r: &RunResult) -> Vec<Role> {
    if r.uses_bssl {
        vec![Role::Student, Role::Teacher]
    } else {
        vec![Role::Model]
    }
}

/// Mean and std per (strategy, role, language) plus the target average,
/// all as fractions.
pub fn summary_csv(config: &ExperimentConfig, results: &[RunResult]) -> String {
    let mut s = csv_header(config);
    s.push_str("strategy,n_models,mt,bs_sl,role,lang,mean,std,n\n");
    for r in results {
        for role in roles(r) {
            let prefix = format!(
                "{},{},{},{},{}",
                r.strategy_id,
                r.n_models,
                r.uses_mt,
                r.uses_bssl,
                role.as_str()
            );
            for lang in std::iter::once(&r.source).chain(&r.targets) {
                if let Some(m) = r.summary(role, lang) {
                    let _ = writeln!(s, "{prefix},{lang},{},{},{}", m.mean, m.std, m.n);
                }
            }
            if let Some(avg) = r.target_avg(role) {
                let _ = writeln!(s, "{prefix},target-avg,{avg},,");
            }
        }
    }
    s
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn mark(b: bool) -> &'static str {
    if b {
        "✓"
    } else {
        "✗"
    }
}

/// Results layout: one row per strategy (and teacher rows for
/// teacher-student), source column first, Target Avg last. RP in percent.
pub fn results_markdown(config: &ExperimentConfig, results: &[RunResult]) -> String {
    let targets: Vec<&String> = config
        .languages
        .iter()
        .filter(|l| **l != config.source)
        .collect();
    let mut s = md_header(config);
    s.push_str("# Test R-Precision (%) ± std over seeds\n\n");
    let _ = write!(s, "| Model | #M | MT | BS+SL | {} |", config.source);
    for t in &targets {
        let _ = write!(s, " {t} |");
    }
    s.push_str(" Target Avg |\n|---|---|---|---|---|");
    s.push_str(&"---|".repeat(targets.len() + 1));
    s.push('\n');
    for r in results {
        for role in roles(r) {
            let name = match role {
                Role::Model => r.strategy_id.clone(),
                Role::Student => format!("{} (student)", r.strategy_id),
                Role::Teacher => format!("{} (teacher)", r.strategy_id),
            };
            let cell = |lang: &str| match r.summary(role, lang) {
                Some(m) => format!("{} ± {}", pct(m.mean), pct(m.std)),
                None => "---".into(),
            };
            let _ = write!(
                s,
                "| {name} | {} | {} | {} | {} |",
                r.n_models,
                mark(r.uses_mt),
                mark(r.uses_bssl),
                cell(&r.source)
            );
            for t in &targets {
                let _ = write!(s, " {} |", cell(t));
            }
            let avg = r.target_avg(role).map_or("---".into(), pct);
            let _ = writeln!(s, " {avg} |");
        }
    }
    let errors: Vec<(&RunResult, &RunError)> = results
        .iter()
        .flat_map(|r| r.errors.iter().map(move |e| (r, e)))
        .collect();
    if !errors.is_empty() {
        s.push_str("\n## Errors\n\n");
        for (r, e) in errors {
            let _ = writeln!(s, "- {} seed {}: {}", r.strategy_id, e.seed, e.message);
        }
    }
    s
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn errors_csv(config: &ExperimentConfig, results: &[RunResult]) -> String {
    let mut s = csv_header(config);
    s.push_str("strategy,seed,message\n");
    for r in results {
        for e in &r.errors {
            let _ = writeln!(s, "{},{},{}", r.strategy_id, e.seed, csv_field(&e.message));
        }
    }
    s
}

pub fn softlabels_csv(config: &ExperimentConfig, results: &[RunResult]) -> String {
    let mut s = csv_header(config);
    s.push_str("strategy,seed,teacher,provenance,lang,n,mean_diff\n");
    for r in results {
        for rec in &r.soft_labels {
            for sub in &rec.report.subsets {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.strategy_id,
                    rec.seed,
                    rec.teacher,
                    sub.provenance.as_str(),
                    sub.lang,
                    sub.n,
                    sub.mean_diff
                );
            }
        }
    }
    s
}

/// Mean soft-label difference per (provenance, language), averaged over
/// seeds and teachers, next to the student's RP in that language.
pub fn softlabels_markdown(config: &ExperimentConfig, results: &[RunResult]) -> String {
    let mut s = md_header(config);
    s.push_str("# Soft-label difference per subset\n");
    for r in results {
        let _ = writeln!(
            s,
            "\n## {}\n\n| provenance | lang | docs | mean diff ± std | student RP (%) |\n|---|---|---|---|---|",
            r.strategy_id
        );
        let mut groups: BTreeMap<(String, String), (usize, Vec<f64>)> = BTreeMap::new();
        for rec in &r.soft_labels {
            for sub in &rec.report.subsets {
                let g = groups
                    .entry((sub.provenance.as_str().to_string(), sub.lang.clone()))
                    .or_default();
                g.0 += sub.n;
                g.1.push(sub.mean_diff);
            }
        }
        for ((prov, lang), (n, diffs)) in groups {
            let m = mean_std(&diffs).expect("non-empty group");
            let rp = r
                .summary(Role::Student, &lang)
                .map_or("---".into(), |x| pct(x.mean));
            let _ = writeln!(
                s,
                "| {prov} | {lang} | {n} | {:.3} ± {:.3} | {rp} |",
                m.mean, m.std
            );
        }
    }
    s
}

/// Label-distribution drift between every pair of training sets and
/// between the test set and each training set.
pub fn drift_report(lab: &Lab) -> Result<DriftReport> {
    let mut train = BTreeMap::new();
    for lang in &lab.splits.languages {
        train.insert(lang.clone(), label_distribution(lab.splits.train(lang)?, &lab.vocab));
    }
    let first = lab
        .splits
        .languages
        .first()
        .ok_or_else(|| Error::Empty("no languages".into()))?;
    // Test sets are parallel, so every language shares one distribution.
    let test = label_distribution(lab.splits.test(first)?, &lab.vocab);
    DriftReport::build(&train, &test)
}

pub fn cmd_drift(config: &ExperimentConfig, out: &Path) -> Result<(DriftReport, Vec<PathBuf>)> {
    config.validate()?;
    let prepared = prepare(config)?;
    let report = drift_report(&prepared.lab)?;
    create_dir(out)?;
    let files = vec![
        write(out, "drift.csv", &drift_csv(config, &report))?,
        write(out, "drift.md", &drift_markdown(config, &report))?,
        write(out, "drift.svg", &drift_svg(config, &report))?,
    ];
    Ok((report, files))
}

fn drift_keys(config: &ExperimentConfig) -> Vec<String> {
    let mut keys = config.languages.clone();
    keys.sort();
    keys.push(TEST_KEY.to_string());
    keys
}

pub fn drift_csv(config: &ExperimentConfig, report: &DriftReport) -> String {
    let mut s = csv_header(config);
    s.push_str("left,right,kendall_tau,wasserstein\n");
    for e in &report.entries {
        let tau = e.kendall_tau.map_or(String::new(), |t| t.to_string());
        let _ = writeln!(s, "{},{},{tau},{}", e.left, e.right, e.wasserstein);
    }
    s
}

fn drift_cell(report: &DriftReport, a: &str, b: &str) -> (Option<f64>, f64) {
    if a == b {
        return (Some(1.0), 0.0);
    }
    match report.get(a, b) {
        Some(e) => (e.kendall_tau, e.wasserstein),
        None => (None, f64::NAN),
    }
}

pub fn drift_markdown(config: &ExperimentConfig, report: &DriftReport) -> String {
    let keys = drift_keys(config);
    let mut s = md_header(config);
    for (title, tau) in [("Kendall τ (higher is better)", true), ("Wasserstein (lower is better)", false)] {
        let _ = write!(s, "\n# {title}\n\n|  |");
        for k in &keys {
            let _ = write!(s, " {k} |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(keys.len()));
        s.push('\n');
        for a in &keys {
            let _ = write!(s, "| {a} |");
            for b in &keys {
                let (t, w) = drift_cell(report, a, b);
                let v = if tau {
                    t.map_or("n/a".into(), |t| format!("{t:.3}"))
                } else {
                    format!("{w:.4}")
                };
                let _ = write!(s, " {v} |");
            }
            s.push('\n');
        }
    }
    s
}

/// Two heatmaps side by side: τ (blue high, red low) and W (darker is
/// larger).
pub fn drift_svg(config: &ExperimentConfig, report: &DriftReport) -> String {
    let keys = drift_keys(config);
    let n = keys.len();
    let cell = 48.0;
    let margin = 56.0;
    let panel = margin + cell * n as f64;
    let max_w = report
        .entries
        .iter()
        .map(|e| e.wasserstein)
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
        2.0 * panel + 24.0,
        panel + 24.0
    );
    for l in provenance_lines(config) {
        let _ = writeln!(s, "<!-- {l} -->");
    }
    for (p, title) in ["Kendall tau", "Wasserstein"].iter().enumerate() {
        let x0 = p as f64 * (panel + 24.0);
        let _ = writeln!(s, r#"<text x="{}" y="14">{title}</text>"#, x0 + margin);
        for (i, a) in keys.iter().enumerate() {
            let y = margin + cell * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{a}</text>"#,
                x0 + margin - 4.0,
                y + cell / 2.0 + 4.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{a}</text>"#,
                x0 + margin + cell * i as f64 + cell / 2.0,
                margin - 6.0
            );
            for (j, b) in keys.iter().enumerate() {
                let (t, w) = drift_cell(report, a, b);
                let (fill, label) = if p == 0 {
                    match t {
                        Some(t) => {
                            let u = ((t + 1.0) / 2.0).clamp(0.0, 1.0);
                            let r = (255.0 * (1.0 - u)) as u8;
                            let bl = (255.0 * u) as u8;
                            (format!("rgb({r},80,{bl})"), format!("{t:.2}"))
                        }
                        None => ("#ccc".to_string(), "n/a".to_string()),
                    }
                } else {
                    let g = (255.0 * (1.0 - (w / max_w).clamp(0.0, 1.0))) as u8;
                    (format!("rgb({g},{g},{g})"), format!("{w:.3}"))
                };
                let x = x0 + margin + cell * j as f64;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" stroke="white"/><text x="{}" y="{}" text-anchor="middle" fill="{}">{label}</text>"#,
                    x + cell / 2.0,
                    y + cell / 2.0 + 4.0,
                    if p == 1 && w / max_w > 0.5 { "white" } else { "black" }
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Mean METEOR of machine translations against the corpus's own parallel
/// versions, per (source, target) pair and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub source: String,
    pub target: String,
    pub split: String,
    pub n: usize,
    pub meteor: f64,
}

pub fn translation_quality(
    prepared: &Prepared,
    source: &str,
    targets: &[String],
    translator: &Translator,
) -> Result<Vec<QualityRow>> {
    let mut by_key: BTreeMap<(&str, &str), &Document> = BTreeMap::new();
    for d in &prepared.raw {
        by_key.insert((d.source_id.as_str(), d.lang.as_str()), d);
    }
    let splits = &prepared.lab.splits;
    let mut rows = Vec::new();
    for t in targets {
        for (name, docs) in [("train", splits.train(source)?), ("test", splits.test(source)?)] {
            let pairs: Vec<(&Document, &Document)> = docs
                .iter()
                .filter_map(|d| by_key.get(&(d.source_id.as_str(), t.as_str())).map(|r| (d, *r)))
                .collect();
            if pairs.is_empty() {
                warn!("no {t} references for {source} {name} documents");
                continue;
            }
            let texts: Vec<&str> = pairs.iter().map(|(d, _)| d.text.as_str()).collect();
            let out = translator.translate_many(&texts, source, t)?;
            let total: f64 = out
                .iter()
                .zip(&pairs)
                .map(|(c, (_, r))| meteor(c, &r.text).score)
                .sum();
            rows.push(QualityRow {
                source: source.to_string(),
                target: t.clone(),
                split: name.to_string(),
                n: pairs.len(),
                meteor: total / pairs.len() as f64,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_mtquality(config: &ExperimentConfig, out: &Path) -> Result<(Vec<QualityRow>, Vec<PathBuf>)> {
    config.validate()?;
    let spec = config
        .translator
        .as_ref()
        .ok_or_else(|| Error::Config("mtquality needs a top-level translator".into()))?;
    let translator = Translator::new(spec)?;
    let prepared = prepare(config)?;
    let targets: Vec<String> = config
        .languages
        .iter()
        .filter(|l| **l != config.source)
        .cloned()
        .collect();
    let rows = translation_quality(&prepared, &config.source, &targets, &translator)?;
    create_dir(out)?;
    let mut csv = csv_header(config);
    csv.push_str("source,target,split,n,meteor\n");
    let mut md = md_header(config);
    md.push_str("# Translation quality (mean METEOR)\n\n| pair | train | test |\n|---|---|---|\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{}", r.source, r.target, r.split, r.n, r.meteor);
    }
    for t in &targets {
        let get = |split: &str| {
            rows.iter()
                .find(|r| &r.target == t && r.split == split)
                .map_or("---".into(), |r| format!("{:.2}", r.meteor))
        };
        let _ = writeln!(md, "| {}→{t} | {} | {} |", config.source, get("train"), get("test"));
    }
    let files = vec![
        write(out, "mtquality.csv", &csv)?,
        write(out, "mtquality.md", &md)?,
    ];
    Ok((rows, files))
}
