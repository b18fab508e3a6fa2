//! Hashed n-gram features and a per-label logistic classifier trained by
//! mini-batch SGD on hard or soft targets.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, Result};
use crate::seeding;
use crate::text::tokenize;

/// Probabilities are kept this far from {0, 1} inside the loss.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HashingConfig {
    /// Hash space is `2^bits` buckets.
    pub bits: u32,
    #[serde(default = "default_orders")]
    pub ngram_orders: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_orders() -> Vec<usize> {
    vec![1, 2]
}

impl Default for HashingConfig {
    fn default() -> Self {
        Self {
            bits: 18,
            ngram_orders: default_orders(),
            seed: 0,
        }
    }
}

impl HashingConfig {
    pub fn dim(&self) -> usize {
        1usize << self.bits
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=26).contains(&self.bits) {
            return Err(Error::Config(format!("hash bits {} outside 1..=26", self.bits)));
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.contains(&0) {
            return Err(Error::Config("n-gram orders must be non-empty and positive".into()));
        }
        Ok(())
    }
}

/// Sparse, L2-normalized feature vector; entries sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub dim: usize,
    pub entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

pub fn featurize(text: &str, config: &HashingConfig) -> FeatureVector {
    let tokens = tokenize(text);
    let mask = (config.dim() - 1) as u64;
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for &n in &config.ngram_orders {
        if tokens.len() < n {
            continue;
        }
        for gram in tokens.windows(n) {
            let key = gram.join(" ");
            let h = xxh3_64_with_seed(key.as_bytes(), config.seed);
            let index = (h & mask) as u32;
            let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
            *counts.entry(index).or_insert(0.0) += sign;
        }
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    let entries = if norm > 0.0 {
        counts
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|(i, v)| (i, v / norm))
            .collect()
    } else {
        Vec::new()
    };
    FeatureVector {
        dim: config.dim(),
        entries,
    }
}

/// Weights are stored feature-major: `weights[j * n_labels + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n_labels: usize,
    pub hashing: HashingConfig,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(n_labels: usize, hashing: HashingConfig) -> Self {
        let dim = hashing.dim();
        Self {
            n_labels,
            hashing,
            weights: vec![0.0; dim * n_labels],
            bias: vec![0.0; n_labels],
        }
    }

    pub fn dim(&self) -> usize {
        self.hashing.dim()
    }

    pub fn weight(&self, feature: usize, label: usize) -> f64 {
        self.weights[feature * self.n_labels + label]
    }

    pub fn logits(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.logits_scaled(x, 1.0))
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<()> {
        if x.dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim,
            });
        }
        Ok(())
    }

    fn logits_scaled(&self, x: &FeatureVector, scale: f64) -> Vec<f64> {
        let l = self.n_labels;
        let mut acc = vec![0.0; l];
        for &(j, v) in &x.entries {
            let row = &self.weights[j as usize * l..(j as usize + 1) * l];
            for (a, w) in acc.iter_mut().zip(row) {
                *a += v * w;
            }
        }
        acc.iter()
            .zip(&self.bias)
            .map(|(a, b)| scale * a + b)
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn predict_proba(params: &ModelParams, x: &FeatureVector) -> Result<Vec<f64>> {
    Ok(params.logits(x)?.into_iter().map(sigmoid).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SourceOriginal,
    MtTranslated,
    TargetUnlabeled,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::SourceOriginal => "source-original",
            Provenance::MtTranslated => "mt-translated",
            Provenance::TargetUnlabeled => "target-unlabeled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabeledExample {
    pub features: FeatureVector,
    pub target: Vec<f64>,
    pub weight: f64,
    pub provenance: Provenance,
    pub lang: String,
}

impl SoftLabeledExample {
    /// A hard-labeled example: binary targets, unit weight.
    pub fn hard(
        features: FeatureVector,
        gold: &[usize],
        n_labels: usize,
        provenance: Provenance,
        lang: impl Into<String>,
    ) -> Self {
        let mut target = vec![0.0; n_labels];
        for &g in gold {
            target[g] = 1.0;
        }
        Self {
            features,
            target,
            weight: 1.0,
            provenance,
            lang: lang.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub l2: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 50.0,
            epochs: 20,
            batch_size: 16,
            l2: 1e-6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config("learning rate must be finite and >= 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::Config("l2 penalty must be finite and >= 0".into()));
        }
        if self.learning_rate * self.l2 >= 1.0 {
            return Err(Error::Config("learning_rate * l2 must be < 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Dense gradient with the same layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

fn check_example(params: &ModelParams, ex: &SoftLabeledExample) -> Result<()> {
    params.check_dim(&ex.features)?;
    if ex.target.len() != params.n_labels {
        return Err(Error::DimensionMismatch {
            expected: params.n_labels,
            actual: ex.target.len(),
        });
    }
    if ex.target.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidInput("targets must lie in [0, 1]".into()));
    }
    if !(ex.weight.is_finite() && ex.weight >= 0.0) {
        return Err(Error::InvalidInput("example weight must be finite and >= 0".into()));
    }
    Ok(())
}

fn bce(p: f64, t: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
}

/// Weighted mean binary cross-entropy over examples and labels plus
/// `l2 / 2 * ||W||^2`, with its gradient.
///
/// The data term is normalized by `L` times the total example weight, so
/// duplicating an example and doubling its weight are equivalent. With unit
/// weights this is the plain mean over the batch. Biases are not penalized.
pub fn bce_loss_and_grad(
    params: &ModelParams,
    batch: &[SoftLabeledExample],
    l2: f64,
) -> Result<(f64, Gradient)> {
    let l = params.n_labels;
    let mut grad = Gradient {
        weights: params.weights.iter().map(|w| l2 * w).collect(),
        bias: vec![0.0; l],
    };
    let penalty = 0.5 * l2 * params.weights.iter().map(|w| w * w).sum::<f64>();
    let total_weight: f64 = batch.iter().map(|e| e.weight).sum();
    for ex in batch {
        check_example(params, ex)?;
    }
    if total_weight == 0.0 {
        return Ok((penalty, grad));
    }
    let norm = total_weight * l as f64;
    let mut data = 0.0;
    for ex in batch {
        let z = params.logits_scaled(&ex.features, 1.0);
        for (k, (&zk, &t)) in z.iter().zip(&ex.target).enumerate() {
            let p = sigmoid(zk);
            data += ex.weight * bce(p, t);
            let r = ex.weight * (p - t) / norm;
            grad.bias[k] += r;
            for &(j, v) in &ex.features.entries {
                grad.weights[j as usize * l + k] += r * v;
            }
        }
    }
    Ok((data / norm + penalty, grad))
}

pub fn loss(params: &ModelParams, batch: &[SoftLabeledExample], l2: f64) -> Result<f64> {
    bce_loss_and_grad(params, batch, l2).map(|(loss, _)| loss)
}

pub fn train(
    examples: &[SoftLabeledExample],
    hashing: &HashingConfig,
    config: &TrainConfig,
) -> Result<ModelParams> {
    train_traced(examples, hashing, config, false).map(|(m, _)| m)
}

/// Like [`train`], also returning the full-data objective before training
/// and after each epoch when `trace` is set.
pub fn train_traced(
    examples: &[SoftLabeledExample],
    hashing: &HashingConfig,
    config: &TrainConfig,
    trace: bool,
) -> Result<(ModelParams, Vec<f64>)> {
    config.validate()?;
    hashing.validate()?;
    let first = examples
        .first()
        .ok_or_else(|| Error::Empty("training set has no examples".into()))?;
    let l = first.target.len();
    if l == 0 {
        return Err(Error::InvalidInput("targets must have at least one label".into()));
    }
    let mut params = ModelParams::zeros(l, hashing.clone());
    for ex in examples {
        check_example(&params, ex)?;
    }

    let mut losses = Vec::new();
    if trace {
        losses.push(loss(&params, examples, config.l2)?);
    }

    // Effective weights are `scale * params.weights`, so the L2 decay is a
    // single multiply per step.
    let mut scale = 1.0;
    let lr = config.learning_rate;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = seeding::derive_rng(config.seed, &[b"sgd"]);
    let mut residual = vec![0.0; l];
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let total_weight: f64 = chunk.iter().map(|&i| examples[i].weight).sum();
            let norm = total_weight * l as f64;
            // Residuals are computed against the pre-step parameters.
            let mut updates: Vec<(usize, Vec<f64>)> = Vec::with_capacity(chunk.len());
            if norm > 0.0 {
                for &i in chunk {
                    let ex = &examples[i];
                    if ex.weight == 0.0 {
                        continue;
                    }
                    let z = params.logits_scaled(&ex.features, scale);
                    let r: Vec<f64> = z
                        .iter()
                        .zip(&ex.target)
                        .map(|(&zk, &t)| ex.weight * (sigmoid(zk) - t) / norm)
                        .collect();
                    updates.push((i, r));
                }
            }
            scale *= 1.0 - lr * config.l2;
            residual.iter_mut().for_each(|r| *r = 0.0);
            for (i, r) in &updates {
                for (acc, rk) in residual.iter_mut().zip(r) {
                    *acc += rk;
                }
                let step = lr / scale;
                for &(j, v) in &examples[*i].features.entries {
                    let row = &mut params.weights[j as usize * l..(j as usize + 1) * l];
                    for (w, rk) in row.iter_mut().zip(r) {
                        *w -= step * rk * v;
                    }
                }
            }
            for (b, r) in params.bias.iter_mut().zip(&residual) {
                *b -= lr * r;
            }
            if scale < 1e-9 {
                params.weights.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        if trace {
            let snapshot = materialize(&params, scale);
            losses.push(loss(&snapshot, examples, config.l2)?);
        }
    }
    if scale != 1.0 {
        params.weights.iter_mut().for_each(|w| *w *= scale);
    }
    Ok((params, losses))
}

fn materialize(params: &ModelParams, scale: f64) -> ModelParams {
    let mut p = params.clone();
    if scale != 1.0 {
        p.weights.iter_mut().for_each(|w| *w *= scale);
    }
    p
}

/// Label indices by descending probability; ties keep ascending index.
pub fn rank_labels(probs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    idx
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    n_labels: usize,
    dim: usize,
    hashing: HashingConfig,
    bias: Vec<f64>,
    /// (feature, label, weight) for every non-zero weight.
    weights: Vec<(u32, u32, f64)>,
}

impl ModelParams {
    pub fn to_json(&self) -> String {
        let l = self.n_labels;
        let weights = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, &w)| ((i / l) as u32, (i % l) as u32, w))
            .collect();
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            n_labels: l,
            dim: self.dim(),
            hashing: self.hashing.clone(),
            bias: self.bias.clone(),
            weights,
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {}",
                file.format_version
            )));
        }
        file.hashing.validate()?;
        if file.dim != file.hashing.dim() || file.bias.len() != file.n_labels {
            return Err(Error::ModelFormat("inconsistent shapes".into()));
        }
        let mut params = ModelParams::zeros(file.n_labels, file.hashing);
        params.bias = file.bias;
        for (j, k, w) in file.weights {
            if j as usize >= file.dim || k as usize >= file.n_labels {
                return Err(Error::ModelFormat(format!("weight index ({j}, {k}) out of range")));
            }
            params.weights[j as usize * file.n_labels + k as usize] = w;
        }
        if !params.is_finite() {
            return Err(Error::ModelFormat("non-finite parameter".into()));
        }
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
