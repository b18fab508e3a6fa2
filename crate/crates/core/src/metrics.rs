//! R-Precision, label-distribution drift measures and soft-label error.

use std::collections::BTreeMap;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::classifier::{rank_labels, Provenance};
use crate::corpus::LabelDistribution;
use crate::error::{Error, Result};

/// Fraction of the gold labels among the `R = |gold|` top-ranked labels.
pub fn r_precision(scores: &[f64], gold: &[usize]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::InvalidInput("R-Precision needs a non-empty gold set".into()));
    }
    let mut gold_mask = vec![false; scores.len()];
    for &g in gold {
        if g >= scores.len() {
            return Err(Error::InvalidInput(format!("gold label {g} out of range")));
        }
        gold_mask[g] = true;
    }
    let r = gold_mask.iter().filter(|&&g| g).count();
    let hits = rank_labels(scores)
        .into_iter()
        .take(r)
        .filter(|&i| gold_mask[i])
        .count();
    Ok(hits as f64 / r as f64)
}

/// Mean R-Precision (as a fraction) over documents with non-empty gold sets.
pub fn mean_r_precision<'a, I>(docs: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a [f64], &'a [usize])>,
{
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut skipped = 0usize;
    for (scores, gold) in docs {
        if gold.is_empty() {
            skipped += 1;
            continue;
        }
        sum += r_precision(scores, gold)?;
        n += 1;
    }
    if skipped > 0 {
        debug!("excluded {skipped} documents with empty gold sets from mean R-Precision");
    }
    if n == 0 {
        return Err(Error::Empty("no documents with gold labels".into()));
    }
    Ok(sum / n as f64)
}

/// Kendall's tau-b between two equally long vectors, computed with Knight's
/// O(n log n) merge-sort algorithm.
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TauUndefined("fewer than two labels".into()));
    }
    let mut pairs: Vec<(f64, f64)> = a.iter().copied().zip(b.iter().copied()).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

    let tie_pairs = |runs: &mut dyn Iterator<Item = usize>| -> u64 {
        runs.map(|t| (t as u64) * (t as u64 - 1) / 2).sum()
    };
    let ties_a = tie_pairs(&mut run_lengths(&pairs, |p, q| p.0 == q.0));
    let ties_joint = tie_pairs(&mut run_lengths(&pairs, |p, q| p.0 == q.0 && p.1 == q.1));

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_count(&mut ys);
    let ties_b = tie_pairs(&mut run_lengths(&ys, |p, q| p == q));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    if ties_a == n0 || ties_b == n0 {
        return Err(Error::TauUndefined("a constant frequency vector has no ranking".into()));
    }
    let numerator = n0 as f64 - ties_a as f64 - ties_b as f64 + ties_joint as f64 - 2.0 * swaps as f64;
    let denom = ((n0 - ties_a) as f64 * (n0 - ties_b) as f64).sqrt();
    Ok((numerator / denom).clamp(-1.0, 1.0))
}

fn run_lengths<'a, T>(
    xs: &'a [T],
    same: impl Fn(&T, &T) -> bool + 'a,
) -> impl Iterator<Item = usize> + 'a {
    let mut i = 0;
    std::iter::from_fn(move || {
        if i >= xs.len() {
            return None;
        }
        let start = i;
        i += 1;
        while i < xs.len() && same(&xs[start], &xs[i]) {
            i += 1;
        }
        Some(i - start)
    })
}

/// Sorts `xs` ascending and returns the number of strictly inverted pairs.
fn merge_count(xs: &mut [f64]) -> u64 {
    let n = xs.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut xs[..mid]) + merge_count(&mut xs[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if xs[j] < xs[i] {
            swaps += (mid - i) as u64;
            merged.push(xs[j]);
            j += 1;
        } else {
            merged.push(xs[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&xs[i..mid]);
    merged.extend_from_slice(&xs[j..n]);
    xs.copy_from_slice(&merged);
    swaps
}

pub fn kendall_tau(a: &LabelDistribution, b: &LabelDistribution) -> Result<f64> {
    kendall_tau_b(&a.frequencies, &b.frequencies)
}

/// 1-D earth mover's distance over label indices with unit spacing.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut cdf_a = 0.0;
    let mut cdf_b = 0.0;
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        cdf_a += x;
        cdf_b += y;
        total += (cdf_a - cdf_b).abs();
    }
    Ok(total)
}

pub fn wasserstein(a: &LabelDistribution, b: &LabelDistribution) -> Result<f64> {
    if a.is_zero() != b.is_zero() {
        return Err(Error::InvalidInput(
            "cannot compare an empty distribution with a normalized one".into(),
        ));
    }
    wasserstein_1d(&a.frequencies, &b.frequencies)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelDiff {
    pub mean: f64,
    pub per_document: Vec<f64>,
}

/// Mean absolute difference between binary gold labels and soft labels,
/// over all documents and labels, plus per-document means.
pub fn soft_label_diff(gold: &[Vec<f64>], soft: &[Vec<f64>]) -> Result<SoftLabelDiff> {
    if gold.len() != soft.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            actual: soft.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::Empty("no documents".into()));
    }
    let l = gold[0].len();
    if l == 0 {
        return Err(Error::InvalidInput("no labels".into()));
    }
    let mut per_document = Vec::with_capacity(gold.len());
    let mut total = 0.0;
    for (g, s) in gold.iter().zip(soft) {
        if g.len() != l || s.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                actual: if g.len() != l { g.len() } else { s.len() },
            });
        }
        if g.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidInput("gold matrix must be binary".into()));
        }
        if s.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput("soft labels must lie in [0, 1]".into()));
        }
        let row: f64 = g.iter().zip(s).map(|(a, b)| (a - b).abs()).sum();
        total += row;
        per_document.push(row / l as f64);
    }
    Ok(SoftLabelDiff {
        mean: total / (gold.len() * l) as f64,
        per_document,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEntry {
    pub left: String,
    pub right: String,
    /// `None` when tau is undefined (a constant distribution).
    pub kendall_tau: Option<f64>,
    pub wasserstein: f64,
}

/// Pairwise drift between training label distributions, and between the
/// shared test distribution and each training distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub entries: Vec<DriftEntry>,
}

pub const TEST_KEY: &str = "test";

impl DriftReport {
    pub fn build(
        train: &BTreeMap<String, LabelDistribution>,
        test: &LabelDistribution,
    ) -> Result<Self> {
        let entry = |left: &str, right: &str, a: &LabelDistribution, b: &LabelDistribution| {
            Ok::<_, Error>(DriftEntry {
                left: left.to_string(),
                right: right.to_string(),
                kendall_tau: kendall_tau(a, b).ok(),
                wasserstein: wasserstein(a, b)?,
            })
        };
        let langs: Vec<&String> = train.keys().collect();
        let mut entries = Vec::new();
        for (i, a) in langs.iter().enumerate() {
            for b in &langs[i + 1..] {
                entries.push(entry(a, b, &train[*a], &train[*b])?);
            }
        }
        for lang in &langs {
            entries.push(entry(TEST_KEY, lang, test, &train[*lang])?);
        }
        Ok(Self { entries })
    }

    pub fn get(&self, left: &str, right: &str) -> Option<&DriftEntry> {
        self.entries.iter().find(|e| {
            (e.left == left && e.right == right) || (e.left == right && e.right == left)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabelSubset {
    pub provenance: Provenance,
    pub lang: String,
    pub n: usize,
    pub mean_diff: f64,
    pub per_document: Vec<f64>,
}

/// Soft-label error per (provenance, language) document subset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SoftLabelReport {
    pub subsets: Vec<SoftLabelSubset>,
}

impl SoftLabelReport {
    /// Groups `(provenance, lang, gold, soft)` rows into subsets ordered by
    /// provenance then language.
    pub fn build<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Provenance, &'a str, &'a [f64], &'a [f64])>,
    {
        type Matrices = (Vec<Vec<f64>>, Vec<Vec<f64>>);
        let mut groups: BTreeMap<(Provenance, String), Matrices> = BTreeMap::new();
        for (prov, lang, g, s) in rows {
            let e = groups.entry((prov, lang.to_string())).or_default();
            e.0.push(g.to_vec());
            e.1.push(s.to_vec());
        }
        let mut subsets = Vec::with_capacity(groups.len());
        for ((provenance, lang), (g, s)) in groups {
            let diff = soft_label_diff(&g, &s)?;
            subsets.push(SoftLabelSubset {
                provenance,
                lang,
                n: g.len(),
                mean_diff: diff.mean,
                per_document: diff.per_document,
            });
        }
        Ok(Self { subsets })
    }
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

pub fn mean_std(values: &[f64]) -> Option<MeanStd> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(MeanStd { mean, std, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> LabelDistribution {
        let s: f64 = v.iter().sum();
        LabelDistribution {
            frequencies: v.iter().map(|x| x / s).collect(),
            n_documents: 1,
        }
    }

    #[test]
    fn r_precision_examples() {
        assert_eq!(r_precision(&[0.9, 0.1, 0.8], &[0, 2]).unwrap(), 1.0);
        assert_eq!(r_precision(&[0.9, 0.8, 0.7, 0.1], &[0, 2]).unwrap(), 0.5);
        assert_eq!(r_precision(&[0.1, 0.5, 0.3], &[0, 1, 2]).unwrap(), 1.0);
        assert!(r_precision(&[0.1], &[]).is_err());
    }

    #[test]
    fn mean_r_precision_examples() {
        let s1 = [0.9, 0.1];
        let s2 = [0.9, 0.8, 0.7, 0.1];
        let docs: Vec<(&[f64], &[usize])> = vec![(&s1, &[0]), (&s2, &[0, 2]), (&s1, &[])];
        assert_eq!(100.0 * mean_r_precision(docs).unwrap(), 75.0);
        let perfect: Vec<(&[f64], &[usize])> = vec![(&s1, &[0]), (&s1, &[0])];
        assert_eq!(100.0 * mean_r_precision(perfect).unwrap(), 100.0);
        let none: Vec<(&[f64], &[usize])> = vec![(&s1, &[])];
        assert!(mean_r_precision(none).is_err());
    }

    #[test]
    fn kendall_examples() {
        let a = dist(&[5.0, 3.0, 1.0]);
        assert!((kendall_tau(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((kendall_tau(&a, &dist(&[1.0, 3.0, 5.0])).unwrap() + 1.0).abs() < 1e-15);
        let t = kendall_tau(&a, &dist(&[3.0, 5.0, 1.0])).unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            kendall_tau(&a, &dist(&[1.0, 1.0, 1.0])),
            Err(Error::TauUndefined(_))
        ));
        assert!(kendall_tau_b(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        let a = dist(&[0.5, 0.5, 0.0]);
        assert_eq!(wasserstein(&a, &a).unwrap(), 0.0);
        let p0 = dist(&[1.0, 0.0, 0.0, 0.0]);
        let p3 = dist(&[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(wasserstein(&p0, &p3).unwrap(), 3.0);
        assert!((wasserstein(&a, &dist(&[0.0, 0.5, 0.5])).unwrap() - 1.0).abs() < 1e-15);
        assert!(wasserstein(&a, &dist(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn soft_label_diff_examples() {
        let g = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(soft_label_diff(&g, &g).unwrap().mean, 0.0);
        let ones = vec![vec![1.0; 3]; 2];
        let zeros = vec![vec![0.0; 3]; 2];
        assert_eq!(soft_label_diff(&ones, &zeros).unwrap().mean, 1.0);
        let d = soft_label_diff(&[vec![1.0, 0.0]], &[vec![0.8, 0.1]]).unwrap();
        assert!((d.mean - 0.15).abs() < 1e-15);
        assert!(soft_label_diff(&[vec![0.5, 0.0]], &[vec![0.8, 0.1]]).is_err());
        assert!(soft_label_diff(&[vec![1.0, 0.0]], &[vec![0.8]]).is_err());
    }

    #[test]
    fn mean_std_sample() {
        let m = mean_std(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.std, 1.0);
        assert_eq!(mean_std(&[4.0]).unwrap().std, 0.0);
    }

    #[test]
    fn drift_report_pairs() {
        let mut train = BTreeMap::new();
        train.insert("en".to_string(), dist(&[5.0, 3.0, 1.0]));
        train.insert("fr".to_string(), dist(&[1.0, 3.0, 5.0]));
        let report = DriftReport::build(&train, &dist(&[5.0, 3.0, 1.0])).unwrap();
        assert_eq!(report.entries.len(), 3);
        assert_eq!(report.get("fr", "en").unwrap().kendall_tau, Some(-1.0));
        assert_eq!(report.get(TEST_KEY, "en").unwrap().wasserstein, 0.0);
    }
}
