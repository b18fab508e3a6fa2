//! Deliberately naive reimplementations used as test oracles.
#![allow(dead_code)]

/// Ranking by repeated selection of the highest remaining score (lowest
/// index on ties).
pub fn rank(scores: &[f64]) -> Vec<usize> {
    let mut left: Vec<usize> = (0..scores.len()).collect();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for k in 1..left.len() {
            if scores[left[k]] > scores[left[best]] {
                best = k;
            }
        }
        out.push(left.remove(best));
    }
    out
}

pub fn r_precision(scores: &[f64], gold: &[usize]) -> f64 {
    let mut g = gold.to_vec();
    g.sort();
    g.dedup();
    let top = &rank(scores)[..g.len()];
    top.iter().filter(|i| g.contains(i)).count() as f64 / g.len() as f64
}

/// Tau-b by counting every pair.
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    let (mut conc, mut disc, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 {
                ties_a += 1;
            }
            if db == 0.0 {
                ties_b += 1;
            }
            if da != 0.0 && db != 0.0 {
                if (da > 0.0) == (db > 0.0) {
                    conc += 1;
                } else {
                    disc += 1;
                }
            }
        }
    }
    let pairs = (n * n.saturating_sub(1) / 2) as i64;
    let denom = (((pairs - ties_a) * (pairs - ties_b)) as f64).sqrt();
    (denom > 0.0).then(|| (conc - disc) as f64 / denom)
}

/// Optimal transport between two 1-D histograms on unit-spaced points,
/// solved with the north-west-corner (monotone) coupling, which is optimal
/// for convex costs on the line.
pub fn wasserstein(a: &[f64], b: &[f64]) -> f64 {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    let (mut i, mut j) = (0, 0);
    let mut cost = 0.0;
    while i < a.len() && j < b.len() {
        let moved = a[i].min(b[j]);
        cost += moved * (i as f64 - j as f64).abs();
        a[i] -= moved;
        b[j] -= moved;
        if a[i] <= 1e-15 {
            i += 1;
        } else {
            j += 1;
        }
    }
    cost
}

pub fn soft_label_diff(gold: &[Vec<f64>], soft: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    let mut count = 0;
    for (g, s) in gold.iter().zip(soft) {
        for (x, y) in g.iter().zip(s) {
            total += (x - y).abs();
            count += 1;
        }
    }
    total / count as f64
}

/// Exact METEOR alignment by exhaustive search: among all one-to-one
/// exact-match alignments with the maximum number of links, the fewest
/// chunks. Returns (matches, chunks). Only for short sentences.
pub fn meteor_alignment(cand: &[String], reference: &[String]) -> (usize, usize) {
    fn go(
        i: usize,
        cand: &[String],
        reference: &[String],
        used: &mut Vec<bool>,
        links: &mut Vec<Option<usize>>,
        best: &mut (usize, usize),
    ) {
        let linked = links.iter().flatten().count();
        if linked + (cand.len() - i) < best.0 {
            return;
        }
        if i == cand.len() {
            let m = links.iter().flatten().count();
            let c = chunks(links);
            if m > best.0 || (m == best.0 && c < best.1) {
                *best = (m, c);
            }
            return;
        }
        for j in 0..reference.len() {
            if !used[j] && reference[j] == cand[i] {
                used[j] = true;
                links.push(Some(j));
                go(i + 1, cand, reference, used, links, best);
                links.pop();
                used[j] = false;
            }
        }
        links.push(None);
        go(i + 1, cand, reference, used, links, best);
        links.pop();
    }
    let mut best = (0, usize::MAX);
    go(
        0,
        cand,
        reference,
        &mut vec![false; reference.len()],
        &mut Vec::new(),
        &mut best,
    );
    if best.0 == 0 {
        best.1 = 0;
    }
    best
}

/// Chunks: maximal runs of candidate-adjacent links whose reference
/// positions are also adjacent and increasing.
pub fn chunks(links: &[Option<usize>]) -> usize {
    let mut count = 0;
    let mut prev: Option<usize> = None;
    for l in links {
        match (*l, prev) {
            (Some(j), Some(p)) if j == p + 1 => {}
            (Some(_), _) => count += 1,
            (None, _) => {}
        }
        prev = *l;
    }
    count
}

pub fn meteor_score(m: usize, c: usize, cand_len: usize, ref_len: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / cand_len as f64;
    let r = m as f64 / ref_len as f64;
    let fmean = 10.0 * p * r / (r + 9.0 * p);
    let frag = c as f64 / m as f64;
    fmean * (1.0 - 0.5 * frag * frag * frag)
}
