mod common;

use common::oracles;
use lexxfer::translation::{align, count_chunks, meteor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sentence(rng: &mut ChaCha8Rng, vocab: usize, max_len: usize) -> Vec<String> {
    let n = rng.random_range(1..=max_len);
    (0..n).map(|_| format!("w{}", rng.random_range(0..vocab))).collect()
}

fn distinct(s: &[String]) -> bool {
    let mut v = s.to_vec();
    v.sort();
    v.dedup();
    v.len() == s.len()
}

#[test]
fn greedy_alignment_against_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    // Small vocabularies force many repeated words, the hard case for greedy
    // chunking; (vocabulary, max mean gap, max gap).
    for (vocab, mean_bound, worst_bound) in [(3, 0.25, 3), (5, 0.1, 2), (8, 0.05, 1), (20, 0.01, 1)] {
        check_vocabulary(&mut rng, vocab, mean_bound, worst_bound);
    }
}

fn check_vocabulary(rng: &mut ChaCha8Rng, vocab: usize, mean_bound: f64, worst_bound: usize) {
    let (mut total_gap, mut cases, mut worst) = (0, 0, 0);
    for _ in 0..600 {
        let rng = &mut *rng;
        let cand = sentence(rng, vocab, 10);
        let reference = sentence(rng, vocab, 10);
        let links = align(&cand, &reference);
        // One-to-one exact links.
        let mut used: Vec<usize> = links.iter().flatten().copied().collect();
        for (i, l) in links.iter().enumerate() {
            if let Some(j) = l {
                assert_eq!(cand[i], reference[*j]);
            }
        }
        used.sort();
        let n = used.len();
        used.dedup();
        assert_eq!(used.len(), n);

        let (m, c) = oracles::meteor_alignment(&cand, &reference);
        assert_eq!(n, m, "{cand:?} / {reference:?}");
        let greedy = count_chunks(&links);
        assert_eq!(greedy, oracles::chunks(&links));
        assert!(greedy >= c);
        if distinct(&cand) && distinct(&reference) {
            assert_eq!(greedy, c, "{cand:?} / {reference:?}");
        }
        let score = meteor(&cand.join(" "), &reference.join(" "));
        let expected = oracles::meteor_score(m, greedy, cand.len(), reference.len());
        assert!((score.score - expected).abs() <= 1e-12);
        assert!((0.0..=1.0).contains(&score.score));
        assert_eq!(score.score == 0.0, m == 0);
        total_gap += greedy - c;
        worst = worst.max(greedy - c);
        cases += 1;
    }
    let mean_gap = total_gap as f64 / cases as f64;
    assert!(mean_gap <= mean_bound, "vocab {vocab}: mean chunk gap {mean_gap}");
    assert!(worst <= worst_bound, "vocab {vocab}: worst chunk gap {worst}");
}

#[test]
fn identical_sentences_score_analytically() {
    for m in 1..=30 {
        let text: Vec<String> = (0..m).map(|i| format!("t{}", i % 4)).collect();
        let s = meteor(&text.join(" "), &text.join(" "));
        let expected = 1.0 - 0.5 / (m as f64).powi(3);
        assert!((s.score - expected).abs() <= 1e-12, "m={m}");
    }
}
