//! Checks shared between the focused test targets and the acceptance run.
//! Each returns `Err` with a description of the first violation.

use std::cmp::Ordering;

use allab::acquisition::{score_pool, select_top, AcquisitionScore, PoolData, Strategy};
use allab::augment::{AugmentationPolicy, Augmenter};
use allab::corpus::{build_stats, tokenize, TokenizedExample};
use allab::divergence::DivergenceKind;
use allab::rng::LabRng;
use rand::{Rng, SeedableRng};

use super::fixture::trained_pool;

pub fn allsh_k(k: usize, worst_case: bool) -> Strategy {
    Strategy::Allsh { divergence: DivergenceKind::Kl, policy: AugmentationPolicy::default(), k, worst_case }
}

/// Scores a 200-example pool with K = 1, 2, 4, 8 copies and checks every
/// example's worst-case score never decreases with K.
pub fn lmax_monotone_in_k() -> Result<usize, String> {
    let fx = trained_pool(200, 11);
    let aug = Augmenter::new(&fx.stats);
    let data = PoolData { examples: &fx.examples, features: &fx.features };
    let mut prev: Option<Vec<AcquisitionScore>> = None;
    let mut checked = 0;
    for k in [1, 2, 4, 8] {
        let scores = score_pool(&allsh_k(k, true), &fx.params, &fx.pool, data, &aug, 99).map_err(|e| e.to_string())?;
        if let Some(prev) = &prev {
            for (a, b) in prev.iter().zip(&scores) {
                if a.example_id != b.example_id || b.per_copy[..a.per_copy.len()] != a.per_copy[..] {
                    return Err(format!("copy sets not nested at K={k}, id {}", a.example_id));
                }
                if b.score < a.score {
                    return Err(format!("id {}: score fell from {} to {} at K={k}", a.example_id, a.score, b.score));
                }
                checked += 1;
            }
        }
        prev = Some(scores);
    }
    Ok(checked)
}

fn full_sort(scores: &[AcquisitionScore], s: usize) -> Vec<usize> {
    let mut v: Vec<&AcquisitionScore> = scores.iter().collect();
    // Stable sort by score only; ids were generated ascending, so ties
    // keep ascending-id order without consulting the id.
    v.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
    v.into_iter().take(s).map(|a| a.example_id).collect()
}

/// Random score vectors, many with heavy ties, against a stable full sort.
pub fn select_matches_full_sort(trials: usize) -> Result<(), String> {
    let mut rng = LabRng::seed_from_u64(5);
    for t in 0..trials {
        let n = rng.random_range(0..200);
        let levels = if t % 2 == 0 { 3 } else { 1_000_000 };
        let offset = rng.random_range(0..1000);
        let scores: Vec<AcquisitionScore> = (0..n)
            .map(|i| AcquisitionScore {
                example_id: offset + i,
                score: rng.random_range(0..levels) as f64 / levels as f64,
                per_copy: Vec::new(),
            })
            .collect();
        let s = rng.random_range(0..n + 5);
        let got = select_top(&scores, s);
        let want = full_sort(&scores, s);
        if got != want {
            return Err(format!("trial {t}: n={n} s={s}: {got:?} != {want:?}"));
        }
    }
    Ok(())
}

pub const FIDELITY_CORPUS: [&str; 6] = [
    "the film opens slowly but the acting is superb and the score is moving",
    "the plot drags and the dialogue is flat",
    "a superb cast carries a thin plot",
    "the film is long and the ending is flat",
    "moving performances and a superb score",
    "the acting is wooden and the film drags on",
];

pub const FIDELITY_SENTENCE: &str =
    "the superb acting and moving score lift a film whose plot drags and whose dialogue is flat at the end";

/// Empirical replacement frequency per token over `trials` seeded runs.
/// Returns (expected probability, observed frequency) per position.
pub fn replacement_frequencies(trials: usize) -> Result<Vec<(f64, f64)>, String> {
    let docs: Vec<TokenizedExample> = FIDELITY_CORPUS
        .iter()
        .enumerate()
        .map(|(id, t)| TokenizedExample { id, tokens: tokenize(t), label: 0 })
        .collect();
    let stats = build_stats(&docs).map_err(|e| e.to_string())?;
    let ex = TokenizedExample { id: 0, tokens: tokenize(FIDELITY_SENTENCE), label: 0 };
    if ex.tokens.len() != 20 {
        return Err(format!("fixture sentence has {} tokens", ex.tokens.len()));
    }
    let scores = stats.sentence_scores(&ex.tokens);
    let oracle = oracle_scores(&docs, &ex.tokens);
    if let Some(i) = (0..scores.len()).find(|&i| (scores[i] - oracle[i]).abs() > 1e-12) {
        return Err(format!("token {i}: score {} but counting gives {}", scores[i], oracle[i]));
    }
    let expected = expected_replacement(&oracle, 0.3);
    let aug = Augmenter::new(&stats);
    let mut counts = vec![0usize; ex.tokens.len()];
    for t in 0..trials {
        let mut rng = LabRng::seed_from_u64(t as u64);
        let out = aug.tfidf_replace(&ex, 0.3, &mut rng).map_err(|e| e.to_string())?;
        for (i, (a, b)) in ex.tokens.iter().zip(&out.tokens).enumerate() {
            if a != b {
                counts[i] += 1;
            }
        }
    }
    Ok(expected.into_iter().zip(counts).map(|(e, c)| (e, c as f64 / trials as f64)).collect())
}

/// Sentence TF-IDF by direct counting: in-sentence frequency over length,
/// times `ln((N + 1)/(df + 1)) + 1`.
pub fn oracle_scores(docs: &[TokenizedExample], sentence: &[String]) -> Vec<f64> {
    let n = docs.len() as f64;
    sentence
        .iter()
        .map(|w| {
            let tf = sentence.iter().filter(|t| *t == w).count() as f64 / sentence.len() as f64;
            let df = docs.iter().filter(|d| d.tokens.contains(w)).count() as f64;
            if df == 0.0 {
                0.0
            } else {
                tf * (((n + 1.0) / (df + 1.0)).ln() + 1.0)
            }
        })
        .collect()
}

/// `min(p·(C − s)/Z, 1)` written out directly.
pub fn expected_replacement(scores: &[f64], p: f64) -> Vec<f64> {
    let c = scores.iter().cloned().fold(f64::MIN, f64::max);
    let z = scores.iter().sum::<f64>() / scores.len() as f64;
    scores.iter().map(|s| f64::min(p * (c - s) / z, 1.0)).collect()
}
