//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns plain strings and numbers; results are
//! JSON. The `*_json` functions hold the logic and are what the native
//! tests call.

use allab::alloop::{run_with_data, Datasets};
use allab::augment::{replacement_probs, AugmentationPolicy, Augmenter};
use allab::config::{AllshSettings, BudgetSpec, DataSource, ExperimentConfig};
use allab::corpus::{build_stats, tokenize, TokenizedExample};
use allab::divergence::{alpha_div, entropy, jsd, kl, ProbDist};
use allab::model::TrainConfig;
use allab::synthetic::SyntheticSpec;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn parse_dist(field: &str, s: &str) -> Result<ProbDist, String> {
    let w: Vec<f64> = s
        .split([',', ' '])
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("{field}: not a number: {t:?}")))
        .collect::<Result<_, _>>()?;
    ProbDist::from_weights(w).map_err(|e| format!("{field}: {e}"))
}

#[derive(Serialize)]
struct DivergenceReport {
    p: Vec<f64>,
    q: Vec<f64>,
    kl_pq: f64,
    kl_qp: f64,
    jsd: f64,
    alpha: f64,
    alpha_div: Option<f64>,
    entropy_p: f64,
    entropy_q: f64,
}

/// `p` and `q` are comma separated non-negative weights, normalized here.
pub fn divergences_json(p: &str, q: &str, alpha: f64) -> Result<String, String> {
    let p = parse_dist("p", p)?;
    let q = parse_dist("q", q)?;
    let e = |r: Result<f64, _>| r.map_err(|e: allab::divergence::DivergenceError| e.to_string());
    let report = DivergenceReport {
        kl_pq: e(kl(&p, &q))?,
        kl_qp: e(kl(&q, &p))?,
        jsd: e(jsd(&p, &q))?,
        alpha,
        alpha_div: alpha_div(&p, &q, alpha).ok(),
        entropy_p: entropy(&p),
        entropy_q: entropy(&q),
        p: p.probs().to_vec(),
        q: q.probs().to_vec(),
    };
    Ok(serde_json::to_string(&report).expect("serializes"))
}

#[derive(Serialize)]
struct TokenInfo {
    token: String,
    score: f64,
    replace_prob: f64,
}

#[derive(Serialize)]
struct AugmentReport {
    tokens: Vec<TokenInfo>,
    copies: Vec<String>,
}

/// TF-IDF statistics come from `corpus` (one document per line); `sentence`
/// is then augmented `k` times.
pub fn augment_json(corpus: &str, sentence: &str, p_aug: f64, k: usize, seed: u64) -> Result<String, String> {
    let docs: Vec<TokenizedExample> = corpus
        .lines()
        .map(tokenize)
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(id, tokens)| TokenizedExample { id, tokens, label: 0 })
        .collect();
    let stats = build_stats(&docs).map_err(|e| e.to_string())?;
    let ex = TokenizedExample { id: 0, tokens: tokenize(sentence), label: 0 };
    if ex.tokens.is_empty() {
        return Err("sentence has no tokens".into());
    }
    let scores = stats.sentence_scores(&ex.tokens);
    let probs = replacement_probs(&scores, p_aug).unwrap_or_else(|| vec![0.0; scores.len()]);
    let policy = AugmentationPolicy { p_aug, ..Default::default() };
    policy.validate().map_err(|e| e.to_string())?;
    let set = Augmenter::new(&stats).generate_k(&ex, &policy, k, seed).map_err(|e| e.to_string())?;
    let report = AugmentReport {
        tokens: ex
            .tokens
            .iter()
            .zip(scores.iter().zip(&probs))
            .map(|(t, (&score, &replace_prob))| TokenInfo { token: t.clone(), score, replace_prob })
            .collect(),
        copies: set.copies.iter().map(|c| c.tokens.join(" ")).collect(),
    };
    Ok(serde_json::to_string(&report).expect("serializes"))
}

#[derive(Serialize)]
struct Curve {
    strategy: String,
    labeled: Vec<usize>,
    accuracy: Vec<f64>,
}

/// Small synthetic run per strategy (comma separated names), averaged over
/// `seeds` seeds. Sized to finish in a few seconds in a browser.
pub fn curves_json(strategies: &str, separation: f64, seeds: u64) -> Result<String, String> {
    let spec = SyntheticSpec { num_examples: 1000, class_separation: separation, ..Default::default() };
    let base = ExperimentConfig {
        data: DataSource::Synthetic { spec, test_examples: 400, data_seed: 0, od_spec: None },
        num_classes: 2,
        strategy: "random".into(),
        allsh: AllshSettings::default(),
        curriculum: false,
        budget: BudgetSpec { initial_fraction: 0.01, per_iteration: 10, total_fraction: 0.1 },
        train: TrainConfig { learning_rate: 5.0, ..Default::default() },
        imbalance: None,
        seeds: (0..seeds.max(1)).collect(),
        output_dir: "unused".into(),
        threads: Some(1),
        record_timings: false,
    };
    let data = Datasets::load(&base).map_err(|e| e.to_string())?;
    let mut curves = Vec::new();
    for name in strategies.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let config = ExperimentConfig { strategy: name.to_string(), ..base.clone() };
        config.validate().map_err(|e| e.join("; "))?;
        let mut curve = Curve { strategy: String::new(), labeled: Vec::new(), accuracy: Vec::new() };
        for &seed in &config.seeds {
            let r = run_with_data(&config, &data, seed).map_err(|e| e.to_string())?;
            curve.strategy = r.strategy;
            for (i, rec) in r.records.iter().enumerate() {
                if curve.labeled.len() <= i {
                    curve.labeled.push(rec.labeled_count);
                    curve.accuracy.push(0.0);
                }
                curve.accuracy[i] += rec.test_accuracy / config.seeds.len() as f64;
            }
        }
        curves.push(curve);
    }
    Ok(serde_json::to_string(&curves).expect("serializes"))
}

#[wasm_bindgen]
pub fn divergences(p: &str, q: &str, alpha: f64) -> Result<String, JsValue> {
    divergences_json(p, q, alpha).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn augment(corpus: &str, sentence: &str, p_aug: f64, k: usize, seed: u32) -> Result<String, JsValue> {
    augment_json(corpus, sentence, p_aug, k, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn learning_curves(strategies: &str, separation: f64, seeds: u32) -> Result<String, JsValue> {
    curves_json(strategies, separation, seeds.into()).map_err(|e| JsValue::from_str(&e))
}
