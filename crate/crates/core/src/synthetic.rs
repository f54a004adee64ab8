//! Class-conditional token-stream generator used as a desk-scale stand-in
//! for sentiment and topic corpora.
//!
//! The vocabulary is split into a shared noise block and one disjoint
//! signal block per class. Both are sampled Zipf-style (weight 1/rank), so
//! TF-IDF has frequent uninformative words to work with and each class has
//! a few common cue words plus a long tail of rare ones. Each token of a document comes from the
//! document's class block with probability
//! `(1 − noise_token_fraction) · (1 − e^{−class_separation})`, otherwise
//! from the noise block. Separation 0 makes every class identical.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::rng::rng_from;

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("invalid synthetic spec: {0}")]
    SpecInvalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub num_examples: usize,
    pub num_classes: usize,
    pub vocab_size: usize,
    pub tokens_per_doc: usize,
    pub class_separation: f64,
    pub noise_token_fraction: f64,
    /// Share of the vocabulary reserved for class signal blocks; the rest
    /// is the shared noise block.
    #[serde(default = "default_signal_share")]
    pub signal_vocab_fraction: f64,
}

fn default_signal_share() -> f64 {
    0.1
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_examples: 5000,
            num_classes: 2,
            vocab_size: 2000,
            tokens_per_doc: 30,
            class_separation: 0.15,
            noise_token_fraction: 0.0,
            signal_vocab_fraction: default_signal_share(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let mut problems = Vec::new();
        if self.num_examples == 0 {
            problems.push("num_examples must be positive");
        }
        if self.num_classes < 2 {
            problems.push("num_classes must be at least 2");
        }
        if self.vocab_size < 2 * self.num_classes.max(1) {
            problems.push("vocab_size must be at least 2 * num_classes");
        }
        if self.tokens_per_doc == 0 {
            problems.push("tokens_per_doc must be positive");
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            problems.push("class_separation must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.noise_token_fraction) {
            problems.push("noise_token_fraction must be in [0, 1]");
        }
        if !(self.signal_vocab_fraction > 0.0 && self.signal_vocab_fraction < 1.0) {
            problems.push("signal_vocab_fraction must be in (0, 1)");
        } else if self.num_classes >= 2 && self.noise_block_raw() < 1 {
            problems.push("signal blocks leave no room for noise tokens");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SpecError::SpecInvalid(problems.join("; ")))
        }
    }

    pub fn signal_per_class(&self) -> usize {
        ((self.vocab_size as f64 * self.signal_vocab_fraction) as usize / self.num_classes).max(1)
    }

    fn noise_block_raw(&self) -> isize {
        self.vocab_size as isize - (self.signal_per_class() * self.num_classes) as isize
    }

    pub fn noise_block(&self) -> usize {
        self.noise_block_raw().max(0) as usize
    }

    /// Probability that a token is drawn from the document's class block.
    pub fn signal_prob(&self) -> f64 {
        (1.0 - self.noise_token_fraction) * (1.0 - (-self.class_separation).exp())
    }
}

fn noise_token(j: usize) -> String {
    format!("n{j}")
}

fn signal_token(class: usize, j: usize) -> String {
    format!("c{class}w{j}")
}

fn zipf(n: usize) -> Result<WeightedIndex<f64>, SpecError> {
    let w: Vec<f64> = (0..n).map(|r| 1.0 / (r as f64 + 1.0)).collect();
    WeightedIndex::new(&w).map_err(|e| SpecError::SpecInvalid(e.to_string()))
}

/// Generates `spec.num_examples` documents; labels cycle through the
/// classes so they are balanced.
pub fn generate(spec: &SyntheticSpec, seed: u64, stream_key: u64) -> Result<Vec<Document>, SpecError> {
    spec.validate()?;
    let mut rng = rng_from(seed, &[stream_key]);
    let noise = zipf(spec.noise_block())?;
    let signal = zipf(spec.signal_per_class())?;
    let p_signal = spec.signal_prob();

    let docs = (0..spec.num_examples)
        .map(|i| {
            let label = i % spec.num_classes;
            let words: Vec<String> = (0..spec.tokens_per_doc)
                .map(|_| {
                    if rng.random::<f64>() < p_signal {
                        signal_token(label, signal.sample(&mut rng))
                    } else {
                        noise_token(noise.sample(&mut rng))
                    }
                })
                .collect();
            Document { id: i, text: words.join(" "), label }
        })
        .collect();
    Ok(docs)
}

#[derive(Serialize)]
struct JsonlRecord<'a> {
    text: &'a str,
    label: usize,
}

/// One `{"text": ..., "label": ...}` object per line, LF-terminated.
pub fn write_jsonl<W: Write>(docs: &[Document], mut out: W) -> std::io::Result<()> {
    for d in docs {
        serde_json::to_writer(&mut out, &JsonlRecord { text: &d.text, label: d.label })?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_jsonl;
    use crate::rng::stream;

    #[test]
    fn balanced_and_deterministic() {
        let spec = SyntheticSpec { num_examples: 101, ..Default::default() };
        let a = generate(&spec, 5, stream::SYNTH_TRAIN).unwrap();
        let b = generate(&spec, 5, stream::SYNTH_TRAIN).unwrap();
        assert_eq!(a, b);
        let ones = a.iter().filter(|d| d.label == 1).count();
        assert_eq!(ones, 50);
        assert!(a.iter().all(|d| d.text.split(' ').count() == 30));
        assert_ne!(a, generate(&spec, 6, stream::SYNTH_TRAIN).unwrap());
    }

    #[test]
    fn zero_separation_has_no_signal_tokens() {
        let spec = SyntheticSpec { num_examples: 50, class_separation: 0.0, ..Default::default() };
        let docs = generate(&spec, 1, 0).unwrap();
        assert!(docs.iter().all(|d| d.text.split(' ').all(|t| t.starts_with('n'))));
    }

    #[test]
    fn jsonl_round_trips_through_loader() {
        let spec = SyntheticSpec { num_examples: 10, num_classes: 3, ..Default::default() };
        let docs = generate(&spec, 2, 0).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&docs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(parse_jsonl(&text, 3).unwrap(), docs);
    }

    #[test]
    fn spec_validation() {
        let bad = SyntheticSpec { num_classes: 1, noise_token_fraction: 2.0, ..Default::default() };
        let SpecError::SpecInvalid(msg) = bad.validate().unwrap_err();
        assert!(msg.contains("num_classes") && msg.contains("noise_token_fraction"));
    }
}
