//! Dataset ingestion, tokenization, TF-IDF statistics, featurization and
//! pool construction.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{rng_from, stream};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {0}: malformed record (expected {{\"text\": string, \"label\": int}})")]
    MalformedLine(usize),
    #[error("line {0}: label out of range")]
    LabelOutOfRange(usize),
    #[error("line {0}: text has no tokens")]
    EmptyText(usize),
    #[error("cannot build statistics from an empty corpus")]
    EmptyCorpus,
    #[error("imbalanced subsampling needs a binary dataset, got {0} classes")]
    NotBinary(usize),
    #[error("fraction {0} outside (0, 1) or selects no example")]
    FractionOutOfRange(f64),
    #[error("sample rate {0} outside (0, 1]")]
    RateOutOfRange(f64),
    #[error("id {0} is not in the unlabeled pool")]
    NotInPool(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    pub text: String,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedExample {
    pub id: usize,
    pub tokens: Vec<String>,
    pub label: usize,
}

impl TokenizedExample {
    pub fn from_document(doc: &Document) -> Self {
        Self {
            id: doc.id,
            tokens: tokenize(&doc.text),
            label: doc.label,
        }
    }
}

pub fn tokenize_all(docs: &[Document]) -> Vec<TokenizedExample> {
    docs.iter().map(TokenizedExample::from_document).collect()
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Reads a JSONL dataset. Any bad line rejects the whole file.
/// Line numbers in errors are 1-based.
pub fn load_jsonl(path: &Path, num_classes: usize) -> Result<Vec<Document>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(parse_line(&line, line_no, docs.len(), num_classes)?);
    }
    Ok(docs)
}

/// Same as [`load_jsonl`] but from an in-memory string.
pub fn parse_jsonl(content: &str, num_classes: usize) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        docs.push(parse_line(line, i + 1, docs.len(), num_classes)?);
    }
    Ok(docs)
}

fn parse_line(
    line: &str,
    line_no: usize,
    id: usize,
    num_classes: usize,
) -> Result<Document, CorpusError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|_| CorpusError::MalformedLine(line_no))?;
    let text = value
        .get("text")
        .and_then(|v| v.as_str())
        .ok_or(CorpusError::MalformedLine(line_no))?;
    let label = value
        .get("label")
        .and_then(|v| v.as_u64())
        .ok_or(CorpusError::MalformedLine(line_no))? as usize;
    if label >= num_classes {
        return Err(CorpusError::LabelOutOfRange(line_no));
    }
    if tokenize(text).is_empty() {
        return Err(CorpusError::EmptyText(line_no));
    }
    Ok(Document {
        id,
        text: text.to_owned(),
        label,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    /// Document frequency, indexed like `tokens`.
    pub df: Vec<usize>,
    /// Total occurrences across the corpus.
    pub total_count: Vec<usize>,
    /// Number of documents the vocabulary was built from.
    pub num_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// IDF and corpus-level TF-IDF per vocabulary entry, together with the
/// vocabulary they index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub vocab: Vocabulary,
    pub idf: Vec<f64>,
    pub corpus_score: Vec<f64>,
}

impl CorpusStats {
    pub fn dim(&self) -> usize {
        self.vocab.len()
    }

    /// `None` for out-of-vocabulary tokens.
    pub fn idf_of(&self, token: &str) -> Option<f64> {
        self.vocab.get(token).map(|i| self.idf[i])
    }

    pub fn max_corpus_score(&self) -> f64 {
        self.corpus_score.iter().copied().fold(0.0, f64::max)
    }

    /// TF(w)·IDF(w) for every position of `tokens`, where TF is the count of
    /// the token in the sentence over the sentence length. Unknown tokens
    /// score 0.
    pub fn sentence_scores(&self, tokens: &[String]) -> Vec<f64> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        let len = tokens.len() as f64;
        tokens
            .iter()
            .map(|t| match self.idf_of(t) {
                Some(idf) => counts[t.as_str()] as f64 / len * idf,
                None => 0.0,
            })
            .collect()
    }
}

/// Smoothed IDF: `ln((N + 1) / (df + 1)) + 1`.
pub fn smoothed_idf(num_docs: usize, df: usize) -> f64 {
    ((num_docs as f64 + 1.0) / (df as f64 + 1.0)).ln() + 1.0
}

/// Builds the vocabulary (indices in first-appearance order) and the
/// per-token statistics.
pub fn build_stats(docs: &[TokenizedExample]) -> Result<CorpusStats, CorpusError> {
    if docs.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut tokens = Vec::new();
    let mut df = Vec::new();
    let mut total_count = Vec::new();
    let mut total_tokens = 0usize;
    let mut seen_in_doc: Vec<usize> = Vec::new();

    for (doc_no, doc) in docs.iter().enumerate() {
        for tok in &doc.tokens {
            total_tokens += 1;
            let idx = match index.get(tok) {
                Some(&i) => i,
                None => {
                    let i = tokens.len();
                    index.insert(tok.clone(), i);
                    tokens.push(tok.clone());
                    df.push(0);
                    total_count.push(0);
                    seen_in_doc.push(usize::MAX);
                    i
                }
            };
            total_count[idx] += 1;
            if seen_in_doc[idx] != doc_no {
                seen_in_doc[idx] = doc_no;
                df[idx] += 1;
            }
        }
    }
    if total_tokens == 0 {
        return Err(CorpusError::EmptyCorpus);
    }

    let n = docs.len();
    let idf: Vec<f64> = df.iter().map(|&d| smoothed_idf(n, d)).collect();
    let corpus_score = total_count
        .iter()
        .zip(&idf)
        .map(|(&c, &w)| c as f64 / total_tokens as f64 * w)
        .collect();

    Ok(CorpusStats {
        vocab: Vocabulary {
            index,
            tokens,
            df,
            total_count,
            num_docs: n,
        },
        idf,
        corpus_score,
    })
}

/// Sparse non-negative feature vector, entries sorted by index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Documents whose tokens are all out of vocabulary featurize to zero.
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|(i, _)| *i)
    }
}

/// Sentence TF times IDF, L2-normalized. Unknown tokens are dropped but
/// still count toward the sentence length.
pub fn featurize(tokens: &[String], stats: &CorpusStats) -> FeatureVector {
    if tokens.is_empty() {
        return FeatureVector::default();
    }
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for t in tokens {
        if let Some(i) = stats.vocab.get(t) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let len = tokens.len() as f64;
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(i, c)| (i, c as f64 / len * stats.idf[i]))
        .collect();
    entries.sort_unstable_by_key(|(i, _)| *i);
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut entries {
            *w /= norm;
        }
    }
    FeatureVector { entries }
}

/// Keeps label-1 documents with `positive_rate` and label-0 documents with
/// `negative_rate`. Surviving documents are renumbered densely in their
/// original order.
pub fn subsample_imbalanced(
    docs: &[Document],
    num_classes: usize,
    positive_rate: f64,
    negative_rate: f64,
    seed: u64,
) -> Result<Vec<Document>, CorpusError> {
    if num_classes != 2 || docs.iter().any(|d| d.label > 1) {
        return Err(CorpusError::NotBinary(num_classes.max(
            docs.iter().map(|d| d.label + 1).max().unwrap_or(0),
        )));
    }
    for rate in [positive_rate, negative_rate] {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(CorpusError::RateOutOfRange(rate));
        }
    }
    let mut rng = rng_from(seed, &[stream::IMBALANCE]);
    let mut kept = Vec::new();
    for doc in docs {
        let rate = if doc.label == 1 {
            positive_rate
        } else {
            negative_rate
        };
        // Always draw so the stream position does not depend on the rate.
        let u: f64 = rng.random();
        if u < rate {
            kept.push(Document {
                id: kept.len(),
                ..doc.clone()
            });
        }
    }
    Ok(kept)
}

/// Labeled / unlabeled partition of the training ids `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolState {
    labeled: BTreeSet<usize>,
    unlabeled: BTreeSet<usize>,
    initial_size: usize,
    budget_spent: usize,
}

impl PoolState {
    pub fn new(num_examples: usize, initial: impl IntoIterator<Item = usize>) -> Self {
        let labeled: BTreeSet<usize> = initial.into_iter().filter(|&i| i < num_examples).collect();
        let unlabeled = (0..num_examples).filter(|i| !labeled.contains(i)).collect();
        Self {
            initial_size: labeled.len(),
            labeled,
            unlabeled,
            budget_spent: 0,
        }
    }

    pub fn labeled(&self) -> &BTreeSet<usize> {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<usize> {
        &self.unlabeled
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled.len()
    }

    pub fn initial_size(&self) -> usize {
        self.initial_size
    }

    pub fn budget_spent(&self) -> usize {
        self.budget_spent
    }

    pub fn num_examples(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }

    /// Moves `ids` from the pool into the labeled set. All-or-nothing.
    pub fn label(&mut self, ids: &[usize]) -> Result<(), CorpusError> {
        let mut distinct = BTreeSet::new();
        for &id in ids {
            if !self.unlabeled.contains(&id) || !distinct.insert(id) {
                return Err(CorpusError::NotInPool(id));
            }
        }
        for id in distinct {
            self.unlabeled.remove(&id);
            self.labeled.insert(id);
            self.budget_spent += 1;
        }
        debug_assert!(self.check_partition());
        Ok(())
    }

    /// True when the two sets are disjoint, cover `0..n`, and the spend
    /// matches.
    pub fn check_partition(&self) -> bool {
        let n = self.num_examples();
        self.labeled.is_disjoint(&self.unlabeled)
            && self.labeled.iter().chain(&self.unlabeled).all(|&i| i < n)
            && self.budget_spent + self.initial_size == self.labeled.len()
    }
}

/// Number of examples a fraction of `n` selects, rounding up. The small
/// slack keeps products like `0.001 * 5000` from rounding to 6.
pub fn fraction_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Uniformly samples `⌈fraction·n⌉` ids without replacement as the
/// initial labeled set.
pub fn initial_seed_split(
    num_examples: usize,
    fraction: f64,
    seed: u64,
) -> Result<PoolState, CorpusError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CorpusError::FractionOutOfRange(fraction));
    }
    let count = fraction_count(fraction, num_examples);
    if count == 0 || count > num_examples {
        return Err(CorpusError::FractionOutOfRange(fraction));
    }
    let mut rng = rng_from(seed, &[stream::SPLIT]);
    let picked = index::sample(&mut rng, num_examples, count);
    Ok(PoolState::new(num_examples, picked))
}
