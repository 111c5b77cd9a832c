//! GloVe word embeddings and role/group association bias.

mod bias;
mod glove;

use std::collections::HashMap;

use thiserror::Error;

use crate::exec::Execution;
use crate::tokenize::lowercase_words;

pub use bias::{
    association_bias, bias_table, bias_table_with_vectors, AssociationBias, BiasRow, BiasTable,
    Comparison, WordLists, WordVectors, DEFAULT_COMPARISONS, DEFAULT_WINDOWS,
};
pub use glove::{glove_weight, train_glove, EmbeddingModel, GloveParams, Gradients};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("co-occurrence matrix has no entries")]
    EmptyCooccurrence,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("loss became non-finite ({loss}) at iteration {iteration}")]
    NonFinite { iteration: usize, loss: f64 },
    #[error("word list: {0}")]
    WordList(String),
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, EmbeddingError>;

/// Dense word index, most frequent first (ties alphabetical).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pub words: Vec<String>,
    pub counts: Vec<u64>,
    pub min_count: u64,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.id(word).map(|i| self.counts[i as usize])
    }
}

pub fn build_vocab<S: AsRef<str>>(tokens: &[S], min_count: u64) -> Result<Vocab> {
    if tokens.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for t in tokens {
        *freq.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut kept: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
    let index = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as u32))
        .collect();
    Ok(Vocab {
        counts: kept.iter().map(|&(_, c)| c).collect(),
        words,
        min_count,
        index,
    })
}

/// Sparse symmetric co-occurrence weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CoocMatrix {
    pub window: usize,
    pub vocab_size: usize,
    entries: HashMap<(u32, u32), f64>,
}

impl CoocMatrix {
    pub fn new(window: usize, vocab_size: usize) -> Self {
        Self {
            window,
            vocab_size,
            entries: HashMap::new(),
        }
    }

    pub fn get(&self, i: u32, j: u32) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> f64 {
        self.sorted_entries().iter().map(|e| e.2).sum()
    }

    /// Nonzero entries in (i, j) order.
    pub fn sorted_entries(&self) -> Vec<(u32, u32, f64)> {
        let mut v: Vec<(u32, u32, f64)> =
            self.entries.iter().map(|(&(i, j), &x)| (i, j, x)).collect();
        v.sort_by_key(|e| (e.0, e.1));
        v
    }

    pub fn add(&mut self, i: u32, j: u32, x: f64) {
        *self.entries.entry((i, j)).or_insert(0.0) += x;
    }

    /// Adds every entry of `other` into `self`.
    pub fn merge(&mut self, other: &CoocMatrix) {
        for (i, j, x) in other.sorted_entries() {
            self.add(i, j, x);
        }
    }
}

/// Accumulates `1/d` into both `X_ij` and `X_ji` for every in-vocabulary
/// pair at distance `d <= window`. Out-of-vocabulary tokens still occupy a
/// position.
pub fn cooccurrence<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocab,
    window: usize,
) -> Result<CoocMatrix> {
    if window == 0 {
        return Err(EmbeddingError::InvalidParam(
            "window must be at least 1".into(),
        ));
    }
    let ids: Vec<Option<u32>> = tokens.iter().map(|t| vocab.id(t.as_ref())).collect();
    let mut m = CoocMatrix::new(window, vocab.len());
    for (p, a) in ids.iter().enumerate() {
        let Some(a) = *a else { continue };
        for d in 1..=window {
            let Some(Some(b)) = ids.get(p + d).copied() else {
                continue;
            };
            let x = 1.0 / d as f64;
            m.add(a, b, x);
            m.add(b, a, x);
        }
    }
    Ok(m)
}

/// Co-occurrence over independent documents; windows never cross document
/// boundaries. Shards are merged in document order.
pub fn cooccurrence_docs(
    docs: &[Vec<String>],
    vocab: &Vocab,
    window: usize,
    exec: Execution,
) -> Result<CoocMatrix> {
    let shards = exec.map(docs, |d| cooccurrence(d, vocab, window));
    let mut all = CoocMatrix::new(window, vocab.len());
    for s in shards {
        all.merge(&s?);
    }
    Ok(all)
}

/// Lowercased word tokens with each listed phrase collapsed into one
/// underscore-joined token, e.g. "top student" becomes `top_student`.
pub fn embedding_tokens(text: &str, phrases: &[String]) -> Vec<String> {
    let words = lowercase_words(text);
    let mut parts: Vec<Vec<&str>> = phrases
        .iter()
        .map(|p| p.split('_').filter(|s| !s.is_empty()).collect::<Vec<_>>())
        .filter(|p| p.len() > 1)
        .collect();
    parts.sort_by_key(|p| std::cmp::Reverse(p.len()));
    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    'outer: while i < words.len() {
        for p in &parts {
            if words.len() - i >= p.len() && p.iter().zip(&words[i..]).all(|(a, b)| a == b) {
                out.push(p.join("_"));
                i += p.len();
                continue 'outer;
            }
        }
        out.push(words[i].clone());
        i += 1;
    }
    out
}
