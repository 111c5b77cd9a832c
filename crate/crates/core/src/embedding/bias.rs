use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    build_vocab, cooccurrence_docs, embedding_tokens, train_glove, EmbeddingError, EmbeddingModel,
    GloveParams, Result, Vocab,
};
use crate::exec::Execution;

pub const DEFAULT_WINDOWS: [usize; 3] = [5, 10, 15];

/// (first group, second group, column label).
pub const DEFAULT_COMPARISONS: [(&str, &str, &str); 3] = [
    ("woman", "man", "W vs M"),
    ("non_binary", "man", "NB vs M"),
    ("non_binary", "woman", "NB vs W"),
];

/// Named word groups parsed from a sectioned text file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordLists {
    pub groups: BTreeMap<String, Vec<String>>,
}

impl WordLists {
    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/wordlists.txt")).expect("bundled word lists parse")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                groups.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some(g) = &current else {
                return Err(EmbeddingError::WordList(format!(
                    "line {}: words before any [section]",
                    n + 1
                )));
            };
            groups
                .get_mut(g)
                .expect("section inserted on header")
                .extend(line.split_whitespace().map(str::to_lowercase));
        }
        Ok(Self { groups })
    }

    pub fn get(&self, group: &str) -> Result<&[String]> {
        self.groups
            .get(group)
            .map(Vec::as_slice)
            .ok_or_else(|| EmbeddingError::WordList(format!("no group named {group:?}")))
    }
}

/// Unit-length word vectors used for association measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    pub dim: usize,
    pub words: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl WordVectors {
    /// Normalizes each row of `data` (row-major, `words.len() x dim`).
    pub fn from_raw(words: Vec<String>, dim: usize, mut data: Vec<f64>) -> Self {
        assert_eq!(data.len(), words.len() * dim, "data shape");
        for row in data.chunks_mut(dim.max(1)) {
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Self {
            dim,
            words,
            data,
            index,
        }
    }

    /// Normalized `w + wc` for every vocabulary word.
    pub fn from_model(model: &EmbeddingModel, vocab: &Vocab) -> Self {
        let data = (0..vocab.len()).flat_map(|i| model.combined(i)).collect();
        Self::from_raw(vocab.words.clone(), model.dim, data)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// One `word v1 ... vd` line per word.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for w in &self.words {
            s.push_str(w);
            for v in self.get(w).expect("indexed word") {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s
    }

    fn mean_of(&self, words: &[String]) -> Option<Vec<f64>> {
        let present: Vec<&[f64]> = words.iter().filter_map(|w| self.get(w)).collect();
        if present.is_empty() {
            return None;
        }
        let mut m = vec![0.0; self.dim];
        for v in &present {
            m.iter_mut().zip(*v).for_each(|(a, b)| *a += b);
        }
        let n = present.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        Some(m)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `|v_role - mean(A)| - |v_role - mean(B)|` over the in-vocabulary words of
/// each group. Negative means the role sits closer to `A`. `None` when the
/// role or every word of a group is missing.
pub fn association_bias(
    vecs: &WordVectors,
    role: &str,
    group_a: &[String],
    group_b: &[String],
) -> Option<f64> {
    let r = vecs.get(role)?;
    let ma = vecs.mean_of(group_a)?;
    let mb = vecs.mean_of(group_b)?;
    Some(dist(r, &ma) - dist(r, &mb))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub first: String,
    pub second: String,
    pub label: String,
}

impl Comparison {
    pub fn defaults() -> Vec<Self> {
        DEFAULT_COMPARISONS
            .iter()
            .map(|(a, b, l)| Self {
                first: a.to_string(),
                second: b.to_string(),
                label: l.to_string(),
            })
            .collect()
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationBias {
    pub role: String,
    pub comparison: String,
    pub window: usize,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub role: String,
    pub comparison: String,
    /// Value per window, in table window order.
    pub values: Vec<Option<f64>>,
    /// Both signs occur across windows.
    pub sign_flip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasTable {
    pub windows: Vec<usize>,
    pub vocab_size: usize,
    pub cells: Vec<AssociationBias>,
    /// Final training loss per window.
    pub final_loss: Vec<f64>,
}

impl BiasTable {
    pub fn rows(&self) -> Vec<BiasRow> {
        let mut rows: Vec<BiasRow> = Vec::new();
        for c in &self.cells {
            let w = self
                .windows
                .iter()
                .position(|&w| w == c.window)
                .expect("cell window in table");
            let row = match rows
                .iter_mut()
                .find(|r| r.role == c.role && r.comparison == c.comparison)
            {
                Some(r) => r,
                None => {
                    rows.push(BiasRow {
                        role: c.role.clone(),
                        comparison: c.comparison.clone(),
                        values: vec![None; self.windows.len()],
                        sign_flip: false,
                    });
                    rows.last_mut().expect("just pushed")
                }
            };
            row.values[w] = c.value;
        }
        for r in &mut rows {
            let vals: Vec<f64> = r.values.iter().flatten().copied().collect();
            r.sign_flip = vals.iter().any(|v| *v > 0.0) && vals.iter().any(|v| *v < 0.0);
        }
        rows
    }

    /// Long-form CSV: `role,comparison,window,value` with `NA` for missing.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["role", "comparison", "window", "value"])
            .expect("in-memory write");
        for c in &self.cells {
            let v = c
                .value
                .map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
            w.write_record([
                c.role.as_str(),
                c.comparison.as_str(),
                &c.window.to_string(),
                &v,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Trains one model per window on `docs` and evaluates every
/// (role, comparison) cell.
#[allow(clippy::too_many_arguments)]
pub fn bias_table(
    docs: &[String],
    roles: &[String],
    lists: &WordLists,
    comparisons: &[Comparison],
    windows: &[usize],
    min_count: u64,
    params: GloveParams,
    exec: Execution,
) -> Result<BiasTable> {
    bias_table_with_vectors(
        docs,
        roles,
        lists,
        comparisons,
        windows,
        min_count,
        params,
        exec,
    )
    .map(|(t, _)| t)
}

/// [`bias_table`] plus the trained word vectors, one set per window.
#[allow(clippy::too_many_arguments)]
pub fn bias_table_with_vectors(
    docs: &[String],
    roles: &[String],
    lists: &WordLists,
    comparisons: &[Comparison],
    windows: &[usize],
    min_count: u64,
    params: GloveParams,
    exec: Execution,
) -> Result<(BiasTable, Vec<WordVectors>)> {
    for c in comparisons {
        lists.get(&c.first)?;
        lists.get(&c.second)?;
    }
    let token_docs: Vec<Vec<String>> = exec.map(docs, |d| embedding_tokens(d, roles));
    let all: Vec<&str> = token_docs.iter().flatten().map(String::as_str).collect();
    let vocab = build_vocab(&all, min_count)?;

    let per_window = exec.map(windows, |&w| -> Result<(WordVectors, f64)> {
        let cooc = cooccurrence_docs(&token_docs, &vocab, w, Execution::Sequential)?;
        let model = train_glove(&cooc, params)?;
        let loss = *model.loss_trace.last().expect("trace has initial loss");
        Ok((WordVectors::from_model(&model, &vocab), loss))
    });

    let mut cells = Vec::new();
    let mut final_loss = Vec::new();
    let mut all_vectors = Vec::new();
    for (&w, res) in windows.iter().zip(per_window) {
        let (vecs, loss) = res?;
        final_loss.push(loss);
        for role in roles {
            for c in comparisons {
                cells.push(AssociationBias {
                    role: role.clone(),
                    comparison: c.label.clone(),
                    window: w,
                    value: association_bias(
                        &vecs,
                        role,
                        lists.get(&c.first)?,
                        lists.get(&c.second)?,
                    ),
                });
            }
        }
        all_vectors.push(vecs);
    }
    let table = BiasTable {
        windows: windows.to_vec(),
        vocab_size: vocab.len(),
        cells,
        final_loss,
    };
    Ok((table, all_vectors))
}
