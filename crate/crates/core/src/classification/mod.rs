//! Response classification: judge prompts and parsing, a lexicon-based
//! fallback classifier, persistence, and audit sampling.

mod judge;
mod lexicon;
mod rules;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::probing::{
    complete_with_retry, ChatRequest, ChatTransport, Demographic, Label, ModelRef, Rep,
    RequestContext, ResponseBatch, ResponseRecord, RetryPolicy,
};

pub use judge::{build_judge_prompts, marker, orientation, parse_judge_output, JudgePromptPair};
pub use lexicon::Lexicon;
pub use rules::rule_classifier;

/// Judge completions need only the marker and a label.
pub const JUDGE_MAX_TOKENS: u32 = 50;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("cannot sample {k} records from a population of {population}")]
    SampleTooLarge { k: usize, population: usize },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Judge,
    Rules,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub label: Label,
    pub raw_judge_output: String,
    pub method: Method,
    /// Why the label is `Uncategorized`, when that is not the judge's answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// How to classify responses.
pub enum Classifier<'a> {
    Rules,
    Judge {
        transport: &'a dyn ChatTransport,
        model: &'a ModelRef,
        retry: RetryPolicy,
    },
}

impl Classifier<'_> {
    pub fn method(&self) -> Method {
        match self {
            Classifier::Rules => Method::Rules,
            Classifier::Judge { .. } => Method::Judge,
        }
    }

    /// Labels one response. Judge transport failures become
    /// `Uncategorized` with the error kept as a diagnostic.
    pub fn classify(&self, rep: &Rep, response: &str, sample_index: u32) -> Classification {
        let lexicon = Lexicon::builtin();
        match self {
            Classifier::Rules => rule_classifier(response, rep, lexicon),
            Classifier::Judge {
                transport,
                model,
                retry,
            } => {
                let pair = build_judge_prompts(rep, response);
                let req = ChatRequest::new(model, &pair.system, &pair.user, 0.0, JUDGE_MAX_TOKENS);
                let ctx = RequestContext { sample_index };
                match complete_with_retry(*transport, model, &req, ctx, *retry) {
                    Ok((text, _)) => parse_judge_output(&text, rep, lexicon),
                    Err(e) => Classification {
                        label: Label::Uncategorized,
                        raw_judge_output: String::new(),
                        method: Method::Judge,
                        diagnostic: Some(format!("judge error: {e}")),
                    },
                }
            }
        }
    }
}

/// One label per response of the batch, in batch order.
pub fn classify_batch(
    batch: &ResponseBatch,
    rep: &Rep,
    classifier: &Classifier,
    exec: Execution,
    parallelism: usize,
) -> Vec<Classification> {
    let items: Vec<(u32, &String)> = batch
        .sample_indices
        .iter()
        .copied()
        .zip(&batch.responses)
        .collect();
    exec.with_pool(parallelism, || {
        exec.map(&items, |(i, text)| classifier.classify(rep, text, *i))
    })
}

/// Persisted classification of one stored response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub model: String,
    pub era: Option<String>,
    pub demographic: Demographic,
    pub role: String,
    pub sample_index: u32,
    pub label: Label,
    pub method: Method,
    pub raw_judge_output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Classifies every stored REP response. Responses to prompts outside the
/// REP catalog (EEPs, for instance) are skipped. Output order follows input
/// order.
pub fn classify_records(
    records: &[ResponseRecord],
    reps: &[Rep],
    classifier: &Classifier,
    exec: Execution,
    parallelism: usize,
) -> Vec<ClassificationRecord> {
    let by_id: BTreeMap<String, &Rep> = reps.iter().map(|r| (r.id(), r)).collect();
    let work: Vec<(&ResponseRecord, &Rep)> = records
        .iter()
        .filter_map(|r| by_id.get(&r.prompt_id).map(|rep| (r, *rep)))
        .collect();
    exec.with_pool(parallelism, || {
        exec.map(&work, |(rec, rep)| {
            let c = classifier.classify(rep, &rec.response_text, rec.sample_index);
            ClassificationRecord {
                model: rec.model.clone(),
                era: rec.era.clone(),
                demographic: rep.demographic,
                role: rep.role.clone(),
                sample_index: rec.sample_index,
                label: c.label,
                method: c.method,
                raw_judge_output: c.raw_judge_output,
                diagnostic: c.diagnostic,
            }
        })
    })
}

fn io(path: &Path, e: impl std::fmt::Display) -> ClassifyError {
    ClassifyError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes records as JSON lines, replacing any existing file.
pub fn write_classifications(
    path: &Path,
    records: &[ClassificationRecord],
) -> Result<(), ClassifyError> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io(path, e))?);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| io(path, e))?;
        writeln!(w, "{line}").map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

pub fn read_classifications(path: &Path) -> Result<Vec<ClassificationRecord>, ClassifyError> {
    if !path.exists() {
        return Err(io(path, "classification store not found"));
    }
    crate::probing::read_jsonl(path).map_err(|e| io(path, e))
}

/// One row of a human-review sheet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditItem {
    pub id: String,
    pub rep: String,
    pub response: String,
    pub label: Label,
}

/// Seeded uniform sample of `k` items without replacement, in population
/// order.
pub fn audit_sample(
    items: &[AuditItem],
    k: usize,
    seed: u64,
) -> Result<Vec<AuditItem>, ClassifyError> {
    if k > items.len() {
        return Err(ClassifyError::SampleTooLarge {
            k,
            population: items.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, items.len(), k).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| items[i].clone()).collect())
}

/// Writes an audit sample as CSV with columns id, rep, response, label.
pub fn export_audit_sample(
    items: &[AuditItem],
    k: usize,
    seed: u64,
    path: &Path,
) -> Result<usize, ClassifyError> {
    let rows = audit_sample(items, k, seed)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    w.write_record(["id", "rep", "response", "label"])
        .map_err(|e| io(path, e))?;
    for r in &rows {
        w.write_record([r.id.as_str(), &r.rep, &r.response, r.label.as_str()])
            .map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))?;
    Ok(rows.len())
}
