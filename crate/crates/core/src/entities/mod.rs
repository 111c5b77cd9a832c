//! Named-entity extraction and the entity-overlap validation metric.
//!
//! A fine-tuned model is considered to have absorbed its decade's books when
//! the entities it mentions in free completions also occur in those books.
//! Per response, overlap is the share of the response's entities found in the
//! subset; responses are averaged per prompt, then prompts are averaged.

mod heuristic;
mod remote;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DecadeSubset;
use crate::exec::Execution;

pub use heuristic::HeuristicExtractor;
pub use remote::{ExtractRequest, ExtractResponse, ExtractedEntity, RemoteExtractor};

#[derive(Debug, Error)]
pub enum EntityError {
    #[error("cannot extract entities from empty text")]
    EmptyText,
    #[error("extractor transport error: {0}")]
    Transport(String),
    #[error("extractor rejected request with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed extractor response: {0}")]
    Decode(String),
    #[error("cannot average an empty list of overlap percentages")]
    EmptyScores,
}

pub type Result<T> = std::result::Result<T, EntityError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntitySource {
    CorpusSubset,
    ModelResponse,
}

/// Lowercase, whitespace-collapsed entity surface forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySet {
    pub entities: BTreeSet<String>,
    pub source: EntitySource,
}

/// Lowercases and collapses whitespace; `None` for blank input.
pub fn normalize_entity(raw: &str) -> Option<String> {
    let s = raw
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    (!s.is_empty()).then_some(s)
}

impl EntitySet {
    pub fn new(source: EntitySource) -> Self {
        Self {
            entities: BTreeSet::new(),
            source,
        }
    }

    pub fn from_strings<S: AsRef<str>>(
        source: EntitySource,
        items: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            entities: items
                .into_iter()
                .filter_map(|s| normalize_entity(s.as_ref()))
                .collect(),
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn contains(&self, entity: &str) -> bool {
        self.entities.contains(entity)
    }

    pub fn union_with(&mut self, other: &EntitySet) {
        self.entities.extend(other.entities.iter().cloned());
    }
}

/// An entity-extraction backend.
pub trait Extractor: Send + Sync {
    fn extract(&self, text: &str, source: EntitySource) -> Result<EntitySet>;
}

/// Extracts entities from every book of a subset and unions them.
pub fn extract_subset_entities(
    subset: &DecadeSubset,
    extractor: &dyn Extractor,
    exec: Execution,
) -> Result<EntitySet> {
    let per_book = exec.map(&subset.books, |b| {
        if b.content.trim().is_empty() {
            Ok(EntitySet::new(EntitySource::CorpusSubset))
        } else {
            extractor.extract(&b.content, EntitySource::CorpusSubset)
        }
    });
    let mut all = EntitySet::new(EntitySource::CorpusSubset);
    for set in per_book {
        all.union_with(&set?);
    }
    Ok(all)
}

/// Percentage of response entities that also occur in the subset.
/// Zero when the response has no entities.
pub fn run_overlap(response: &EntitySet, subset: &EntitySet) -> f64 {
    if response.is_empty() {
        return 0.0;
    }
    let common = response
        .entities
        .iter()
        .filter(|e| subset.contains(e))
        .count();
    100.0 * common as f64 / response.len() as f64
}

/// How per-run percentages are combined into a prompt score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMode {
    /// Round each run to a whole percent before averaging.
    #[default]
    WholePercent,
    Exact,
}

fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(EntityError::EmptyScores);
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Overlap score for one prompt from its per-run percentages.
pub fn eep_overlap(run_percentages: &[f64], mode: RoundingMode) -> Result<f64> {
    match mode {
        RoundingMode::Exact => mean(run_percentages),
        RoundingMode::WholePercent => {
            let rounded: Vec<f64> = run_percentages.iter().map(|p| p.round()).collect();
            mean(&rounded)
        }
    }
}

/// Model-level overlap: mean of prompt scores.
pub fn model_overlap(eep_scores: &[f64]) -> Result<f64> {
    mean(eep_scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EepOverlap {
    pub eep_id: u32,
    pub per_run: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub model: String,
    pub rounding: RoundingMode,
    pub eeps: Vec<EepOverlap>,
    #[serde(rename = "final")]
    pub final_score: f64,
}

impl OverlapReport {
    /// Builds the report from per-prompt response entity sets.
    pub fn compute(
        model: &str,
        subset: &EntitySet,
        runs_by_eep: &[(u32, Vec<EntitySet>)],
        rounding: RoundingMode,
    ) -> Result<Self> {
        let mut eeps = Vec::with_capacity(runs_by_eep.len());
        for (eep_id, runs) in runs_by_eep {
            let per_run: Vec<f64> = runs.iter().map(|r| run_overlap(r, subset)).collect();
            let score = eep_overlap(&per_run, rounding)?;
            eeps.push(EepOverlap {
                eep_id: *eep_id,
                per_run,
                score,
            });
        }
        let scores: Vec<f64> = eeps.iter().map(|e| e.score).collect();
        Ok(Self {
            model: model.to_string(),
            rounding,
            final_score: model_overlap(&scores)?,
            eeps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> EntitySet {
        EntitySet::from_strings(EntitySource::ModelResponse, items)
    }

    fn subset() -> EntitySet {
        EntitySet::from_strings(EntitySource::CorpusSubset, ["John", "Mary", "New  York"])
    }

    #[test]
    fn worked_example_runs() {
        let s = subset();
        let r1 = run_overlap(&set(&["John", "Chicago", "Ford"]), &s);
        let r2 = run_overlap(&set(&["IBM", "John", "Los Angeles"]), &s);
        let r3 = run_overlap(&set(&["John", "Mary", "Boston"]), &s);
        assert!((r1 - 100.0 / 3.0).abs() < 1e-12);
        assert!((r2 - 100.0 / 3.0).abs() < 1e-12);
        assert!((r3 - 200.0 / 3.0).abs() < 1e-12);
        let whole = eep_overlap(&[r1, r2, r3], RoundingMode::WholePercent).unwrap();
        let exact = eep_overlap(&[r1, r2, r3], RoundingMode::Exact).unwrap();
        assert!((whole - 44.33).abs() < 0.01, "{whole}");
        assert!((exact - 44.44).abs() < 0.01, "{exact}");
    }

    #[test]
    fn identity_and_empty() {
        let s = subset();
        assert_eq!(run_overlap(&s, &s), 100.0);
        assert_eq!(run_overlap(&set(&[]), &s), 0.0);
    }

    #[test]
    fn averages() {
        assert_eq!(eep_overlap(&[100.0], RoundingMode::Exact).unwrap(), 100.0);
        assert_eq!(
            eep_overlap(&[0.0; 4], RoundingMode::WholePercent).unwrap(),
            0.0
        );
        assert!(matches!(
            eep_overlap(&[], RoundingMode::Exact),
            Err(EntityError::EmptyScores)
        ));
        assert_eq!(model_overlap(&[20.0; 10]).unwrap(), 20.0);
        assert_eq!(model_overlap(&[10.0, 30.0]).unwrap(), 20.0);
        assert!(model_overlap(&[]).is_err());
    }

    #[test]
    fn report_is_mean_of_means() {
        let s = subset();
        let runs = vec![
            (1, vec![set(&["John"]), set(&["Boston"])]),
            (2, vec![set(&["Mary", "Ford"])]),
        ];
        let rep = OverlapReport::compute("m", &s, &runs, RoundingMode::Exact).unwrap();
        assert_eq!(rep.eeps[0].score, 50.0);
        assert_eq!(rep.eeps[1].score, 50.0);
        assert_eq!(rep.final_score, 50.0);
    }

    fn arb_set() -> impl Strategy<Value = BTreeSet<String>> {
        prop::collection::btree_set("[a-e]", 0..5)
    }

    proptest! {
        #[test]
        fn overlap_bounds_and_monotone(a in arb_set(), b in arb_set(), extra in arb_set()) {
            let ra = EntitySet { entities: a.clone(), source: EntitySource::ModelResponse };
            let sb = EntitySet { entities: b.clone(), source: EntitySource::CorpusSubset };
            let v = run_overlap(&ra, &sb);
            prop_assert!((0.0..=100.0).contains(&v));
            prop_assert_eq!(v == 100.0, !a.is_empty() && a.is_subset(&b));
            prop_assert_eq!(v == 0.0, a.is_disjoint(&b));
            let mut bigger = sb.clone();
            bigger.entities.extend(extra);
            prop_assert!(run_overlap(&ra, &bigger) >= v);
        }

        #[test]
        fn averages_permutation_invariant(mut xs in prop::collection::vec(0.0f64..100.0, 1..20)) {
            let a = eep_overlap(&xs, RoundingMode::WholePercent).unwrap();
            let m = model_overlap(&xs).unwrap();
            xs.reverse();
            prop_assert!((eep_overlap(&xs, RoundingMode::WholePercent).unwrap() - a).abs() < 1e-9);
            prop_assert!((model_overlap(&xs).unwrap() - m).abs() < 1e-9);
        }
    }
}
