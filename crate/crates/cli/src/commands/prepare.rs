use std::collections::BTreeMap;

use eraprobe::corpus::{
    author_demographics, corpus_overlap, export_finetune_dataset, format_task, manifest_path,
    segment_subset, DemographicCounts, FinetuneManifest, DEFAULT_SYSTEM_PROMPT,
};
use eraprobe::tokenize::WordTokenizer;
use serde::Serialize;

use super::{write_json, Context, PREPARE_DIR};
use crate::error::{self, CliError};
use crate::Outcome;

const STAGE: &str = "prepare";

#[derive(Serialize)]
struct DecadeStats {
    books: usize,
    segments: usize,
    tokens: usize,
    mid_sentence_splits: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_overlap_pct: Option<f64>,
}

#[derive(Serialize)]
struct CorpusStats {
    target_tokens: usize,
    split_fraction: f64,
    decades: BTreeMap<String, DecadeStats>,
    word_reduction: BTreeMap<String, f64>,
    author_demographics: DemographicCounts,
}

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.cfg;
    let (corpus, reductions) = ctx.clean_corpus(STAGE)?;
    let dir = ctx.stage_dir(STAGE, PREPARE_DIR)?;
    let reference: Option<Vec<String>> = match &cfg.reference_titles {
        Some(p) => Some(
            std::fs::read_to_string(p)
                .map_err(|e| error::io(STAGE, p, e))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
        ),
        None => None,
    };

    let mut written = Vec::new();
    let mut decades = BTreeMap::new();
    for subset in corpus.subsets.values() {
        let segments = segment_subset(subset, cfg.target_tokens, &WordTokenizer, ctx.exec)
            .map_err(|e| error::from_corpus(STAGE, e))?;
        let tasks = segments
            .iter()
            .map(|s| format_task(s, cfg.split_fraction, DEFAULT_SYSTEM_PROMPT))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| error::from_corpus(STAGE, e))?;
        let out = dir.join(format!("{}.jsonl", subset.label()));
        export_finetune_dataset(&tasks, &out, &FinetuneManifest::default())
            .map_err(|e| error::from_corpus(STAGE, e))?;
        written.push(out.clone());
        written.push(manifest_path(&out));
        let reference_overlap_pct = reference
            .as_ref()
            .map(|r| corpus_overlap(subset, r))
            .transpose()
            .map_err(|e| error::from_corpus(STAGE, e))?;
        decades.insert(
            subset.label(),
            DecadeStats {
                books: subset.len(),
                segments: segments.len(),
                tokens: segments.iter().map(|s| s.token_count).sum(),
                mid_sentence_splits: tasks.iter().filter(|t| t.mid_sentence).count(),
                reference_overlap_pct,
            },
        );
    }
    let stats = CorpusStats {
        target_tokens: cfg.target_tokens,
        split_fraction: cfg.split_fraction,
        decades,
        word_reduction: reductions.into_iter().collect(),
        author_demographics: author_demographics(&corpus),
    };
    written.push(write_json(STAGE, &dir.join("corpus_stats.json"), &stats)?);
    let summary = stats
        .decades
        .iter()
        .map(|(d, s)| format!("{d}: {} books, {} segments", s.books, s.segments))
        .collect();
    Ok(ctx.outcome(written, summary))
}
