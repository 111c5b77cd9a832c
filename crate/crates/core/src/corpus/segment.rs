use std::ops::Range;

use super::{Book, CorpusError, DecadeSubset, Result};
use crate::exec::Execution;
use crate::tokenize::{sentence_ranges, Tokenizer};

pub const DEFAULT_TARGET_TOKENS: usize = 8000;
pub const DEFAULT_SPLIT_FRACTION: f64 = 0.8;
pub const TASK_PREFIX: &str = "Complete the sentence: ";
/// Appended to the instruction when the split falls inside a sentence.
pub const CONTINUATION_MARKER: &str = "...";
pub const DEFAULT_SYSTEM_PROMPT: &str =
    "You are a helpful assistant. Provide an answer to the following question.";

const MIN_TARGET_TOKENS: usize = 16;

/// A contiguous run of a book's tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub book_title: String,
    pub index: usize,
    pub tokens: Vec<String>,
    pub token_count: usize,
    /// Source slice from the first token's start to the last token's end.
    pub text: String,
    /// Token byte spans relative to `text`.
    pub spans: Vec<Range<usize>>,
}

/// Splits a book into segments of at most `target` tokens.
///
/// Whole sentences are packed greedily; a sentence that would overflow starts
/// the next segment. Sentences longer than `target` are cut into
/// `target`-sized pieces. When a sentence would overflow a segment that is
/// still under half the target, the sentence is split to fill the segment
/// instead, so no non-final segment ends up shorter than `target / 2`.
pub fn segment_book(book: &Book, target: usize, tokenizer: &dyn Tokenizer) -> Result<Vec<Segment>> {
    if target < MIN_TARGET_TOKENS {
        return Err(CorpusError::Validation(format!(
            "target_tokens must be at least {MIN_TARGET_TOKENS}, got {target}"
        )));
    }
    let source = book.content.as_str();
    let tokens = tokenizer.tokenize(source);
    if tokens.is_empty() {
        return Err(CorpusError::EmptyBook(book.title.clone()));
    }

    let mut chunks: Vec<Range<usize>> = Vec::new();
    let mut cur = 0..0;
    for sentence in sentence_ranges(source, &tokens) {
        let mut s = sentence;
        if cur.is_empty() {
            cur = s.start..s.start;
        }
        let cur_len = cur.len();
        let len = s.len();
        if cur_len + len <= target {
            cur.end = s.end;
            continue;
        }
        if cur_len > 0 && cur_len < target / 2 {
            let fill = target - cur_len;
            chunks.push(cur.start..s.start + fill);
            s.start += fill;
        } else if cur_len > 0 {
            chunks.push(cur.clone());
        }
        while s.len() > target {
            chunks.push(s.start..s.start + target);
            s.start += target;
        }
        cur = s;
    }
    if !cur.is_empty() {
        chunks.push(cur);
    }

    Ok(chunks
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            let base = tokens[r.start].start;
            let stop = tokens[r.end - 1].end;
            let toks = &tokens[r];
            Segment {
                book_title: book.title.clone(),
                index,
                tokens: toks.iter().map(|t| t.text(source).to_string()).collect(),
                token_count: toks.len(),
                text: source[base..stop].to_string(),
                spans: toks.iter().map(|t| t.start - base..t.end - base).collect(),
            }
        })
        .collect())
}

/// Segments every book of a subset, books in manifest order.
pub fn segment_subset(
    subset: &DecadeSubset,
    target: usize,
    tokenizer: &dyn Tokenizer,
    exec: Execution,
) -> Result<Vec<Segment>> {
    exec.map(&subset.books, |b| segment_book(b, target, tokenizer))
        .into_iter()
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().flatten().collect())
}

/// One sentence-completion fine-tuning sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub instruction: String,
    pub expected_response: String,
    pub system_prompt: String,
    /// Whitespace between the instruction body and the expected response.
    pub gap: String,
    /// Whether the split fell inside a sentence (instruction ends with
    /// [`CONTINUATION_MARKER`]).
    pub mid_sentence: bool,
}

impl TaskInstance {
    /// The segment text carried by the instruction.
    pub fn body(&self) -> &str {
        let s = self
            .instruction
            .strip_prefix(TASK_PREFIX)
            .unwrap_or(&self.instruction);
        if self.mid_sentence {
            s.strip_suffix(CONTINUATION_MARKER).unwrap_or(s)
        } else {
            s
        }
    }

    /// Rebuilds the segment text.
    pub fn reconstruct(&self) -> String {
        format!("{}{}{}", self.body(), self.gap, self.expected_response)
    }
}

/// Formats a segment as a sentence-completion task.
///
/// The split lands on the sentence start nearest to
/// `floor(split_fraction * token_count)` (earlier one on ties). A segment with
/// no interior sentence start is split at that token index directly.
pub fn format_task(
    segment: &Segment,
    split_fraction: f64,
    system_prompt: &str,
) -> Result<TaskInstance> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(CorpusError::Validation(format!(
            "split_fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    let n = segment.token_count;
    if n < 2 {
        return Err(CorpusError::Validation(format!(
            "segment {} of {:?} has {n} token(s); at least 2 are needed to split",
            segment.index, segment.book_title
        )));
    }
    let goal = (split_fraction * n as f64).floor() as usize;

    let tokens: Vec<crate::tokenize::Token> = segment
        .spans
        .iter()
        .map(|r| crate::tokenize::Token {
            start: r.start,
            end: r.end,
        })
        .collect();
    let boundary = sentence_ranges(&segment.text, &tokens)
        .iter()
        .map(|r| r.start)
        .filter(|&s| s > 0 && s < n)
        .min_by_key(|&s| (s.abs_diff(goal), s));

    let (split, mid_sentence) = match boundary {
        Some(s) => (s, false),
        None => (goal.clamp(1, n - 1), true),
    };
    let body_end = segment.spans[split - 1].end;
    let resp_start = segment.spans[split].start;
    let mut instruction = format!("{TASK_PREFIX}{}", &segment.text[..body_end]);
    if mid_sentence {
        instruction.push_str(CONTINUATION_MARKER);
    }
    Ok(TaskInstance {
        instruction,
        expected_response: segment.text[resp_start..].to_string(),
        system_prompt: system_prompt.to_string(),
        gap: segment.text[body_end..resp_start].to_string(),
        mid_sentence,
    })
}
