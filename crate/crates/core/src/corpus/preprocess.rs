use super::{CorpusError, Result};

/// Literal markers delimiting the narrative. The kept text starts at the
/// first occurrence of any start marker and ends after the last occurrence of
/// any end marker, markers included.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkerRules {
    pub start: Vec<String>,
    pub end: Vec<String>,
}

impl MarkerRules {
    pub fn new<S: Into<String>>(
        start: impl IntoIterator<Item = S>,
        end: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            start: start.into_iter().map(Into::into).collect(),
            end: end.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub text: String,
    /// Fractional reduction in whitespace-separated word count, in [0, 1].
    pub word_reduction: f64,
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Strips front and back matter around the narrative.
///
/// Only the sides whose markers match are trimmed; with no match the text is
/// returned unchanged.
pub fn preprocess_book(title: &str, raw: &str, rules: &MarkerRules) -> Result<Preprocessed> {
    let start = rules
        .start
        .iter()
        .filter(|m| !m.is_empty())
        .filter_map(|m| raw.find(m.as_str()))
        .min();
    let end = rules
        .end
        .iter()
        .filter(|m| !m.is_empty())
        .filter_map(|m| raw.rfind(m.as_str()).map(|pos| (pos, pos + m.len())))
        .max_by_key(|&(_, stop)| stop);

    let lo = start.unwrap_or(0);
    let hi = end.map(|(_, stop)| stop).unwrap_or(raw.len());
    if let (Some(s), Some((e, _))) = (start, end) {
        if s > e {
            return Err(CorpusError::MarkerOrder {
                title: title.to_string(),
                start: s,
                end: e,
            });
        }
    }
    let text = raw[lo..hi].to_string();
    let before = word_count(raw);
    let after = word_count(&text);
    let word_reduction = if before == 0 {
        0.0
    } else {
        (before - after) as f64 / before as f64
    };
    Ok(Preprocessed {
        text,
        word_reduction,
    })
}
