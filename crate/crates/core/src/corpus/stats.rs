use std::collections::{BTreeMap, BTreeSet};

use super::{Author, Corpus, CorpusError, DecadeSubset, Result};

/// Lowercases, strips punctuation, collapses whitespace, and drops a leading
/// article (a / an / the).
pub fn normalize_title(title: &str) -> String {
    let cleaned: String = title
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                ' '
            }
        })
        .collect();
    let words: Vec<&str> = cleaned.split_whitespace().collect();
    let words = match words.first() {
        Some(&("a" | "an" | "the")) if words.len() > 1 => &words[1..],
        _ => &words[..],
    };
    words.join(" ")
}

/// Percentage of the subset's titles present in a reference title list.
/// Both sides are normalized with [`normalize_title`].
pub fn corpus_overlap<S: AsRef<str>>(subset: &DecadeSubset, reference_titles: &[S]) -> Result<f64> {
    if subset.is_empty() {
        return Err(CorpusError::EmptySubset(subset.start_year));
    }
    let reference: BTreeSet<String> = reference_titles
        .iter()
        .map(|t| normalize_title(t.as_ref()))
        .collect();
    let hits = subset
        .books
        .iter()
        .filter(|b| reference.contains(&normalize_title(&b.title)))
        .count();
    Ok(100.0 * hits as f64 / subset.len() as f64)
}

/// decade -> field -> value -> contributor count.
pub type DemographicCounts = BTreeMap<u16, BTreeMap<&'static str, BTreeMap<String, usize>>>;

pub const AUTHOR_FIELDS: [&str; 4] = ["gender", "sexual_orientation", "race", "religion"];

fn field_value(a: &Author, field: &str) -> String {
    let v = match field {
        "gender" => &a.gender,
        "sexual_orientation" => &a.sexual_orientation,
        "race" => &a.race,
        _ => &a.religion,
    };
    match v.as_deref().map(str::trim) {
        Some(s) if !s.is_empty() => s.to_lowercase(),
        _ => "unknown".to_string(),
    }
}

/// Counts contributors per decade and demographic field. Each author of a
/// multi-author book is counted separately; books without metadata count as
/// one unknown contributor.
pub fn author_demographics(corpus: &Corpus) -> DemographicCounts {
    let unknown = [Author::default()];
    let mut out = DemographicCounts::new();
    for (&decade, subset) in &corpus.subsets {
        let fields = out.entry(decade).or_default();
        for book in &subset.books {
            let authors: &[Author] = if book.authors.is_empty() {
                &unknown
            } else {
                &book.authors
            };
            for author in authors {
                for field in AUTHOR_FIELDS {
                    *fields
                        .entry(field)
                        .or_default()
                        .entry(field_value(author, field))
                        .or_insert(0) += 1;
                }
            }
        }
    }
    out
}
