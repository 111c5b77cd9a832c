use std::collections::{BTreeSet, HashSet};

use super::{normalize_entity, EntityError, EntitySet, EntitySource, Extractor, Result};
use crate::tokenize::{sentence_ranges, Tokenizer, WordTokenizer};

/// Capitalized function words that never start or extend an entity.
const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "because",
    "before", "but", "by", "did", "do", "does", "each", "even", "every", "for", "from", "had",
    "has", "have", "he", "her", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in",
    "into", "is", "it", "its", "just", "let", "many", "me", "mine", "more", "most", "mr", "mrs",
    "ms", "my", "no", "not", "now", "of", "oh", "on", "once", "one", "or", "our", "she", "so",
    "some", "still", "such", "than", "that", "the", "their", "them", "then", "there", "these",
    "they", "this", "those", "though", "to", "too", "under", "until", "up", "upon", "was", "we",
    "well", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
    "with", "without", "yes", "yet", "you", "your",
];

/// Dependency-free extractor: maximal runs of capitalized words.
///
/// A one-word run at the start of a sentence is dropped when the same word
/// also appears in lowercase elsewhere in the text, since its capital is then
/// most likely positional.
#[derive(Debug, Clone)]
pub struct HeuristicExtractor {
    stopwords: HashSet<&'static str>,
}

impl Default for HeuristicExtractor {
    fn default() -> Self {
        Self {
            stopwords: STOPWORDS.iter().copied().collect(),
        }
    }
}

fn strip_possessive(word: &str) -> &str {
    word.strip_suffix("'s")
        .or_else(|| word.strip_suffix("’s"))
        .unwrap_or(word)
}

impl HeuristicExtractor {
    /// Entity surface strings in order of first appearance.
    pub fn spans(&self, text: &str) -> Vec<String> {
        let tokens = WordTokenizer.tokenize(text);
        let starts: HashSet<usize> = sentence_ranges(text, &tokens)
            .iter()
            .map(|r| r.start)
            .collect();
        let lowercase_seen: HashSet<&str> = tokens
            .iter()
            .map(|t| t.text(text))
            .filter(|w| w.chars().next().is_some_and(char::is_lowercase))
            .collect();

        let mut out = Vec::new();
        let mut run: Vec<(usize, &str)> = Vec::new();
        let flush = |run: &mut Vec<(usize, &str)>, out: &mut Vec<String>| {
            if run.is_empty() {
                return;
            }
            let drop = run.len() == 1 && starts.contains(&run[0].0) && {
                let lower = run[0].1.to_lowercase();
                lowercase_seen.contains(lower.as_str())
            };
            if !drop {
                out.push(run.iter().map(|(_, w)| *w).collect::<Vec<_>>().join(" "));
            }
            run.clear();
        };

        for (i, tok) in tokens.iter().enumerate() {
            let word = tok.text(text);
            let capitalized = word.chars().next().is_some_and(char::is_uppercase);
            let stop = self.stopwords.contains(word.to_lowercase().as_str());
            if capitalized && !stop {
                run.push((i, strip_possessive(word)));
                // A possessive ends the name: "Mary's Garden" is two entities.
                if strip_possessive(word).len() != word.len() {
                    flush(&mut run, &mut out);
                }
            } else {
                flush(&mut run, &mut out);
            }
        }
        flush(&mut run, &mut out);
        out
    }
}

impl Extractor for HeuristicExtractor {
    fn extract(&self, text: &str, source: EntitySource) -> Result<EntitySet> {
        if text.trim().is_empty() {
            return Err(EntityError::EmptyText);
        }
        let entities: BTreeSet<String> = self
            .spans(text)
            .iter()
            .filter_map(|s| normalize_entity(s))
            .collect();
        Ok(EntitySet { entities, source })
    }
}
