//! Word-level tokenization and sentence boundaries.
//!
//! Tokens are maximal runs of letters, digits and apostrophes; every other
//! non-whitespace character is its own token. Each token keeps its byte span
//! in the source text so any token range can be mapped back to the exact
//! original slice, whitespace included.

use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.start..self.end]
    }
}

/// Splits text into spanned tokens.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<Token>;
}

/// Default model-agnostic tokenizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordTokenizer;

fn word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{L}\p{N}'’]+|[^\s\p{L}\p{N}'’]").unwrap())
}

impl Tokenizer for WordTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        word_regex()
            .find_iter(text)
            .map(|m| Token {
                start: m.start(),
                end: m.end(),
            })
            .collect()
    }
}

/// Lowercased word tokens only (punctuation dropped), for embedding training.
pub fn lowercase_words(text: &str) -> Vec<String> {
    WordTokenizer
        .tokenize(text)
        .iter()
        .map(|t| t.text(text))
        .filter(|w| w.chars().next().is_some_and(|c| c.is_alphanumeric()))
        .map(|w| w.to_lowercase().replace('’', "'"))
        .collect()
}

fn is_terminal(tok: &str) -> bool {
    matches!(tok, "." | "!" | "?")
}

/// Token ranges of sentences.
///
/// A sentence ends at `.`, `!` or `?` when the next token is separated by
/// whitespace and starts with an uppercase letter, or when it is the last
/// token. Abbreviations are not special-cased.
pub fn sentence_ranges(text: &str, tokens: &[Token]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, tok) in tokens.iter().enumerate() {
        if !is_terminal(tok.text(text)) {
            continue;
        }
        let ends = match tokens.get(i + 1) {
            None => true,
            Some(next) => {
                let gap = &text[tok.end..next.start];
                !gap.is_empty()
                    && gap.chars().all(char::is_whitespace)
                    && next
                        .text(text)
                        .chars()
                        .next()
                        .is_some_and(char::is_uppercase)
            }
        };
        if ends {
            out.push(start..i + 1);
            start = i + 1;
        }
    }
    if start < tokens.len() {
        out.push(start..tokens.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<&str> {
        WordTokenizer
            .tokenize(s)
            .iter()
            .map(|t| t.text(s))
            .collect()
    }

    #[test]
    fn words_and_punctuation() {
        assert_eq!(
            texts("Ralph wept, for man’s heart... don't!"),
            vec!["Ralph", "wept", ",", "for", "man’s", "heart", ".", ".", ".", "don't", "!"]
        );
        assert!(texts("   \n\t").is_empty());
    }

    #[test]
    fn sentences_need_uppercase_follower() {
        let s = "It began. Then it ended. e.g. this is fine? Yes";
        let toks = WordTokenizer.tokenize(s);
        let sents = sentence_ranges(s, &toks);
        let rendered: Vec<String> = sents
            .iter()
            .map(|r| s[toks[r.start].start..toks[r.end - 1].end].to_string())
            .collect();
        assert_eq!(
            rendered,
            vec!["It began.", "Then it ended. e.g. this is fine?", "Yes"]
        );
    }

    #[test]
    fn lowercase_words_drop_punctuation() {
        assert_eq!(
            lowercase_words("The Nurse, she said."),
            vec!["the", "nurse", "she", "said"]
        );
    }
}
