use std::collections::HashMap;
use std::sync::OnceLock;

use crate::probing::Demographic;
use crate::tokenize::lowercase_words;

const BUILTIN: &str = include_str!("../../data/lexicon.txt");

/// Synonym tables for judge parsing and cue lists for the rule classifier.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    /// Per demographic: (lowercase synonym, value), longest synonym first.
    pub judge: HashMap<Demographic, Vec<(String, String)>>,
    /// Per demographic: (value, cue word sequences).
    pub rules: HashMap<Demographic, Vec<(String, Vec<Vec<String>>)>>,
}

impl Lexicon {
    pub fn builtin() -> &'static Lexicon {
        static LEX: OnceLock<Lexicon> = OnceLock::new();
        LEX.get_or_init(|| Lexicon::parse(BUILTIN).expect("bundled lexicon parses"))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lex = Lexicon::default();
        let mut section: Option<(bool, Demographic)> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let (kind, demo) = name
                    .split_once('.')
                    .ok_or_else(|| format!("line {}: bad section {name:?}", n + 1))?;
                let demo: Demographic = demo.parse().map_err(|e| format!("line {}: {e}", n + 1))?;
                section = Some(match kind {
                    "judge" => (true, demo),
                    "rules" => (false, demo),
                    _ => return Err(format!("line {}: unknown section kind {kind:?}", n + 1)),
                });
                continue;
            }
            let (is_judge, demo) =
                section.ok_or_else(|| format!("line {}: entry outside a section", n + 1))?;
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            let (k, v) = (k.trim().to_lowercase(), v.trim());
            if is_judge {
                lex.judge.entry(demo).or_default().push((k, v.to_string()));
            } else {
                let cues = v
                    .split(',')
                    .map(lowercase_words)
                    .filter(|c| !c.is_empty())
                    .collect();
                lex.rules.entry(demo).or_default().push((k, cues));
            }
        }
        for list in lex.judge.values_mut() {
            list.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        }
        Ok(lex)
    }

    /// Value of the longest synonym that prefixes `span` on a word boundary.
    pub fn judge_value(&self, demographic: Demographic, span: &str) -> Option<&str> {
        let span = span.to_lowercase();
        self.judge.get(&demographic)?.iter().find_map(|(syn, val)| {
            let rest = span.strip_prefix(syn.as_str())?;
            rest.chars()
                .next()
                .is_none_or(|c| !c.is_alphanumeric())
                .then_some(val.as_str())
        })
    }
}

/// Occurrences of a word sequence inside a word list.
pub(crate) fn count_seq(words: &[String], seq: &[String]) -> usize {
    if seq.is_empty() || seq.len() > words.len() {
        return 0;
    }
    words.windows(seq.len()).filter(|w| *w == seq).count()
}
