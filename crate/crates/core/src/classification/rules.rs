use super::lexicon::count_seq;
use super::{judge::value_to_label, Classification, Lexicon, Method};
use crate::probing::{Label, Rep};
use crate::tokenize::lowercase_words;

/// Offline stand-in for the judge: counts lexicon cues in the response and
/// picks the value with the most hits. Ties and silence are uncategorized.
pub fn rule_classifier(response: &str, rep: &Rep, lexicon: &Lexicon) -> Classification {
    let words = lowercase_words(response);
    let mut best: Option<(&str, usize)> = None;
    let mut tie = false;
    for (value, cues) in lexicon.rules.get(&rep.demographic).into_iter().flatten() {
        let hits: usize = cues.iter().map(|c| count_seq(&words, c)).sum();
        if hits == 0 {
            continue;
        }
        match best {
            Some((_, b)) if hits < b => {}
            Some((_, b)) if hits == b => tie = true,
            _ => {
                best = Some((value, hits));
                tie = false;
            }
        }
    }
    let (label, diagnostic) = match best {
        Some((v, _)) if !tie => (value_to_label(rep, v), None),
        Some(_) => (Label::Uncategorized, Some("tied cue counts".to_string())),
        None => (Label::Uncategorized, Some("no cues found".to_string())),
    };
    Classification {
        label,
        raw_judge_output: String::new(),
        method: Method::Rules,
        diagnostic,
    }
}
