use std::sync::LazyLock;

use regex::Regex;

use crate::template::PromptTemplate;

/// How far outside `[0, 1]` a reply may stray and still be clamped.
pub const CLAMP_TOLERANCE: f64 = 0.05;

/// Index of the option a stage-1 reply chose.
///
/// The first standalone option letter wins: uppercase anywhere, lowercase
/// only as the reply's first token (so `" b) Impolite"` reads as B but the
/// article in "a polite text" does not). Failing that, the earliest
/// whole-word option label counts.
pub fn parse_label(reply: &str, template: &PromptTemplate) -> Option<usize> {
    let chars: Vec<char> = reply.chars().collect();
    let first_token = chars.iter().position(|c| !c.is_whitespace());
    for (k, &c) in chars.iter().enumerate() {
        if !c.is_alphabetic() {
            continue;
        }
        let before = k.checked_sub(1).map(|j| chars[j]);
        let after = chars.get(k + 1).copied();
        if before.is_some_and(char::is_alphanumeric) || after.is_some_and(char::is_alphanumeric) {
            continue;
        }
        let letter = if c.is_ascii_uppercase() {
            c
        } else if c.is_ascii_lowercase() && Some(k) == first_token {
            c.to_ascii_uppercase()
        } else {
            continue;
        };
        if let Some(i) = template.options.iter().position(|o| o.letter == letter) {
            return Some(i);
        }
    }
    let lower = reply.to_lowercase();
    template
        .options
        .iter()
        .enumerate()
        .filter_map(|(i, o)| find_word(&lower, &o.label.to_lowercase()).map(|at| (at, i)))
        .min()
        .map(|(_, i)| i)
}

fn find_word(haystack: &str, word: &str) -> Option<usize> {
    let bytes = haystack.as_bytes();
    haystack.match_indices(word).map(|(at, _)| at).find(|&at| {
        let end = at + word.len();
        let left_ok = at == 0 || !bytes[at - 1].is_ascii_alphanumeric();
        let right_ok = end == bytes.len() || !bytes[end].is_ascii_alphanumeric();
        left_ok && right_ok
    })
}

/// A parsed stage-2 probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsedConfidence {
    pub value: f64,
    /// Set when the number was clamped into `[0, 1]` or read as a percentage.
    pub anomaly: bool,
}

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?(\s*%)?").expect("valid pattern"));

/// First number in the reply that lies in `[0, 1]` up to the clamping
/// tolerance. A trailing `%` divides by 100.
pub fn parse_confidence(reply: &str) -> Option<ParsedConfidence> {
    NUMBER.captures_iter(reply).find_map(|cap| {
        let whole = cap.get(0).expect("match");
        let percent = cap.get(1).is_some();
        let digits = whole.as_str().trim_end_matches(|c: char| c == '%' || c.is_whitespace());
        let mut v: f64 = digits.parse().ok()?;
        if percent {
            v /= 100.0;
        }
        if !v.is_finite() || !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&v) {
            return None;
        }
        let clamped = v.clamp(0.0, 1.0);
        Some(ParsedConfidence { value: clamped, anomaly: percent || clamped != v })
    })
}
