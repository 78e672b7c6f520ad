//! Structural coherence checks.

use crate::corpus::{is_word_char, TokenSeq};

/// Lines longer than this many characters count against line-length sanity.
pub const MAX_LINE_CHARS: usize = 240;

const DELIMITERS: [(char, char); 3] = [('(', ')'), ('[', ']'), ('{', '}')];

fn balanced(text: &str, open: char, close: char) -> bool {
    let mut depth: i64 = 0;
    for c in text.chars() {
        if c == open {
            depth += 1;
        } else if c == close {
            depth -= 1;
            if depth < 0 {
                return false;
            }
        }
    }
    depth == 0
}

fn is_alphabetic_token(t: &str) -> bool {
    !t.is_empty() && t.chars().all(char::is_alphabetic)
}

fn is_punct_token(t: &str) -> bool {
    !t.chars().any(is_word_char)
}

/// Letter/digit mixes (`x3f`), consonant-only words of six or more letters
/// (`bcdfgh`), and multi-character tokens without any alphanumeric.
pub fn is_malformed_token(t: &str) -> bool {
    let has_letter = t.chars().any(|c| c.is_ascii_alphabetic());
    let has_digit = t.chars().any(|c| c.is_ascii_digit());
    if has_letter && has_digit {
        return true;
    }
    if t.len() >= 6
        && t.chars().all(|c| c.is_ascii_alphabetic())
        && !t.chars().any(|c| "aeiouy".contains(c))
    {
        return true;
    }
    t.chars().count() > 1 && !t.chars().any(|c| c.is_alphanumeric())
}

/// The nine individual check scores, each in `[0, 1]`, in the order
/// `()`, `[]`, `{}`, even `"` count, line length, character alphanumeric
/// ratio, token alphabetic ratio, punctuation density, malformed tokens.
pub fn coherence_checks(text: &str, doc: &TokenSeq) -> [f64; 9] {
    let mut checks = [0.0; 9];
    for (k, (open, close)) in DELIMITERS.iter().enumerate() {
        checks[k] = if balanced(text, *open, *close) { 1.0 } else { 0.0 };
    }
    checks[3] = if text.chars().filter(|&c| c == '"').count() % 2 == 0 {
        1.0
    } else {
        0.0
    };

    let lines: Vec<&str> = text.split('\n').collect();
    let long = lines
        .iter()
        .filter(|l| l.chars().count() > MAX_LINE_CHARS)
        .count();
    checks[4] = (1.0 - long as f64 / lines.len() as f64).max(0.0);

    let visible = text.chars().filter(|c| !c.is_whitespace()).count();
    let alnum = text.chars().filter(|c| c.is_alphanumeric()).count();
    checks[5] = if visible == 0 { 0.0 } else { alnum as f64 / visible as f64 };

    let n = doc.len();
    if n > 0 {
        let n = n as f64;
        let alpha = doc.iter().filter(|t| is_alphabetic_token(t)).count() as f64;
        let punct = doc.iter().filter(|t| is_punct_token(t)).count() as f64;
        let malformed = doc.iter().filter(|t| is_malformed_token(t)).count() as f64;
        checks[6] = alpha / n;
        checks[7] = (1.0 - 2.0 * punct / n).max(0.0);
        checks[8] = (1.0 - malformed / n).max(0.0);
    }
    checks
}

/// Unweighted mean of the nine structural checks. Empty or whitespace-only
/// text scores 0.
pub fn syntactic_coherence(text: &str, doc: &TokenSeq) -> f64 {
    if text.trim().is_empty() {
        return 0.0;
    }
    coherence_checks(text, doc).iter().sum::<f64>() / 9.0
}

pub(crate) fn alphabetic_ratio(doc: &TokenSeq) -> f64 {
    if doc.is_empty() {
        return 0.0;
    }
    doc.iter().filter(|t| is_alphabetic_token(t)).count() as f64 / doc.len() as f64
}
