//! Number detection in free text: spans, values, and decimal precision.

use std::sync::OnceLock;

use regex::Regex;

use crate::rational::{parse_decimal, Rational};

/// A number occurrence in a text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberSpan {
    /// Byte offsets into the source text.
    pub start: usize,
    pub end: usize,
    /// The matched text, e.g. `10,477`.
    pub raw: String,
    pub value: Rational,
    /// Digits after the decimal point in the raw text.
    pub decimal_places: u32,
}

fn token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // Thousands groups are strictly three digits; otherwise a plain
        // integer with an optional fractional part.
        Regex::new(r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?").unwrap()
    })
}

/// Find maximal number tokens: optional sign, digits with optional
/// thousands commas, optional decimal part. Values are parsed with commas
/// stripped.
pub fn detect_numbers(text: &str) -> Vec<NumberSpan> {
    let mut spans = Vec::new();
    for m in token_regex().find_iter(text) {
        let mut start = m.start();
        // Absorb a sign only when it is not glued to a preceding number
        // ("3-4" keeps both positive) or identifier.
        if start > 0 {
            let prev = text.as_bytes()[start - 1] as char;
            if prev == '-' || prev == '+' {
                let before = text[..start - 1].chars().next_back();
                let glued = matches!(before, Some(c) if c.is_ascii_alphanumeric() || c == '.' || c == ')');
                if !glued {
                    start -= 1;
                }
            }
        }
        let raw = &text[start..m.end()];
        let cleaned: String = raw.chars().filter(|&c| c != ',').collect();
        let Some(value) = parse_decimal(&cleaned) else {
            continue;
        };
        let decimal_places = match raw.split_once('.') {
            Some((_, frac)) => frac.len() as u32,
            None => 0,
        };
        spans.push(NumberSpan {
            start,
            end: m.end(),
            raw: raw.to_string(),
            value,
            decimal_places,
        });
    }
    spans
}
