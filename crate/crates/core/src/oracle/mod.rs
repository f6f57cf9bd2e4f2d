//! The black-box answerer abstraction: a prompt goes in, completion text
//! comes out. Ground-truth doubles with configurable noise, a replay oracle
//! over recorded fixtures, and an HTTP client for live endpoints all
//! implement the same trait, plus number extraction from free text.

mod expression;
mod http;
mod noise;
mod replay;

pub use expression::{CalculatorOracle, ExpressionOracle, SilentOracle};
pub use http::{HttpOracle, HttpOracleConfig};
pub use noise::{NoiseMode, NoiseModel};
pub use replay::{RecordingOracle, ReplayFixture, ReplayOracle};

use thiserror::Error;

use crate::numbers::detect_numbers;
use crate::rational::Rational;

/// Why a prompt is being issued; carried for diagnostics and fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryPurpose {
    Proposal,
    Substitution,
    Benchmark,
}

#[derive(Debug, Clone)]
pub struct OracleQuery {
    pub prompt: String,
    pub purpose: QueryPurpose,
    /// Anchor-group index for substitution queries.
    pub group: Option<usize>,
}

impl OracleQuery {
    pub fn new(prompt: impl Into<String>, purpose: QueryPurpose) -> Self {
        let prompt = prompt.into();
        assert!(!prompt.is_empty(), "oracle prompts must be nonempty");
        OracleQuery {
            prompt,
            purpose,
            group: None,
        }
    }

    pub fn with_group(mut self, group: usize) -> Self {
        self.group = Some(group);
        self
    }
}

/// A completion plus the number extracted from it, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleAnswer {
    pub raw: String,
    pub value: Option<Rational>,
}

impl OracleAnswer {
    pub fn extract(raw: String, mode: ExtractMode) -> Self {
        let value = extract_number(&raw, mode);
        OracleAnswer { raw, value }
    }
}

#[derive(Debug, Clone, Error)]
pub enum OracleError {
    #[error("oracle request failed: {0}")]
    Failure(String),
    #[error("oracle request timed out")]
    Timeout,
    #[error("replay fixture has no entry for prompt starting {0:?}")]
    ReplayMiss(String),
}

/// Maps a prompt to completion text. Implementations must be safe for
/// concurrent `complete` calls.
pub trait Oracle: Send + Sync {
    fn complete(&self, query: &OracleQuery) -> Result<String, OracleError>;
}

impl<T: Oracle + ?Sized> Oracle for &T {
    fn complete(&self, query: &OracleQuery) -> Result<String, OracleError> {
        (**self).complete(query)
    }
}

impl<T: Oracle + ?Sized> Oracle for Box<T> {
    fn complete(&self, query: &OracleQuery) -> Result<String, OracleError> {
        (**self).complete(query)
    }
}

/// Which numeric token of a completion carries the answer. Chain-of-thought
/// completions end with it, so `Last` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtractMode {
    First,
    #[default]
    Last,
}

/// Pull the answer number out of completion text: thousands commas are
/// stripped, leading currency symbols and trailing percent signs or periods
/// are ignored, and `None` is returned when no numeric token exists.
pub fn extract_number(text: &str, mode: ExtractMode) -> Option<Rational> {
    let spans = detect_numbers(text);
    let span = match mode {
        ExtractMode::First => spans.first(),
        ExtractMode::Last => spans.last(),
    }?;
    Some(span.value.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn strips_commas_and_trailing_period() {
        assert_eq!(
            extract_number("The answer is 3,018.", ExtractMode::Last),
            Some(int(3_018))
        );
    }

    #[test]
    fn last_number_wins() {
        assert_eq!(extract_number("3 + 4 = 7", ExtractMode::Last), Some(int(7)));
        assert_eq!(extract_number("3 + 4 = 7", ExtractMode::First), Some(int(3)));
    }

    #[test]
    fn absent_when_no_number() {
        assert_eq!(extract_number("no idea", ExtractMode::Last), None);
    }

    #[test]
    fn currency_and_percent_are_ignored() {
        assert_eq!(
            extract_number("about $1,250 total", ExtractMode::Last),
            Some(int(1_250))
        );
        assert_eq!(extract_number("roughly 45%", ExtractMode::Last), Some(int(45)));
    }
}
