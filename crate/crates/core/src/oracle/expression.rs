//! Ground-truth test doubles: answerers that actually compute.

use super::{NoiseModel, Oracle, OracleError, OracleQuery};
use crate::expr::Expr;
use crate::numbers::detect_numbers;
use crate::rational::{render_decimal, Rational, MAX_RENDER_DECIMALS};

/// Answers by applying a fixed expression to numbers found in the prompt.
///
/// Variable x_i reads the i-th number at the configured positions (0-based
/// indices into the detected numbers, in order), or the last `arity`
/// numbers when no positions are set — which matches bare arithmetic
/// prompts where the unsolved line comes last. Intended for prefix-free
/// prompts; positions count every number in the full prompt text.
pub struct ExpressionOracle {
    expression: Expr,
    positions: Option<Vec<usize>>,
    noise: Option<NoiseModel>,
}

impl ExpressionOracle {
    pub fn new(expression: Expr) -> Self {
        ExpressionOracle {
            expression,
            positions: None,
            noise: None,
        }
    }

    /// Read operands from these detected-number positions instead of the
    /// trailing ones.
    pub fn with_operand_positions(mut self, positions: Vec<usize>) -> Self {
        self.positions = Some(positions);
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = Some(noise);
        self
    }
}

fn respond(
    value: Result<Rational, crate::expr::EvalError>,
    noise: &Option<NoiseModel>,
    prompt: &str,
) -> String {
    match value {
        Ok(v) => {
            let rendered = render_decimal(&v, MAX_RENDER_DECIMALS);
            match noise {
                Some(n) => n.apply(prompt, &v, &rendered),
                None => rendered,
            }
        }
        Err(_) => "undefined".to_string(),
    }
}

impl Oracle for ExpressionOracle {
    fn complete(&self, query: &OracleQuery) -> Result<String, OracleError> {
        let numbers = detect_numbers(&query.prompt);
        let arity = self.expression.arity() as usize;
        let values: Option<Vec<Rational>> = match &self.positions {
            Some(positions) => positions
                .iter()
                .map(|&p| numbers.get(p).map(|s| s.value.clone()))
                .collect(),
            None => {
                if numbers.len() < arity {
                    None
                } else {
                    Some(
                        numbers[numbers.len() - arity..]
                            .iter()
                            .map(|s| s.value.clone())
                            .collect(),
                    )
                }
            }
        };
        let Some(values) = values else {
            return Ok("cannot tell".to_string());
        };
        Ok(respond(
            self.expression.evaluate(&values),
            &self.noise,
            &query.prompt,
        ))
    }
}

/// Answers bare arithmetic prompts (`12 + 7 =`) by computing them exactly,
/// like a perfectly calculating answerer. The last nonempty line is parsed
/// as a constants-only expression; few-shot prefixes are therefore ignored.
pub struct CalculatorOracle {
    noise: Option<NoiseModel>,
}

impl CalculatorOracle {
    pub fn new() -> Self {
        CalculatorOracle { noise: None }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = Some(noise);
        self
    }
}

impl Default for CalculatorOracle {
    fn default() -> Self {
        Self::new()
    }
}

impl Oracle for CalculatorOracle {
    fn complete(&self, query: &OracleQuery) -> Result<String, OracleError> {
        let Some(line) = query
            .prompt
            .lines()
            .rev()
            .map(str::trim)
            .find(|l| !l.is_empty())
        else {
            return Ok("cannot tell".to_string());
        };
        let text = line.trim_end_matches('=').trim();
        let parsed = match crate::parse::parse(text) {
            Ok(e) if e.arity() == 0 => e,
            _ => return Ok("cannot tell".to_string()),
        };
        Ok(respond(parsed.evaluate(&[]), &self.noise, &query.prompt))
    }
}

/// An oracle that never answers with a number; useful as a degenerate case.
pub struct SilentOracle;

impl Oracle for SilentOracle {
    fn complete(&self, _query: &OracleQuery) -> Result<String, OracleError> {
        Ok("no idea".to_string())
    }
}
