//! Answer corruption modes modeled on the calculation errors language
//! models actually make: off-by-one digits, dropped or duplicated leading
//! digits, and truncated fractions.

use num::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Add a nonzero integer offset in -9..=9 to the value.
    UniformOffset,
    /// Bump one digit by one, e.g. 6.39 -> 6.49.
    CarryError,
    /// Drop the leading digit, e.g. 15499287 -> 5499287.
    MissingHighDigit,
    /// Duplicate the leading digit.
    ExtraDigit,
    /// Drop the fractional part, e.g. 1833.33 -> 1833.
    Truncation,
}

/// Deterministic corruption: whether and how a rendered answer is corrupted
/// depends only on (seed, prompt), so concurrent querying cannot change
/// outputs. `p = 0` leaves the oracle exact.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub probability: f64,
    pub mode: NoiseMode,
    pub seed: u64,
    /// Corrupt only answers whose magnitude exceeds this bound.
    pub trigger_above: Option<Rational>,
}

impl NoiseModel {
    pub fn new(mode: NoiseMode, probability: f64, seed: u64) -> Self {
        NoiseModel {
            probability,
            mode,
            seed,
            trigger_above: None,
        }
    }

    pub fn triggered_above(mut self, bound: Rational) -> Self {
        self.trigger_above = Some(bound);
        self
    }

    fn rng_for(&self, prompt: &str) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(prompt.as_bytes());
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        ChaCha8Rng::seed_from_u64(self.seed ^ u64::from_le_bytes(bytes))
    }

    /// Corrupt the rendered decimal for this prompt, or return it unchanged
    /// when the draw, the trigger bound, or the text shape says no.
    pub fn apply(&self, prompt: &str, value: &Rational, rendered: &str) -> String {
        if let Some(bound) = &self.trigger_above {
            if value.abs() <= *bound {
                return rendered.to_string();
            }
        }
        let mut rng = self.rng_for(prompt);
        if !rng.gen_bool(self.probability.clamp(0.0, 1.0)) {
            return rendered.to_string();
        }
        corrupt(self.mode, rendered, &mut rng)
    }
}

fn corrupt(mode: NoiseMode, rendered: &str, rng: &mut ChaCha8Rng) -> String {
    let (sign, body) = match rendered.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", rendered),
    };
    let digit_positions: Vec<usize> = body
        .char_indices()
        .filter(|(_, c)| c.is_ascii_digit())
        .map(|(i, _)| i)
        .collect();
    if digit_positions.is_empty() {
        return rendered.to_string();
    }
    let corrupted = match mode {
        NoiseMode::UniformOffset => {
            let offset = loop {
                let o = rng.gen_range(-9i64..=9);
                if o != 0 {
                    break o;
                }
            };
            let value = crate::rational::parse_decimal(body).unwrap_or_default()
                + crate::rational::int(offset);
            return format!(
                "{}{}",
                sign,
                crate::rational::render_decimal(&value, crate::rational::MAX_RENDER_DECIMALS)
            );
        }
        NoiseMode::CarryError => {
            let mut chars: Vec<char> = body.chars().collect();
            let pos = digit_positions[rng.gen_range(0..digit_positions.len())];
            let d = chars[pos].to_digit(10).unwrap();
            let bumped = if d == 9 {
                8
            } else if d == 0 {
                1
            } else if rng.gen_bool(0.5) {
                d + 1
            } else {
                d - 1
            };
            chars[pos] = char::from_digit(bumped, 10).unwrap();
            chars.into_iter().collect()
        }
        NoiseMode::MissingHighDigit => {
            if digit_positions.len() <= 1 {
                body.to_string()
            } else {
                let mut s = body.to_string();
                s.remove(digit_positions[0]);
                s
            }
        }
        NoiseMode::ExtraDigit => {
            let mut s = body.to_string();
            let first = body.as_bytes()[digit_positions[0]] as char;
            s.insert(digit_positions[0], first);
            s
        }
        NoiseMode::Truncation => match body.split_once('.') {
            Some((units, _)) => units.to_string(),
            None => body.to_string(),
        },
    };
    format!("{sign}{corrupted}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn probability_zero_is_exact() {
        let noise = NoiseModel::new(NoiseMode::CarryError, 0.0, 1);
        assert_eq!(noise.apply("p", &int(42), "42"), "42");
    }

    #[test]
    fn corruption_is_deterministic_per_prompt() {
        let noise = NoiseModel::new(NoiseMode::UniformOffset, 1.0, 9);
        let a = noise.apply("prompt one", &int(42), "42");
        let b = noise.apply("prompt one", &int(42), "42");
        assert_eq!(a, b);
        assert_ne!(a, "42");
    }

    #[test]
    fn truncation_drops_the_fraction() {
        let noise = NoiseModel::new(NoiseMode::Truncation, 1.0, 0);
        assert_eq!(
            noise.apply("q", &rat(1_833_333, 1_000), "1833.333"),
            "1833"
        );
    }

    #[test]
    fn missing_high_digit_shortens_the_number() {
        let noise = NoiseModel::new(NoiseMode::MissingHighDigit, 1.0, 0);
        assert_eq!(noise.apply("q", &int(15_499_287), "15499287"), "5499287");
    }

    #[test]
    fn extra_digit_duplicates_the_head() {
        let noise = NoiseModel::new(NoiseMode::ExtraDigit, 1.0, 0);
        assert_eq!(noise.apply("q", &int(123), "123"), "1123");
    }

    #[test]
    fn trigger_bound_gates_corruption() {
        let noise =
            NoiseModel::new(NoiseMode::UniformOffset, 1.0, 3).triggered_above(int(1_000));
        assert_eq!(noise.apply("q", &int(400), "400"), "400");
        assert_ne!(noise.apply("q", &int(4_000), "4000"), "4000");
    }
}
