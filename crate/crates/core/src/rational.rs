//! Exact rational arithmetic helpers and decimal text conversion.
//!
//! All internal arithmetic is exact (`BigRational`); conversion to decimal
//! text happens only at oracle and reporting boundaries.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};

/// The exact number type used throughout the crate.
pub type Rational = BigRational;

/// Fractional digits used when rendering answers as decimal text.
pub const MAX_RENDER_DECIMALS: u32 = 6;

/// Rational from an integer.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Rational n/d. Panics when d = 0.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// The relative tolerance 10^-digits as an exact rational.
pub fn rel_tolerance(digits: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(10u32).pow(digits))
}

/// Parse a plain decimal literal: optional sign, digits, optional fractional
/// part. Thousands separators must already be stripped.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    let (sign, digits) = match text.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let mut numer: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part.parse().ok()?
    };
    let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
    numer *= &scale;
    if !frac_part.is_empty() {
        numer += frac_part.parse::<BigInt>().ok()?;
    }
    Some(Rational::new(BigInt::from(sign) * numer, scale))
}

/// Round `q` to `places` fractional digits, returning the scaled integer
/// `round(q * 10^places)`. Halves round away from zero.
fn scaled_round(q: &Rational, places: u32) -> BigInt {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = q * Rational::from_integer(scale);
    let (quot, rem) = scaled.numer().div_rem(scaled.denom());
    if &rem.abs() * 2 >= scaled.denom().abs() {
        if scaled.is_negative() {
            quot - 1
        } else {
            quot + 1
        }
    } else {
        quot
    }
}

/// Render `q` as decimal text rounded to at most `max_places` fractional
/// digits, trailing zeros (and a bare trailing point) trimmed.
pub fn render_decimal(q: &Rational, max_places: u32) -> String {
    let text = render_decimal_fixed(&exact_at(q, max_places), max_places);
    if !text.contains('.') {
        return text;
    }
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    if trimmed == "-0" {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}

/// Render `q` with exactly `places` fractional digits. `q` is rounded first
/// when it does not terminate at that precision.
pub fn render_decimal_fixed(q: &Rational, places: u32) -> String {
    let scaled = scaled_round(q, places);
    let sign = if scaled.is_negative() { "-" } else { "" };
    let digits = scaled.abs().to_string();
    if places == 0 {
        return format!("{sign}{digits}");
    }
    let places = places as usize;
    if digits.len() <= places {
        format!("{sign}0.{digits:0>places$}")
    } else {
        let (units, frac) = digits.split_at(digits.len() - places);
        format!("{sign}{units}.{frac}")
    }
}

/// The nearest rational terminating at `places` fractional digits.
pub fn exact_at(q: &Rational, places: u32) -> Rational {
    Rational::new(scaled_round(q, places), BigInt::from(10u32).pow(places))
}

/// True when `q` renders exactly at `places` fractional digits, i.e. its
/// reduced denominator divides 10^places.
pub fn is_exact_at(q: &Rational, places: u32) -> bool {
    (BigInt::from(10u32).pow(places)).is_multiple_of(q.denom())
}

/// True when |a - b| <= tol * max(1, |b|).
pub fn within_rel_tolerance(a: &Rational, b: &Rational, tol: &Rational) -> bool {
    let scale = if b.abs() > Rational::one() {
        b.abs()
    } else {
        Rational::one()
    };
    (a - b).abs() <= tol * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_decimals() {
        assert_eq!(parse_decimal("3018"), Some(int(3018)));
        assert_eq!(parse_decimal("-4.25"), Some(rat(-17, 4)));
        assert_eq!(parse_decimal("98.5"), Some(rat(197, 2)));
        assert_eq!(parse_decimal("+7"), Some(int(7)));
        assert_eq!(parse_decimal(".5"), Some(rat(1, 2)));
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("1.2.3"), None);
        assert_eq!(parse_decimal("abc"), None);
    }

    #[test]
    fn renders_with_trimming() {
        assert_eq!(render_decimal(&rat(1, 2), 6), "0.5");
        assert_eq!(render_decimal(&int(3018), 6), "3018");
        assert_eq!(render_decimal(&rat(1, 3), 6), "0.333333");
        assert_eq!(render_decimal(&rat(-1, 3), 6), "-0.333333");
        assert_eq!(render_decimal(&rat(22000, 12), 6), "1833.333333");
        assert_eq!(render_decimal(&rat(2, 3), 2), "0.67");
    }

    #[test]
    fn renders_fixed_places() {
        assert_eq!(render_decimal_fixed(&rat(199, 2), 1), "99.5");
        assert_eq!(render_decimal_fixed(&int(99), 1), "99.0");
        assert_eq!(render_decimal_fixed(&rat(-3, 100), 2), "-0.03");
        assert_eq!(render_decimal_fixed(&int(12), 0), "12");
    }

    #[test]
    fn exactness_check() {
        assert!(is_exact_at(&rat(1, 2), 6));
        assert!(is_exact_at(&rat(1833333, 1000), 6));
        assert!(!is_exact_at(&rat(1, 3), 6));
        assert!(!is_exact_at(&rat(1, 7), 6));
    }

    #[test]
    fn relative_tolerance_scales_with_magnitude() {
        let tol = rel_tolerance(6);
        assert!(within_rel_tolerance(&rat(2_000_001, 2), &int(1_000_000), &tol));
        assert!(!within_rel_tolerance(&rat(3, 2), &int(1), &tol));
        assert!(within_rel_tolerance(&rat(1, 1_000_000), &int(0), &tol));
    }
}
