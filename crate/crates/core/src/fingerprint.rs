//! Functional fingerprints: a collision-resistant digest of an expression's
//! values at a fixed seeded sequence of rational probe points.
//!
//! Two expressions with equal fingerprints agree at every probe point, which
//! is how enumerated candidates are deduplicated and cross-validation folds
//! are compared. Probe points carry four coordinates (the maximum operand
//! count) so expressions of different structural arity still collide when
//! they compute the same function. Points landing on a denominator zero are
//! resampled from the same seeded stream.

use num::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::expr::Expr;
use crate::parse::MAX_VARIABLES;
use crate::rational::{rat, Rational};

pub const PROBE_POINT_COUNT: usize = 8;
const FINGERPRINT_SEED: u64 = 0x9a1c_55e3_7b02_d4f1;
const MAX_RESAMPLES: u32 = 64;

/// Digest of an expression's values on the probe points.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint([u8; 32]);

impl std::fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.0[..8] {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

fn coord_rng(point: usize, attempt: u32, coord: usize) -> ChaCha8Rng {
    let mix = FINGERPRINT_SEED
        ^ ((point as u64) << 48)
        ^ ((attempt as u64) << 24)
        ^ (coord as u64);
    ChaCha8Rng::seed_from_u64(mix)
}

/// One probe coordinate: a nonzero rational with a 4-to-7 digit numerator.
pub fn probe_value(point: usize, attempt: u32, coord: usize) -> Rational {
    let mut rng = coord_rng(point, attempt, coord);
    let numer = rng.gen_range(1_000i64..=9_999_999);
    let denom = rng.gen_range(1i64..=97);
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    rat(sign * numer, denom)
}

/// A full probe point with [`MAX_VARIABLES`] coordinates.
pub fn probe_point(point: usize, attempt: u32) -> Vec<Rational> {
    (0..MAX_VARIABLES as usize)
        .map(|coord| probe_value(point, attempt, coord))
        .collect()
}

/// First-attempt points, cached: resampling is rare, so the hot path reuses
/// these.
fn base_points() -> &'static [Vec<Rational>] {
    use std::sync::OnceLock;
    static POINTS: OnceLock<Vec<Vec<Rational>>> = OnceLock::new();
    POINTS.get_or_init(|| (0..PROBE_POINT_COUNT).map(|p| probe_point(p, 0)).collect())
}

/// Canonical fingerprint of an expression.
pub fn fingerprint(e: &Expr) -> Fingerprint {
    let mut hasher = Sha256::new();
    for point in 0..PROBE_POINT_COUNT {
        let mut value = e.evaluate(&base_points()[point]);
        let mut attempt = 1;
        while value.is_err() && attempt < MAX_RESAMPLES {
            value = e.evaluate(&probe_point(point, attempt));
            attempt += 1;
        }
        match value {
            Ok(v) => {
                hasher.update(v.numer().to_signed_bytes_le());
                hasher.update(b"/");
                hasher.update(v.denom().to_signed_bytes_le());
                hasher.update(b";");
            }
            Err(_) => hasher.update(b"undef;"),
        }
    }
    Fingerprint(hasher.finalize().into())
}

/// Functional equivalence via fingerprint comparison.
pub fn equivalent(a: &Expr, b: &Expr) -> bool {
    fingerprint(a) == fingerprint(b)
}

/// Independent equivalence check on `count` random points: both expressions
/// are evaluated wherever both are defined and compared at the given
/// relative tolerance. Used as the test-side oracle so it stays separate
/// from the fingerprint path.
pub fn agree_on_random_points(
    a: &Expr,
    b: &Expr,
    count: usize,
    rel_tol: &Rational,
    seed: u64,
) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < count && attempts < count * 20 {
        attempts += 1;
        let point: Vec<Rational> = (0..MAX_VARIABLES)
            .map(|_| {
                let numer = rng.gen_range(1i64..=10_000);
                let denom = rng.gen_range(1i64..=50);
                let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
                rat(sign * numer, denom)
            })
            .collect();
        let (va, vb) = match (a.evaluate(&point), b.evaluate(&point)) {
            (Ok(va), Ok(vb)) => (va, vb),
            // Outside the shared domain: pick another point.
            _ => continue,
        };
        let scale = if vb.abs() > Rational::from_integer(1.into()) {
            vb.abs()
        } else {
            Rational::from_integer(1.into())
        };
        if (va - vb).abs() > rel_tol * scale {
            return false;
        }
        checked += 1;
    }
    checked > 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rel_tolerance;

    fn x(i: u8) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn commuted_sums_share_a_fingerprint() {
        assert!(equivalent(&Expr::add(x(1), x(2)), &Expr::add(x(2), x(1))));
    }

    #[test]
    fn flipped_subtraction_is_distinct() {
        assert!(!equivalent(&Expr::sub(x(1), x(2)), &Expr::sub(x(2), x(1))));
    }

    #[test]
    fn algebraically_equal_ratios_share_a_fingerprint() {
        let a = Expr::sub(Expr::int(1), Expr::div(x(1), x(2)));
        let b = Expr::div(Expr::sub(x(2), x(1)), x(2));
        assert!(equivalent(&a, &b));
    }

    #[test]
    fn cancelled_factor_matches_across_arities() {
        // (x1*x2)/x2 computes x1 wherever defined; the shared probe layout
        // makes it collide with the arity-1 identity.
        let padded = Expr::div(Expr::mul(x(1), x(2)), x(2));
        assert!(equivalent(&padded, &x(1)));
    }

    #[test]
    fn probe_values_are_deterministic() {
        assert_eq!(probe_value(3, 0, 1), probe_value(3, 0, 1));
        assert_ne!(probe_value(3, 0, 1), probe_value(3, 1, 1));
    }

    #[test]
    fn random_point_oracle_agrees_with_fingerprints() {
        let tol = rel_tolerance(9);
        let a = Expr::sub(Expr::int(1), Expr::div(x(1), x(2)));
        let b = Expr::div(Expr::sub(x(2), x(1)), x(2));
        assert!(agree_on_random_points(&a, &b, 100, &tol, 7));
        assert!(!agree_on_random_points(
            &Expr::sub(x(1), x(2)),
            &Expr::sub(x(2), x(1)),
            100,
            &tol,
            7
        ));
    }
}
