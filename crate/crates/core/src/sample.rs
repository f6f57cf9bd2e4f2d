//! Seeded random expression generation, used by calibration runs and tests.

use rand::Rng;

use crate::basis::from_expression_with_arity;
use crate::expr::{BinOp, Expr};
use crate::rational::{rat, Rational};

/// Constants drawn by the random generators: small integers, the percentage
/// constant, and a few terminating decimals.
pub fn default_constant_pool() -> Vec<Rational> {
    let mut pool: Vec<Rational> = (1..=12).map(|n| rat(n, 1)).collect();
    pool.push(rat(100, 1));
    pool.push(rat(1, 2));
    pool.push(rat(5, 2));
    pool.push(rat(3, 4));
    pool
}

/// A random binary tree with `ops` operators over variables x1..xn
/// (repetition allowed) and constants from `pool`.
pub fn random_tree<R: Rng>(rng: &mut R, arity: u8, ops: u32, pool: &[Rational]) -> Expr {
    if ops == 0 {
        if !pool.is_empty() && rng.gen_bool(0.25) {
            return Expr::constant(pool[rng.gen_range(0..pool.len())].clone());
        }
        return Expr::var(rng.gen_range(1..=arity));
    }
    let left_ops = rng.gen_range(0..ops);
    let op = BinOp::ALL[rng.gen_range(0..4)];
    Expr::bin(
        op,
        random_tree(rng, arity, left_ops, pool),
        random_tree(rng, arity, ops - 1 - left_ops, pool),
    )
}

/// True when the value changes as coordinate `index` moves, probed on a few
/// seeded point pairs. Trees like `x1 + (x3 - x3)` use a variable
/// structurally without depending on it; their graphs satisfy several
/// independent multilinear relations at once, which makes them unusable as
/// ground truths.
fn depends_on_variable(e: &Expr, arity: u8, index: u8) -> bool {
    for pair in 0..6usize {
        let mut a = crate::fingerprint::probe_point(pair % crate::fingerprint::PROBE_POINT_COUNT, 2 * pair as u32);
        a.truncate(arity as usize);
        let mut b = a.clone();
        b[index as usize - 1] =
            crate::fingerprint::probe_value(pair % crate::fingerprint::PROBE_POINT_COUNT, 2 * pair as u32 + 1, index as usize - 1);
        if let (Ok(va), Ok(vb)) = (e.evaluate(&a), e.evaluate(&b)) {
            if va != vb {
                return true;
            }
        }
    }
    false
}

/// A random multilinear-representable expression of exactly the requested
/// arity: its denominator-cleared form repeats no symbol, it genuinely
/// depends on every variable up to `arity`, and it is not identically
/// undefined.
pub fn random_multilinear<R: Rng>(rng: &mut R, arity: u8, pool: &[Rational]) -> Expr {
    loop {
        let ops = rng.gen_range(arity as u32..=(arity as u32 + 2).min(5));
        let candidate = random_tree(rng, arity, ops, pool);
        if candidate.arity() != arity {
            continue;
        }
        if from_expression_with_arity(&candidate, arity).is_err() {
            continue;
        }
        // Reject relations whose y-side degenerates (e.g. x1/x1): the
        // cleared form must actually constrain y at a generic point.
        if candidate
            .evaluate(&crate::fingerprint::probe_point(0, 0))
            .is_err()
        {
            continue;
        }
        if (1..=arity).any(|i| !depends_on_variable(&candidate, arity, i)) {
            continue;
        }
        return candidate;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::from_expression;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn multilinear_samples_satisfy_the_contract() {
        let pool = default_constant_pool();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let arity = rng.gen_range(1..=4);
            let e = random_multilinear(&mut rng, arity, &pool);
            assert_eq!(e.arity(), arity);
            assert!(from_expression(&e).is_ok());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let pool = default_constant_pool();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            random_multilinear(&mut a, 3, &pool),
            random_multilinear(&mut b, 3, &pool)
        );
    }
}
