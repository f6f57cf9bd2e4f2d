//! Search-based solving: exhaustively enumerate the expression space, score
//! every candidate against the anchor answers by exact-match count and
//! accumulated absolute error, and return the most preferable expression.
//!
//! The space holds every binary-operator tree over x1..xn (each variable
//! exactly once) plus at most one constant leaf drawn from a finite
//! candidate set, deduplicated by functional fingerprint with the simplest
//! representative kept. Trees rather than raw coefficient assignments are
//! enumerated; each tree's cleared-denominator form has coefficients in
//! {-1, 0, 1} apart from the single constant, so the two readings of the
//! space coincide while staying tractable.

use std::collections::HashMap;

use itertools::Itertools;
use num::{Signed, Zero};
use thiserror::Error;

use crate::expr::{BinOp, Expr};
use crate::fingerprint::{fingerprint, Fingerprint};
use crate::linsys::AnchorSet;
use crate::rational::{int, rel_tolerance, Rational};

/// Error charged per anchor group on which a candidate is undefined:
/// finite, so a candidate undefined on one adversarial group can still be
/// ranked, but large enough to lose to any fully-defined candidate on
/// realistic magnitudes.
const UNDEFINED_PENALTY: i64 = 1_000_000_000;

pub const MAX_ARITY: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("operand count {0} exceeds the supported maximum of 4")]
    ArityTooLarge(u8),
    #[error("the search space is empty")]
    EmptySpace,
}

/// The default constant candidates: -100, -1, 0, 1, and the percentage
/// constant 100.
pub fn default_constants() -> Vec<Rational> {
    [-100, -1, 0, 1, 100].iter().map(|&c| int(c)).collect()
}

/// A deduplicated expression space for one operand count.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    pub arity: u8,
    pub expressions: Vec<Expr>,
}

impl SearchSpace {
    pub fn len(&self) -> usize {
        self.expressions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expressions.is_empty()
    }

    pub fn contains_equivalent(&self, e: &Expr) -> bool {
        let fp = fingerprint(e);
        self.expressions.iter().any(|c| fingerprint(c) == fp)
    }
}

/// Every tree over the given leaves, leaves used in the given order.
fn trees(leaves: &[Expr]) -> Vec<Expr> {
    if leaves.len() == 1 {
        return vec![leaves[0].clone()];
    }
    let mut out = Vec::new();
    for split in 1..leaves.len() {
        for left in trees(&leaves[..split]) {
            for right in trees(&leaves[split..]) {
                for op in BinOp::ALL {
                    out.push(Expr::bin(op, left.clone(), right.clone()));
                }
            }
        }
    }
    out
}

fn collect_candidates(
    arity: u8,
    constants: &[Rational],
    classes: &mut HashMap<Fingerprint, Expr>,
) {
    let vars: Vec<Expr> = (1..=arity).map(Expr::var).collect();
    let mut leaf_sets: Vec<Vec<Expr>> = vec![vars.clone()];
    for c in constants {
        let mut with_const = vars.clone();
        with_const.push(Expr::constant(c.clone()));
        leaf_sets.push(with_const);
    }
    for leaves in leaf_sets {
        let k = leaves.len();
        for perm in leaves.into_iter().permutations(k) {
            for tree in trees(&perm) {
                let fp = fingerprint(&tree);
                match classes.get(&fp) {
                    Some(existing) if existing.complexity_key() <= tree.complexity_key() => {}
                    _ => {
                        classes.insert(fp, tree);
                    }
                }
            }
        }
    }
}

/// Enumerate the space for `n` operands. Every expression uses each of
/// x1..xn exactly once; `include_lower_arities` adds the spaces for the
/// prefixes x1..xj (j < n) for callers with uncertain operand proposals.
pub fn enumerate_space_with(
    n: u8,
    constants: &[Rational],
    include_lower_arities: bool,
) -> Result<SearchSpace, SearchError> {
    if n == 0 || n > MAX_ARITY {
        return Err(SearchError::ArityTooLarge(n));
    }
    let mut classes: HashMap<Fingerprint, Expr> = HashMap::new();
    let lowest = if include_lower_arities { 1 } else { n };
    for arity in lowest..=n {
        collect_candidates(arity, constants, &mut classes);
    }
    let mut expressions: Vec<Expr> = classes.into_values().collect();
    expressions.sort_by_cached_key(|e| e.complexity_key());
    Ok(SearchSpace {
        arity: n,
        expressions,
    })
}

/// [`enumerate_space_with`] without subset-arity candidates.
pub fn enumerate_space(n: u8, constants: &[Rational]) -> Result<SearchSpace, SearchError> {
    enumerate_space_with(n, constants, false)
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Exact matches required before ranking by match count; `None` uses
    /// max(2, ceil(0.6 m)).
    pub c_threshold: Option<usize>,
    /// Relative tolerance for counting an exact match.
    pub match_tolerance: Rational,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            c_threshold: None,
            match_tolerance: rel_tolerance(6),
        }
    }
}

/// max(2, ceil(0.6 m)): a majority that still tolerates a few corrupted
/// answers.
pub fn default_c_threshold(m: usize) -> usize {
    ((3 * m).div_ceil(5)).max(2)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSolution {
    pub expression: Expr,
    /// Groups matched within the exact-match tolerance.
    pub exact_matches: usize,
    /// Sum of absolute errors over all groups, undefined groups penalized.
    pub total_error: Rational,
}

/// Score every candidate and pick the most preferable: the highest match
/// count when it reaches the threshold, otherwise the lowest accumulated
/// error. Ties fall to the simplest candidate; the space is stored in
/// simplicity order, so keeping the first strict improvement settles them.
pub fn solve_search(
    s: &AnchorSet,
    space: &SearchSpace,
    cfg: &SearchConfig,
) -> Result<SearchSolution, SearchError> {
    if space.is_empty() {
        return Err(SearchError::EmptySpace);
    }
    let m = s.len();
    let threshold = cfg.c_threshold.unwrap_or_else(|| default_c_threshold(m));
    let penalty = int(UNDEFINED_PENALTY);

    let mut scores: Vec<(usize, Rational)> = Vec::with_capacity(space.len());
    for candidate in &space.expressions {
        let mut matches = 0usize;
        let mut error = Rational::zero();
        for (group, answer) in s.groups().iter().zip(s.answers()) {
            match candidate.evaluate(&group.values) {
                Ok(predicted) => {
                    let diff = (&predicted - answer).abs();
                    let scale = if answer.abs() > Rational::from_integer(1.into()) {
                        answer.abs()
                    } else {
                        Rational::from_integer(1.into())
                    };
                    if diff <= &cfg.match_tolerance * scale {
                        matches += 1;
                    }
                    error += diff;
                }
                Err(_) => {
                    error += &penalty;
                }
            }
        }
        scores.push((matches, error));
    }

    let best_matches = scores.iter().map(|(c, _)| *c).max().unwrap();
    let index = if best_matches >= threshold {
        scores
            .iter()
            .enumerate()
            .find(|(_, (c, _))| *c == best_matches)
            .map(|(i, _)| i)
            .unwrap()
    } else {
        let mut best = 0usize;
        for i in 1..scores.len() {
            if scores[i].1 < scores[best].1 {
                best = i;
            }
        }
        best
    };

    Ok(SearchSolution {
        expression: space.expressions[index].clone(),
        exact_matches: scores[index].0,
        total_error: scores[index].1.clone(),
    })
}
