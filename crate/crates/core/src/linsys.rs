//! Analytical solving: build the basis matrix from anchor observations,
//! impose a gauge constraint to fix the scale, and solve exactly.
//!
//! k anchor groups (k = 2^(n+1) - 1) give a k x (k+1) homogeneous system
//! P a = 0. Appending the sum-to-one constraint row makes it square with
//! right-hand side (0, ..., 0, 1). The sum constraint is one choice of
//! gauge; when the true coefficient vector happens to sum to zero that
//! system is singular, so the solver falls back to pinning the first
//! nonzero y-containing coefficient to one. Rank decisions are exact: all
//! arithmetic is rational, no epsilon.

use num::{One, Zero};
use thiserror::Error;

use crate::basis::{to_rational_form, BasisError, BasisIndex, CoefficientVector};
use crate::expr::Expr;
use crate::fingerprint::{fingerprint, Fingerprint};
use crate::rational::Rational;

/// One group of anchor numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorGroup {
    pub values: Vec<Rational>,
}

impl AnchorGroup {
    pub fn new(values: Vec<Rational>) -> Self {
        AnchorGroup { values }
    }
}

/// m groups of anchors with their observed answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorSet {
    arity: u8,
    groups: Vec<AnchorGroup>,
    answers: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinsysError {
    #[error("anchor set invalid: {0}")]
    InvalidAnchorSet(String),
    #[error("need at least {needed} anchor groups, got {got}")]
    InsufficientGroups { needed: usize, got: usize },
    /// The augmented system is singular under every gauge; resample anchors.
    #[error("anchor observations are rank deficient")]
    RankDeficient,
    #[error("cross-validation folds all disagree")]
    NoConsensus,
    #[error(transparent)]
    Basis(#[from] BasisError),
}

impl AnchorSet {
    /// Requires 1 <= n <= 4, every group of length n, and more groups than
    /// operands.
    pub fn new(
        arity: u8,
        groups: Vec<AnchorGroup>,
        answers: Vec<Rational>,
    ) -> Result<Self, LinsysError> {
        if !(1..=4).contains(&arity) {
            return Err(LinsysError::InvalidAnchorSet(format!(
                "arity {arity} out of range 1..=4"
            )));
        }
        if groups.len() != answers.len() {
            return Err(LinsysError::InvalidAnchorSet(format!(
                "{} groups but {} answers",
                groups.len(),
                answers.len()
            )));
        }
        if groups.len() <= arity as usize {
            return Err(LinsysError::InvalidAnchorSet(format!(
                "group count {} must exceed the operand count {arity}",
                groups.len()
            )));
        }
        if let Some(bad) = groups.iter().find(|g| g.values.len() != arity as usize) {
            return Err(LinsysError::InvalidAnchorSet(format!(
                "group of length {} does not match arity {arity}",
                bad.values.len()
            )));
        }
        Ok(AnchorSet {
            arity,
            groups,
            answers,
        })
    }

    pub fn arity(&self) -> u8 {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[AnchorGroup] {
        &self.groups
    }

    pub fn answers(&self) -> &[Rational] {
        &self.answers
    }

    /// Number of basis coefficients minus one: rows needed for a square
    /// augmented system.
    pub fn required_rows(&self) -> usize {
        (1usize << (self.arity + 1)) - 1
    }

    /// A new set holding the given row range.
    fn window(&self, start: usize, len: usize) -> AnchorSet {
        AnchorSet {
            arity: self.arity,
            groups: self.groups[start..start + len].to_vec(),
            answers: self.answers[start..start + len].to_vec(),
        }
    }
}

/// Every basis monomial evaluated at every observation; m x 2^(n+1), graded
/// column order.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    pub arity: u8,
    pub rows: Vec<Vec<Rational>>,
}

/// Row j holds each monomial's value at (X_j, y_j); column 0 is the
/// constant 1.
pub fn build_basis_matrix(s: &AnchorSet) -> BasisMatrix {
    let masks = BasisIndex::all(s.arity);
    let rows = s
        .groups
        .iter()
        .zip(&s.answers)
        .map(|(g, y)| {
            masks
                .iter()
                .map(|m| m.monomial_value(s.arity, &g.values, y))
                .collect()
        })
        .collect();
    BasisMatrix {
        arity: s.arity,
        rows,
    }
}

/// Scale-fixing constraint appended to the homogeneous system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// sum of all coefficients = 1.
    SumToOne,
    /// The coefficient of one basis monomial = 1.
    UnitCoefficient(BasisIndex),
}

/// Exact Gaussian elimination on a square system; `None` when singular.
fn gaussian_solve(mut m: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = m.len();
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = m[col][col].clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
            let sub = &factor * &b[col];
            b[r] -= sub;
        }
    }
    let mut x = vec![Rational::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for c in row + 1..n {
            acc -= &m[row][c] * &x[c];
        }
        x[row] = acc / &m[row][row];
    }
    Some(x)
}

/// Solve with an explicit gauge: the first k rows of `s` plus the
/// constraint row form the square augmented system with right-hand side
/// (0, ..., 0, 1).
pub fn solve_with_gauge(s: &AnchorSet, gauge: Gauge) -> Result<CoefficientVector, LinsysError> {
    let k = s.required_rows();
    if s.len() < k {
        return Err(LinsysError::InsufficientGroups {
            needed: k,
            got: s.len(),
        });
    }
    let matrix = build_basis_matrix(&s.window(0, k));
    let width = k + 1;
    let mut m = matrix.rows;
    let constraint: Vec<Rational> = match gauge {
        Gauge::SumToOne => vec![Rational::one(); width],
        Gauge::UnitCoefficient(mask) => {
            let masks = BasisIndex::all(s.arity);
            masks
                .iter()
                .map(|m| {
                    if *m == mask {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        }
    };
    m.push(constraint);
    let mut b = vec![Rational::zero(); width];
    b[width - 1] = Rational::one();
    let coeffs = gaussian_solve(m, b).ok_or(LinsysError::RankDeficient)?;
    let vector = CoefficientVector::from_graded_coeffs(s.arity, coeffs);
    // A solution without a y term cannot be inverted into an expression;
    // treat it like a degenerate draw so callers resample.
    vector.validate().map_err(|_| LinsysError::RankDeficient)?;
    Ok(vector)
}

/// Solve with the sum-to-one constraint, falling back to pinning each
/// y-containing coefficient in graded order when the sum gauge is
/// inconsistent with the solution's scale.
pub fn solve_analytical(s: &AnchorSet) -> Result<CoefficientVector, LinsysError> {
    match solve_with_gauge(s, Gauge::SumToOne) {
        Ok(v) => Ok(v),
        Err(LinsysError::RankDeficient) => {
            for mask in BasisIndex::all(s.arity) {
                if !mask.contains_y(s.arity) {
                    continue;
                }
                match solve_with_gauge(s, Gauge::UnitCoefficient(mask)) {
                    Ok(v) => return Ok(v),
                    Err(LinsysError::RankDeficient) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(LinsysError::RankDeficient)
        }
        Err(e) => Err(e),
    }
}

/// Consensus across cross-validation folds.
#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub consensus: CoefficientVector,
    pub expression: Expr,
    pub agreeing_folds: usize,
    pub folds: usize,
}

impl CrossValidation {
    pub fn agreement(&self) -> f64 {
        self.agreeing_folds as f64 / self.folds as f64
    }
}

/// Solve on `folds` sliding row windows and keep the solution whose
/// rebuilt expression's fingerprint is most frequent. Needs
/// m >= k + folds - 1 rows.
pub fn cross_validate(s: &AnchorSet, folds: usize) -> Result<CrossValidation, LinsysError> {
    assert!(folds >= 1, "at least one fold");
    let k = s.required_rows();
    let needed = k + folds - 1;
    if s.len() < needed {
        return Err(LinsysError::InsufficientGroups {
            needed,
            got: s.len(),
        });
    }
    let mut solutions: Vec<(Fingerprint, CoefficientVector, Expr)> = Vec::new();
    let mut last_err = LinsysError::RankDeficient;
    for fold in 0..folds {
        let window = s.window(fold, k);
        match solve_analytical(&window) {
            Ok(v) => match to_rational_form(&v) {
                Ok(expr) => solutions.push((fingerprint(&expr), v, expr)),
                Err(e) => last_err = e.into(),
            },
            Err(e) => last_err = e,
        }
    }
    if solutions.is_empty() {
        return Err(last_err);
    }
    let mut best: Option<(usize, usize)> = None; // (count, first index)
    for (i, solution) in solutions.iter().enumerate() {
        let count = solutions.iter().filter(|s| s.0 == solution.0).count();
        match best {
            Some((c, _)) if c >= count => {}
            _ => best = Some((count, i)),
        }
    }
    let (count, index) = best.unwrap();
    if count == 1 && solutions.len() > 1 {
        return Err(LinsysError::NoConsensus);
    }
    let (_, consensus, expression) = solutions.swap_remove(index);
    Ok(CrossValidation {
        consensus,
        expression,
        agreeing_folds: count,
        folds,
    })
}
