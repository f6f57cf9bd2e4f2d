//! The multilinear polynomial basis over {x1..xn, y} and the bidirectional
//! mapping between expressions and coefficient vectors.
//!
//! An expression y = f(x) with the four basic operators clears to a single
//! equation `sum_m a_m * monomial_m = 0` over the 2^(n+1) multilinear
//! monomials (the constant term, every product of distinct variables, and
//! the same products with y). Coefficient vectors are stored in graded
//! order: monomials sorted by degree, then by bitmask value, which puts the
//! constant first and x1x2..xn*y last.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::expr::{BinOp, Expr};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BasisError {
    /// Clearing denominators produced a repeated symbol in some monomial.
    #[error("expression is not multilinear after clearing denominators")]
    NotMultilinear,
    /// A denominator reduced to the zero polynomial.
    #[error("expression divides by an identically-zero denominator")]
    ZeroDenominator,
    /// Every y-containing coefficient is zero, so y is unconstrained.
    #[error("coefficient vector has no y term")]
    NoYTerm,
    /// The zero vector constrains nothing.
    #[error("coefficient vector is zero")]
    ZeroVector,
}

/// Bitmask over the n+1 symbols: bit i (i < n) selects x_{i+1}, bit n
/// selects y. Mask 0 is the constant term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex(pub u32);

impl BasisIndex {
    pub const CONSTANT: BasisIndex = BasisIndex(0);

    pub fn y_bit(arity: u8) -> u32 {
        1 << arity
    }

    pub fn contains_y(self, arity: u8) -> bool {
        self.0 & Self::y_bit(arity) != 0
    }

    pub fn contains_var(self, index: u8) -> bool {
        self.0 & (1 << (index - 1)) != 0
    }

    /// Every mask in graded order: by symbol count, then mask value.
    pub fn all(arity: u8) -> Vec<BasisIndex> {
        let mut masks: Vec<u32> = (0..(1u32 << (arity + 1))).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        masks.into_iter().map(BasisIndex).collect()
    }

    /// The monomial value at a single observation (x, y).
    pub fn monomial_value(self, arity: u8, x: &[Rational], y: &Rational) -> Rational {
        let mut value = Rational::one();
        for i in 1..=arity {
            if self.contains_var(i) {
                value *= &x[i as usize - 1];
            }
        }
        if self.contains_y(arity) {
            value *= y;
        }
        value
    }

    /// Human-readable monomial label, e.g. `C`, `x1*x2*y`.
    pub fn label(self, arity: u8) -> String {
        if self.0 == 0 {
            return "C".to_string();
        }
        let mut parts = Vec::new();
        for i in 1..=arity {
            if self.contains_var(i) {
                parts.push(format!("x{i}"));
            }
        }
        if self.contains_y(arity) {
            parts.push("y".to_string());
        }
        parts.join("*")
    }
}

/// Coefficients over the multilinear basis, stored in graded mask order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientVector {
    arity: u8,
    masks: Vec<BasisIndex>,
    positions: Vec<usize>,
    coeffs: Vec<Rational>,
}

impl CoefficientVector {
    pub fn zero(arity: u8) -> Self {
        assert!((1..=8).contains(&arity));
        let masks = BasisIndex::all(arity);
        let mut positions = vec![0usize; masks.len()];
        for (pos, mask) in masks.iter().enumerate() {
            positions[mask.0 as usize] = pos;
        }
        let len = masks.len();
        CoefficientVector {
            arity,
            masks,
            positions,
            coeffs: vec![Rational::zero(); len],
        }
    }

    pub fn arity(&self) -> u8 {
        self.arity
    }

    /// 2^(n+1) coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, mask: BasisIndex) -> &Rational {
        &self.coeffs[self.positions[mask.0 as usize]]
    }

    pub fn set(&mut self, mask: BasisIndex, value: Rational) {
        let pos = self.positions[mask.0 as usize];
        self.coeffs[pos] = value;
    }

    /// Coefficients in graded order, paired with their masks.
    pub fn iter(&self) -> impl Iterator<Item = (BasisIndex, &Rational)> {
        self.masks.iter().copied().zip(self.coeffs.iter())
    }

    pub fn from_graded_coeffs(arity: u8, coeffs: Vec<Rational>) -> Self {
        let mut v = Self::zero(arity);
        assert_eq!(coeffs.len(), v.len());
        v.coeffs = coeffs;
        v
    }

    pub fn validate(&self) -> Result<(), BasisError> {
        if self.coeffs.iter().all(Zero::is_zero) {
            return Err(BasisError::ZeroVector);
        }
        if !self
            .iter()
            .any(|(m, c)| m.contains_y(self.arity) && !c.is_zero())
        {
            return Err(BasisError::NoYTerm);
        }
        Ok(())
    }

    /// Dot product with the basis monomials evaluated at one observation.
    pub fn residual(&self, x: &[Rational], y: &Rational) -> Rational {
        self.iter()
            .map(|(m, c)| c * m.monomial_value(self.arity, x, y))
            .sum()
    }

    /// Scale so the first nonzero coefficient (graded order) is one.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        if let Some(head) = self.coeffs.iter().find(|c| !c.is_zero()).cloned() {
            for c in &mut out.coeffs {
                *c /= &head;
            }
        }
        out
    }

    /// Equality up to a global nonzero scale.
    pub fn proportional_to(&self, other: &Self) -> bool {
        self.arity == other.arity && self.normalized() == other.normalized()
    }
}

impl fmt::Display for CoefficientVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (mask, c) in self.iter() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{}[{}]", c, mask.label(self.arity))?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Multilinear polynomial over the x variables only, mask -> coefficient.
type Poly = BTreeMap<u32, Rational>;

fn poly_const(c: Rational) -> Poly {
    let mut p = Poly::new();
    if !c.is_zero() {
        p.insert(0, c);
    }
    p
}

fn poly_var(index: u8) -> Poly {
    let mut p = Poly::new();
    p.insert(1 << (index - 1), Rational::one());
    p
}

fn poly_add(a: &Poly, b: &Poly, negate_b: bool) -> Poly {
    let mut out = a.clone();
    for (mask, c) in b {
        let term = if negate_b { -c.clone() } else { c.clone() };
        let entry = out.entry(*mask).or_insert_with(Rational::zero);
        *entry += term;
        if entry.is_zero() {
            out.remove(mask);
        }
    }
    out
}

fn poly_mul(a: &Poly, b: &Poly) -> Result<Poly, BasisError> {
    let mut out = Poly::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            if ma & mb != 0 {
                return Err(BasisError::NotMultilinear);
            }
            let mask = ma | mb;
            let entry = out.entry(mask).or_insert_with(Rational::zero);
            *entry += ca * cb;
            if entry.is_zero() {
                out.remove(&mask);
            }
        }
    }
    Ok(out)
}

/// Expression as a fraction of multilinear polynomials (numerator, denominator).
fn to_fraction(e: &Expr) -> Result<(Poly, Poly), BasisError> {
    match e {
        Expr::Var(i) => Ok((poly_var(*i), poly_const(Rational::one()))),
        Expr::Const(c) => Ok((poly_const(c.clone()), poly_const(Rational::one()))),
        Expr::Bin(op, l, r) => {
            let (nl, dl) = to_fraction(l)?;
            let (nr, dr) = to_fraction(r)?;
            match op {
                BinOp::Add | BinOp::Sub => {
                    let left = poly_mul(&nl, &dr)?;
                    let right = poly_mul(&nr, &dl)?;
                    Ok((poly_add(&left, &right, *op == BinOp::Sub), poly_mul(&dl, &dr)?))
                }
                BinOp::Mul => Ok((poly_mul(&nl, &nr)?, poly_mul(&dl, &dr)?)),
                BinOp::Div => {
                    if nr.is_empty() {
                        return Err(BasisError::ZeroDenominator);
                    }
                    Ok((poly_mul(&nl, &dr)?, poly_mul(&dl, &nr)?))
                }
            }
        }
    }
}

/// Clear denominators in y = f(x) and collect the coefficients of
/// N(x) - y*D(x) = 0, so that every observation (x, f(x)) annihilates the
/// result exactly.
pub fn from_expression_with_arity(e: &Expr, arity: u8) -> Result<CoefficientVector, BasisError> {
    assert!(e.arity() <= arity, "expression uses variables beyond the declared arity");
    let (num, den) = to_fraction(e)?;
    if den.is_empty() {
        return Err(BasisError::ZeroDenominator);
    }
    let mut out = CoefficientVector::zero(arity);
    let y_bit = BasisIndex::y_bit(arity);
    for (mask, c) in &num {
        out.set(BasisIndex(*mask), c.clone());
    }
    for (mask, c) in &den {
        out.set(BasisIndex(mask | y_bit), -c.clone());
    }
    debug_assert!(out.validate().is_ok());
    Ok(out)
}

/// As [`from_expression_with_arity`] with the expression's own arity.
pub fn from_expression(e: &Expr) -> Result<CoefficientVector, BasisError> {
    from_expression_with_arity(e, e.arity().max(1))
}

/// Rebuild an expression y = -N(x)/D(x) from a coefficient vector, where N
/// collects the y-free terms and D the y-containing ones. A constant D folds
/// into the numerator so pure polynomial relations come back without a
/// division node. No algebraic simplification beyond that is attempted;
/// equivalence between rebuilt expressions is always checked functionally.
pub fn to_rational_form(c: &CoefficientVector) -> Result<Expr, BasisError> {
    let arity = c.arity();
    let y_bit = BasisIndex::y_bit(arity);
    let mut num = Poly::new();
    let mut den = Poly::new();
    for (mask, coeff) in c.iter() {
        if coeff.is_zero() {
            continue;
        }
        if mask.contains_y(arity) {
            // From N - y*D = 0 with a_mask = -D coefficient.
            den.insert(mask.0 & !y_bit, -coeff.clone());
        } else {
            num.insert(mask.0, coeff.clone());
        }
    }
    if den.is_empty() {
        return Err(BasisError::NoYTerm);
    }
    // y = N / D. Fold a constant denominator into the numerator.
    if den.len() == 1 {
        if let Some(d) = den.get(&0) {
            let scaled: Poly = num
                .iter()
                .map(|(m, c)| (*m, c / d))
                .collect();
            return Ok(poly_to_expr(&scaled));
        }
    }
    // Flip signs so the denominator's leading graded term is positive.
    let (num, den) = match leading_sign(&den) {
        Some(true) => (negate_poly(&num), negate_poly(&den)),
        _ => (num, den),
    };
    Ok(Expr::div(poly_to_expr(&num), poly_to_expr(&den)))
}

fn leading_sign(p: &Poly) -> Option<bool> {
    let mut masks: Vec<u32> = p.keys().copied().collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks.first().map(|m| p[m].is_negative())
}

fn negate_poly(p: &Poly) -> Poly {
    p.iter().map(|(m, c)| (*m, -c.clone())).collect()
}

fn monomial_expr(mask: u32, coeff: &Rational) -> Expr {
    let mut factors: Vec<Expr> = Vec::new();
    for i in 1..=32u8 {
        if mask & (1 << (i - 1)) != 0 {
            factors.push(Expr::var(i));
        }
    }
    let mono = factors
        .into_iter()
        .reduce(Expr::mul);
    match mono {
        None => Expr::constant(coeff.clone()),
        Some(m) => {
            if coeff.is_one() {
                m
            } else {
                Expr::mul(Expr::constant(coeff.clone()), m)
            }
        }
    }
}

/// Polynomial to expression: positive terms first, negatives subtracted, in
/// graded order within each group.
fn poly_to_expr(p: &Poly) -> Expr {
    if p.is_empty() {
        return Expr::int(0);
    }
    let mut masks: Vec<u32> = p.keys().copied().collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut expr: Option<Expr> = None;
    for negatives in [false, true] {
        for mask in &masks {
            let coeff = &p[mask];
            if coeff.is_negative() != negatives {
                continue;
            }
            expr = Some(match expr {
                None => monomial_expr(*mask, coeff),
                Some(acc) => {
                    if negatives {
                        Expr::sub(acc, monomial_expr(*mask, &-coeff.clone()))
                    } else {
                        Expr::add(acc, monomial_expr(*mask, coeff))
                    }
                }
            });
        }
    }
    expr.unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn x(i: u8) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn graded_order_matches_the_two_operand_layout() {
        let masks = BasisIndex::all(2);
        let labels: Vec<String> = masks.iter().map(|m| m.label(2)).collect();
        assert_eq!(
            labels,
            ["C", "x1", "x2", "y", "x1*x2", "x1*y", "x2*y", "x1*x2*y"]
        );
    }

    #[test]
    fn one_minus_ratio_clears_to_the_expected_coefficients() {
        // y = 1 - x1/x2  =>  x2 - x1 - x2*y = 0 (up to global scale).
        let e = Expr::sub(Expr::int(1), Expr::div(x(1), x(2)));
        let c = from_expression(&e).unwrap();
        let mut expected = CoefficientVector::zero(2);
        expected.set(BasisIndex(0b010), int(1)); // x2
        expected.set(BasisIndex(0b001), int(-1)); // x1
        expected.set(BasisIndex(0b110), int(-1)); // x2*y
        assert!(c.proportional_to(&expected));
    }

    #[test]
    fn sum_moves_y_across_the_equality() {
        let e = Expr::add(x(1), x(2));
        let c = from_expression(&e).unwrap();
        let mut expected = CoefficientVector::zero(2);
        expected.set(BasisIndex(0b001), int(1));
        expected.set(BasisIndex(0b010), int(1));
        expected.set(BasisIndex(0b100), int(-1)); // y
        assert!(c.proportional_to(&expected));
    }

    #[test]
    fn repeated_symbol_is_rejected() {
        let e = Expr::mul(x(1), x(1));
        assert_eq!(from_expression(&e), Err(BasisError::NotMultilinear));
        let nested = Expr::mul(Expr::add(x(1), x(2)), x(1));
        assert_eq!(from_expression(&nested), Err(BasisError::NotMultilinear));
    }

    #[test]
    fn identically_zero_denominator_is_rejected() {
        let e = Expr::div(x(1), Expr::sub(x(2), x(2)));
        assert_eq!(from_expression(&e), Err(BasisError::ZeroDenominator));
    }

    #[test]
    fn residual_is_exactly_zero_on_observations() {
        let e = Expr::div(Expr::add(x(1), x(2)), x(3));
        let c = from_expression(&e).unwrap();
        let points = [
            [int(3), int(5), int(4)],
            [int(7), int(1), int(2)],
            [rat(1, 2), rat(3, 4), rat(5, 7)],
        ];
        for x in &points {
            let y = e.evaluate(x).unwrap();
            assert!(c.residual(x, &y).is_zero());
        }
    }

    #[test]
    fn rational_form_of_the_ratio_equation() {
        // x2 - x1 - x2*y = 0  =>  y = (x2 - x1) / x2.
        let mut c = CoefficientVector::zero(2);
        c.set(BasisIndex(0b010), int(1));
        c.set(BasisIndex(0b001), int(-1));
        c.set(BasisIndex(0b110), int(-1));
        let e = to_rational_form(&c).unwrap();
        assert_eq!(e.to_string(), "(x2 - x1) / x2");
    }

    #[test]
    fn rational_form_of_identity() {
        let mut c = CoefficientVector::zero(1);
        c.set(BasisIndex(0b01), int(1)); // x1
        c.set(BasisIndex(0b10), int(-1)); // y
        let e = to_rational_form(&c).unwrap();
        assert_eq!(e.to_string(), "x1");
    }

    #[test]
    fn no_y_term_is_an_error() {
        let mut c = CoefficientVector::zero(1);
        c.set(BasisIndex(0b01), int(1));
        assert_eq!(to_rational_form(&c), Err(BasisError::NoYTerm));
        assert_eq!(c.validate(), Err(BasisError::NoYTerm));
    }

    #[test]
    fn scale_invariance_of_rational_form() {
        let e = Expr::sub(Expr::int(1), Expr::div(x(1), x(2)));
        let c = from_expression(&e).unwrap();
        let scaled = CoefficientVector::from_graded_coeffs(
            2,
            c.iter().map(|(_, v)| v * rat(-7, 3)).collect(),
        );
        let a = to_rational_form(&c).unwrap();
        let b = to_rational_form(&scaled).unwrap();
        for (p, q) in [(int(3), int(4)), (int(10), int(7)), (rat(1, 3), rat(9, 2))] {
            let xs = [p, q];
            assert_eq!(a.evaluate(&xs).unwrap(), b.evaluate(&xs).unwrap());
        }
    }
}
