//! Binary arithmetic expression trees: construction, evaluation, rendering.

use std::fmt;

use num::{Signed, Zero};
use thiserror::Error;

use crate::rational::{render_decimal_fixed, Rational};

/// The four operators covered by the inversion pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub const ALL: [BinOp; 4] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];

    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    pub fn apply(self, left: &Rational, right: &Rational) -> Result<Rational, EvalError> {
        match self {
            BinOp::Add => Ok(left + right),
            BinOp::Sub => Ok(left - right),
            BinOp::Mul => Ok(left * right),
            BinOp::Div => {
                if right.is_zero() {
                    Err(EvalError::DivisionByZero)
                } else {
                    Ok(left / right)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
}

/// An arithmetic expression over variables x1..xn and rational constants.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    /// 1-based variable index.
    Var(u8),
    Const(Rational),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(index: u8) -> Expr {
        assert!(index >= 1, "variable indices are 1-based");
        Expr::Var(index)
    }

    pub fn constant(value: Rational) -> Expr {
        Expr::Const(value)
    }

    pub fn int(value: i64) -> Expr {
        Expr::Const(crate::rational::int(value))
    }

    pub fn bin(op: BinOp, left: Expr, right: Expr) -> Expr {
        Expr::Bin(op, Box::new(left), Box::new(right))
    }

    pub fn add(left: Expr, right: Expr) -> Expr {
        Expr::bin(BinOp::Add, left, right)
    }

    pub fn sub(left: Expr, right: Expr) -> Expr {
        Expr::bin(BinOp::Sub, left, right)
    }

    pub fn mul(left: Expr, right: Expr) -> Expr {
        Expr::bin(BinOp::Mul, left, right)
    }

    pub fn div(left: Expr, right: Expr) -> Expr {
        Expr::bin(BinOp::Div, left, right)
    }

    /// Highest variable index used, 0 for constant-only expressions.
    pub fn arity(&self) -> u8 {
        match self {
            Expr::Var(i) => *i,
            Expr::Const(_) => 0,
            Expr::Bin(_, l, r) => l.arity().max(r.arity()),
        }
    }

    /// Exact tree evaluation.
    ///
    /// Panics when `x` is shorter than the highest variable index; callers
    /// are expected to supply one value per operand.
    pub fn evaluate(&self, x: &[Rational]) -> Result<Rational, EvalError> {
        match self {
            Expr::Var(i) => Ok(x[*i as usize - 1].clone()),
            Expr::Const(c) => Ok(c.clone()),
            Expr::Bin(op, l, r) => op.apply(&l.evaluate(x)?, &r.evaluate(x)?),
        }
    }

    pub fn op_count(&self) -> u32 {
        match self {
            Expr::Var(_) | Expr::Const(_) => 0,
            Expr::Bin(_, l, r) => 1 + l.op_count() + r.op_count(),
        }
    }

    pub fn const_count(&self) -> u32 {
        match self {
            Expr::Var(_) => 0,
            Expr::Const(_) => 1,
            Expr::Bin(_, l, r) => l.const_count() + r.const_count(),
        }
    }

    pub fn has_division(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Const(_) => false,
            Expr::Bin(op, l, r) => *op == BinOp::Div || l.has_division() || r.has_division(),
        }
    }

    /// Replace every variable by the given constant values, yielding a
    /// constants-only tree (used when rendering benchmark prompts).
    pub fn substitute(&self, values: &[Rational]) -> Expr {
        match self {
            Expr::Var(i) => Expr::Const(values[*i as usize - 1].clone()),
            Expr::Const(c) => Expr::Const(c.clone()),
            Expr::Bin(op, l, r) => {
                Expr::bin(*op, l.substitute(values), r.substitute(values))
            }
        }
    }

    /// Deterministic simplicity ordering: fewer operators, then fewer
    /// constant leaves, then division-free first, then rendered text.
    pub fn complexity_key(&self) -> ComplexityKey {
        ComplexityKey {
            ops: self.op_count(),
            consts: self.const_count(),
            division: self.has_division(),
            text: self.to_string(),
        }
    }

    fn build_text(
        &self,
        out: &mut String,
        constants: &dyn Fn(&Rational) -> String,
        parent: u8,
        right_child: bool,
    ) {
        match self {
            Expr::Var(i) => {
                out.push('x');
                out.push_str(&i.to_string());
            }
            Expr::Const(c) => {
                // Negative literals are parenthesized in operand position so
                // the text reparses to the same tree.
                let text = constants(c);
                if c.is_negative() && parent > 0 {
                    out.push('(');
                    out.push_str(&text);
                    out.push(')');
                } else {
                    out.push_str(&text);
                }
            }
            Expr::Bin(op, l, r) => {
                let prec = op.precedence();
                let parens = prec < parent || (prec == parent && right_child);
                if parens {
                    out.push('(');
                }
                l.build_text(out, constants, prec, false);
                out.push(' ');
                out.push(op.symbol());
                out.push(' ');
                r.build_text(out, constants, prec, true);
                if parens {
                    out.push(')');
                }
            }
        }
    }

    /// Render with a custom constant formatter (the default one appears in
    /// `Display`); structure and parenthesization are unchanged.
    pub fn render_with(&self, constants: &dyn Fn(&Rational) -> String) -> String {
        let mut out = String::new();
        self.build_text(&mut out, constants, 0, false);
        out
    }
}

/// Constants with 10-smooth denominators render as exact decimals; anything
/// else falls back to `num/den`, which reparses to an equivalent division.
fn render_const(c: &Rational) -> String {
    let mut den = c.denom().clone();
    for f in [2u8, 5u8] {
        let big = num::BigInt::from(f);
        while num::Integer::is_multiple_of(&den, &big) {
            den /= &big;
        }
    }
    if num::One::is_one(&den) {
        let places = decimal_places_needed(c);
        render_decimal_fixed(c, places)
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn decimal_places_needed(c: &Rational) -> u32 {
    let mut places = 0;
    let mut den = c.denom().clone();
    let ten = num::BigInt::from(10u8);
    while !num::One::is_one(&den) {
        let g = num::Integer::gcd(&den, &ten);
        den /= g;
        places += 1;
        if places > 64 {
            break;
        }
    }
    places
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&render_const))
    }
}

/// Total ordering key for tie-breaking between candidate expressions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ComplexityKey {
    pub ops: u32,
    pub consts: u32,
    pub division: bool,
    pub text: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn x(i: u8) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn evaluates_subtraction_of_large_operands() {
        let e = Expr::sub(x(1), x(2));
        let got = e.evaluate(&[int(10_477), int(7_459)]).unwrap();
        assert_eq!(got, int(3_018));
    }

    #[test]
    fn evaluates_identity() {
        assert_eq!(x(1).evaluate(&[int(5)]).unwrap(), int(5));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = Expr::div(x(1), x(2));
        assert_eq!(e.evaluate(&[int(1), int(0)]), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn renders_constant_difference() {
        let e = Expr::sub(Expr::int(100), x(1));
        assert_eq!(e.to_string(), "100 - x1");
    }

    #[test]
    fn renders_structural_parentheses() {
        let left_assoc = Expr::sub(Expr::sub(x(1), x(2)), x(3));
        assert_eq!(left_assoc.to_string(), "x1 - x2 - x3");
        let right_assoc = Expr::sub(x(1), Expr::sub(x(2), x(3)));
        assert_eq!(right_assoc.to_string(), "x1 - (x2 - x3)");
        let mixed = Expr::mul(x(1), Expr::add(x(2), x(3)));
        assert_eq!(mixed.to_string(), "x1 * (x2 + x3)");
        let negative = Expr::add(x(1), Expr::int(-100));
        assert_eq!(negative.to_string(), "x1 + (-100)");
    }

    #[test]
    fn renders_decimal_and_fractional_constants() {
        assert_eq!(Expr::constant(rat(197, 2)).to_string(), "98.5");
        assert_eq!(Expr::constant(rat(1, 3)).to_string(), "1/3");
    }

    #[test]
    fn complexity_prefers_fewer_ops_then_no_division() {
        let plain = Expr::sub(x(1), x(2));
        let div = Expr::div(x(1), x(2));
        let longer = Expr::add(Expr::sub(x(1), x(2)), Expr::int(0));
        assert!(plain.complexity_key() < div.complexity_key());
        assert!(plain.complexity_key() < longer.complexity_key());
    }

    #[test]
    fn arity_is_highest_variable() {
        let e = Expr::add(Expr::mul(x(3), x(1)), Expr::int(2));
        assert_eq!(e.arity(), 3);
        assert_eq!(e.op_count(), 2);
        assert_eq!(e.const_count(), 1);
        assert!(!e.has_division());
    }
}
