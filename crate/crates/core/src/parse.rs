//! Infix parser for expression text: `+ - * /`, parentheses, variables
//! `x1..x4`, decimal constants. `x0`-based variable aliases are normalized
//! to 1-based indices.

use thiserror::Error;

use crate::expr::{BinOp, Expr};
use crate::rational::parse_decimal;

pub const MAX_VARIABLES: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(String),
    Var(u8),
    Op(char),
    LParen,
    RParen,
}

struct Lexer<'a> {
    text: &'a str,
    tokens: Vec<(usize, Token)>,
}

impl<'a> Lexer<'a> {
    fn run(text: &'a str) -> Result<Vec<(usize, Token)>, ParseError> {
        let mut lexer = Lexer {
            text,
            tokens: Vec::new(),
        };
        lexer.scan()?;
        Ok(lexer.tokens)
    }

    fn scan(&mut self) -> Result<(), ParseError> {
        let bytes = self.text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\n' | '\r' => i += 1,
                '+' | '-' | '*' | '/' => {
                    self.tokens.push((i, Token::Op(c)));
                    i += 1;
                }
                '(' => {
                    self.tokens.push((i, Token::LParen));
                    i += 1;
                }
                ')' => {
                    self.tokens.push((i, Token::RParen));
                    i += 1;
                }
                'x' | 'X' => {
                    let start = i;
                    i += 1;
                    let digits_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == digits_start {
                        return Err(ParseError::new(start, "expected variable index after 'x'"));
                    }
                    let index: u32 = self.text[digits_start..i]
                        .parse()
                        .map_err(|_| ParseError::new(start, "variable index out of range"))?;
                    if index > MAX_VARIABLES as u32 {
                        return Err(ParseError::new(
                            start,
                            format!("variable index exceeds x{MAX_VARIABLES}"),
                        ));
                    }
                    self.tokens.push((start, Token::Var(index as u8)));
                }
                '0'..='9' | '.' => {
                    let start = i;
                    let mut seen_point = false;
                    while i < bytes.len() {
                        match bytes[i] as char {
                            '0'..='9' => i += 1,
                            '.' if !seen_point => {
                                seen_point = true;
                                i += 1;
                            }
                            _ => break,
                        }
                    }
                    self.tokens
                        .push((start, Token::Number(self.text[start..i].to_string())));
                }
                _ => return Err(ParseError::new(i, format!("unexpected character '{c}'"))),
            }
        }
        Ok(())
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(usize, Token)> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut node = self.term()?;
        while let Some((_, Token::Op(op @ ('+' | '-')))) = self.peek() {
            let op = if *op == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            node = Expr::bin(op, node, self.term()?);
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut node = self.factor()?;
        while let Some((_, Token::Op(op @ ('*' | '/')))) = self.peek() {
            let op = if *op == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            node = Expr::bin(op, node, self.factor()?);
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if let Some((_, Token::Op('-'))) = self.peek() {
            self.pos += 1;
            return Ok(negate(self.factor()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.advance() {
            Some((pos, Token::Number(text))) => parse_decimal(&text)
                .map(Expr::constant)
                .ok_or_else(|| ParseError::new(pos, "malformed number")),
            Some((_, Token::Var(i))) => Ok(Expr::Var(i)),
            Some((_, Token::LParen)) => {
                let inner = self.expression()?;
                match self.advance() {
                    Some((_, Token::RParen)) => Ok(inner),
                    Some((pos, _)) => Err(ParseError::new(pos, "expected ')'")),
                    None => Err(ParseError::new(self.end, "unclosed '('")),
                }
            }
            Some((pos, _)) => Err(ParseError::new(pos, "expected a value")),
            None => Err(ParseError::new(self.end, "unexpected end of input")),
        }
    }
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(-c),
        other => Expr::sub(Expr::int(0), other),
    }
}

fn shift_indices(e: Expr) -> Expr {
    match e {
        Expr::Var(i) => Expr::Var(i + 1),
        Expr::Const(c) => Expr::Const(c),
        Expr::Bin(op, l, r) => Expr::bin(op, shift_indices(*l), shift_indices(*r)),
    }
}

fn min_index(e: &Expr) -> Option<u8> {
    match e {
        Expr::Var(i) => Some(*i),
        Expr::Const(_) => None,
        Expr::Bin(_, l, r) => match (min_index(l), min_index(r)) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        },
    }
}

/// Parse infix expression text into an AST. Inputs whose lowest variable is
/// `x0` are treated as 0-based and shifted to the 1-based convention.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = Lexer::run(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let expr = parser.expression()?;
    if let Some((pos, _)) = parser.peek() {
        return Err(ParseError::new(*pos, "trailing input"));
    }
    if min_index(&expr) == Some(0) {
        let shifted = shift_indices(expr);
        if shifted.arity() > MAX_VARIABLES {
            return Err(ParseError::new(0, format!("variable index exceeds x{MAX_VARIABLES}")));
        }
        Ok(shifted)
    } else {
        Ok(expr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn x(i: u8) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn parses_constant_difference() {
        assert_eq!(parse("100 - x1").unwrap(), Expr::sub(Expr::int(100), x(1)));
    }

    #[test]
    fn zero_based_alias_is_shifted() {
        let got = parse("x0 - (x1 + x2)").unwrap();
        assert_eq!(got, Expr::sub(x(1), Expr::add(x(2), x(3))));
    }

    #[test]
    fn malformed_input_reports_position() {
        let err = parse("x1 +").unwrap_err();
        assert_eq!(err.position, 4);
        assert!(parse("x1 ** x2").is_err());
        assert!(parse("(x1 + x2").is_err());
        assert!(parse("x5").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse("x1 + x2 * x3").unwrap(),
            Expr::add(x(1), Expr::mul(x(2), x(3)))
        );
        assert_eq!(
            parse("x1 - x2 - x3").unwrap(),
            Expr::sub(Expr::sub(x(1), x(2)), x(3))
        );
        assert_eq!(
            parse("x1 / x2 / x3").unwrap(),
            Expr::div(Expr::div(x(1), x(2)), x(3))
        );
    }

    #[test]
    fn unary_minus_folds_into_literals() {
        assert_eq!(parse("-100").unwrap(), Expr::int(-100));
        assert_eq!(parse("x1 + (-100)").unwrap(), Expr::add(x(1), Expr::int(-100)));
        assert_eq!(
            parse("-x1").unwrap(),
            Expr::sub(Expr::constant(int(0)), x(1))
        );
        assert_eq!(parse("3.5 * x1").unwrap(), Expr::mul(Expr::constant(crate::rational::rat(7, 2)), x(1)));
    }

    #[test]
    fn x4_is_the_highest_variable() {
        assert!(parse("x4").is_ok());
        // x4 in 0-based text shifts to x5, which is out of range.
        assert!(parse("x0 + x4").is_err());
    }
}
