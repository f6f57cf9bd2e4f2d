//! Recovering arithmetic expressions from a black-box answerer.
//!
//! The pipeline replaces the numbers in a text with small "anchor" integers,
//! collects the answerer's outputs for several substitutions, and inverts
//! the observed input-output pairs into an explicit expression which is then
//! applied to the original numbers. Three solvers are provided: an exact
//! linear-system solve over the multilinear polynomial basis, exhaustive
//! search over the expression space, and simulated annealing over integer
//! coefficient vectors.

pub mod anneal;
pub mod basis;
pub mod bench;
pub mod expr;
pub mod fingerprint;
pub mod fixtures;
pub mod linsys;
pub mod numbers;
pub mod oracle;
pub mod parse;
pub mod probe;
pub mod rational;
pub mod sample;
pub mod search;

pub use basis::{from_expression, to_rational_form, BasisError, BasisIndex, CoefficientVector};
pub use expr::{BinOp, EvalError, Expr};
pub use fingerprint::{equivalent, fingerprint, Fingerprint};
pub use linsys::{
    build_basis_matrix, cross_validate, solve_analytical, AnchorGroup, AnchorSet, BasisMatrix,
    LinsysError,
};
pub use oracle::{ExtractMode, Oracle, OracleAnswer, OracleError, OracleQuery};
pub use parse::{parse, ParseError};
pub use probe::{
    invert, propose_operands, Document, InvertConfig, InvertError, Inversion, ProbeError,
    SolverChoice,
};
pub use rational::Rational;
pub use search::{enumerate_space, solve_search, SearchConfig, SearchError, SearchSpace};
