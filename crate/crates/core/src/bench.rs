//! Synthetic arithmetic benchmark: generate rendered expression prompts
//! bucketed by operand count, integer range, and decimal precision, render
//! few-shot prompts, and score any oracle or full pipeline by per-bucket
//! exact match.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::oracle::{extract_number, Oracle, OracleQuery, QueryPurpose};
use crate::probe::{invert, Document, InvertConfig, SolverChoice};
use crate::rational::{
    parse_decimal, rel_tolerance, render_decimal, render_decimal_fixed, within_rel_tolerance,
    Rational, MAX_RENDER_DECIMALS,
};
use crate::search::enumerate_space;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("config invalid: {0}")]
    InvalidConfig(String),
    #[error("need between {min} and {max} shots, requested {got}")]
    InsufficientShots { min: usize, max: usize, got: usize },
    #[error("the shot pool contains the target item")]
    TargetInShots,
    #[error("shot {id} is from a different bucket or expression than the target")]
    BucketMismatch { id: String },
    #[error("dataset file invalid: {0}")]
    InvalidDataset(String),
}

/// What to generate: buckets are the cartesian product of operand counts,
/// range exponents (operand magnitude below 10^e), and decimal precisions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BenchConfig {
    pub operand_counts: Vec<u8>,
    pub range_exponents: Vec<u8>,
    pub precisions: Vec<u8>,
    pub samples_per_expression: usize,
    pub max_expressions_per_bucket: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            operand_counts: vec![2, 3, 4],
            range_exponents: vec![1, 2, 3, 4],
            precisions: vec![0, 1, 2, 3],
            samples_per_expression: 50,
            max_expressions_per_bucket: 50,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let checks: [(&str, bool); 6] = [
            ("operand_counts empty", self.operand_counts.is_empty()),
            ("range_exponents empty", self.range_exponents.is_empty()),
            ("precisions empty", self.precisions.is_empty()),
            (
                "operand_counts outside 2..=4",
                self.operand_counts.iter().any(|&n| !(2..=4).contains(&n)),
            ),
            (
                "range_exponents outside 1..=4",
                self.range_exponents.iter().any(|&e| !(1..=4).contains(&e)),
            ),
            ("samples_per_expression must be >= 1", self.samples_per_expression == 0),
        ];
        for (msg, bad) in checks {
            if bad {
                return Err(BenchError::InvalidConfig(msg.to_string()));
            }
        }
        if self.precisions.iter().any(|&p| p > 3) {
            return Err(BenchError::InvalidConfig("precisions outside 0..=3".into()));
        }
        Ok(())
    }
}

/// One rendered arithmetic prompt with its ground truth.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BenchItem {
    pub id: String,
    /// The ground-truth expression in render format.
    pub expression: String,
    /// Operand values as decimal strings, in variable order.
    pub operands: Vec<String>,
    pub prompt: String,
    /// Gold answer as a decimal string (at most six fractional digits).
    pub answer: String,
    pub operand_count: u8,
    pub range_exp: u8,
    pub precision: u8,
}

impl BenchItem {
    pub fn gold(&self) -> Rational {
        parse_decimal(&self.answer).expect("stored gold answers are decimal strings")
    }

    fn bucket(&self) -> (u8, u8, u8) {
        (self.operand_count, self.range_exp, self.precision)
    }
}

/// First line of every dataset file; versions the prompt template.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BenchHeader {
    pub format: String,
    pub prompt_template: String,
    pub config: BenchConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchDataset {
    pub header: BenchHeader,
    pub items: Vec<BenchItem>,
}

const FORMAT_VERSION: &str = "bench-jsonl-v1";
const PROMPT_TEMPLATE: &str = "infix-equals-v1";

fn sample_operand<R: Rng>(rng: &mut R, range_exp: u8, precision: u8) -> Rational {
    let scale = 10u64.pow(precision as u32);
    let magnitude = 10u64.pow(range_exp as u32);
    let raw = rng.gen_range(1..magnitude * scale);
    Rational::new(BigInt::from(raw), BigInt::from(scale))
}

/// Render `expr` with the operand values substituted, as an unsolved
/// prompt line: `8534.50 + 17.85 =` (operands shown at the bucket
/// precision).
fn render_prompt_line(expr: &Expr, operands: &[Rational], precision: u8) -> String {
    let substituted = expr.substitute(operands);
    let text = substituted.render_with(&|c| render_decimal_fixed(c, precision as u32));
    format!("{text} =")
}

/// Generate the dataset: per bucket, enumerate the constant-free expression
/// space, sample up to the configured number of expressions, and emit
/// `samples_per_expression` items with freshly drawn operands (redrawn when
/// a division is undefined). Deterministic in the seed.
pub fn generate(cfg: &BenchConfig) -> Result<BenchDataset, BenchError> {
    cfg.validate()?;
    let mut items = Vec::new();
    for &n in &cfg.operand_counts {
        let space = enumerate_space(n, &[])
            .map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        for &range_exp in &cfg.range_exponents {
            for &precision in &cfg.precisions {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    cfg.seed
                        ^ ((n as u64) << 40)
                        ^ ((range_exp as u64) << 20)
                        ^ (precision as u64),
                );
                let mut expr_indices: Vec<usize> = (0..space.len()).collect();
                for i in (1..expr_indices.len()).rev() {
                    expr_indices.swap(i, rng.gen_range(0..=i));
                }
                expr_indices.truncate(cfg.max_expressions_per_bucket);
                for (e_idx, &space_idx) in expr_indices.iter().enumerate() {
                    let expr = &space.expressions[space_idx];
                    for sample in 0..cfg.samples_per_expression {
                        let (operands, gold) = loop {
                            let draw: Vec<Rational> = (0..n)
                                .map(|_| sample_operand(&mut rng, range_exp, precision))
                                .collect();
                            if let Ok(v) = expr.evaluate(&draw) {
                                break (draw, v);
                            }
                        };
                        items.push(BenchItem {
                            id: format!("n{n}-r{range_exp}-p{precision}-e{e_idx}-s{sample}"),
                            expression: expr.to_string(),
                            operands: operands
                                .iter()
                                .map(|v| render_decimal_fixed(v, precision as u32))
                                .collect(),
                            prompt: render_prompt_line(expr, &operands, precision),
                            answer: render_decimal(&gold, MAX_RENDER_DECIMALS),
                            operand_count: n,
                            range_exp,
                            precision,
                        });
                    }
                }
            }
        }
    }
    Ok(BenchDataset {
        header: BenchHeader {
            format: FORMAT_VERSION.to_string(),
            prompt_template: PROMPT_TEMPLATE.to_string(),
            config: cfg.clone(),
        },
        items,
    })
}

pub fn write_jsonl<W: Write>(dataset: &BenchDataset, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", serde_json::to_string(&dataset.header)?)?;
    for item in &dataset.items {
        writeln!(out, "{}", serde_json::to_string(item)?)?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<BenchDataset, BenchError> {
    let mut lines = input.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| BenchError::InvalidDataset("empty file".into()))?
        .map_err(|e| BenchError::InvalidDataset(e.to_string()))?;
    let header: BenchHeader = serde_json::from_str(&header_line)
        .map_err(|e| BenchError::InvalidDataset(format!("header: {e}")))?;
    if header.format != FORMAT_VERSION {
        return Err(BenchError::InvalidDataset(format!(
            "unsupported format {:?}",
            header.format
        )));
    }
    let mut items = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| BenchError::InvalidDataset(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let item: BenchItem = serde_json::from_str(&line)
            .map_err(|e| BenchError::InvalidDataset(format!("line {}: {e}", lineno + 2)))?;
        items.push(item);
    }
    Ok(BenchDataset { header, items })
}

pub const MIN_SHOTS: usize = 10;
pub const MAX_SHOTS: usize = 20;

/// Prepend solved same-bucket examples to the target's unsolved prompt:
/// newline-separated `expr = answer` lines, then the bare target line. The
/// shot pool must share the target's expression and bucket and must not
/// contain the target itself.
pub fn render_fewshot_prompt(
    shots: &[BenchItem],
    target: &BenchItem,
    count: usize,
) -> Result<String, BenchError> {
    if !(MIN_SHOTS..=MAX_SHOTS).contains(&count) || shots.len() < count {
        return Err(BenchError::InsufficientShots {
            min: MIN_SHOTS,
            max: MAX_SHOTS,
            got: count.min(shots.len()),
        });
    }
    let mut prompt = String::new();
    for shot in shots.iter().take(count) {
        if shot.id == target.id {
            return Err(BenchError::TargetInShots);
        }
        if shot.bucket() != target.bucket() || shot.expression != target.expression {
            return Err(BenchError::BucketMismatch {
                id: shot.id.clone(),
            });
        }
        prompt.push_str(&shot.prompt);
        prompt.push(' ');
        prompt.push_str(&shot.answer);
        prompt.push('\n');
    }
    prompt.push_str(&target.prompt);
    Ok(prompt)
}

/// How a dataset is answered: raw oracle completions on the item prompt, or
/// the full anchor-substitution pipeline with one of the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Direct,
    Anchored(SolverChoice),
}

impl std::str::FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Pipeline::Direct),
            solver => solver
                .parse::<SolverChoice>()
                .map(Pipeline::Anchored)
                .map_err(|_| format!(
                    "unknown pipeline {solver:?}; expected direct, analytical, search, or anneal"
                )),
        }
    }
}

/// Per-bucket exact-match scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalRow {
    pub operand_count: u8,
    pub range_exp: u8,
    pub precision: u8,
    pub n_items: usize,
    pub exact_matches: usize,
}

impl EvalRow {
    pub fn em_percent(&self) -> f64 {
        if self.n_items == 0 {
            0.0
        } else {
            100.0 * self.exact_matches as f64 / self.n_items as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// Items whose pipeline run errored (counted as misses).
    pub errors: usize,
}

impl EvalReport {
    pub fn to_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "operand_count,range_exp,precision,n_items,em")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{:.1}",
                row.operand_count,
                row.range_exp,
                row.precision,
                row.n_items,
                row.em_percent()
            )?;
        }
        Ok(())
    }

    pub fn row(&self, bucket: (u8, u8, u8)) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|r| (r.operand_count, r.range_exp, r.precision) == bucket)
    }
}

/// Score the dataset. Direct mode queries the oracle with each item's
/// prompt and extracts the last number; anchored mode runs the full
/// substitution pipeline per item with operand proposal skipped (every
/// number in a rendered prompt is an operand by construction). Exact match
/// is |pred - gold| <= tolerance * max(1, |gold|); pipeline errors count as
/// misses.
pub fn evaluate(
    dataset: &BenchDataset,
    pipeline: Pipeline,
    oracle: &dyn Oracle,
    tolerance: &Rational,
    base: &InvertConfig,
) -> EvalReport {
    let mut buckets: BTreeMap<(u8, u8, u8), EvalRow> = BTreeMap::new();
    let mut errors = 0;
    for item in &dataset.items {
        let row = buckets.entry(item.bucket()).or_insert_with(|| EvalRow {
            operand_count: item.operand_count,
            range_exp: item.range_exp,
            precision: item.precision,
            n_items: 0,
            exact_matches: 0,
        });
        row.n_items += 1;
        let predicted: Option<Rational> = match pipeline {
            Pipeline::Direct => {
                let query = OracleQuery::new(item.prompt.clone(), QueryPurpose::Benchmark);
                match oracle.complete(&query) {
                    Ok(raw) => extract_number(&raw, base.extract),
                    Err(_) => {
                        errors += 1;
                        None
                    }
                }
            }
            Pipeline::Anchored(solver) => {
                let doc = Document::new(item.prompt.clone(), "");
                let operand_count = item.operand_count as usize;
                let mut cfg = base.clone();
                cfg.solver = solver;
                cfg.operand_override = Some((0..operand_count).collect());
                cfg.constants = Vec::new();
                match invert(&doc, oracle, &cfg) {
                    Ok(inversion) => Some(inversion.answer),
                    Err(_) => {
                        errors += 1;
                        None
                    }
                }
            }
        };
        if let Some(p) = predicted {
            if within_rel_tolerance(&p, &item.gold(), tolerance) {
                row.exact_matches += 1;
            }
        }
    }
    EvalReport {
        rows: buckets.into_values().collect(),
        errors,
    }
}

/// The default exact-match tolerance, shared with the search solver.
pub fn default_tolerance() -> Rational {
    rel_tolerance(6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::CalculatorOracle;
    use crate::rational::rat;

    fn small_config() -> BenchConfig {
        BenchConfig {
            operand_counts: vec![2],
            range_exponents: vec![1],
            precisions: vec![0],
            samples_per_expression: 5,
            max_expressions_per_bucket: 6,
            seed: 1,
        }
    }

    #[test]
    fn generates_single_digit_addition_items() {
        let ds = generate(&small_config()).unwrap();
        assert_eq!(ds.items.len(), 6 * 5);
        let add = ds
            .items
            .iter()
            .find(|i| i.expression == "x1 + x2")
            .expect("addition is in the space");
        assert!(add.prompt.ends_with(" ="));
        let operands: Vec<Rational> =
            add.operands.iter().map(|o| parse_decimal(o).unwrap()).collect();
        assert!(operands.iter().all(|v| *v < rat(10, 1) && *v > rat(0, 1)));
        assert_eq!(add.gold(), &operands[0] + &operands[1]);
    }

    #[test]
    fn gold_answers_reproduce_by_reevaluation() {
        let mut cfg = small_config();
        cfg.precisions = vec![0, 2];
        let ds = generate(&cfg).unwrap();
        for item in &ds.items {
            let expr = crate::parse::parse(&item.expression).unwrap();
            let operands: Vec<Rational> = item
                .operands
                .iter()
                .map(|o| parse_decimal(o).unwrap())
                .collect();
            let gold = expr.evaluate(&operands).unwrap();
            assert_eq!(
                item.answer,
                render_decimal(&gold, MAX_RENDER_DECIMALS),
                "item {}",
                item.id
            );
        }
    }

    #[test]
    fn decimal_addition_example_has_exact_gold() {
        // 8534.5 + 17.85 = 8552.35 in a (range 4, precision 2) bucket.
        let e = Expr::add(Expr::var(1), Expr::var(2));
        let ops = [rat(85_345, 10), rat(1_785, 100)];
        assert_eq!(e.evaluate(&ops).unwrap(), rat(855_235, 100));
        let line = render_prompt_line(&e, &ops, 2);
        assert_eq!(line, "8534.50 + 17.85 =");
    }

    #[test]
    fn same_seed_generates_identical_bytes() {
        let a = generate(&small_config()).unwrap();
        let b = generate(&small_config()).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_jsonl(&a, &mut buf_a).unwrap();
        write_jsonl(&b, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        let mut other_cfg = small_config();
        other_cfg.seed = 2;
        let c = generate(&other_cfg).unwrap();
        let mut buf_c = Vec::new();
        write_jsonl(&c, &mut buf_c).unwrap();
        assert_ne!(buf_a, buf_c);
    }

    #[test]
    fn jsonl_roundtrip() {
        let ds = generate(&small_config()).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&ds, &mut buf).unwrap();
        let back = read_jsonl(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn fewshot_prompt_renders_solved_lines() {
        let mut cfg = small_config();
        cfg.samples_per_expression = 12;
        let ds = generate(&cfg).unwrap();
        let pool: Vec<BenchItem> = ds
            .items
            .iter()
            .filter(|i| i.expression == ds.items[0].expression)
            .cloned()
            .collect();
        let target = pool.last().unwrap();
        let shots = &pool[..10];
        let prompt = render_fewshot_prompt(shots, target, 10).unwrap();
        let lines: Vec<&str> = prompt.lines().collect();
        assert_eq!(lines.len(), 11);
        assert!(lines[..10].iter().all(|l| !l.ends_with('=')));
        assert!(lines[10].ends_with('='));
    }

    #[test]
    fn fewshot_guards() {
        let mut cfg = small_config();
        cfg.samples_per_expression = 12;
        let ds = generate(&cfg).unwrap();
        let pool: Vec<BenchItem> = ds
            .items
            .iter()
            .filter(|i| i.expression == ds.items[0].expression)
            .cloned()
            .collect();
        let target = pool.last().unwrap().clone();
        assert!(matches!(
            render_fewshot_prompt(&pool[..10], &target, 0),
            Err(BenchError::InsufficientShots { .. })
        ));
        let mut leaked = pool[..9].to_vec();
        leaked.push(target.clone());
        assert_eq!(
            render_fewshot_prompt(&leaked, &target, 10),
            Err(BenchError::TargetInShots)
        );
        // Shots must share the target's expression and bucket.
        let foreign: Vec<BenchItem> = ds
            .items
            .iter()
            .filter(|i| i.expression != target.expression)
            .take(10)
            .cloned()
            .collect();
        assert!(matches!(
            render_fewshot_prompt(&foreign, &target, 10),
            Err(BenchError::BucketMismatch { .. })
        ));
    }

    #[test]
    fn perfect_direct_oracle_scores_everywhere() {
        let ds = generate(&small_config()).unwrap();
        let report = evaluate(
            &ds,
            Pipeline::Direct,
            &CalculatorOracle::new(),
            &default_tolerance(),
            &InvertConfig::default(),
        );
        assert_eq!(report.errors, 0);
        for row in &report.rows {
            assert_eq!(row.exact_matches, row.n_items);
        }
    }

    #[test]
    fn anchored_search_scores_the_two_operand_bucket() {
        let ds = generate(&small_config()).unwrap();
        let report = evaluate(
            &ds,
            Pipeline::Anchored(SolverChoice::Search),
            &CalculatorOracle::new(),
            &default_tolerance(),
            &InvertConfig {
                seed: 13,
                ..Default::default()
            },
        );
        let row = report.row((2, 1, 0)).unwrap();
        assert_eq!(row.exact_matches, row.n_items);
    }

    #[test]
    fn csv_shape_is_stable() {
        let ds = generate(&small_config()).unwrap();
        let report = evaluate(
            &ds,
            Pipeline::Direct,
            &CalculatorOracle::new(),
            &default_tolerance(),
            &InvertConfig::default(),
        );
        let mut buf = Vec::new();
        report.to_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "operand_count,range_exp,precision,n_items,em"
        );
        assert_eq!(lines.next().unwrap(), "2,1,0,30,100.0");
    }
}
