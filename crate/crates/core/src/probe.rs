//! The probing pipeline around the solvers: detect numbers in a document,
//! propose which of them feed the answer by perturbing one at a time,
//! substitute order-preserving anchor integers, query the answerer, and
//! invert the observations into an expression applied to the original
//! values.

use num::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::anneal::{solve_anneal, AnnealConfig};
use crate::basis::to_rational_form;
use crate::expr::Expr;
use crate::linsys::{cross_validate, solve_analytical, AnchorGroup, AnchorSet, LinsysError};
use crate::numbers::{detect_numbers, NumberSpan};
use crate::oracle::{ExtractMode, Oracle, OracleError, OracleQuery, QueryPurpose};
use crate::rational::{
    rat, render_decimal, render_decimal_fixed, Rational, MAX_RENDER_DECIMALS,
};
use crate::search::{enumerate_space_with, solve_search, SearchConfig, SearchError};

/// A passage/question pair with its detected number spans.
#[derive(Debug, Clone)]
pub struct Document {
    pub passage: String,
    pub question: String,
    pub gold: Option<Rational>,
    spans: Vec<NumberSpan>,
}

impl Document {
    pub fn new(passage: impl Into<String>, question: impl Into<String>) -> Self {
        let passage = passage.into();
        let spans = detect_numbers(&passage);
        Document {
            passage,
            question: question.into(),
            gold: None,
            spans,
        }
    }

    pub fn with_gold(mut self, gold: Rational) -> Self {
        self.gold = Some(gold);
        self
    }

    /// Detected numbers in passage order.
    pub fn spans(&self) -> &[NumberSpan] {
        &self.spans
    }

    /// The passage with the given spans replaced, all other text preserved
    /// byte for byte, followed by the question.
    pub fn render_prompt(&self, substitutions: &[(usize, String)], prefix: &str) -> String {
        let mut passage = self.passage.clone();
        let mut subs: Vec<&(usize, String)> = substitutions.iter().collect();
        subs.sort_by_key(|(i, _)| std::cmp::Reverse(*i));
        for (index, replacement) in subs {
            let span = &self.spans[*index];
            passage.replace_range(span.start..span.end, replacement);
        }
        let mut prompt = String::new();
        prompt.push_str(prefix);
        prompt.push_str(&passage);
        if !self.question.is_empty() {
            prompt.push('\n');
            prompt.push_str(&self.question);
        }
        prompt
    }
}

/// A document plus the spans proposed as operands, in passage order.
#[derive(Debug, Clone)]
pub struct ProbeTemplate {
    pub document: Document,
    pub operand_spans: Vec<usize>,
}

impl ProbeTemplate {
    pub fn arity(&self) -> u8 {
        self.operand_spans.len() as u8
    }

    /// The original operand values, in passage order.
    pub fn original_values(&self) -> Vec<Rational> {
        self.operand_spans
            .iter()
            .map(|&i| self.document.spans()[i].value.clone())
            .collect()
    }
}

/// Anchor groups with their rendered prompts.
#[derive(Debug, Clone)]
pub struct SubstitutionPlan {
    pub groups: Vec<Vec<i64>>,
    pub prompts: Vec<String>,
}

#[derive(Debug, Clone, Error)]
pub enum ProbeError {
    #[error("document has no number spans")]
    NoSpans,
    #[error("{found} spans qualify as operands, more than the supported 4")]
    TooManyOperands { found: usize },
    #[error("no span qualifies as an operand")]
    NoOperands,
    #[error("anchor range is too small for {needed} distinct values")]
    RangeTooSmall { needed: usize },
    #[error("need more anchor groups ({got}) than operands ({operands})")]
    TooFewGroups { got: usize, operands: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Operand-proposal settings: how many perturbed variants are issued per
/// span and how many distinct predictions mark a span as an operand.
#[derive(Debug, Clone)]
pub struct ProposalConfig {
    pub probes_per_span: usize,
    pub distinct_threshold: usize,
    pub max_operands: usize,
    /// Distinct-prediction comparison tolerance on parsed values.
    pub value_tolerance: Rational,
    pub prompt_prefix: String,
    pub parallelism: usize,
    pub extract: ExtractMode,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        ProposalConfig {
            probes_per_span: 10,
            distinct_threshold: 3,
            max_operands: 4,
            value_tolerance: rat(1, 1_000_000_000),
            prompt_prefix: String::new(),
            parallelism: 1,
            extract: ExtractMode::default(),
        }
    }
}

/// Per-span proposal evidence.
#[derive(Debug, Clone, Serialize)]
pub struct SpanProposal {
    pub span_index: usize,
    pub raw: String,
    pub distinct_predictions: usize,
    pub selected: bool,
}

/// Run queries with a bounded worker pool; results keyed by index so
/// completion order is irrelevant.
fn run_queries(
    oracle: &dyn Oracle,
    queries: Vec<OracleQuery>,
    parallelism: usize,
) -> Result<Vec<String>, OracleError> {
    if parallelism <= 1 || queries.len() <= 1 {
        return queries.iter().map(|q| oracle.complete(q)).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Result<String, OracleError>>>> =
        (0..queries.len()).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..parallelism.min(queries.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= queries.len() {
                    break;
                }
                let outcome = oracle.complete(&queries[i]);
                *results[i].lock().unwrap() = Some(outcome);
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

/// Count distinct values among the parsed predictions, clustering values
/// closer than the tolerance.
fn distinct_predictions(values: &mut Vec<Rational>, tolerance: &Rational) -> usize {
    values.sort();
    let mut distinct = 0;
    let mut last: Option<&Rational> = None;
    for v in values.iter() {
        match last {
            Some(prev) if (v - prev).abs() <= *tolerance => {}
            _ => {
                distinct += 1;
                last = Some(v);
            }
        }
    }
    distinct
}

/// Decide which spans are operands: each span is perturbed ten times by
/// multiples of its least significant digit unit (k in -5..=5, k != 0,
/// step 10^-d for d decimal places, e.g. 98.5 -> 98.6), holding the other
/// spans at their original values; a span qualifies when the answerer
/// produces at least three distinct predictions. Returns the per-span
/// evidence alongside the template.
pub fn propose_operands_with_evidence(
    doc: &Document,
    oracle: &dyn Oracle,
    cfg: &ProposalConfig,
) -> Result<(ProbeTemplate, Vec<SpanProposal>), ProbeError> {
    if doc.spans().is_empty() {
        return Err(ProbeError::NoSpans);
    }
    let offsets: Vec<i64> = (-5..=5).filter(|&k| k != 0).collect();
    let mut evidence = Vec::new();
    let mut selected = Vec::new();
    for (index, span) in doc.spans().iter().enumerate() {
        let step = Rational::new(1.into(), num::BigInt::from(10u32).pow(span.decimal_places));
        let queries: Vec<OracleQuery> = offsets
            .iter()
            .take(cfg.probes_per_span)
            .map(|&k| {
                let perturbed = &span.value + rat(k, 1) * &step;
                let rendered = render_decimal_fixed(&perturbed, span.decimal_places);
                OracleQuery::new(
                    doc.render_prompt(&[(index, rendered)], &cfg.prompt_prefix),
                    QueryPurpose::Proposal,
                )
            })
            .collect();
        let responses = run_queries(oracle, queries, cfg.parallelism)?;
        let mut parsed: Vec<Rational> = responses
            .iter()
            .filter_map(|r| crate::oracle::extract_number(r, cfg.extract))
            .collect();
        let distinct = distinct_predictions(&mut parsed, &cfg.value_tolerance);
        let qualifies = distinct >= cfg.distinct_threshold;
        if qualifies {
            selected.push(index);
        }
        evidence.push(SpanProposal {
            span_index: index,
            raw: span.raw.clone(),
            distinct_predictions: distinct,
            selected: qualifies,
        });
    }
    if selected.is_empty() {
        return Err(ProbeError::NoOperands);
    }
    if selected.len() > cfg.max_operands {
        return Err(ProbeError::TooManyOperands {
            found: selected.len(),
        });
    }
    Ok((
        ProbeTemplate {
            document: doc.clone(),
            operand_spans: selected,
        },
        evidence,
    ))
}

/// [`propose_operands_with_evidence`] without the evidence.
pub fn propose_operands(
    doc: &Document,
    oracle: &dyn Oracle,
    cfg: &ProposalConfig,
) -> Result<ProbeTemplate, ProbeError> {
    propose_operands_with_evidence(doc, oracle, cfg).map(|(t, _)| t)
}

/// Draw `m` anchor groups of distinct integers in `range`, assigned to the
/// operands so the anchors' rank order matches the original values' rank
/// order. Equal originals get equal ranks and receive distinct adjacent
/// anchors in a seeded order. Prompts render anchors as plain integers in
/// place of the original span text.
pub fn plan_substitutions(
    template: &ProbeTemplate,
    m: usize,
    range: (i64, i64),
    seed: u64,
    prompt_prefix: &str,
) -> Result<SubstitutionPlan, ProbeError> {
    let n = template.operand_spans.len();
    let (lo, hi) = range;
    if hi < lo || ((hi - lo + 1) as usize) < n {
        return Err(ProbeError::RangeTooSmall { needed: n });
    }
    if m <= n {
        return Err(ProbeError::TooFewGroups {
            got: m,
            operands: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Rank operands by original value; ties are broken by a seeded shuffle
    // so equal originals still receive distinct anchors deterministically.
    let originals = template.original_values();
    let mut tiebreak: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        tiebreak.swap(i, rng.gen_range(0..=i));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        originals[a]
            .cmp(&originals[b])
            .then(tiebreak[a].cmp(&tiebreak[b]))
    });
    let mut rank = vec![0usize; n];
    for (r, &operand) in order.iter().enumerate() {
        rank[operand] = r;
    }

    let mut groups = Vec::with_capacity(m);
    let mut prompts = Vec::with_capacity(m);
    for _ in 0..m {
        let mut draw: Vec<i64> = Vec::with_capacity(n);
        while draw.len() < n {
            let v = rng.gen_range(lo..=hi);
            if !draw.contains(&v) {
                draw.push(v);
            }
        }
        draw.sort_unstable();
        let anchors: Vec<i64> = (0..n).map(|i| draw[rank[i]]).collect();
        let substitutions: Vec<(usize, String)> = template
            .operand_spans
            .iter()
            .zip(&anchors)
            .map(|(&span, &a)| (span, a.to_string()))
            .collect();
        prompts.push(template.document.render_prompt(&substitutions, prompt_prefix));
        groups.push(anchors);
    }
    Ok(SubstitutionPlan { groups, prompts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Analytical,
    Search,
    Anneal,
}

impl SolverChoice {
    pub fn name(self) -> &'static str {
        match self {
            SolverChoice::Analytical => "analytical",
            SolverChoice::Search => "search",
            SolverChoice::Anneal => "anneal",
        }
    }
}

impl std::str::FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytical" => Ok(SolverChoice::Analytical),
            "search" => Ok(SolverChoice::Search),
            "anneal" => Ok(SolverChoice::Anneal),
            other => Err(format!(
                "unknown solver {other:?}; expected analytical, search, or anneal"
            )),
        }
    }
}

/// Everything `invert` needs beyond the document and the oracle.
#[derive(Debug, Clone)]
pub struct InvertConfig {
    pub solver: SolverChoice,
    pub anchor_range: (i64, i64),
    /// Groups to sample; `None` reads `group_sizes` by arity. The
    /// analytical solver raises this to the rows its square system needs.
    pub group_size: Option<usize>,
    /// Group sizes for 1..=4 operands when `group_size` is unset.
    pub group_sizes: [usize; 4],
    pub seed: u64,
    pub parallelism: usize,
    pub prompt_prefix: String,
    pub extract: ExtractMode,
    /// Skip operand proposal and use these span indices.
    pub operand_override: Option<Vec<usize>>,
    pub proposal: ProposalConfig,
    pub constants: Vec<Rational>,
    pub include_lower_arities: bool,
    pub search: SearchConfig,
    pub anneal: AnnealConfig,
    /// Cross-validation folds for the analytical solver; 1 solves once.
    pub folds: usize,
    /// Fresh anchor draws tried when the analytical system is singular.
    pub max_resamples: u32,
}

impl Default for InvertConfig {
    fn default() -> Self {
        InvertConfig {
            solver: SolverChoice::Search,
            anchor_range: (1, 20),
            group_size: None,
            group_sizes: DEFAULT_GROUP_SIZES,
            seed: 0,
            parallelism: 1,
            prompt_prefix: String::new(),
            extract: ExtractMode::default(),
            operand_override: None,
            proposal: ProposalConfig::default(),
            constants: crate::search::default_constants(),
            include_lower_arities: false,
            search: SearchConfig::default(),
            anneal: AnnealConfig::default(),
            folds: 1,
            max_resamples: 8,
        }
    }
}

/// Group sizes used when the config leaves them unset, indexed by
/// arity - 1.
pub const DEFAULT_GROUP_SIZES: [usize; 4] = [4, 6, 8, 10];

#[derive(Debug, Error)]
pub enum InvertError {
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error("number extraction failed on {failures} of {total} responses (at most {allowed} allowed)")]
    UnparseableAnswer {
        failures: usize,
        total: usize,
        allowed: usize,
    },
    #[error(transparent)]
    Linsys(#[from] LinsysError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("recovered expression is undefined on the original values")]
    AnswerUndefined,
}

/// Per-group exchange kept for diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct GroupTrace {
    pub anchors: Vec<i64>,
    pub prompt: String,
    pub response: String,
    pub parsed: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "solver", rename_all = "lowercase")]
pub enum SolverReport {
    Search {
        exact_matches: usize,
        groups_used: usize,
        total_error: String,
        c_threshold: usize,
    },
    Anneal {
        loss: f64,
        converged: bool,
        restarts_used: u32,
    },
    Analytical {
        folds: usize,
        agreement: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub arity: u8,
    pub group_count: usize,
    pub resamples: u32,
    pub proposal: Option<Vec<SpanProposal>>,
    pub groups: Vec<GroupTrace>,
    pub report: SolverReport,
}

/// The outcome of a full pipeline run.
#[derive(Debug, Clone)]
pub struct Inversion {
    pub expression: Expr,
    pub answer: Rational,
    pub anchors: AnchorSet,
    pub diagnostics: Diagnostics,
}

fn derive_seed(base: u64, tag: u64) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag)
}

/// Run the full pipeline: propose operands (unless overridden), substitute
/// anchors, query the answerer, invert with the selected solver, and apply
/// the recovered expression to the original values. Deterministic given the
/// document, the oracle's behavior, and the seed.
pub fn invert(
    doc: &Document,
    oracle: &dyn Oracle,
    cfg: &InvertConfig,
) -> Result<Inversion, InvertError> {
    let (template, proposal) = match &cfg.operand_override {
        Some(spans) => (
            ProbeTemplate {
                document: doc.clone(),
                operand_spans: spans.clone(),
            },
            None,
        ),
        None => {
            let mut proposal_cfg = cfg.proposal.clone();
            proposal_cfg.prompt_prefix = cfg.prompt_prefix.clone();
            proposal_cfg.parallelism = cfg.parallelism;
            proposal_cfg.extract = cfg.extract;
            let (t, evidence) = propose_operands_with_evidence(doc, oracle, &proposal_cfg)?;
            (t, Some(evidence))
        }
    };
    let arity = template.arity();

    let mut m = cfg
        .group_size
        .unwrap_or_else(|| cfg.group_sizes[(arity.clamp(1, 4) - 1) as usize]);
    if cfg.solver == SolverChoice::Analytical {
        let k = (1usize << (arity + 1)) - 1;
        m = m.max(k + cfg.folds.saturating_sub(1));
    }

    let mut resamples = 0;
    loop {
        let plan = plan_substitutions(
            &template,
            m,
            cfg.anchor_range,
            derive_seed(cfg.seed, resamples as u64),
            &cfg.prompt_prefix,
        )?;
        let queries: Vec<OracleQuery> = plan
            .prompts
            .iter()
            .enumerate()
            .map(|(j, p)| OracleQuery::new(p.clone(), QueryPurpose::Substitution).with_group(j))
            .collect();
        let responses = run_queries(oracle, queries, cfg.parallelism).map_err(ProbeError::from)?;

        let parsed: Vec<Option<Rational>> = responses
            .iter()
            .map(|r| crate::oracle::extract_number(r, cfg.extract))
            .collect();
        let failures = parsed.iter().filter(|p| p.is_none()).count();
        let allowed = m.saturating_sub(arity as usize + 1);
        if failures > allowed {
            return Err(InvertError::UnparseableAnswer {
                failures,
                total: m,
                allowed,
            });
        }

        let traces: Vec<GroupTrace> = plan
            .groups
            .iter()
            .zip(&plan.prompts)
            .zip(&responses)
            .zip(&parsed)
            .map(|(((anchors, prompt), response), value)| GroupTrace {
                anchors: anchors.clone(),
                prompt: prompt.clone(),
                response: response.clone(),
                parsed: value
                    .as_ref()
                    .map(|v| render_decimal(v, MAX_RENDER_DECIMALS)),
            })
            .collect();

        let mut groups = Vec::new();
        let mut answers = Vec::new();
        for (anchors, value) in plan.groups.iter().zip(&parsed) {
            if let Some(v) = value {
                groups.push(AnchorGroup::new(
                    anchors.iter().map(|&a| rat(a, 1)).collect(),
                ));
                answers.push(v.clone());
            }
        }
        let anchors = AnchorSet::new(arity, groups, answers).map_err(InvertError::Linsys)?;

        let (expression, report) = match cfg.solver {
            SolverChoice::Search => {
                let space =
                    enumerate_space_with(arity, &cfg.constants, cfg.include_lower_arities)?;
                let solution = solve_search(&anchors, &space, &cfg.search)?;
                let threshold = cfg
                    .search
                    .c_threshold
                    .unwrap_or_else(|| crate::search::default_c_threshold(anchors.len()));
                let report = SolverReport::Search {
                    exact_matches: solution.exact_matches,
                    groups_used: anchors.len(),
                    total_error: render_decimal(&solution.total_error, MAX_RENDER_DECIMALS),
                    c_threshold: threshold,
                };
                (solution.expression, report)
            }
            SolverChoice::Anneal => {
                let mut anneal_cfg = cfg.anneal.clone();
                anneal_cfg.seed = derive_seed(cfg.seed, 0x5eed);
                let outcome = solve_anneal(&anchors, &anneal_cfg);
                let expr = to_rational_form(&outcome.coefficients).map_err(LinsysError::from)?;
                let report = SolverReport::Anneal {
                    loss: outcome.state.loss,
                    converged: outcome.converged,
                    restarts_used: outcome.restarts_used,
                };
                (expr, report)
            }
            SolverChoice::Analytical => {
                let solved = if cfg.folds > 1 {
                    cross_validate(&anchors, cfg.folds).map(|cv| {
                        let report = SolverReport::Analytical {
                            folds: cv.folds,
                            agreement: cv.agreement(),
                        };
                        (cv.expression, report)
                    })
                } else {
                    solve_analytical(&anchors).and_then(|v| {
                        let expr = to_rational_form(&v)?;
                        Ok((
                            expr,
                            SolverReport::Analytical {
                                folds: 1,
                                agreement: 1.0,
                            },
                        ))
                    })
                };
                match solved {
                    Ok(pair) => pair,
                    Err(LinsysError::RankDeficient) if resamples < cfg.max_resamples => {
                        resamples += 1;
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        };

        let answer = expression
            .evaluate(&template.original_values())
            .map_err(|_| InvertError::AnswerUndefined)?;
        return Ok(Inversion {
            expression,
            answer,
            anchors,
            diagnostics: Diagnostics {
                arity,
                group_count: m,
                resamples,
                proposal,
                groups: traces,
                report,
            },
        });
    }
}
