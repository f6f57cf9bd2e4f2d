//! Run configuration: every tunable in one TOML-backed tree. Values load
//! from an optional config file and are overridden by command-line flags;
//! the tree round-trips through TOML losslessly.

use std::path::Path;

use anyhow::{Context, Result};
use arithprobe::anneal::AnnealConfig;
use arithprobe::probe::{InvertConfig, ProposalConfig, SolverChoice};
use arithprobe::rational::{parse_decimal, rel_tolerance, Rational};
use arithprobe::search::SearchConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub parallelism: usize,
    pub solver: String,
    pub anchors: AnchorSection,
    pub proposal: ProposalSection,
    pub search: SearchSection,
    pub anneal: AnnealSection,
    pub analytical: AnalyticalSection,
    pub oracle: OracleSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            parallelism: 1,
            solver: "search".into(),
            anchors: AnchorSection::default(),
            proposal: ProposalSection::default(),
            search: SearchSection::default(),
            anneal: AnnealSection::default(),
            analytical: AnalyticalSection::default(),
            oracle: OracleSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorSection {
    /// Inclusive anchor integer range.
    pub range: [i64; 2],
    /// Groups sampled for 1..=4 operands.
    pub group_sizes: [usize; 4],
}

impl Default for AnchorSection {
    fn default() -> Self {
        AnchorSection {
            range: [1, 20],
            group_sizes: [4, 6, 8, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposalSection {
    pub probes_per_span: usize,
    pub distinct_threshold: usize,
    pub prompt_prefix: String,
}

impl Default for ProposalSection {
    fn default() -> Self {
        let d = ProposalConfig::default();
        ProposalSection {
            probes_per_span: d.probes_per_span,
            distinct_threshold: d.distinct_threshold,
            prompt_prefix: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    /// Constant candidates as decimal strings.
    pub constants: Vec<String>,
    /// Relative exact-match tolerance is 10^-digits.
    pub match_tolerance_digits: u32,
    /// 0 means the default max(2, ceil(0.6 m)).
    pub c_threshold: usize,
    pub include_lower_arities: bool,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            constants: ["-100", "-1", "0", "1", "100"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            match_tolerance_digits: 6,
            c_threshold: 0,
            include_lower_arities: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSection {
    pub initial_temperature: f64,
    pub cooling_rate: f64,
    pub max_steps: u32,
    pub restarts: u32,
}

impl Default for AnnealSection {
    fn default() -> Self {
        let d = AnnealConfig::default();
        AnnealSection {
            initial_temperature: d.initial_temperature,
            cooling_rate: d.cooling_rate,
            max_steps: d.max_steps,
            restarts: d.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticalSection {
    pub folds: usize,
    pub max_resamples: u32,
}

impl Default for AnalyticalSection {
    fn default() -> Self {
        AnalyticalSection {
            folds: 1,
            max_resamples: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// `calc`, `expr:<text>`, `replay:<path>`, `http`, or `http:<url>`.
    pub spec: String,
    /// 0-based operand positions for expression oracles; empty uses the
    /// trailing numbers.
    pub positions: Vec<usize>,
    /// Which numeric token of a completion is the answer: first or last.
    pub extract: String,
    pub noise: NoiseSection,
    pub http: HttpSection,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            spec: "calc".into(),
            positions: Vec::new(),
            extract: "last".into(),
            noise: NoiseSection::default(),
            http: HttpSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Empty disables noise; otherwise uniform_offset, carry_error,
    /// missing_high_digit, extra_digit, or truncation.
    pub mode: String,
    pub probability: f64,
    pub seed: u64,
    /// Corrupt only answers above this magnitude (decimal string; empty
    /// disables the gate).
    pub trigger_above: String,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            mode: String::new(),
            probability: 0.0,
            seed: 0,
            trigger_above: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpSection {
    /// Falls back to the ORACLE_URL environment variable when empty.
    pub url: String,
    pub response_path: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
}

impl Default for HttpSection {
    fn default() -> Self {
        HttpSection {
            url: String::new(),
            response_path: "text".into(),
            timeout_secs: 30,
            max_retries: 3,
            backoff_ms: 250,
            max_in_flight: 4,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn solver_choice(&self) -> Result<SolverChoice> {
        self.solver
            .parse::<SolverChoice>()
            .map_err(anyhow::Error::msg)
    }

    pub fn constants(&self) -> Result<Vec<Rational>> {
        self.search
            .constants
            .iter()
            .map(|s| {
                parse_decimal(s)
                    .ok_or_else(|| anyhow::anyhow!("bad constant {s:?} in search.constants"))
            })
            .collect()
    }

    pub fn extract_mode(&self) -> Result<arithprobe::ExtractMode> {
        match self.oracle.extract.as_str() {
            "last" => Ok(arithprobe::ExtractMode::Last),
            "first" => Ok(arithprobe::ExtractMode::First),
            other => anyhow::bail!("oracle.extract must be first or last, got {other:?}"),
        }
    }

    /// Assemble the pipeline configuration for the selected arity defaults.
    pub fn invert_config(&self) -> Result<InvertConfig> {
        let search = SearchConfig {
            c_threshold: if self.search.c_threshold == 0 {
                None
            } else {
                Some(self.search.c_threshold)
            },
            match_tolerance: rel_tolerance(self.search.match_tolerance_digits),
        };
        let anneal = AnnealConfig {
            initial_temperature: self.anneal.initial_temperature,
            cooling_rate: self.anneal.cooling_rate,
            max_steps: self.anneal.max_steps,
            restarts: self.anneal.restarts,
            seed: self.seed,
        };
        let proposal = ProposalConfig {
            probes_per_span: self.proposal.probes_per_span,
            distinct_threshold: self.proposal.distinct_threshold,
            prompt_prefix: self.proposal.prompt_prefix.clone(),
            parallelism: self.parallelism,
            extract: self.extract_mode()?,
            ..Default::default()
        };
        Ok(InvertConfig {
            solver: self.solver_choice()?,
            anchor_range: (self.anchors.range[0], self.anchors.range[1]),
            group_size: None,
            group_sizes: self.anchors.group_sizes,
            seed: self.seed,
            parallelism: self.parallelism,
            prompt_prefix: self.proposal.prompt_prefix.clone(),
            extract: self.extract_mode()?,
            operand_override: None,
            proposal,
            constants: self.constants()?,
            include_lower_arities: self.search.include_lower_arities,
            search,
            anneal,
            folds: self.analytical.folds,
            max_resamples: self.analytical.max_resamples,
        })
    }

    /// Group size for an arity, from the config table.
    pub fn group_size(&self, arity: u8) -> usize {
        let index = (arity.clamp(1, 4) - 1) as usize;
        self.anchors.group_sizes[index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip_is_lossless() {
        let mut cfg = RunConfig::default();
        cfg.seed = 99;
        cfg.anchors.range = [1, 12];
        cfg.search.constants = vec!["0".into(), "100".into()];
        cfg.anneal.restarts = 7;
        cfg.oracle.spec = "expr:x1 - x2".into();
        cfg.oracle.noise.mode = "carry_error".into();
        cfg.oracle.noise.probability = 0.25;
        let text = cfg.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn defaults_match_the_library() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.anchors.range, [1, 20]);
        assert_eq!(cfg.anchors.group_sizes, [4, 6, 8, 10]);
        let invert = cfg.invert_config().unwrap();
        assert_eq!(invert.solver, SolverChoice::Search);
        assert_eq!(invert.constants.len(), 5);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = toml::from_str::<RunConfig>("nonsense = 1").unwrap_err();
        assert!(err.to_string().contains("nonsense"));
    }
}
