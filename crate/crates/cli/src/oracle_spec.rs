//! Build an oracle from its config/flag specification.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use arithprobe::oracle::{
    CalculatorOracle, ExpressionOracle, HttpOracle, HttpOracleConfig, NoiseMode, NoiseModel,
    Oracle, ReplayOracle,
};
use arithprobe::rational::parse_decimal;

use crate::config::{NoiseSection, OracleSection};

fn noise_model(section: &NoiseSection) -> Result<Option<NoiseModel>> {
    if section.mode.is_empty() {
        return Ok(None);
    }
    let mode = match section.mode.as_str() {
        "uniform_offset" => NoiseMode::UniformOffset,
        "carry_error" => NoiseMode::CarryError,
        "missing_high_digit" => NoiseMode::MissingHighDigit,
        "extra_digit" => NoiseMode::ExtraDigit,
        "truncation" => NoiseMode::Truncation,
        other => bail!("unknown noise mode {other:?}"),
    };
    let mut model = NoiseModel::new(mode, section.probability, section.seed);
    if !section.trigger_above.is_empty() {
        let bound = parse_decimal(&section.trigger_above)
            .ok_or_else(|| anyhow::anyhow!("bad noise.trigger_above {:?}", section.trigger_above))?;
        model = model.triggered_above(bound);
    }
    Ok(Some(model))
}

/// `calc`, `expr:<text>`, `replay:<path>`, `http`, `http:<url>`.
pub fn build_oracle(section: &OracleSection) -> Result<Box<dyn Oracle>> {
    let noise = noise_model(&section.noise)?;
    let spec = section.spec.as_str();
    if spec == "calc" {
        let mut oracle = CalculatorOracle::new();
        if let Some(n) = noise {
            oracle = oracle.with_noise(n);
        }
        return Ok(Box::new(oracle));
    }
    if let Some(text) = spec.strip_prefix("expr:") {
        let expression = arithprobe::parse(text)
            .with_context(|| format!("parsing oracle expression {text:?}"))?;
        let mut oracle = ExpressionOracle::new(expression);
        if !section.positions.is_empty() {
            oracle = oracle.with_operand_positions(section.positions.clone());
        }
        if let Some(n) = noise {
            oracle = oracle.with_noise(n);
        }
        return Ok(Box::new(oracle));
    }
    if let Some(path) = spec.strip_prefix("replay:") {
        let oracle = ReplayOracle::load(&PathBuf::from(path))?;
        return Ok(Box::new(oracle));
    }
    if spec == "http" || spec.starts_with("http:") {
        let url = match spec.strip_prefix("http:") {
            Some(u) if !u.is_empty() => u.to_string(),
            _ => {
                if !section.http.url.is_empty() {
                    section.http.url.clone()
                } else {
                    std::env::var("ORACLE_URL")
                        .context("http oracle needs a URL: pass http:<url>, set oracle.http.url, or export ORACLE_URL")?
                }
            }
        };
        let mut cfg = HttpOracleConfig::new(url);
        cfg.response_path = section.http.response_path.clone();
        cfg.timeout_secs = section.http.timeout_secs;
        cfg.max_retries = section.http.max_retries;
        cfg.backoff_ms = section.http.backoff_ms;
        cfg.max_in_flight = section.http.max_in_flight;
        cfg.api_key = std::env::var("ORACLE_API_KEY").ok();
        return Ok(Box::new(HttpOracle::new(cfg)?));
    }
    bail!("unknown oracle spec {spec:?}; expected calc, expr:<text>, replay:<path>, or http[:<url>]")
}
