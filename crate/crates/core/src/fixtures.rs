//! Shared fixture file formats. All numbers travel as decimal strings so
//! files stay language-neutral and diff-friendly without losing precision.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linsys::{AnchorGroup, AnchorSet};
use crate::probe::Document;
use crate::rational::{parse_decimal, render_decimal, MAX_RENDER_DECIMALS};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

fn read(path: &Path) -> Result<String, FixtureError> {
    std::fs::read_to_string(path).map_err(|source| FixtureError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// `{"n": 2, "groups": [{"x": ["10", "7"], "y": "3"}, ...]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorSetFile {
    pub n: u8,
    pub groups: Vec<AnchorGroupRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorGroupRecord {
    pub x: Vec<String>,
    pub y: String,
}

impl AnchorSetFile {
    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        serde_json::from_str(&read(path)?).map_err(|source| FixtureError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_anchor_set(&self) -> Result<AnchorSet, FixtureError> {
        let mut groups = Vec::with_capacity(self.groups.len());
        let mut answers = Vec::with_capacity(self.groups.len());
        for (i, record) in self.groups.iter().enumerate() {
            let values = record
                .x
                .iter()
                .map(|s| {
                    parse_decimal(s).ok_or_else(|| {
                        FixtureError::Invalid(format!("group {i}: bad number {s:?}"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let answer = parse_decimal(&record.y)
                .ok_or_else(|| FixtureError::Invalid(format!("group {i}: bad answer {:?}", record.y)))?;
            groups.push(AnchorGroup::new(values));
            answers.push(answer);
        }
        AnchorSet::new(self.n, groups, answers)
            .map_err(|e| FixtureError::Invalid(e.to_string()))
    }

    pub fn from_anchor_set(set: &AnchorSet) -> Self {
        AnchorSetFile {
            n: set.arity(),
            groups: set
                .groups()
                .iter()
                .zip(set.answers())
                .map(|(g, y)| AnchorGroupRecord {
                    x: g.values
                        .iter()
                        .map(|v| render_decimal(v, MAX_RENDER_DECIMALS))
                        .collect(),
                    y: render_decimal(y, MAX_RENDER_DECIMALS),
                })
                .collect(),
        }
    }
}

/// `{"passage": ..., "question": ..., "gold": "3018"}` (gold optional).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentFile {
    pub passage: String,
    pub question: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
}

impl DocumentFile {
    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        serde_json::from_str(&read(path)?).map_err(|source| FixtureError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_document(&self) -> Result<Document, FixtureError> {
        let mut doc = Document::new(self.passage.clone(), self.question.clone());
        if let Some(gold) = &self.gold {
            let value = parse_decimal(gold)
                .ok_or_else(|| FixtureError::Invalid(format!("bad gold answer {gold:?}")))?;
            doc = doc.with_gold(value);
        }
        Ok(doc)
    }
}
