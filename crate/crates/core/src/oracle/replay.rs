//! Replaying recorded prompt/response pairs, and recording live ones.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Oracle, OracleError, OracleQuery};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ReplayEntry {
    pub prompt: String,
    pub response: String,
}

/// On-disk format: `{"entries": [{"prompt": ..., "response": ...}, ...]}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct ReplayFixture {
    pub entries: Vec<ReplayEntry>,
}

impl ReplayFixture {
    pub fn load(path: &Path) -> Result<Self, OracleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OracleError::Failure(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| OracleError::Failure(format!("parsing {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), OracleError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| OracleError::Failure(e.to_string()))?;
        std::fs::write(path, text)
            .map_err(|e| OracleError::Failure(format!("writing {}: {e}", path.display())))
    }
}

/// Answers only prompts present in its fixture; anything else is a
/// [`OracleError::ReplayMiss`], never a fabricated completion.
pub struct ReplayOracle {
    responses: HashMap<String, String>,
}

impl ReplayOracle {
    pub fn new(fixture: ReplayFixture) -> Self {
        let responses = fixture
            .entries
            .into_iter()
            .map(|e| (e.prompt, e.response))
            .collect();
        ReplayOracle { responses }
    }

    pub fn load(path: &Path) -> Result<Self, OracleError> {
        Ok(Self::new(ReplayFixture::load(path)?))
    }
}

impl Oracle for ReplayOracle {
    fn complete(&self, query: &OracleQuery) -> Result<String, OracleError> {
        self.responses
            .get(&query.prompt)
            .cloned()
            .ok_or_else(|| OracleError::ReplayMiss(preview(&query.prompt)))
    }
}

fn preview(prompt: &str) -> String {
    let mut p: String = prompt.chars().take(60).collect();
    if p.len() < prompt.len() {
        p.push_str("...");
    }
    p
}

/// Wraps another oracle and records every exchange, so a live run can be
/// frozen into a replay fixture.
pub struct RecordingOracle<O> {
    inner: O,
    log: Mutex<Vec<ReplayEntry>>,
}

impl<O: Oracle> RecordingOracle<O> {
    pub fn new(inner: O) -> Self {
        RecordingOracle {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn fixture(&self) -> ReplayFixture {
        ReplayFixture {
            entries: self.log.lock().unwrap().clone(),
        }
    }
}

impl<O: Oracle> Oracle for RecordingOracle<O> {
    fn complete(&self, query: &OracleQuery) -> Result<String, OracleError> {
        let response = self.inner.complete(query)?;
        self.log.lock().unwrap().push(ReplayEntry {
            prompt: query.prompt.clone(),
            response: response.clone(),
        });
        Ok(response)
    }
}
