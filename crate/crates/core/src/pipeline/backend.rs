use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which structured document a completion is expected to contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaId {
    StorySkeleton,
    Criteria,
    PlayerData,
    RevisedStoryline,
    LevelEntities,
}

impl SchemaId {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemaId::StorySkeleton => "story_skeleton",
            SchemaId::Criteria => "criteria",
            SchemaId::PlayerData => "player_data",
            SchemaId::RevisedStoryline => "revised_storyline",
            SchemaId::LevelEntities => "level_entities",
        }
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("backend `{backend}` failed: {message}")]
pub struct BackendError {
    pub backend: String,
    pub message: String,
}

impl BackendError {
    pub fn new(backend: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            backend: backend.into(),
            message: message.into(),
        }
    }
}

/// A text generator. Deterministic implementations must return identical
/// output for identical input.
pub trait TextGenBackend: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, system: &str, user: &str, schema: SchemaId) -> Result<String, BackendError>;
}

impl<B: TextGenBackend + ?Sized> TextGenBackend for &B {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn complete(&self, system: &str, user: &str, schema: SchemaId) -> Result<String, BackendError> {
        (**self).complete(system, user, schema)
    }
}

impl<B: TextGenBackend + ?Sized> TextGenBackend for Box<B> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn complete(&self, system: &str, user: &str, schema: SchemaId) -> Result<String, BackendError> {
        (**self).complete(system, user, schema)
    }
}

/// One verbatim exchange with a backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub step: usize,
    pub backend: String,
    pub schema: SchemaId,
    pub system: String,
    pub user: String,
    pub response: String,
}

/// Passes calls through and keeps every successful exchange.
pub struct RecordingBackend<B> {
    inner: B,
    log: Mutex<Vec<PromptRecord>>,
}

impl<B: TextGenBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn records(&self) -> Vec<PromptRecord> {
        self.log.lock().expect("prompt log poisoned").clone()
    }

    pub fn into_records(self) -> Vec<PromptRecord> {
        self.log.into_inner().expect("prompt log poisoned")
    }
}

impl<B: TextGenBackend> TextGenBackend for RecordingBackend<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, system: &str, user: &str, schema: SchemaId) -> Result<String, BackendError> {
        let response = self.inner.complete(system, user, schema)?;
        let mut log = self.log.lock().expect("prompt log poisoned");
        let step = log.len();
        log.push(PromptRecord {
            step,
            backend: self.inner.name().to_string(),
            schema,
            system: system.to_string(),
            user: user.to_string(),
            response: response.clone(),
        });
        Ok(response)
    }
}

/// Answers from a recorded log, keyed by the exact prompt.
pub struct ReplayBackend {
    answers: HashMap<(SchemaId, String, String), String>,
}

impl ReplayBackend {
    pub fn new(records: &[PromptRecord]) -> Self {
        let answers = records
            .iter()
            .map(|r| {
                (
                    (r.schema, r.system.clone(), r.user.clone()),
                    r.response.clone(),
                )
            })
            .collect();
        Self { answers }
    }
}

impl TextGenBackend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, system: &str, user: &str, schema: SchemaId) -> Result<String, BackendError> {
        self.answers
            .get(&(schema, system.to_string(), user.to_string()))
            .cloned()
            .ok_or_else(|| BackendError::new("replay", format!("no recorded {schema} answer")))
    }
}

/// Prompt log as JSON lines.
pub fn records_to_jsonl(records: &[PromptRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("prompt record serializes") + "\n")
        .collect()
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<PromptRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;
    impl TextGenBackend for Echo {
        fn name(&self) -> &str {
            "echo"
        }
        fn complete(&self, s: &str, u: &str, _: SchemaId) -> Result<String, BackendError> {
            Ok(format!("{s}|{u}"))
        }
    }

    #[test]
    fn record_then_replay() {
        let rec = RecordingBackend::new(Echo);
        rec.complete("sys", "a", SchemaId::Criteria).unwrap();
        rec.complete("sys", "b", SchemaId::PlayerData).unwrap();
        let records = rec.into_records();
        assert_eq!(records.len(), 2);
        assert_eq!(records[1].step, 1);

        let text = records_to_jsonl(&records);
        let back = records_from_jsonl(&text).unwrap();
        assert_eq!(back, records);

        let replay = ReplayBackend::new(&back);
        assert_eq!(
            replay.complete("sys", "b", SchemaId::PlayerData).unwrap(),
            "sys|b"
        );
        assert!(replay.complete("sys", "b", SchemaId::Criteria).is_err());
    }
}
