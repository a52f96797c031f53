//! Chained generation: skeleton graph, edge criteria, tone revision and
//! per-level entities, over a pluggable text backend.

mod backend;
pub mod prompts;
mod remote;
pub mod schema;
mod steps;
mod study;
mod template;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arc::ArcKind;
use crate::entity::{ContinuityLedger, DifficultyMode, DifficultyParams, PlayerData};
use crate::graph::{StoryGraph, DEFAULT_STORYLINE_WORD_CAP};
use crate::report::ValidationReport;
use crate::valence::ValenceError;

pub use backend::{
    records_from_jsonl, records_to_jsonl, BackendError, PromptRecord, RecordingBackend,
    ReplayBackend, SchemaId, TextGenBackend,
};
pub use prompts::MindReset;
pub use remote::{RemoteBackend, RemoteConfig, API_KEY_VAR, BASE_URL_VAR, MODEL_VAR};
pub use schema::{parse_structured_output, OutputError};
pub use steps::{
    finalize, generate_entities, generate_player, generate_skeleton, revise_all, revise_node,
    Finalized, Revision,
};
pub use study::{run_study, StudyConfig, StudyOutput};
pub use template::{neutral_vocabulary, tone_bank, TemplateBackend, TONE_MARKER};

pub const MAX_PROMPT_WORDS: usize = 30;
/// Skeleton attempts before giving up.
pub const SKELETON_ATTEMPTS: usize = 3;
/// Re-prompts after a parse, schema or integrity failure.
pub const REPAIR_ATTEMPTS: usize = 2;

fn default_endings() -> usize {
    1
}

fn default_cap() -> usize {
    DEFAULT_STORYLINE_WORD_CAP
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub arc: ArcKind,
    #[serde(default = "default_endings")]
    pub min_endings: usize,
    pub node_budget: usize,
    #[serde(default = "default_cap")]
    pub storyline_word_cap: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RequestError {
    #[error("prompt has {words} words; at most {MAX_PROMPT_WORDS} are allowed")]
    PromptTooLong { words: usize },
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("{0} must be at least 1")]
    TooSmall(&'static str),
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, arc: ArcKind, node_budget: usize) -> Self {
        Self {
            prompt: prompt.into(),
            arc,
            min_endings: 1,
            node_budget,
            storyline_word_cap: DEFAULT_STORYLINE_WORD_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), RequestError> {
        let words = crate::text::word_count(&self.prompt);
        if words == 0 {
            return Err(RequestError::EmptyPrompt);
        }
        if words > MAX_PROMPT_WORDS {
            return Err(RequestError::PromptTooLong { words });
        }
        if self.min_endings == 0 {
            return Err(RequestError::TooSmall("min_endings"));
        }
        if self.node_budget == 0 {
            return Err(RequestError::TooSmall("node_budget"));
        }
        if self.storyline_word_cap == 0 {
            return Err(RequestError::TooSmall("storyline_word_cap"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FinalizeOptions {
    pub difficulty_mode: DifficultyMode,
    pub difficulty: DifficultyParams,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("invalid request: {0}")]
    Request(#[from] RequestError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("generation failed after {attempts} attempts: {report}")]
    GenerationFailed {
        attempts: usize,
        report: ValidationReport,
    },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("entity generation failed for level {level}: {}", problems.join("; "))]
    EntityGen { level: u32, problems: Vec<String> },
    #[error("finalize blocked: {0}")]
    FinalizeBlocked(ValidationReport),
    #[error(transparent)]
    Analysis(#[from] ValenceError),
}

/// Running state of the entity pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub request: GenerationRequest,
    pub graph: StoryGraph,
    pub player: PlayerData,
    /// Storylines of processed nodes, in linearized order.
    pub history: Vec<String>,
    pub ledger: ContinuityLedger,
    pub options: FinalizeOptions,
    /// Continuity findings accumulated so far.
    pub report: ValidationReport,
}
