use arcforge_core::entity::GameSpec;
use arcforge_core::graph::{GraphEdit, StoryGraph};
use arcforge_core::pipeline::{FinalizeOptions, GenerationRequest, PromptRecord};
use arcforge_core::report::ValidationReport;
use serde::{Deserialize, Serialize};

/// Which text generator a project uses. Remote credentials come from the
/// environment and are never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendChoice {
    Template { seed: u64 },
    Remote,
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Template { seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub request: GenerationRequest,
    pub backend: BackendChoice,
    #[serde(default)]
    pub options: FinalizeOptions,
    pub graph: StoryGraph,
    pub spec: Option<GameSpec>,
    /// Spec, traversability and continuity findings from the last finalize.
    pub report: Option<ValidationReport>,
    /// Bumped on every committed mutation; starts at 1.
    pub revision: u64,
    #[serde(default)]
    pub prompt_log: Vec<PromptRecord>,
}

/// Body of `POST /projects`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateProject {
    #[serde(flatten)]
    pub request: GenerationRequest,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default)]
    pub options: FinalizeOptions,
}

/// Body of `POST /projects/{id}/edits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRequest {
    pub edit: GraphEdit,
    pub expected_revision: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalizeResponse {
    pub revision: u64,
    pub spec: GameSpec,
    pub report: ValidationReport,
}
