//! Project persistence, REST API and batch front end over `arcforge-core`.

pub mod api;
mod error;
mod project;
mod service;
mod store;

pub use error::{ApiError, ErrorCode};
pub use project::{BackendChoice, CreateProject, EditRequest, FinalizeResponse, Project};
pub use service::{
    default_factory, AnalysisRequest, BackendFactory, ProjectService, RemoteSettings,
};
pub use store::{ProjectStore, StoreError, ANALYSIS_FILE, PROJECT_FILE, PROMPTS_FILE};
