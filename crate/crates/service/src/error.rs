use std::fmt;

use arcforge_core::graph::EditError;
use arcforge_core::pipeline::{PipelineError, RequestError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::store::StoreError;

/// Stable machine-readable error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    PromptTooLong,
    InvalidRequest,
    NotFound,
    Conflict,
    NotFinalized,
    EditRejected,
    GenerationFailed,
    FinalizeBlocked,
    ExportInvalid,
    BackendFailure,
    Storage,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::PromptTooLong => "PROMPT_TOO_LONG",
            ErrorCode::InvalidRequest => "INVALID_REQUEST",
            ErrorCode::NotFound => "NOT_FOUND",
            ErrorCode::Conflict => "CONFLICT",
            ErrorCode::NotFinalized => "NOT_FINALIZED",
            ErrorCode::EditRejected => "EDIT_REJECTED",
            ErrorCode::GenerationFailed => "GENERATION_FAILED",
            ErrorCode::FinalizeBlocked => "FINALIZE_BLOCKED",
            ErrorCode::ExportInvalid => "EXPORT_INVALID",
            ErrorCode::BackendFailure => "BACKEND_FAILURE",
            ErrorCode::Storage => "STORAGE",
        }
    }

    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::PromptTooLong | ErrorCode::InvalidRequest => 400,
            ErrorCode::NotFound => 404,
            ErrorCode::Conflict | ErrorCode::NotFinalized => 409,
            ErrorCode::EditRejected
            | ErrorCode::GenerationFailed
            | ErrorCode::FinalizeBlocked
            | ErrorCode::ExportInvalid => 422,
            ErrorCode::BackendFailure => 502,
            ErrorCode::Storage => 500,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCode::BackendFailure => 3,
            ErrorCode::Storage => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

impl std::error::Error for ApiError {}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            details: Value::Null,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn not_found(what: impl fmt::Display) -> Self {
        Self::new(ErrorCode::NotFound, format!("{what} not found"))
    }
}

impl From<RequestError> for ApiError {
    fn from(e: RequestError) -> Self {
        match e {
            RequestError::PromptTooLong { words } => {
                ApiError::new(ErrorCode::PromptTooLong, e.to_string())
                    .with_details(json!({ "words": words }))
            }
            other => ApiError::new(ErrorCode::InvalidRequest, other.to_string()),
        }
    }
}

impl From<EditError> for ApiError {
    fn from(e: EditError) -> Self {
        let code = match &e {
            EditError::NotFound(_) => ErrorCode::NotFound,
            _ => ErrorCode::EditRejected,
        };
        ApiError::new(code, e.to_string()).with_details(json!({ "reason": e.code() }))
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => ApiError::not_found(format!("project {id}")),
            other => ApiError::new(ErrorCode::Storage, other.to_string()),
        }
    }
}

/// Pipeline failures, tagged with the chain stage they came from.
pub(crate) fn pipeline_error(e: PipelineError, stage: &str) -> ApiError {
    let message = e.to_string();
    let (code, details) = match e {
        PipelineError::Request(r) => return r.into(),
        PipelineError::Backend(b) => (ErrorCode::BackendFailure, json!({ "backend": b.backend })),
        PipelineError::GenerationFailed { attempts, report } => (
            ErrorCode::GenerationFailed,
            json!({ "attempts": attempts, "report": report }),
        ),
        PipelineError::FinalizeBlocked(report) => {
            (ErrorCode::FinalizeBlocked, json!({ "report": report }))
        }
        PipelineError::EntityGen { level, problems } => (
            ErrorCode::GenerationFailed,
            json!({ "level": level, "problems": problems }),
        ),
        PipelineError::Output(_) | PipelineError::Precondition(_) => {
            (ErrorCode::GenerationFailed, Value::Null)
        }
        PipelineError::Analysis(_) => (ErrorCode::InvalidRequest, Value::Null),
    };
    let mut details = match details {
        Value::Object(m) => m,
        _ => Default::default(),
    };
    details.insert("stage".into(), json!(stage));
    ApiError::new(code, message).with_details(Value::Object(details))
}
