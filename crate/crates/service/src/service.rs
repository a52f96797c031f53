use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use arcforge_core::entity::export_game_json;
use arcforge_core::graph::apply_edit;
use arcforge_core::pipeline::{
    finalize, generate_skeleton, run_study, BackendError, RecordingBackend, RemoteBackend,
    RemoteConfig, SchemaId, StudyConfig, TemplateBackend, TextGenBackend,
};
use arcforge_core::valence::{AnalysisReport, LexiconScorer, ValenceMap, DEFAULT_THRESHOLD};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{pipeline_error, ApiError, ErrorCode};
use crate::project::{BackendChoice, CreateProject, EditRequest, FinalizeResponse, Project};
use crate::store::ProjectStore;

/// Builds the text backend for a project's choice.
pub type BackendFactory =
    Arc<dyn Fn(BackendChoice) -> Result<Box<dyn TextGenBackend>, BackendError> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteSettings {
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for RemoteSettings {
    fn default() -> Self {
        Self {
            timeout_secs: 60,
            retries: 2,
        }
    }
}

fn default_runs() -> usize {
    10
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

/// Body of `POST /projects/{id}/analysis`: a batch of fresh generations for
/// the project's prompt, arc and node budget, scored with the bundled lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRequest {
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub valence_overrides: BTreeMap<String, i8>,
}

impl Default for AnalysisRequest {
    fn default() -> Self {
        Self {
            runs: default_runs(),
            threshold: default_threshold(),
            valence_overrides: BTreeMap::new(),
        }
    }
}

/// Remembers the schema of the most recent call so failures can name the
/// chain stage they happened in.
struct StageTracker<B> {
    inner: B,
    last: Mutex<Option<SchemaId>>,
}

impl<B: TextGenBackend> StageTracker<B> {
    fn new(inner: B) -> Self {
        Self {
            inner,
            last: Mutex::new(None),
        }
    }

    fn stage(&self, fallback: &'static str) -> &'static str {
        self.last
            .lock()
            .expect("stage lock poisoned")
            .map_or(fallback, SchemaId::as_str)
    }
}

impl<B: TextGenBackend> TextGenBackend for StageTracker<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, system: &str, user: &str, schema: SchemaId) -> Result<String, BackendError> {
        *self.last.lock().expect("stage lock poisoned") = Some(schema);
        self.inner.complete(system, user, schema)
    }
}

/// Project operations over a file store.
///
/// Mutations take a per-project lock and check the caller's revision, so
/// concurrent edits either apply fully or fail with `CONFLICT`. Reads are
/// served from immutable snapshots without locking.
pub struct ProjectService {
    store: ProjectStore,
    backends: BackendFactory,
    writers: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    snapshots: RwLock<HashMap<String, Arc<Project>>>,
}

/// Template backends from the seed; remote backends from the environment.
pub fn default_factory(remote: RemoteSettings) -> BackendFactory {
    Arc::new(move |choice| match choice {
        BackendChoice::Template { seed } => Ok(Box::new(TemplateBackend::new(seed))),
        BackendChoice::Remote => {
            let config = RemoteConfig::from_env(remote.timeout_secs, remote.retries)?;
            Ok(Box::new(RemoteBackend::new(config)))
        }
    })
}

fn backend_failure(e: BackendError) -> ApiError {
    ApiError::new(ErrorCode::BackendFailure, e.to_string())
        .with_details(json!({ "backend": e.backend }))
}

impl ProjectService {
    pub fn new(store: ProjectStore, remote: RemoteSettings) -> Self {
        Self::with_backends(store, default_factory(remote))
    }

    pub fn with_backends(store: ProjectStore, backends: BackendFactory) -> Self {
        Self {
            store,
            backends,
            writers: Mutex::new(HashMap::new()),
            snapshots: RwLock::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &ProjectStore {
        &self.store
    }

    fn writer(&self, id: &str) -> Arc<Mutex<()>> {
        self.writers
            .lock()
            .expect("writer table poisoned")
            .entry(id.to_string())
            .or_default()
            .clone()
    }

    fn publish(&self, p: Project) -> Result<Arc<Project>, ApiError> {
        self.store.save(&p)?;
        let p = Arc::new(p);
        self.snapshots
            .write()
            .expect("snapshot table poisoned")
            .insert(p.id.clone(), p.clone());
        Ok(p)
    }

    fn backend(&self, choice: BackendChoice) -> Result<Box<dyn TextGenBackend>, ApiError> {
        (self.backends)(choice).map_err(backend_failure)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Project>, ApiError> {
        if let Some(p) = self
            .snapshots
            .read()
            .expect("snapshot table poisoned")
            .get(id)
        {
            return Ok(p.clone());
        }
        let p = Arc::new(self.store.load(id)?);
        Ok(self
            .snapshots
            .write()
            .expect("snapshot table poisoned")
            .entry(id.to_string())
            .or_insert(p)
            .clone())
    }

    /// Validates the request, generates a skeleton and stores it at revision 1.
    pub fn create_project(&self, body: CreateProject) -> Result<Arc<Project>, ApiError> {
        body.request.validate()?;
        body.options
            .difficulty
            .validate()
            .map_err(|e| ApiError::new(ErrorCode::InvalidRequest, e.to_string()))?;
        let rec = RecordingBackend::new(StageTracker::new(self.backend(body.backend)?));
        let graph = generate_skeleton(&body.request, &rec)
            .map_err(|e| pipeline_error(e, "story_skeleton"))?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let _guard = self.writer(&id);
        self.publish(Project {
            id,
            request: body.request,
            backend: body.backend,
            options: body.options,
            graph,
            spec: None,
            report: None,
            revision: 1,
            prompt_log: rec.into_records(),
        })
    }

    /// Applies one edit if `expected_revision` is current. A committed edit
    /// drops any finalized spec, which no longer matches the graph.
    pub fn commit_edit(&self, id: &str, req: EditRequest) -> Result<Arc<Project>, ApiError> {
        let lock = self.writer(id);
        let _guard = lock.lock().expect("writer lock poisoned");
        let current = self.get(id)?;
        if current.revision != req.expected_revision {
            return Err(ApiError::new(
                ErrorCode::Conflict,
                format!(
                    "expected revision {} but the project is at {}",
                    req.expected_revision, current.revision
                ),
            )
            .with_details(json!({ "current_revision": current.revision })));
        }
        let graph = apply_edit(&current.graph, &req.edit)?;
        if current.spec.is_some() {
            self.store.remove_game(id)?;
        }
        self.publish(Project {
            graph,
            spec: None,
            report: None,
            revision: current.revision + 1,
            ..(*current).clone()
        })
    }

    /// Runs revision and entity generation, stores the game spec and its report.
    /// The exported game file is written only when the game spec is consistent.
    pub fn finalize(&self, id: &str) -> Result<FinalizeResponse, ApiError> {
        let lock = self.writer(id);
        let _guard = lock.lock().expect("writer lock poisoned");
        let current = self.get(id)?;
        let tracker = StageTracker::new(self.backend(current.backend)?);
        let rec = RecordingBackend::new(&tracker);
        let done = finalize(&current.graph, &current.request, &rec, &current.options)
            .map_err(|e| pipeline_error(e, tracker.stage("finalize")))?;
        match export_game_json(&done.spec) {
            Ok(bytes) => self.store.write_game(id, &bytes)?,
            Err(_) => self.store.remove_game(id)?,
        }
        let mut prompt_log = current.prompt_log.clone();
        let offset = prompt_log.len();
        prompt_log.extend(rec.into_records().into_iter().map(|mut r| {
            r.step += offset;
            r
        }));
        let p = self.publish(Project {
            spec: Some(done.spec.clone()),
            report: Some(done.report.clone()),
            revision: current.revision + 1,
            prompt_log,
            ..(*current).clone()
        })?;
        Ok(FinalizeResponse {
            revision: p.revision,
            spec: done.spec,
            report: done.report,
        })
    }

    /// The canonical game document of the finalized spec.
    pub fn export(&self, id: &str) -> Result<Vec<u8>, ApiError> {
        let p = self.get(id)?;
        let spec = p.spec.as_ref().ok_or_else(|| {
            ApiError::new(
                ErrorCode::NotFinalized,
                format!("project {id} has no finalized spec"),
            )
        })?;
        export_game_json(spec).map_err(|e| {
            let mut err = ApiError::new(ErrorCode::ExportInvalid, e.to_string());
            if let Some(r) = &p.report {
                err = err.with_details(json!({ "report": r }));
            }
            err
        })
    }

    pub fn analyze(&self, id: &str, req: &AnalysisRequest) -> Result<AnalysisReport, ApiError> {
        let p = self.get(id)?;
        if req.runs == 0 {
            return Err(ApiError::new(
                ErrorCode::InvalidRequest,
                "runs must be at least 1",
            ));
        }
        let map = ValenceMap::with_overrides(&req.valence_overrides)
            .map_err(|e| ApiError::new(ErrorCode::InvalidRequest, e.to_string()))?;
        let (seed, remote) = match p.backend {
            BackendChoice::Template { seed } => (seed, false),
            BackendChoice::Remote => (0, true),
        };
        // Surface a missing remote configuration before the batch starts.
        if remote {
            self.backend(BackendChoice::Remote)?;
        }
        let config = StudyConfig {
            prompt: p.request.prompt.clone(),
            arcs: vec![p.request.arc],
            runs: req.runs,
            nodes: p.request.node_budget,
            seed,
            threshold: req.threshold,
        };
        let backends = self.backends.clone();
        let report = run_study(
            &config,
            |s| {
                let choice = if remote {
                    BackendChoice::Remote
                } else {
                    BackendChoice::Template { seed: s }
                };
                backends(choice).unwrap_or_else(|e| Box::new(Failing(e)))
            },
            &LexiconScorer::default(),
            &map,
        )
        .map_err(|e| pipeline_error(e, "analysis"))?
        .report;
        let lock = self.writer(id);
        let _guard = lock.lock().expect("writer lock poisoned");
        self.store.save_analysis(id, &report)?;
        Ok(report)
    }

    pub fn latest_analysis(&self, id: &str) -> Result<AnalysisReport, ApiError> {
        self.get(id)?;
        self.store
            .load_analysis(id)?
            .ok_or_else(|| ApiError::not_found(format!("analysis for project {id}")))
    }
}

struct Failing(BackendError);

impl TextGenBackend for Failing {
    fn name(&self) -> &str {
        &self.0.backend
    }

    fn complete(&self, _: &str, _: &str, _: SchemaId) -> Result<String, BackendError> {
        Err(self.0.clone())
    }
}
