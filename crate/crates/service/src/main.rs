use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use arcforge_core::arc::ArcKind;
use arcforge_core::graph::{enumerate_paths, GraphEdit, DEFAULT_PATH_CAP};
use arcforge_core::pipeline::{run_study, GenerationRequest, StudyConfig};
use arcforge_core::sim::{check_traversability, simulate_path, trace_to_jsonl, Policy};
use arcforge_core::valence::{LexiconScorer, ValenceMap, DEFAULT_THRESHOLD};
use arcforge_service::{
    api, default_factory, AnalysisRequest, ApiError, BackendChoice, CreateProject, EditRequest,
    ErrorCode, ProjectService, ProjectStore, RemoteSettings,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "arcforge",
    version,
    about = "Arc-driven story graphs and game levels"
)]
struct Cli {
    /// Directory holding one sub-directory per project.
    #[arg(
        long,
        env = "ARCFORGE_STORE",
        default_value = "arcforge-projects",
        global = true
    )]
    store: PathBuf,
    #[arg(long, default_value_t = 60, global = true)]
    timeout: u64,
    #[arg(long, default_value_t = 2, global = true)]
    retries: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Template,
    Remote,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "template")]
    backend: Backend,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BackendArgs {
    fn choice(&self) -> BackendChoice {
        match self.backend {
            Backend::Template => BackendChoice::Template { seed: self.seed },
            Backend::Remote => BackendChoice::Remote,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Create a project and generate its story graph.
    Generate {
        #[arg(long)]
        prompt: String,
        #[arg(long)]
        arc: ArcKind,
        #[arg(long, default_value_t = 1)]
        endings: usize,
        #[arg(long, default_value_t = 7)]
        nodes: usize,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply one graph edit (JSON, or @file) at the given revision.
    Edit {
        #[arg(long)]
        project: String,
        #[arg(long)]
        revision: u64,
        #[arg(long)]
        edit: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Revise storylines and generate level entities.
    Finalize {
        #[arg(long)]
        project: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the game document of a finalized project.
    Export {
        #[arg(long)]
        project: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play a finalized project along one path (comma-separated node ids),
    /// or check every root-to-ending path when no path is given.
    Simulate {
        #[arg(long)]
        project: String,
        #[arg(long, value_delimiter = ',')]
        path: Option<Vec<u32>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Valence analysis, either for a stored project or as a batch over arcs.
    Analyze {
        #[arg(long, conflicts_with = "prompt")]
        project: Option<String>,
        #[arg(long, required_unless_present = "project")]
        prompt: Option<String>,
        /// Arcs to generate; all six when omitted.
        #[arg(long)]
        arc: Vec<ArcKind>,
        #[arg(long, default_value_t = 7)]
        nodes: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[command(flatten)]
        backend: BackendArgs,
        /// Output directory for analysis.json and analysis.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the REST API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

enum Failure {
    Api(ApiError),
    Validation(String),
    Other(String),
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Failure::Api(e)
    }
}

fn other(e: impl std::fmt::Display) -> Failure {
    Failure::Other(e.to_string())
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| other(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(other)
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&PathBuf>, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(other)?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let remote = RemoteSettings {
        timeout_secs: cli.timeout,
        retries: cli.retries,
    };
    let store = ProjectStore::open(&cli.store).map_err(ApiError::from)?;
    let svc = ProjectService::new(store, remote);
    match cli.command {
        Command::Generate {
            prompt,
            arc,
            endings,
            nodes,
            backend,
            out,
        } => {
            let mut request = GenerationRequest::new(prompt, arc, nodes);
            request.min_endings = endings;
            let p = svc.create_project(CreateProject {
                request,
                backend: backend.choice(),
                options: Default::default(),
            })?;
            eprintln!("created project {} (revision {})", p.id, p.revision);
            emit_json(out.as_ref(), p.as_ref())
        }
        Command::Edit {
            project,
            revision,
            edit,
            out,
        } => {
            let text = match edit.strip_prefix('@') {
                Some(path) => {
                    fs::read_to_string(path).map_err(|e| other(format!("{path}: {e}")))?
                }
                None => edit,
            };
            let edit: GraphEdit = serde_json::from_str(&text)
                .map_err(|e| ApiError::new(ErrorCode::InvalidRequest, format!("bad edit: {e}")))?;
            let p = svc.commit_edit(
                &project,
                EditRequest {
                    edit,
                    expected_revision: revision,
                },
            )?;
            emit_json(out.as_ref(), p.as_ref())
        }
        Command::Finalize { project, out } => {
            let r = svc.finalize(&project)?;
            emit_json(out.as_ref(), &r)?;
            if r.report.ok {
                Ok(())
            } else {
                Err(Failure::Validation(r.report.to_string()))
            }
        }
        Command::Export { project, out } => emit(out.as_ref(), &svc.export(&project)?),
        Command::Simulate { project, path, out } => {
            let p = svc.get(&project)?;
            let spec = p.spec.as_ref().ok_or_else(|| {
                ApiError::new(
                    ErrorCode::NotFinalized,
                    format!("project {project} has no finalized spec"),
                )
            })?;
            match path {
                Some(path) => match simulate_path(spec, &path, Policy::Greedy) {
                    Ok(state) => emit(out.as_ref(), trace_to_jsonl(&state.trace).as_bytes()),
                    Err(e) => Err(Failure::Validation(e.to_string())),
                },
                None => {
                    let report = check_traversability(spec, &p.graph);
                    let paths = enumerate_paths(&p.graph, DEFAULT_PATH_CAP).map_err(other)?;
                    eprintln!("checked {} path(s)", paths.paths.len());
                    emit_json(out.as_ref(), &report)?;
                    if report.ok {
                        Ok(())
                    } else {
                        Err(Failure::Validation(report.to_string()))
                    }
                }
            }
        }
        Command::Analyze {
            project,
            prompt,
            arc,
            nodes,
            runs,
            threshold,
            backend,
            out,
        } => {
            let report = match project {
                Some(id) => svc.analyze(
                    &id,
                    &AnalysisRequest {
                        runs,
                        threshold,
                        ..Default::default()
                    },
                )?,
                None => {
                    let config = StudyConfig {
                        prompt: prompt.unwrap_or_default(),
                        arcs: if arc.is_empty() {
                            ArcKind::ALL.to_vec()
                        } else {
                            arc
                        },
                        runs,
                        nodes,
                        seed: backend.seed,
                        threshold,
                    };
                    let factory = default_factory(remote);
                    let remote_backend = matches!(backend.backend, Backend::Remote);
                    if remote_backend {
                        factory(BackendChoice::Remote)
                            .map_err(|e| ApiError::new(ErrorCode::BackendFailure, e.to_string()))?;
                    }
                    run_study(
                        &config,
                        |seed| {
                            let choice = if remote_backend {
                                BackendChoice::Remote
                            } else {
                                BackendChoice::Template { seed }
                            };
                            factory(choice).expect("backend checked above")
                        },
                        &LexiconScorer::default(),
                        &ValenceMap::default(),
                    )
                    .map_err(|e| {
                        let code = match e {
                            arcforge_core::pipeline::PipelineError::Backend(_) => {
                                ErrorCode::BackendFailure
                            }
                            _ => ErrorCode::GenerationFailed,
                        };
                        ApiError::new(code, e.to_string())
                    })?
                    .report
                }
            };
            for a in &report.arcs {
                let verdict = match &a.shape {
                    Some(s) if s.matched => "matched",
                    Some(_) => "not matched",
                    None => "baseline",
                };
                eprintln!(
                    "{:<16} {} stories, mean shape {verdict}",
                    a.arc.as_str(),
                    a.stories.len()
                );
            }
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(other)?;
                    emit_json(Some(&dir.join("analysis.json")), &report)?;
                    let csv = report.to_csv().map_err(other)?;
                    emit(Some(&dir.join("analysis.csv")), csv.as_bytes())
                }
                None => emit_json(None, &report),
            }
        }
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new().map_err(other)?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&addr).await.map_err(other)?;
                eprintln!(
                    "listening on http://{}",
                    listener.local_addr().map_err(other)?
                );
                axum::serve(listener, api::router(Arc::new(svc)))
                    .await
                    .map_err(other)
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Api(e)) => {
            eprintln!("error: {e}");
            if !e.details.is_null() {
                eprintln!(
                    "{}",
                    serde_json::to_string_pretty(&e.details).unwrap_or_default()
                );
            }
            ExitCode::from(e.code.exit_code() as u8)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
