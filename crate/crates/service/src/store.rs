use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use arcforge_core::entity::GAME_FILE_EXTENSION;
use arcforge_core::pipeline::{records_from_jsonl, records_to_jsonl};
use arcforge_core::valence::AnalysisReport;
use thiserror::Error;

use crate::project::Project;

pub const PROJECT_FILE: &str = "project.json";
pub const PROMPTS_FILE: &str = "prompts.jsonl";
pub const ANALYSIS_FILE: &str = "analysis.json";
const ANALYSIS_CSV: &str = "analysis.csv";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("project {0} not found")]
    NotFound(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt document {path}: {source}")]
    Corrupt {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// One directory per project holding canonical documents:
/// `project.json`, `prompts.jsonl`, `<id>.game.json` once finalized and
/// `analysis.json` / `analysis.csv` after an analysis run.
#[derive(Debug, Clone)]
pub struct ProjectStore {
    root: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary file so readers never see partial documents.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl ProjectStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, id: &str) -> Result<PathBuf, StoreError> {
        if valid_id(id) {
            Ok(self.root.join(id))
        } else {
            Err(StoreError::NotFound(id.to_string()))
        }
    }

    pub fn game_file(&self, id: &str) -> Result<PathBuf, StoreError> {
        Ok(self.dir(id)?.join(format!("{id}{GAME_FILE_EXTENSION}")))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.dir(id).is_ok_and(|d| d.join(PROJECT_FILE).is_file())
    }

    pub fn save(&self, p: &Project) -> Result<(), StoreError> {
        let dir = self.dir(&p.id)?;
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write_atomic(
            &dir.join(PROMPTS_FILE),
            records_to_jsonl(&p.prompt_log).as_bytes(),
        )?;
        let doc = Project {
            prompt_log: Vec::new(),
            ..p.clone()
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("project serializes");
        text.push('\n');
        write_atomic(&dir.join(PROJECT_FILE), text.as_bytes())
    }

    pub fn load(&self, id: &str) -> Result<Project, StoreError> {
        let dir = self.dir(id)?;
        let path = dir.join(PROJECT_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(id.to_string()))
            }
            Err(e) => return Err(io_err(&path)(e)),
        };
        let mut p: Project = serde_json::from_str(&text).map_err(|source| StoreError::Corrupt {
            path: path.clone(),
            source,
        })?;
        let log_path = dir.join(PROMPTS_FILE);
        let log = match fs::read_to_string(&log_path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(io_err(&log_path)(e)),
        };
        p.prompt_log = records_from_jsonl(&log).map_err(|source| StoreError::Corrupt {
            path: log_path,
            source,
        })?;
        Ok(p)
    }

    pub fn write_game(&self, id: &str, bytes: &[u8]) -> Result<(), StoreError> {
        write_atomic(&self.game_file(id)?, bytes)
    }

    pub fn remove_game(&self, id: &str) -> Result<(), StoreError> {
        let path = self.game_file(id)?;
        match fs::remove_file(&path) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(io_err(&path)(e)),
            _ => Ok(()),
        }
    }

    pub fn save_analysis(&self, id: &str, report: &AnalysisReport) -> Result<(), StoreError> {
        let dir = self.dir(id)?;
        let text = serde_json::to_string_pretty(report).expect("analysis serializes");
        write_atomic(&dir.join(ANALYSIS_FILE), text.as_bytes())?;
        if let Ok(csv) = report.to_csv() {
            write_atomic(&dir.join(ANALYSIS_CSV), csv.as_bytes())?;
        }
        Ok(())
    }

    pub fn load_analysis(&self, id: &str) -> Result<Option<AnalysisReport>, StoreError> {
        let path = self.dir(id)?.join(ANALYSIS_FILE);
        match fs::read_to_string(&path) {
            Ok(t) => serde_json::from_str(&t)
                .map(Some)
                .map_err(|source| StoreError::Corrupt { path, source }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}
