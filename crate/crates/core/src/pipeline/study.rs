use serde::{Deserialize, Serialize};

use super::{generate_skeleton, revise_all, GenerationRequest, PipelineError, TextGenBackend};
use crate::arc::ArcKind;
use crate::graph::StoryGraph;
use crate::valence::{
    analyze_stories, AnalysisReport, EmotionScorer, ValenceMap, DEFAULT_THRESHOLD,
};

/// Batch generation of revised stories per arc, followed by valence analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub prompt: String,
    pub arcs: Vec<ArcKind>,
    /// Stories per arc.
    pub runs: usize,
    /// Node budget per story.
    pub nodes: usize,
    pub seed: u64,
    pub threshold: f64,
}

impl StudyConfig {
    pub fn new(prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            arcs: ArcKind::ALL.to_vec(),
            runs: 10,
            nodes: 7,
            seed: 0,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub report: AnalysisReport,
    /// `(story id, revised graph)` in generation order.
    pub stories: Vec<(String, StoryGraph)>,
}

/// Runs `config.runs` generations per arc. `backend_for` receives a distinct
/// seed per story.
pub fn run_study<F>(
    config: &StudyConfig,
    backend_for: F,
    scorer: &dyn EmotionScorer,
    map: &ValenceMap,
) -> Result<StudyOutput, PipelineError>
where
    F: Fn(u64) -> Box<dyn TextGenBackend>,
{
    let mut stories = Vec::new();
    for (a, &arc) in config.arcs.iter().enumerate() {
        for run in 0..config.runs {
            let seed = config
                .seed
                .wrapping_mul(1_000_003)
                .wrapping_add((a * config.runs + run) as u64);
            let backend = backend_for(seed);
            let req = GenerationRequest::new(config.prompt.clone(), arc, config.nodes);
            let g = generate_skeleton(&req, backend.as_ref())?;
            let (revised, _) = revise_all(&g, backend.as_ref(), req.storyline_word_cap)?;
            stories.push((format!("{}-{run}", arc.as_str()), revised));
        }
    }
    let report = analyze_stories(&stories, scorer, map, config.threshold)?;
    Ok(StudyOutput { report, stories })
}
