use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    mean_trajectory, shape_match, stepwise_monotone, story_trajectory, EmotionScorer, ShapeMatch,
    Trajectory, ValenceError, ValenceMap,
};
use crate::arc::ArcKind;
use crate::graph::{linearize, StoryGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryTrajectory {
    pub story_id: String,
    pub trajectory: Trajectory,
    pub shape: Option<ShapeMatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcAnalysis {
    pub arc: ArcKind,
    pub stories: Vec<StoryTrajectory>,
    pub mean: Trajectory,
    /// `None` for the unlabeled baseline.
    pub shape: Option<ShapeMatch>,
    pub stepwise_monotone: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub scorer: String,
    pub threshold: f64,
    pub arcs: Vec<ArcAnalysis>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    level_index: usize,
    valence: f64,
    story_id: &'a str,
    arc: &'a str,
}

impl AnalysisReport {
    pub fn all_matched(&self) -> bool {
        self.arcs
            .iter()
            .filter_map(|a| a.shape.as_ref())
            .all(|s| s.matched)
    }

    pub fn arc(&self, kind: ArcKind) -> Option<&ArcAnalysis> {
        self.arcs.iter().find(|a| a.arc == kind)
    }

    /// Long-format rows `level_index,valence,story_id,arc`; mean rows use
    /// the story id `mean`.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for a in &self.arcs {
            let arc = a.arc.as_str();
            let rows = a
                .stories
                .iter()
                .map(|s| (s.story_id.as_str(), &s.trajectory))
                .chain(std::iter::once(("mean", &a.mean)));
            for (story_id, t) in rows {
                for (level_index, &valence) in t.values.iter().enumerate() {
                    w.serialize(CsvRow {
                        level_index,
                        valence,
                        story_id,
                        arc,
                    })?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Scores each story, groups them by arc and compares each arc's mean
/// trajectory with its template.
pub fn analyze_stories(
    stories: &[(String, StoryGraph)],
    scorer: &dyn EmotionScorer,
    map: &ValenceMap,
    threshold: f64,
) -> Result<AnalysisReport, ValenceError> {
    if stories.is_empty() {
        return Err(ValenceError::Empty);
    }
    let mut groups: BTreeMap<ArcKind, Vec<StoryTrajectory>> = BTreeMap::new();
    for (id, g) in stories {
        let trajectory = story_trajectory(&linearize(g), scorer, map, threshold)?;
        let shape = match g.arc.template() {
            Some(t) => Some(shape_match(&trajectory, &t)?),
            None => None,
        };
        groups.entry(g.arc).or_default().push(StoryTrajectory {
            story_id: id.clone(),
            trajectory,
            shape,
        });
    }
    let mut arcs = Vec::new();
    for (arc, stories) in groups {
        let ts: Vec<Trajectory> = stories.iter().map(|s| s.trajectory.clone()).collect();
        let mean = mean_trajectory(&ts)?;
        let (shape, monotone) = match arc.template() {
            Some(t) => (
                Some(shape_match(&mean, &t)?),
                Some(stepwise_monotone(&mean, &t)?),
            ),
            None => (None, None),
        };
        arcs.push(ArcAnalysis {
            arc,
            stories,
            mean,
            shape,
            stepwise_monotone: monotone,
        });
    }
    Ok(AnalysisReport {
        scorer: scorer.name().to_string(),
        threshold,
        arcs,
    })
}
