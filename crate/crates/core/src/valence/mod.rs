//! Composite valence scoring, trajectories and arc-shape matching.

mod http;
mod lexicon;
mod report;
mod shape;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arc::ArcError;
use crate::graph::StoryNode;

pub use http::HttpEmotionScorer;
pub use lexicon::LexiconScorer;
pub use report::{analyze_stories, AnalysisReport, ArcAnalysis, StoryTrajectory};
pub use shape::{shape_match, stepwise_monotone, ShapeMatch};

pub const DEFAULT_THRESHOLD: f64 = 0.1;

pub const POSITIVE_LABELS: [&str; 12] = [
    "admiration",
    "amusement",
    "approval",
    "caring",
    "desire",
    "excitement",
    "gratitude",
    "joy",
    "love",
    "optimism",
    "pride",
    "relief",
];
pub const NEGATIVE_LABELS: [&str; 11] = [
    "anger",
    "annoyance",
    "disappointment",
    "disapproval",
    "disgust",
    "embarrassment",
    "fear",
    "grief",
    "nervousness",
    "remorse",
    "sadness",
];
pub const NEUTRAL_LABELS: [&str; 5] = [
    "confusion",
    "curiosity",
    "realization",
    "surprise",
    "neutral",
];

/// Every label identifier in the taxonomy, `neutral` included.
pub fn taxonomy() -> impl Iterator<Item = &'static str> {
    POSITIVE_LABELS
        .iter()
        .chain(NEGATIVE_LABELS.iter())
        .chain(NEUTRAL_LABELS.iter())
        .copied()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValenceError {
    #[error("unknown emotion label `{0}`")]
    UnknownLabel(String),
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("valence {value} for `{label}` is not -1, 0 or 1")]
    BadValence { label: String, value: i8 },
    #[error("trajectory length {got} differs from {expected}")]
    Shape { expected: usize, got: usize },
    #[error("nothing to analyse")]
    Empty,
    #[error("scorer failed at level {level}: {message}")]
    Scorer { level: u32, message: String },
    #[error(transparent)]
    Arc(#[from] ArcError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionPrediction {
    pub label: String,
    pub prob: f64,
}

impl EmotionPrediction {
    pub fn new(label: impl Into<String>, prob: f64) -> Self {
        Self {
            label: label.into(),
            prob,
        }
    }
}

/// Label to valence in {-1, 0, +1}, total over the taxonomy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValenceMap(BTreeMap<String, i8>);

impl Default for ValenceMap {
    fn default() -> Self {
        let mut m = BTreeMap::new();
        m.extend(POSITIVE_LABELS.iter().map(|l| (l.to_string(), 1)));
        m.extend(NEGATIVE_LABELS.iter().map(|l| (l.to_string(), -1)));
        m.extend(NEUTRAL_LABELS.iter().map(|l| (l.to_string(), 0)));
        Self(m)
    }
}

impl ValenceMap {
    /// Overrides the default mapping; every label must be known.
    pub fn with_overrides(overrides: &BTreeMap<String, i8>) -> Result<Self, ValenceError> {
        let mut map = Self::default();
        for (label, &value) in overrides {
            if !(-1..=1).contains(&value) {
                return Err(ValenceError::BadValence {
                    label: label.clone(),
                    value,
                });
            }
            *map.0
                .get_mut(label)
                .ok_or_else(|| ValenceError::UnknownLabel(label.clone()))? = value;
        }
        Ok(map)
    }

    pub fn get(&self, label: &str) -> Result<i8, ValenceError> {
        self.0
            .get(label)
            .copied()
            .ok_or_else(|| ValenceError::UnknownLabel(label.to_string()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `sum(prob * valence)` over predictions with `prob >= threshold`.
pub fn node_valence(
    preds: &[EmotionPrediction],
    map: &ValenceMap,
    threshold: f64,
) -> Result<f64, ValenceError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ValenceError::Threshold(threshold));
    }
    let mut v = 0.0;
    for p in preds {
        let value = map.get(&p.label)?;
        if p.prob >= threshold {
            v += p.prob * f64::from(value);
        }
    }
    Ok(v)
}

pub trait EmotionScorer: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, text: &str) -> Result<Vec<EmotionPrediction>, String>;
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Scores each node's storyline in the given (linearized) order.
pub fn story_trajectory(
    nodes: &[&StoryNode],
    scorer: &dyn EmotionScorer,
    map: &ValenceMap,
    threshold: f64,
) -> Result<Trajectory, ValenceError> {
    if nodes.is_empty() {
        return Err(ValenceError::Empty);
    }
    let values = nodes
        .iter()
        .map(|n| {
            let preds = scorer
                .score(&n.storyline)
                .map_err(|message| ValenceError::Scorer {
                    level: n.level_index,
                    message,
                })?;
            node_valence(&preds, map, threshold)
        })
        .collect::<Result<_, _>>()?;
    Ok(Trajectory { values })
}

/// Element-wise mean of equal-length trajectories.
pub fn mean_trajectory(ts: &[Trajectory]) -> Result<Trajectory, ValenceError> {
    let first = ts.first().ok_or(ValenceError::Empty)?;
    let n = first.len();
    if let Some(bad) = ts.iter().find(|t| t.len() != n) {
        return Err(ValenceError::Shape {
            expected: n,
            got: bad.len(),
        });
    }
    let count = ts.len() as f64;
    let values = (0..n)
        .map(|i| ts.iter().map(|t| t.values[i]).sum::<f64>() / count)
        .collect();
    Ok(Trajectory { values })
}
