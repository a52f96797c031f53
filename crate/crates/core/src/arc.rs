//! The six canonical emotional arcs and their mapping onto node sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArcError {
    #[error("arc kind `none` has no template")]
    NoArc,
    #[error("path of length {got} cannot hold {needed} arc segments")]
    PathTooShort { needed: usize, got: usize },
    #[error("unknown arc kind `{0}`")]
    UnknownKind(String),
}

/// Intended emotional movement of a story node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArcDirection {
    Rise,
    Fall,
}

impl ArcDirection {
    /// +1 for Rise, -1 for Fall.
    pub fn sign(self) -> f64 {
        match self {
            ArcDirection::Rise => 1.0,
            ArcDirection::Fall => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            ArcDirection::Rise => ArcDirection::Fall,
            ArcDirection::Fall => ArcDirection::Rise,
        }
    }
}

impl fmt::Display for ArcDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArcDirection::Rise => f.write_str("Rise"),
            ArcDirection::Fall => f.write_str("Fall"),
        }
    }
}

impl FromStr for ArcDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rise" => Ok(ArcDirection::Rise),
            "fall" => Ok(ArcDirection::Fall),
            other => Err(format!("unknown arc direction `{other}`")),
        }
    }
}

/// One of the six canonical arcs, or `None` for unlabeled baseline stories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    RagsToRiches,
    Tragedy,
    ManInAHole,
    Icarus,
    Cinderella,
    Oedipus,
    None,
}

impl ArcKind {
    /// The six labeled arcs, excluding `None`.
    pub const ALL: [ArcKind; 6] = [
        ArcKind::RagsToRiches,
        ArcKind::Tragedy,
        ArcKind::ManInAHole,
        ArcKind::Icarus,
        ArcKind::Cinderella,
        ArcKind::Oedipus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArcKind::RagsToRiches => "rags_to_riches",
            ArcKind::Tragedy => "tragedy",
            ArcKind::ManInAHole => "man_in_a_hole",
            ArcKind::Icarus => "icarus",
            ArcKind::Cinderella => "cinderella",
            ArcKind::Oedipus => "oedipus",
            ArcKind::None => "none",
        }
    }

    pub fn is_none(self) -> bool {
        self == ArcKind::None
    }

    /// Template for labeled arcs, `None` for the baseline.
    pub fn template(self) -> Option<ArcTemplate> {
        canonical_template(self).ok()
    }
}

impl fmt::Display for ArcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArcKind {
    type Err = ArcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        [ArcKind::None]
            .into_iter()
            .chain(ArcKind::ALL)
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| ArcError::UnknownKind(s.to_string()))
    }
}

/// Ordered Rise/Fall segments of one canonical arc.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcTemplate {
    pub kind: ArcKind,
    pub segments: Vec<ArcDirection>,
}

impl ArcTemplate {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Per-position labels for a path, plus where each template segment starts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseAssignment {
    pub labels: Vec<ArcDirection>,
    pub boundaries: Vec<usize>,
}

impl PhaseAssignment {
    /// Index range covered by segment `k`.
    pub fn run(&self, k: usize) -> std::ops::Range<usize> {
        let start = self.boundaries[k];
        let end = self
            .boundaries
            .get(k + 1)
            .copied()
            .unwrap_or(self.labels.len());
        start..end
    }

    pub fn run_lengths(&self) -> Vec<usize> {
        (0..self.boundaries.len())
            .map(|k| self.run(k).len())
            .collect()
    }
}

pub fn canonical_template(kind: ArcKind) -> Result<ArcTemplate, ArcError> {
    use ArcDirection::{Fall, Rise};
    let segments = match kind {
        ArcKind::RagsToRiches => vec![Rise],
        ArcKind::Tragedy => vec![Fall],
        ArcKind::ManInAHole => vec![Fall, Rise],
        ArcKind::Icarus => vec![Rise, Fall],
        ArcKind::Cinderella => vec![Rise, Fall, Rise],
        ArcKind::Oedipus => vec![Fall, Rise, Fall],
        ArcKind::None => return Err(ArcError::NoArc),
    };
    Ok(ArcTemplate { kind, segments })
}

/// Splits `path_length` positions over the template segments as evenly as
/// possible; leftover positions go to the earliest segments.
pub fn assign_phases(
    template: &ArcTemplate,
    path_length: usize,
) -> Result<PhaseAssignment, ArcError> {
    let k = template.segments.len();
    if k == 0 || path_length < k {
        return Err(ArcError::PathTooShort {
            needed: k.max(1),
            got: path_length,
        });
    }
    let base = path_length / k;
    let extra = path_length % k;
    let mut labels = Vec::with_capacity(path_length);
    let mut boundaries = Vec::with_capacity(k);
    for (i, dir) in template.segments.iter().enumerate() {
        boundaries.push(labels.len());
        let len = base + usize::from(i < extra);
        labels.extend(std::iter::repeat_n(*dir, len));
    }
    Ok(PhaseAssignment { labels, boundaries })
}

/// Piecewise-linear reference curve in [-1, 1].
///
/// Each run moves linearly from where the previous run ended towards +1
/// (Rise) or -1 (Fall), reaching the extreme on its last position. The
/// first run starts from the opposite extreme.
pub fn target_valence_curve(template: &ArcTemplate, n: usize) -> Result<Vec<f64>, ArcError> {
    let phases = assign_phases(template, n)?;
    let mut curve = Vec::with_capacity(n);
    let mut level = -template.segments[0].sign();
    for (k, dir) in template.segments.iter().enumerate() {
        let run = phases.run(k);
        let len = run.len() as f64;
        let goal = dir.sign();
        let start = level;
        for j in 1..=run.len() {
            curve.push(start + (goal - start) * j as f64 / len);
        }
        level = goal;
    }
    Ok(curve)
}

/// Collapses consecutive equal labels into runs.
pub fn run_compress<T: PartialEq + Copy>(labels: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for &l in labels {
        if out.last() != Some(&l) {
            out.push(l);
        }
    }
    out
}
