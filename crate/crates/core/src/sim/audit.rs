use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::arc::ArcDirection;
use crate::entity::{DifficultyParams, GameSpec, LevelEntities, PlayerData};
use crate::graph::{enumerate_paths, StoryGraph, DEFAULT_PATH_CAP};
use crate::report::{Subject, ValidationReport, ViolationCode};

use super::{simulate_path, Policy, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyScore {
    pub level: u32,
    pub score: f64,
}

/// Hostile threat relative to player power:
/// `sum(atk * hp * (1 + ranged_weight * ranged)) / (attack * health)`.
pub fn challenge_score(
    e: &LevelEntities,
    player: &PlayerData,
    p: &DifficultyParams,
) -> Result<f64, SimError> {
    let power = player.attack * player.health;
    if player.attack <= 0 || player.health <= 0 {
        return Err(SimError::Degenerate {
            attack: player.attack,
            health: player.health,
        });
    }
    let threat: f64 = e
        .hostiles()
        .map(|n| {
            let ranged = if n.ranged { p.ranged_weight } else { 0.0 };
            (n.atk * n.hp) as f64 * (1.0 + ranged)
        })
        .sum();
    Ok(threat / power as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyAudit {
    pub scores: Vec<DifficultyScore>,
    pub mean_fall: Option<f64>,
    pub mean_rise: Option<f64>,
    /// Fall levels are strictly harder on average, or one group is empty.
    pub aligned: bool,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Groups challenge scores by the story graph's node labels.
pub fn audit_difficulty(
    spec: &GameSpec,
    g: &StoryGraph,
    p: &DifficultyParams,
) -> Result<DifficultyAudit, SimError> {
    let mut scores = Vec::new();
    let (mut fall, mut rise) = (Vec::new(), Vec::new());
    for level in &spec.level_list {
        let Some(label) = g.node(level.idx).and_then(|n| n.label) else {
            continue;
        };
        let score = challenge_score(&level.entity, &spec.player_data, p)?;
        scores.push(DifficultyScore {
            level: level.idx,
            score,
        });
        match label {
            ArcDirection::Fall => fall.push(score),
            ArcDirection::Rise => rise.push(score),
        }
    }
    let (mean_fall, mean_rise) = (mean(&fall), mean(&rise));
    let aligned = match (mean_fall, mean_rise) {
        (Some(f), Some(r)) => f > r,
        _ => true,
    };
    Ok(DifficultyAudit {
        scores,
        mean_fall,
        mean_rise,
        aligned,
    })
}

/// Simulates every root-to-ending path (up to the default cap) and checks
/// that none gets stuck and every ending is reached by some successful run.
pub fn check_traversability(spec: &GameSpec, g: &StoryGraph) -> ValidationReport {
    let mut report = ValidationReport::new();
    let paths = match enumerate_paths(g, DEFAULT_PATH_CAP) {
        Ok(p) => p,
        Err(e) => {
            report.push(ViolationCode::Cycle, Subject::Graph, e.to_string());
            return report;
        }
    };
    if paths.truncated {
        report.note(format!(
            "path enumeration truncated at {} paths",
            paths.paths.len()
        ));
    }
    let mut endings: BTreeSet<u32> = BTreeSet::new();
    let mut reached: BTreeSet<u32> = BTreeSet::new();
    for path in &paths.paths {
        let last = *path.last().expect("paths are non-empty");
        endings.insert(last);
        match simulate_path(spec, path, Policy::Greedy) {
            Ok(_) => {
                reached.insert(last);
            }
            Err(SimError::Defeated { level, enemy }) => report.push(
                ViolationCode::PlayerDefeated,
                Subject::Path {
                    nodes: path.clone(),
                    level: Some(level),
                },
                format!("player defeated by `{enemy}` at level {level}"),
            ),
            Err(err) => {
                let level = match &err {
                    SimError::Stuck { level, .. } => Some(*level),
                    SimError::NoTransition { from, .. } => Some(*from),
                    SimError::UnknownLevel(l) => Some(*l),
                    _ => None,
                };
                report.push(
                    ViolationCode::Stuck,
                    Subject::Path {
                        nodes: path.clone(),
                        level,
                    },
                    err.to_string(),
                );
            }
        }
    }
    for &e in endings.difference(&reached) {
        report.push(
            ViolationCode::EndingUnreached,
            Subject::Node { idx: e },
            format!("no successful playthrough reaches ending {e}"),
        );
    }
    report
}
