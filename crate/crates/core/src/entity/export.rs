use std::collections::BTreeSet;

use thiserror::Error;

use crate::arc::ArcKind;
use crate::graph::{StoryEdge, StoryGraph, StoryNode};
use crate::report::ValidationReport;

use super::{validate_spec, GameSpec};

pub const GAME_FILE_EXTENSION: &str = ".game.json";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("game spec is invalid: {0}")]
    Invalid(ValidationReport),
    #[error("malformed game document: {0}")]
    Parse(#[from] serde_json::Error),
}

impl GameSpec {
    /// The story graph described by the levels' `next` entries alone.
    ///
    /// The root is the first level that no `next` entry points at.
    pub fn implied_graph(&self) -> StoryGraph {
        let targets: BTreeSet<u32> = self
            .level_list
            .iter()
            .flat_map(|l| l.next.iter().map(|n| n.idx))
            .collect();
        let root = self
            .level_list
            .iter()
            .map(|l| l.idx)
            .find(|i| !targets.contains(i))
            .or_else(|| self.level_list.first().map(|l| l.idx))
            .unwrap_or(0);
        let mut g = StoryGraph::new(ArcKind::None, root);
        for l in &self.level_list {
            let mut node = StoryNode::new(l.idx, l.arc, l.storyline.clone());
            node.goal = l.goal.clone();
            g.nodes.push(node);
            g.edges.extend(l.next.iter().map(|n| StoryEdge {
                from: l.idx,
                to: n.idx,
                criteria: n.criteria.clone(),
            }));
        }
        let _ = g.recompute_levels();
        g
    }
}

/// Canonical UTF-8 document: pretty-printed, fixed key order, trailing newline.
///
/// The game spec is first checked against the graph its own levels describe.
pub fn export_game_json(spec: &GameSpec) -> Result<Vec<u8>, ExportError> {
    let report = validate_spec(spec, &spec.implied_graph());
    if !report.ok {
        return Err(ExportError::Invalid(report));
    }
    let mut out = serde_json::to_vec_pretty(spec)?;
    out.push(b'\n');
    Ok(out)
}

pub fn parse_game_json(bytes: &[u8]) -> Result<GameSpec, ExportError> {
    Ok(serde_json::from_slice(bytes)?)
}
