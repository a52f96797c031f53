use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arc::ArcDirection;
use crate::report::ViolationCode;

use super::{parse_trigger, structural_check, StoryEdge, StoryGraph, StoryNode, TriggerError};

/// A designer edit to a story graph.
///
/// Edges are addressed by their endpoints plus `nth`, the position among
/// parallel edges between the same pair (0 for the first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum GraphEdit {
    AddNode {
        node: StoryNode,
        /// Optional parent to attach the new node under, with edge criteria.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parent: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        criteria: Option<String>,
    },
    RemoveNode {
        idx: u32,
    },
    AddEdge {
        from: u32,
        to: u32,
        criteria: String,
    },
    RemoveEdge {
        from: u32,
        to: u32,
        #[serde(default)]
        nth: usize,
    },
    Relabel {
        idx: u32,
        label: Option<ArcDirection>,
    },
    RewriteStoryline {
        idx: u32,
        storyline: String,
    },
    RewriteCriteria {
        from: u32,
        to: u32,
        #[serde(default)]
        nth: usize,
        criteria: String,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EditError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("edit rejected ({code}): {message}")]
    Rejected {
        code: ViolationCode,
        message: String,
    },
    #[error(transparent)]
    Trigger(#[from] TriggerError),
}

impl EditError {
    fn rejected(code: ViolationCode, message: impl Into<String>) -> Self {
        EditError::Rejected {
            code,
            message: message.into(),
        }
    }

    /// Machine-readable code: the violation code for rejections.
    pub fn code(&self) -> &'static str {
        match self {
            EditError::NotFound(_) => "NOT_FOUND",
            EditError::Rejected { code, .. } => code.as_str(),
            EditError::Trigger(_) => "UNKNOWN_TRIGGER",
        }
    }
}

fn require_node(g: &StoryGraph, idx: u32) -> Result<(), EditError> {
    if g.contains(idx) {
        Ok(())
    } else {
        Err(EditError::NotFound(format!("node {idx}")))
    }
}

fn nth_edge(g: &StoryGraph, from: u32, to: u32, nth: usize) -> Result<usize, EditError> {
    g.edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.from == from && e.to == to)
        .nth(nth)
        .map(|(i, _)| i)
        .ok_or_else(|| EditError::NotFound(format!("edge {from}->{to} #{nth}")))
}

/// Applies `edit` to a copy of `g`.
///
/// Structural edits recompute level indices. The result must still pass
/// [`structural_check`]; otherwise the edit is rejected with the first
/// violated code (e.g. `CYCLE`) and `g` is untouched.
pub fn apply_edit(g: &StoryGraph, edit: &GraphEdit) -> Result<StoryGraph, EditError> {
    let mut out = g.clone();
    let mut structural = false;
    match edit {
        GraphEdit::AddNode {
            node,
            parent,
            criteria,
        } => {
            if out.contains(node.idx) {
                return Err(EditError::rejected(
                    ViolationCode::DuplicateNode,
                    format!("node id {} already exists", node.idx),
                ));
            }
            let edge = match parent {
                Some(p) => {
                    require_node(&out, *p)?;
                    let text = criteria.as_deref().unwrap_or_default();
                    Some(StoryEdge {
                        from: *p,
                        to: node.idx,
                        criteria: parse_trigger(text)?,
                    })
                }
                None => None,
            };
            out.nodes.push(node.clone());
            out.edges.extend(edge);
            structural = true;
        }
        GraphEdit::RemoveNode { idx } => {
            require_node(&out, *idx)?;
            if *idx == out.root {
                return Err(EditError::rejected(
                    ViolationCode::RootRemoval,
                    "the root node cannot be removed",
                ));
            }
            out.nodes.retain(|n| n.idx != *idx);
            out.edges.retain(|e| e.from != *idx && e.to != *idx);
            structural = true;
        }
        GraphEdit::AddEdge { from, to, criteria } => {
            require_node(&out, *from)?;
            require_node(&out, *to)?;
            out.edges.push(StoryEdge {
                from: *from,
                to: *to,
                criteria: parse_trigger(criteria)?,
            });
            structural = true;
        }
        GraphEdit::RemoveEdge { from, to, nth } => {
            let i = nth_edge(&out, *from, *to, *nth)?;
            out.edges.remove(i);
            structural = true;
        }
        GraphEdit::Relabel { idx, label } => {
            out.node_mut(*idx)
                .ok_or_else(|| EditError::NotFound(format!("node {idx}")))?
                .label = *label;
        }
        GraphEdit::RewriteStoryline { idx, storyline } => {
            out.node_mut(*idx)
                .ok_or_else(|| EditError::NotFound(format!("node {idx}")))?
                .storyline = storyline.clone();
        }
        GraphEdit::RewriteCriteria {
            from,
            to,
            nth,
            criteria,
        } => {
            let i = nth_edge(&out, *from, *to, *nth)?;
            out.edges[i].criteria = parse_trigger(criteria)?;
        }
    }

    let report = structural_check(&out);
    if let Some(v) = report.violations.first() {
        return Err(EditError::rejected(v.code, v.message.clone()));
    }
    if structural {
        out.recompute_levels()
            .expect("acyclic after structural check");
    }
    Ok(out)
}
