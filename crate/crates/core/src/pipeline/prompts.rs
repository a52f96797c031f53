//! Prompt texts and the JSON context blocks embedded in them.
//!
//! Every user prompt ends with a fenced JSON block holding the step's
//! context, so any backend (including the template one) can read the same
//! structured input the instructions describe.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::schema::extract_json;
use crate::arc::{ArcDirection, ArcKind};
use crate::graph::TriggerKind;

pub const RISE_INSTRUCTION: &str =
    "Embrace an uplifting and hopeful tone, highlighting progress and positive transformation.";
pub const FALL_INSTRUCTION: &str =
    "Adopt a more somber and challenging tone, emphasizing setbacks and internal or external conflicts.";

/// Direction-specific tone instruction used when revising a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MindReset {
    pub direction: ArcDirection,
    pub instruction: String,
}

impl MindReset {
    pub fn for_direction(direction: ArcDirection) -> Self {
        let instruction = match direction {
            ArcDirection::Rise => RISE_INSTRUCTION,
            ArcDirection::Fall => FALL_INSTRUCTION,
        };
        Self {
            direction,
            instruction: instruction.to_string(),
        }
    }
}

pub const SKELETON_SYSTEM: &str = "You design branching story graphs for short games. \
Reply with one JSON object {\"root\": int, \"nodes\": [{\"idx\", \"label\", \"storyline\", \"goal\"}], \
\"edges\": [{\"from\", \"to\", \"criteria\"}]}. Labels are \"Rise\", \"Fall\" or null. \
Every criteria is one player interaction: talk to an NPC, pick up an item, or defeat an enemy.";

pub const CRITERIA_SYSTEM: &str = "You write transition criteria for story graph edges. \
Reply with one JSON object {\"criteria\": text}. The criteria must be a single player \
interaction: talk to an NPC, pick up an item, or defeat an enemy, naming its target.";

pub const PLAYER_SYSTEM: &str = "You create the player character for a short game. Reply with one \
JSON object {\"playerData\": {\"name\", \"health\", \"attack\", \"desc\", \"sprite\"}} with integer stats.";

pub const REVISION_SYSTEM: &str = "You polish one story node of a branching game narrative. \
Reply with one JSON object {\"storyline\": text}. Keep events and characters; change only tone.";

pub const ENTITY_SYSTEM: &str = "You instantiate the entities of one game level. Reply with one \
JSON object {\"NPCs\": [{\"name\", \"desc\", \"dialogue\", \"atk\", \"ranged\", \"hp\", \"friend\", \"door\"}], \
\"items\": [{\"name\", \"desc\", \"pickable\", \"atk\", \"hp\"}], \"doors\": [{\"idx\", \"sprite\"}]}. \
Stats are integers. Every listed trigger target must exist with the right role.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonContext {
    pub prompt: String,
    pub arc: ArcKind,
    pub segments: Vec<ArcDirection>,
    pub node_budget: usize,
    pub min_endings: usize,
    pub storyline_word_cap: usize,
    pub attempt: usize,
    #[serde(default)]
    pub feedback: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaContext {
    pub from: u32,
    pub to: u32,
    pub from_label: Option<ArcDirection>,
    pub from_storyline: String,
    pub to_storyline: String,
    pub rejected: String,
    pub taken_targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerContext {
    pub prompt: String,
    pub arc: ArcKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionContext {
    pub direction: ArcDirection,
    pub instruction: String,
    pub history: Vec<String>,
    pub storyline: String,
    pub goal: String,
    pub word_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeBrief {
    pub idx: u32,
    pub label: Option<ArcDirection>,
    pub storyline: String,
    pub goal: String,
    pub level_index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutgoingTrigger {
    pub to: u32,
    pub kind: TriggerKind,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityContext {
    pub node: NodeBrief,
    pub outgoing: Vec<OutgoingTrigger>,
    pub player_name: String,
    pub acquired_items: Vec<String>,
    pub descriptors: BTreeMap<String, String>,
    pub history: Vec<String>,
}

/// Instructions followed by the fenced context block.
pub fn user_prompt<C: Serialize>(instructions: &str, context: &C) -> String {
    let block = serde_json::to_string_pretty(context).expect("context serializes");
    format!("{instructions}\n\n```json\n{block}\n```\n")
}

/// Appends a rejection notice for a repair round.
pub fn with_feedback(user: &str, error: &str) -> String {
    format!("{user}\nYour previous answer was rejected: {error}\nReply again with a corrected document.\n")
}

/// Reads the context block back out of a user prompt.
pub fn read_context<C: DeserializeOwned>(user: &str) -> Option<C> {
    let start = user.rfind("```json\n")?;
    extract_json(&user[start..]).and_then(|v| serde_json::from_value(v).ok())
}

pub fn skeleton_instructions(ctx: &SkeletonContext) -> String {
    let shape = if ctx.segments.is_empty() {
        "Leave every label null.".to_string()
    } else {
        let names: Vec<&str> = ctx
            .segments
            .iter()
            .map(|d| match d {
                ArcDirection::Rise => "Rise",
                ArcDirection::Fall => "Fall",
            })
            .collect();
        format!(
            "Label nodes so that every path from the root to an ending passes through the phases {} in order.",
            names.join(" then ")
        )
    };
    format!(
        "Story prompt: {}\nBuild a story graph with at most {} nodes and at least {} endings. {} \
Keep each storyline under {} words.",
        ctx.prompt, ctx.node_budget, ctx.min_endings, shape, ctx.storyline_word_cap
    )
}

pub fn revision_instructions(ctx: &RevisionContext) -> String {
    format!(
        "{}\nRewrite the current node's storyline in at most {} words, continuing from the previous nodes.",
        ctx.instruction, ctx.word_cap
    )
}

pub fn entity_instructions(ctx: &EntityContext) -> String {
    format!(
        "Create the NPCs, items and doors for level {}. Include every trigger target listed under \
`outgoing` and one door per next level. Respect the acquired items and descriptors from earlier levels.",
        ctx.node.idx
    )
}
