//! Report-style validation results shared by graph, spec and traversability checks.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable, machine-readable violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    // story graph structure
    DuplicateNode,
    DanglingEdge,
    SelfLoop,
    NoRoot,
    MultipleRoots,
    RootHasParent,
    Cycle,
    Unreachable,
    TooFewEndings,
    LevelOrder,
    StorylineTooLong,
    NodeBudgetExceeded,
    // arc consistency
    ArcMismatch,
    UnlabeledNode,
    LabelInBaseline,
    // edits
    RootRemoval,
    // game spec
    LevelNodeMismatch,
    DuplicateLevel,
    NextEdgeMismatch,
    ArcLabelMismatch,
    DoorDangling,
    DoorNotEdge,
    DoorMissing,
    NpcDoorDangling,
    DuplicateName,
    StatOutOfRange,
    TriggerTargetMissing,
    TriggerTargetFriendly,
    TriggerTargetNotPickable,
    // continuity
    ItemReintroduced,
    // traversability
    Stuck,
    PlayerDefeated,
    EndingUnreached,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        use ViolationCode::*;
        match self {
            DuplicateNode => "DUPLICATE_NODE",
            DanglingEdge => "DANGLING_EDGE",
            SelfLoop => "SELF_LOOP",
            NoRoot => "NO_ROOT",
            MultipleRoots => "MULTIPLE_ROOTS",
            RootHasParent => "ROOT_HAS_PARENT",
            Cycle => "CYCLE",
            Unreachable => "UNREACHABLE",
            TooFewEndings => "TOO_FEW_ENDINGS",
            LevelOrder => "LEVEL_ORDER",
            StorylineTooLong => "STORYLINE_TOO_LONG",
            NodeBudgetExceeded => "NODE_BUDGET_EXCEEDED",
            ArcMismatch => "ARC_MISMATCH",
            UnlabeledNode => "UNLABELED_NODE",
            LabelInBaseline => "LABEL_IN_BASELINE",
            RootRemoval => "ROOT_REMOVAL",
            LevelNodeMismatch => "LEVEL_NODE_MISMATCH",
            DuplicateLevel => "DUPLICATE_LEVEL",
            NextEdgeMismatch => "NEXT_EDGE_MISMATCH",
            ArcLabelMismatch => "ARC_LABEL_MISMATCH",
            DoorDangling => "DOOR_DANGLING",
            DoorNotEdge => "DOOR_NOT_EDGE",
            DoorMissing => "DOOR_MISSING",
            NpcDoorDangling => "NPC_DOOR_DANGLING",
            DuplicateName => "DUPLICATE_NAME",
            StatOutOfRange => "STAT_OUT_OF_RANGE",
            TriggerTargetMissing => "TRIGGER_TARGET_MISSING",
            TriggerTargetFriendly => "TRIGGER_TARGET_FRIENDLY",
            TriggerTargetNotPickable => "TRIGGER_TARGET_NOT_PICKABLE",
            ItemReintroduced => "ITEM_REINTRODUCED",
            Stuck => "STUCK",
            PlayerDefeated => "PLAYER_DEFEATED",
            EndingUnreached => "ENDING_UNREACHED",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a violation points at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Subject {
    Graph,
    Node { idx: u32 },
    Edge { from: u32, to: u32 },
    Level { idx: u32 },
    Entity { level: u32, name: String },
    Path { nodes: Vec<u32>, level: Option<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub subject: Subject,
    pub message: String,
}

/// `ok` is true exactly when `violations` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// Informational remarks that do not affect `ok` (e.g. truncated path enumeration).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Default for ValidationReport {
    fn default() -> Self {
        Self::new()
    }
}

impl ValidationReport {
    pub fn new() -> Self {
        Self {
            ok: true,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, code: ViolationCode, subject: Subject, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            subject,
            message: message.into(),
        });
        self.ok = false;
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
        self.notes.extend(other.notes);
        self.ok = self.violations.is_empty();
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.code, v.message)?;
        }
        Ok(())
    }
}
