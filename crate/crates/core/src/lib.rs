//! Emotional-arc driven narrative and level generation.
//!
//! The crate is organised around the lifecycle of one generated game:
//!
//! - [`arc`]: the six canonical Rise/Fall arcs and how they map onto node sequences.
//! - [`graph`]: the branching story DAG, trigger criteria, edits and validation.
//! - [`pipeline`]: the chained generation steps over a pluggable text backend.
//! - [`entity`]: the exported game schema, difficulty modulation and continuity.
//! - [`sim`]: a headless playthrough simulator and difficulty audit.
//! - [`valence`]: emotion scoring, valence trajectories and arc shape matching.

pub mod arc;
pub mod entity;
pub mod graph;
pub mod pipeline;
pub mod report;
pub mod sim;
pub mod text;
pub mod valence;

pub use arc::{ArcDirection, ArcError, ArcKind, ArcTemplate, PhaseAssignment};
pub use entity::{
    DifficultyMode, DifficultyParams, Door, GameSpec, Item, Level, LevelEntities, NextLevel, Npc,
    PlayerData,
};
pub use graph::{StoryEdge, StoryGraph, StoryNode, Trigger, TriggerKind};
pub use report::{Subject, ValidationReport, Violation, ViolationCode};
