//! Game-spec schema consumed by a game runtime, plus difficulty modulation
//! and cross-level continuity.
//!
//! Field names follow the exported document exactly (`playerData`,
//! `levelList`, `NPCs`, ...). All stats are integers.

mod continuity;
mod difficulty;
mod export;
pub(crate) mod validate;

use serde::{Deserialize, Serialize};

use crate::arc::ArcDirection;
use crate::graph::Trigger;

pub use continuity::{
    carry_over, ContinuityLedger, OrderError, StatDelta, StatSnapshot, PLAYER_KEY,
};
pub use difficulty::{
    apply_difficulty, round_half_up, DifficultyError, DifficultyMode, DifficultyParams,
};
pub use export::{export_game_json, parse_game_json, ExportError, GAME_FILE_EXTENSION};
pub use validate::validate_spec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerData {
    pub name: String,
    pub health: i64,
    pub attack: i64,
    pub desc: String,
    /// Opaque asset descriptor (prompt text or asset path).
    pub sprite: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Npc {
    pub name: String,
    pub desc: String,
    pub dialogue: Vec<String>,
    pub atk: i64,
    pub ranged: bool,
    pub hp: i64,
    pub friend: bool,
    /// Door (by target node idx) this NPC guards, if any.
    pub door: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub name: String,
    pub desc: String,
    pub pickable: bool,
    pub atk: i64,
    pub hp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Door {
    /// Target node idx.
    pub idx: u32,
    pub sprite: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelEntities {
    #[serde(rename = "NPCs")]
    pub npcs: Vec<Npc>,
    pub items: Vec<Item>,
    pub doors: Vec<Door>,
}

impl LevelEntities {
    pub fn npc(&self, name: &str) -> Option<&Npc> {
        self.npcs
            .iter()
            .find(|n| crate::text::same_name(&n.name, name))
    }

    pub fn item(&self, name: &str) -> Option<&Item> {
        self.items
            .iter()
            .find(|i| crate::text::same_name(&i.name, name))
    }

    pub fn hostiles(&self) -> impl Iterator<Item = &Npc> {
        self.npcs.iter().filter(|n| !n.friend)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextLevel {
    pub idx: u32,
    pub criteria: Trigger,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub idx: u32,
    /// `null` for baseline stories.
    pub arc: Option<ArcDirection>,
    pub storyline: String,
    pub goal: String,
    pub next: Vec<NextLevel>,
    pub entity: LevelEntities,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    #[serde(rename = "playerData")]
    pub player_data: PlayerData,
    #[serde(rename = "levelList")]
    pub level_list: Vec<Level>,
}

impl GameSpec {
    pub fn level(&self, idx: u32) -> Option<&Level> {
        self.level_list.iter().find(|l| l.idx == idx)
    }

    pub fn level_mut(&mut self, idx: u32) -> Option<&mut Level> {
        self.level_list.iter_mut().find(|l| l.idx == idx)
    }
}
