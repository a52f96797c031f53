//! Headless playthrough of exported game specs.
//!
//! The simulator walks a path of levels, satisfies the trigger gating each
//! chosen door, and records a replayable trace. Combat is a deterministic
//! exchange of blows with the player striking first. Each level is a
//! self-contained room: health is restored to its maximum on every door
//! transit, while item bonuses persist.

mod audit;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{GameSpec, LevelEntities, PlayerData};
use crate::graph::{Trigger, TriggerKind};

pub use audit::{
    audit_difficulty, challenge_score, check_traversability, DifficultyAudit, DifficultyScore,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("stuck at level {level}: cannot satisfy `{}`", trigger.raw_text)]
    Stuck { level: u32, trigger: Trigger },
    #[error("player defeated by `{enemy}` at level {level}")]
    Defeated { level: u32, enemy: String },
    #[error("degenerate player stats: attack {attack}, health {health}")]
    Degenerate { attack: i64, health: i64 },
    #[error("level {0} does not exist")]
    UnknownLevel(u32),
    #[error("level {from} has no transition to {to}")]
    NoTransition { from: u32, to: u32 },
    #[error("trace event does not apply: {0}")]
    InvalidTrace(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Talk,
    Pickup,
    Combat,
    DoorTransit,
    End,
}

/// `subject` is an entity name, or the target level idx for transits and
/// the final level idx for `End`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub kind: TraceKind,
    pub subject: String,
    pub level: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Pursue only the trigger gating the chosen next door.
    #[default]
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimState {
    pub current: u32,
    pub player: PlayerData,
    pub max_health: i64,
    /// Lowercased names of picked-up items.
    pub inventory: BTreeSet<String>,
    /// Defeated enemies as `level:name`.
    pub defeated: BTreeSet<String>,
    pub trace: Vec<TraceEvent>,
}

fn defeated_key(level: u32, name: &str) -> String {
    format!("{level}:{}", name.trim().to_lowercase())
}

impl SimState {
    pub fn new(spec: &GameSpec, start: u32) -> Result<Self, SimError> {
        spec.level(start).ok_or(SimError::UnknownLevel(start))?;
        Ok(Self {
            current: start,
            player: spec.player_data.clone(),
            max_health: spec.player_data.health,
            inventory: BTreeSet::new(),
            defeated: BTreeSet::new(),
            trace: Vec::new(),
        })
    }

    fn entities<'a>(&self, spec: &'a GameSpec) -> Result<&'a LevelEntities, SimError> {
        spec.level(self.current)
            .map(|l| &l.entity)
            .ok_or(SimError::UnknownLevel(self.current))
    }

    /// Applies one event, checking it is legal in the current state.
    pub fn apply(&mut self, spec: &GameSpec, event: &TraceEvent) -> Result<(), SimError> {
        let bad = |msg: String| SimError::InvalidTrace(msg);
        if event.level != self.current {
            return Err(bad(format!(
                "event at level {} while at level {}",
                event.level, self.current
            )));
        }
        let here = self.entities(spec)?;
        match event.kind {
            TraceKind::Talk => {
                here.npc(&event.subject)
                    .ok_or_else(|| bad(format!("no NPC `{}`", event.subject)))?;
            }
            TraceKind::Pickup => {
                let item = here
                    .item(&event.subject)
                    .filter(|i| i.pickable)
                    .ok_or_else(|| bad(format!("no pickable `{}`", event.subject)))?;
                if !self.inventory.insert(item.name.trim().to_lowercase()) {
                    return Err(bad(format!("`{}` already carried", item.name)));
                }
                self.player.attack += item.atk;
                self.player.health += item.hp;
                self.max_health += item.hp;
                if self.player.health <= 0 {
                    return Err(SimError::Defeated {
                        level: self.current,
                        enemy: item.name.clone(),
                    });
                }
            }
            TraceKind::Combat => {
                let enemy = here
                    .npc(&event.subject)
                    .filter(|n| !n.friend)
                    .ok_or_else(|| bad(format!("no enemy `{}`", event.subject)))?;
                if !self
                    .defeated
                    .insert(defeated_key(self.current, &enemy.name))
                {
                    return Err(bad(format!("`{}` already defeated", enemy.name)));
                }
                self.fight(enemy.atk, enemy.hp, &enemy.name)?;
            }
            TraceKind::DoorTransit => {
                let to: u32 = event
                    .subject
                    .parse()
                    .map_err(|_| bad(format!("bad door target `{}`", event.subject)))?;
                let level = spec
                    .level(self.current)
                    .ok_or(SimError::UnknownLevel(self.current))?;
                if !level.next.iter().any(|n| n.idx == to) {
                    return Err(SimError::NoTransition {
                        from: self.current,
                        to,
                    });
                }
                spec.level(to).ok_or(SimError::UnknownLevel(to))?;
                self.current = to;
                self.player.health = self.max_health;
            }
            TraceKind::End => {}
        }
        self.trace.push(event.clone());
        Ok(())
    }

    fn fight(&mut self, enemy_atk: i64, enemy_hp: i64, name: &str) -> Result<(), SimError> {
        if self.player.attack <= 0 {
            return Err(SimError::Degenerate {
                attack: self.player.attack,
                health: self.player.health,
            });
        }
        let mut hp = enemy_hp;
        loop {
            hp -= self.player.attack;
            if hp <= 0 {
                return Ok(());
            }
            self.player.health -= enemy_atk;
            if self.player.health <= 0 {
                return Err(SimError::Defeated {
                    level: self.current,
                    enemy: name.to_string(),
                });
            }
        }
    }

    /// The event that satisfies `trigger` here, if any.
    fn gating_event(&self, spec: &GameSpec, trigger: &Trigger) -> Result<TraceEvent, SimError> {
        let here = self.entities(spec)?;
        let stuck = || SimError::Stuck {
            level: self.current,
            trigger: trigger.clone(),
        };
        let (kind, name) = match trigger.kind {
            TriggerKind::TalkTo => (
                TraceKind::Talk,
                here.npc(&trigger.target).map(|n| n.name.clone()),
            ),
            TriggerKind::PickUp => (
                TraceKind::Pickup,
                here.item(&trigger.target)
                    .filter(|i| {
                        i.pickable && !self.inventory.contains(&i.name.trim().to_lowercase())
                    })
                    .map(|i| i.name.clone()),
            ),
            TriggerKind::Defeat => (
                TraceKind::Combat,
                here.npc(&trigger.target)
                    .filter(|n| !n.friend)
                    .filter(|n| !self.defeated.contains(&defeated_key(self.current, &n.name)))
                    .map(|n| n.name.clone()),
            ),
        };
        let subject = name.ok_or_else(stuck)?;
        Ok(TraceEvent {
            kind,
            subject,
            level: self.current,
        })
    }
}

/// Plays `path` level by level.
pub fn simulate_path(spec: &GameSpec, path: &[u32], policy: Policy) -> Result<SimState, SimError> {
    let Policy::Greedy = policy;
    let (&first, rest) = path
        .split_first()
        .ok_or_else(|| SimError::InvalidTrace("empty path".into()))?;
    let mut state = SimState::new(spec, first)?;
    for &to in rest {
        let from = state.current;
        let level = spec.level(from).ok_or(SimError::UnknownLevel(from))?;
        let next = level
            .next
            .iter()
            .find(|n| n.idx == to)
            .ok_or(SimError::NoTransition { from, to })?;
        let gate = state.gating_event(spec, &next.criteria)?;
        state.apply(spec, &gate)?;
        state.apply(
            spec,
            &TraceEvent {
                kind: TraceKind::DoorTransit,
                subject: to.to_string(),
                level: from,
            },
        )?;
    }
    let end = TraceEvent {
        kind: TraceKind::End,
        subject: state.current.to_string(),
        level: state.current,
    };
    state.apply(spec, &end)?;
    Ok(state)
}

/// Re-executes a recorded trace from the game spec's starting player.
pub fn replay_trace(spec: &GameSpec, trace: &[TraceEvent]) -> Result<SimState, SimError> {
    let start = trace
        .first()
        .map(|e| e.level)
        .ok_or_else(|| SimError::InvalidTrace("empty trace".into()))?;
    let mut state = SimState::new(spec, start)?;
    for e in trace {
        state.apply(spec, e)?;
    }
    Ok(state)
}

/// One JSON object per line.
pub fn trace_to_jsonl(trace: &[TraceEvent]) -> String {
    trace
        .iter()
        .map(|e| serde_json::to_string(e).expect("trace event serializes") + "\n")
        .collect()
}

pub fn trace_from_jsonl(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
