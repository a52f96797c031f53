use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{Subject, ValidationReport, ViolationCode};

use super::{LevelEntities, PlayerData};

/// Ledger key for the player character.
pub const PLAYER_KEY: &str = "player";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatDelta {
    pub atk: i64,
    pub hp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatSnapshot {
    pub atk: i64,
    pub hp: i64,
}

/// Cross-level record of acquisitions and entity state changes.
///
/// Keys are lowercased entity names; the player is stored under [`PLAYER_KEY`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuityLedger {
    /// Item name -> node idx of the level where it was picked up.
    pub acquired_items: BTreeMap<String, u32>,
    pub stat_deltas: BTreeMap<String, StatDelta>,
    pub descriptors: BTreeMap<String, String>,
    /// Last seen stats per entity, used to derive deltas.
    pub last_stats: BTreeMap<String, StatSnapshot>,
    /// Highest level index processed so far.
    pub cursor: Option<u32>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("level index {got} processed after level index {cursor}")]
pub struct OrderError {
    pub cursor: u32,
    pub got: u32,
}

fn key(name: &str) -> String {
    name.trim().to_lowercase()
}

impl ContinuityLedger {
    /// A ledger seeded with the player's starting description and stats.
    pub fn for_player(player: &PlayerData) -> Self {
        let mut l = Self::default();
        l.descriptors.insert(PLAYER_KEY.into(), player.desc.clone());
        l.last_stats.insert(
            PLAYER_KEY.into(),
            StatSnapshot {
                atk: player.attack,
                hp: player.health,
            },
        );
        l
    }

    pub fn is_acquired(&self, item: &str) -> bool {
        self.acquired_items.contains_key(&key(item))
    }

    pub fn descriptor(&self, name: &str) -> Option<&str> {
        self.descriptors.get(&key(name)).map(String::as_str)
    }

    /// Same content, ignoring the processing cursor.
    pub fn same_state(&self, other: &Self) -> bool {
        self.acquired_items == other.acquired_items
            && self.stat_deltas == other.stat_deltas
            && self.descriptors == other.descriptors
            && self.last_stats == other.last_stats
    }

    fn add_delta(&mut self, name: String, atk: i64, hp: i64) {
        if atk == 0 && hp == 0 {
            return;
        }
        let d = self.stat_deltas.entry(name).or_default();
        d.atk += atk;
        d.hp += hp;
    }
}

/// Folds one level's entities into the ledger.
///
/// Pickable items become acquisitions (adding their stats to the player and
/// extending the player's description); an item already acquired at another
/// level showing up pickable again is reported as `ITEM_REINTRODUCED`.
/// NPC description or stat changes relative to their last appearance are
/// recorded. Levels must arrive in non-decreasing `level_index` order.
pub fn carry_over(
    ledger: &ContinuityLedger,
    node_idx: u32,
    level_index: u32,
    e: &LevelEntities,
) -> Result<(ContinuityLedger, ValidationReport), OrderError> {
    if let Some(cursor) = ledger.cursor {
        if level_index < cursor {
            return Err(OrderError {
                cursor,
                got: level_index,
            });
        }
    }
    let mut out = ledger.clone();
    let mut report = ValidationReport::new();
    out.cursor = Some(level_index);

    for item in e.items.iter().filter(|i| i.pickable) {
        let k = key(&item.name);
        match out.acquired_items.get(&k) {
            Some(&at) if at != node_idx => report.push(
                ViolationCode::ItemReintroduced,
                Subject::Entity {
                    level: node_idx,
                    name: item.name.clone(),
                },
                format!(
                    "`{}` was acquired at level {at} and reappears as a pickable at level {node_idx}",
                    item.name
                ),
            ),
            Some(_) => {}
            None => {
                out.acquired_items.insert(k, node_idx);
                out.add_delta(PLAYER_KEY.into(), item.atk, item.hp);
                let desc = out.descriptors.entry(PLAYER_KEY.into()).or_default();
                let carried = format!("Carries the {}.", item.name);
                *desc = if desc.is_empty() {
                    carried
                } else {
                    format!("{} {carried}", desc.trim_end())
                };
            }
        }
    }

    for npc in &e.npcs {
        let k = key(&npc.name);
        let now = StatSnapshot {
            atk: npc.atk,
            hp: npc.hp,
        };
        if let Some(prev) = out.last_stats.insert(k.clone(), now) {
            out.add_delta(k.clone(), now.atk - prev.atk, now.hp - prev.hp);
        }
        if out.descriptors.get(&k) != Some(&npc.desc) {
            out.descriptors.insert(k, npc.desc.clone());
        }
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::{Item, Npc};

    fn player() -> PlayerData {
        PlayerData {
            name: "Ayla".into(),
            health: 100,
            attack: 10,
            desc: "A wandering smith.".into(),
            sprite: "pixel smith".into(),
        }
    }

    fn sword(pickable: bool) -> Item {
        Item {
            name: "Sword".into(),
            desc: "a plain blade".into(),
            pickable,
            atk: 4,
            hp: 0,
        }
    }

    fn guide() -> Npc {
        Npc {
            name: "Mira".into(),
            desc: "a lantern bearer".into(),
            dialogue: vec!["This way.".into()],
            atk: 0,
            ranged: false,
            hp: 10,
            friend: true,
            door: None,
        }
    }

    fn level(items: Vec<Item>, npcs: Vec<Npc>) -> LevelEntities {
        LevelEntities {
            npcs,
            items,
            doors: vec![],
        }
    }

    #[test]
    fn reintroduced_item_is_flagged() {
        let l0 = ContinuityLedger::for_player(&player());
        let (l1, r) = carry_over(&l0, 1, 1, &level(vec![sword(true)], vec![])).unwrap();
        assert!(r.ok);
        assert_eq!(l1.acquired_items.get("sword"), Some(&1));
        let (_, r) = carry_over(&l1, 3, 3, &level(vec![sword(true)], vec![])).unwrap();
        assert!(r.has(ViolationCode::ItemReintroduced));
        // Non-pickable mention of a carried item is fine.
        let (_, r) = carry_over(&l1, 3, 3, &level(vec![sword(false)], vec![])).unwrap();
        assert!(r.ok);
    }

    #[test]
    fn unchanged_level_leaves_state() {
        let l0 = ContinuityLedger::for_player(&player());
        let (l1, _) = carry_over(&l0, 0, 0, &level(vec![], vec![guide()])).unwrap();
        let (l2, r) = carry_over(&l1, 1, 1, &level(vec![], vec![guide()])).unwrap();
        assert!(r.ok);
        assert!(l2.same_state(&l1));
        assert_eq!(l2.descriptor("mira"), Some("a lantern bearer"));
        // Idempotent when the same level is folded twice.
        let (l3, _) = carry_over(&l2, 1, 1, &level(vec![], vec![guide()])).unwrap();
        assert_eq!(l3, l2);
    }

    #[test]
    fn player_updated_after_pickup() {
        let l0 = ContinuityLedger::for_player(&player());
        let (l1, _) = carry_over(&l0, 2, 1, &level(vec![sword(true)], vec![])).unwrap();
        assert_eq!(
            l1.descriptors[PLAYER_KEY],
            "A wandering smith. Carries the Sword."
        );
        assert_eq!(l1.stat_deltas[PLAYER_KEY], StatDelta { atk: 4, hp: 0 });
    }

    #[test]
    fn npc_changes_are_recorded() {
        let l0 = ContinuityLedger::for_player(&player());
        let (l1, _) = carry_over(&l0, 0, 0, &level(vec![], vec![guide()])).unwrap();
        let mut hurt = guide();
        hurt.hp = 6;
        hurt.desc = "a wounded lantern bearer".into();
        let (l2, _) = carry_over(&l1, 1, 1, &level(vec![], vec![hurt])).unwrap();
        assert_eq!(l2.stat_deltas["mira"], StatDelta { atk: 0, hp: -4 });
        assert_eq!(l2.descriptor("Mira"), Some("a wounded lantern bearer"));
    }

    #[test]
    fn out_of_order_is_an_error() {
        let l0 = ContinuityLedger::for_player(&player());
        let (l1, _) = carry_over(&l0, 4, 3, &LevelEntities::default()).unwrap();
        assert_eq!(
            carry_over(&l1, 2, 1, &LevelEntities::default()).unwrap_err(),
            OrderError { cursor: 3, got: 1 }
        );
    }
}
