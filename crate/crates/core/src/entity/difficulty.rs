use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arc::ArcDirection;

use super::LevelEntities;

/// Whether entity stats come straight from the backend or get an explicit
/// arc-driven post-pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifficultyMode {
    PromptOnly,
    #[default]
    Programmatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyParams {
    pub fall_multiplier: f64,
    pub rise_multiplier: f64,
    /// Extra scale per level of depth.
    pub depth_slope: f64,
    /// Challenge bonus for ranged attackers.
    pub ranged_weight: f64,
}

impl Default for DifficultyParams {
    fn default() -> Self {
        Self {
            fall_multiplier: 1.5,
            rise_multiplier: 0.75,
            depth_slope: 0.1,
            ranged_weight: 0.5,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("difficulty parameters need fall_multiplier > rise_multiplier > 0 and non-negative slope/weight, got {0:?}")]
pub struct DifficultyError(pub DifficultyParams);

impl DifficultyParams {
    pub fn validate(&self) -> Result<(), DifficultyError> {
        let ok = self.fall_multiplier > self.rise_multiplier
            && self.rise_multiplier > 0.0
            && self.depth_slope >= 0.0
            && self.ranged_weight >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(DifficultyError(*self))
        }
    }

    pub fn multiplier(&self, label: ArcDirection, depth: u32) -> f64 {
        let m = match label {
            ArcDirection::Fall => self.fall_multiplier,
            ArcDirection::Rise => self.rise_multiplier,
        };
        m * (1.0 + depth as f64 * self.depth_slope)
    }
}

/// Rounds halves away from zero for non-negative inputs.
///
/// A tiny epsilon absorbs products like `2.4999999999999996` that are
/// exact halves in decimal.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5 + 1e-9).floor() as i64
}

/// Scales hostile NPC attack and health by the arc multiplier for `label`
/// at `depth`. Friendly NPCs and items are left alone; scaled stats are
/// rounded half-up with a floor of 1.
pub fn apply_difficulty(
    e: &LevelEntities,
    label: ArcDirection,
    depth: u32,
    p: &DifficultyParams,
) -> LevelEntities {
    let m = p.multiplier(label, depth);
    let mut out = e.clone();
    for npc in out.npcs.iter_mut().filter(|n| !n.friend) {
        npc.atk = round_half_up(npc.atk as f64 * m).max(1);
        npc.hp = round_half_up(npc.hp as f64 * m).max(1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::{Item, Npc};
    use proptest::prelude::*;

    fn enemy(atk: i64, hp: i64) -> Npc {
        Npc {
            name: "raider".into(),
            desc: String::new(),
            dialogue: vec![],
            atk,
            ranged: false,
            hp,
            friend: false,
            door: None,
        }
    }

    fn scaled_atk(atk: i64, label: ArcDirection, depth: u32) -> i64 {
        let e = LevelEntities {
            npcs: vec![enemy(atk, 10)],
            ..Default::default()
        };
        apply_difficulty(&e, label, depth, &DifficultyParams::default()).npcs[0].atk
    }

    #[test]
    fn examples() {
        assert_eq!(scaled_atk(10, ArcDirection::Fall, 0), 15);
        assert_eq!(scaled_atk(10, ArcDirection::Rise, 0), 8);
        assert_eq!(scaled_atk(10, ArcDirection::Fall, 2), 18);
    }

    #[test]
    fn friends_and_items_untouched() {
        let mut friend = enemy(4, 9);
        friend.friend = true;
        let e = LevelEntities {
            npcs: vec![friend.clone()],
            items: vec![Item {
                name: "sword".into(),
                desc: String::new(),
                pickable: true,
                atk: 3,
                hp: 0,
            }],
            doors: vec![],
        };
        let out = apply_difficulty(&e, ArcDirection::Fall, 5, &DifficultyParams::default());
        assert_eq!(out, e);
    }

    #[test]
    fn floor_of_one() {
        assert_eq!(scaled_atk(0, ArcDirection::Rise, 0), 1);
        assert_eq!(scaled_atk(1, ArcDirection::Rise, 0), 1);
    }

    #[test]
    fn params_ordering() {
        assert!(DifficultyParams::default().validate().is_ok());
        let bad = DifficultyParams {
            fall_multiplier: 0.5,
            ..DifficultyParams::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_depth_and_fall_beats_rise(atk in 1i64..500, hp in 1i64..500, depth in 0u32..30) {
            let p = DifficultyParams::default();
            let e = LevelEntities { npcs: vec![enemy(atk, hp)], ..Default::default() };
            for label in [ArcDirection::Rise, ArcDirection::Fall] {
                let here = &apply_difficulty(&e, label, depth, &p).npcs[0];
                let deeper = &apply_difficulty(&e, label, depth + 1, &p).npcs[0];
                prop_assert!(deeper.atk >= here.atk && deeper.hp >= here.hp);
            }
            let fall = &apply_difficulty(&e, ArcDirection::Fall, depth, &p).npcs[0];
            let rise = &apply_difficulty(&e, ArcDirection::Rise, depth, &p).npcs[0];
            prop_assert!(fall.atk > rise.atk && fall.hp > rise.hp);
        }
    }
}
