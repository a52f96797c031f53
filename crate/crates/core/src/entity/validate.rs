use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{StoryGraph, TriggerKind};
use crate::report::{Subject, ValidationReport, ViolationCode};

use super::{GameSpec, Level};

/// Referential integrity between a game spec and its story graph.
pub fn validate_spec(spec: &GameSpec, g: &StoryGraph) -> ValidationReport {
    let mut report = ValidationReport::new();

    let p = &spec.player_data;
    if p.health <= 0 || p.attack < 0 {
        report.push(
            ViolationCode::StatOutOfRange,
            Subject::Entity {
                level: g.root,
                name: p.name.clone(),
            },
            format!(
                "player needs health > 0 and attack >= 0, has {}/{}",
                p.health, p.attack
            ),
        );
    }

    let node_ids: BTreeSet<u32> = g.nodes.iter().map(|n| n.idx).collect();
    let mut level_ids = BTreeSet::new();
    for l in &spec.level_list {
        if !level_ids.insert(l.idx) {
            report.push(
                ViolationCode::DuplicateLevel,
                Subject::Level { idx: l.idx },
                format!("level {} appears more than once", l.idx),
            );
        }
    }
    for &i in node_ids.difference(&level_ids) {
        report.push(
            ViolationCode::LevelNodeMismatch,
            Subject::Node { idx: i },
            format!("story node {i} has no level"),
        );
    }
    for &i in level_ids.difference(&node_ids) {
        report.push(
            ViolationCode::LevelNodeMismatch,
            Subject::Level { idx: i },
            format!("level {i} has no story node"),
        );
    }

    for level in &spec.level_list {
        check_level(level, g, &node_ids, &mut report);
    }
    report
}

fn check_level(
    level: &Level,
    g: &StoryGraph,
    node_ids: &BTreeSet<u32>,
    report: &mut ValidationReport,
) {
    let at = level.idx;
    let entity = |name: &str| Subject::Entity {
        level: at,
        name: name.to_string(),
    };

    if let Some(node) = g.node(at) {
        if node.label != level.arc {
            report.push(
                ViolationCode::ArcLabelMismatch,
                Subject::Level { idx: at },
                format!(
                    "level arc {:?} differs from node label {:?}",
                    level.arc, node.label
                ),
            );
        }
        let mut want: Vec<(u32, TriggerKind, String)> = g
            .outgoing(at)
            .map(|e| (e.to, e.criteria.kind, e.criteria.target.to_lowercase()))
            .collect();
        let mut have: Vec<(u32, TriggerKind, String)> = level
            .next
            .iter()
            .map(|n| (n.idx, n.criteria.kind, n.criteria.target.to_lowercase()))
            .collect();
        want.sort();
        have.sort();
        if want != have {
            report.push(
                ViolationCode::NextEdgeMismatch,
                Subject::Level { idx: at },
                format!("next entries {have:?} do not mirror graph edges {want:?}"),
            );
        }
    }

    let mut names: BTreeMap<String, usize> = BTreeMap::new();
    for name in level
        .entity
        .npcs
        .iter()
        .map(|n| &n.name)
        .chain(level.entity.items.iter().map(|i| &i.name))
    {
        *names.entry(name.trim().to_lowercase()).or_default() += 1;
    }
    for (name, count) in names.into_iter().filter(|(_, c)| *c > 1) {
        report.push(
            ViolationCode::DuplicateName,
            entity(&name),
            format!("`{name}` is used by {count} entities in level {at}"),
        );
    }

    for npc in &level.entity.npcs {
        if npc.hp <= 0 || npc.atk < 0 {
            report.push(
                ViolationCode::StatOutOfRange,
                entity(&npc.name),
                format!(
                    "NPC needs hp > 0 and atk >= 0, has hp {} atk {}",
                    npc.hp, npc.atk
                ),
            );
        }
        if let Some(d) = npc.door {
            if !level.entity.doors.iter().any(|door| door.idx == d) {
                report.push(
                    ViolationCode::NpcDoorDangling,
                    entity(&npc.name),
                    format!("NPC guards door {d}, which is not in level {at}"),
                );
            }
        }
    }

    let edge_targets: BTreeSet<u32> = g.outgoing(at).map(|e| e.to).collect();
    for door in &level.entity.doors {
        if !node_ids.contains(&door.idx) {
            report.push(
                ViolationCode::DoorDangling,
                Subject::Level { idx: at },
                format!("door leads to missing node {}", door.idx),
            );
        } else if !edge_targets.contains(&door.idx) {
            report.push(
                ViolationCode::DoorNotEdge,
                Subject::Level { idx: at },
                format!("door to {} has no matching story edge", door.idx),
            );
        }
    }

    for next in &level.next {
        if !level.entity.doors.iter().any(|d| d.idx == next.idx) {
            report.push(
                ViolationCode::DoorMissing,
                Subject::Level { idx: at },
                format!("no door leads to next level {}", next.idx),
            );
        }
        let t = &next.criteria;
        match t.kind {
            TriggerKind::TalkTo => {
                if level.entity.npc(&t.target).is_none() {
                    report.push(
                        ViolationCode::TriggerTargetMissing,
                        entity(&t.target),
                        format!("no NPC `{}` to talk to", t.target),
                    );
                }
            }
            TriggerKind::PickUp => match level.entity.item(&t.target) {
                None => report.push(
                    ViolationCode::TriggerTargetMissing,
                    entity(&t.target),
                    format!("no item `{}` to pick up", t.target),
                ),
                Some(item) if !item.pickable => report.push(
                    ViolationCode::TriggerTargetNotPickable,
                    entity(&t.target),
                    format!("item `{}` is not pickable", t.target),
                ),
                Some(_) => {}
            },
            TriggerKind::Defeat => match level.entity.npc(&t.target) {
                None => report.push(
                    ViolationCode::TriggerTargetMissing,
                    entity(&t.target),
                    format!("no enemy `{}` to defeat", t.target),
                ),
                Some(npc) if npc.friend => report.push(
                    ViolationCode::TriggerTargetFriendly,
                    entity(&t.target),
                    format!("`{}` is friendly and cannot be a defeat target", t.target),
                ),
                Some(_) => {}
            },
        }
    }
}
