//! Deterministic backend that fills slots from seeded word banks.
//!
//! Each call seeds its own generator from the backend seed and a hash of
//! the full prompt, so identical inputs always give identical output and
//! retries with amended prompts give fresh output.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::prompts::{
    read_context, CriteriaContext, EntityContext, PlayerContext, RevisionContext, SkeletonContext,
};
use super::{BackendError, SchemaId, TextGenBackend};
use crate::arc::{assign_phases, ArcDirection, ArcTemplate};
use crate::graph::TriggerKind;
use crate::valence::{LexiconScorer, NEGATIVE_LABELS, POSITIVE_LABELS};

/// Marks the tone sentence appended during revision.
pub const TONE_MARKER: &str = "The mood carries";

/// Affective words per revised storyline.
const TONE_WORDS: usize = 10;
/// Change in positive-word count per revision step.
const TONE_STEP: usize = 2;

const PLACES: &[&str] = &[
    "river crossing",
    "old mill",
    "salt marsh",
    "watchtower",
    "stone bridge",
    "market square",
    "mountain pass",
    "sunken library",
    "lighthouse",
    "orchard",
    "quarry",
    "harbor",
    "clock tower",
    "forest road",
    "copper mine",
    "ferry landing",
];
const THINGS: &[&str] = &[
    "lantern", "map", "ledger", "bell", "banner", "well", "cart", "gate", "statue", "loom",
];
const ROLES: &[&str] = &[
    "smith",
    "courier",
    "cartographer",
    "herbalist",
    "sailor",
    "archivist",
];
const PLAYER_NAMES: &[&str] = &["Ayla", "Corin", "Maren", "Tobin", "Isolde", "Bram"];
const COMPANIONS: &[&str] = &["Wren", "Pell", "Sorrel", "Quill"];
const FRIENDS: &[&str] = &[
    "Mira",
    "Old Tomas",
    "Ferryman Ilse",
    "Brother Aldo",
    "Nan Hollis",
    "Captain Reyes",
    "Scribe Odo",
    "Widow Marl",
];
const FOES: &[&str] = &[
    "bandit chief",
    "stone warden",
    "marsh troll",
    "rogue knight",
    "bone archer",
    "ash wolf",
    "iron golem",
    "cult zealot",
    "cave spider",
    "raider captain",
];
const ITEM_ADJ: &[&str] = &[
    "rusty", "silver", "brass", "oaken", "carved", "ancient", "small", "heavy",
];
const ITEM_NOUN: &[&str] = &[
    "sword", "key", "amulet", "shield", "compass", "ring", "horn", "lamp", "dagger", "charm",
];
const SCENERY: &[&str] = &[
    "cracked pillar",
    "dusty shelf",
    "broken cart",
    "empty barrel",
];
const VAGUE: &[&str] = &[
    "find a way onward",
    "follow the trail north",
    "wait for nightfall",
];

/// Bank of words that form the tone sentence for each direction.
pub fn tone_bank(direction: ArcDirection) -> Vec<String> {
    let lex = LexiconScorer::default();
    let labels: &[&str] = match direction {
        ArcDirection::Rise => &POSITIVE_LABELS,
        ArcDirection::Fall => &NEGATIVE_LABELS,
    };
    labels
        .iter()
        .flat_map(|l| lex.words_for(l).iter().cloned())
        .collect()
}

/// Words the skeleton uses for storylines, goals and names.
pub fn neutral_vocabulary() -> Vec<&'static str> {
    PLACES
        .iter()
        .chain(THINGS)
        .chain(ROLES)
        .chain(SCENERY)
        .flat_map(|s| s.split_whitespace())
        .chain(
            "The traveler reaches the where a stands near Find way onward Reach end of journey"
                .split_whitespace(),
        )
        .collect()
}

pub struct TemplateBackend {
    seed: u64,
    rise: Vec<String>,
    fall: Vec<String>,
}

impl TemplateBackend {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rise: tone_bank(ArcDirection::Rise),
            fall: tone_bank(ArcDirection::Fall),
        }
    }

    fn rng(&self, system: &str, user: &str, schema: SchemaId) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(schema.as_str().as_bytes());
        h.update([0]);
        h.update(system.as_bytes());
        h.update([0]);
        h.update(user.as_bytes());
        let digest: [u8; 32] = h.finalize().into();
        ChaCha8Rng::from_seed(digest)
    }

    fn positive_count(&self, text: &str) -> Option<usize> {
        let tone = &text[text.find(TONE_MARKER)?..];
        let words: Vec<String> = crate::text::tokens(tone).collect();
        let pos = words.iter().filter(|w| self.rise.contains(w)).count();
        let neg = words.iter().filter(|w| self.fall.contains(w)).count();
        (pos + neg == TONE_WORDS).then_some(pos)
    }

    fn skeleton(&self, ctx: &SkeletonContext, rng: &mut ChaCha8Rng) -> Value {
        let template = ArcTemplate {
            kind: ctx.arc,
            segments: ctx.segments.clone(),
        };
        let layers = layout(&template, ctx.node_budget, ctx.min_endings, rng);
        let mut nodes = Vec::new();
        let mut layer_ids: Vec<Vec<u32>> = Vec::new();
        let mut next = 0u32;
        for (width, label) in &layers {
            let ids: Vec<u32> = (next..next + *width as u32).collect();
            next += *width as u32;
            for _ in &ids {
                let place = PLACES.choose(rng).unwrap();
                let thing = THINGS.choose(rng).unwrap();
                let role = ROLES.choose(rng).unwrap();
                nodes.push((
                    *label,
                    format!(
                        "The traveler reaches the {place}, where a {role} stands near the {thing}."
                    ),
                ));
            }
            layer_ids.push(ids);
        }

        let mut edges: Vec<(u32, u32)> = Vec::new();
        for pair in layer_ids.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            for (j, &to) in b.iter().enumerate() {
                edges.push((a[j % a.len()], to));
            }
            for (i, &from) in a.iter().enumerate() {
                if !edges.iter().any(|e| e.0 == from) {
                    edges.push((from, b[i % b.len()]));
                }
            }
            if a.len() == 2 && b.len() == 2 && rng.gen_bool(0.3) {
                let extra = (a[0], b[1]);
                if !edges.contains(&extra) {
                    edges.push(extra);
                }
            }
        }
        edges.sort();

        let mut items_used = BTreeSet::new();
        let mut edge_docs = Vec::new();
        let mut last_from = None;
        let mut local: BTreeSet<String> = BTreeSet::new();
        for &(from, to) in &edges {
            if last_from != Some(from) {
                local.clear();
                last_from = Some(from);
            }
            let label = nodes[from as usize].0;
            let kind = trigger_kind(label, rng);
            let target = pick_target(kind, &mut local, &mut items_used, rng);
            let criteria = if rng.gen_bool(0.1) {
                VAGUE.choose(rng).unwrap().to_string()
            } else {
                phrase(kind, &target, rng)
            };
            edge_docs.push(json!({"from": from, "to": to, "criteria": criteria}));
        }

        let node_docs: Vec<Value> = nodes
            .iter()
            .enumerate()
            .map(|(i, (label, storyline))| {
                let ending = !edges.iter().any(|e| e.0 == i as u32);
                let goal = if ending {
                    "Reach the end of the journey."
                } else {
                    "Find the way onward."
                };
                json!({"idx": i, "label": label, "storyline": storyline, "goal": goal})
            })
            .collect();
        json!({"root": 0, "nodes": node_docs, "edges": edge_docs})
    }

    fn criteria(&self, ctx: &CriteriaContext, rng: &mut ChaCha8Rng) -> Value {
        let kind = trigger_kind(ctx.from_label, rng);
        let mut taken: BTreeSet<String> =
            ctx.taken_targets.iter().map(|t| t.to_lowercase()).collect();
        let mut items = taken.clone();
        let target = pick_target(kind, &mut taken, &mut items, rng);
        json!({"criteria": phrase(kind, &target, rng)})
    }

    fn player(&self, ctx: &PlayerContext, rng: &mut ChaCha8Rng) -> Value {
        let name = PLAYER_NAMES.choose(rng).unwrap();
        let role = ROLES.choose(rng).unwrap();
        json!({"playerData": {
            "name": name,
            "health": 100,
            "attack": 12,
            "desc": format!("A {role} drawn into the tale of {}.", ctx.prompt.trim_end_matches('.')),
            "sprite": format!("pixel-art {role}, 32x32, front view"),
        }})
    }

    fn revise(&self, ctx: &RevisionContext, rng: &mut ChaCha8Rng) -> Value {
        let prev = ctx
            .history
            .last()
            .and_then(|t| self.positive_count(t))
            .unwrap_or(TONE_WORDS / 2);
        let pos = match ctx.direction {
            ArcDirection::Rise => (prev + TONE_STEP).min(TONE_WORDS),
            ArcDirection::Fall => prev.saturating_sub(TONE_STEP),
        };
        let mut words: Vec<&String> = self.rise.choose_multiple(rng, pos).collect();
        words.extend(self.fall.choose_multiple(rng, TONE_WORDS - pos));
        words.shuffle(rng);
        let base = match ctx.storyline.find(TONE_MARKER) {
            Some(i) => ctx.storyline[..i].trim_end(),
            None => ctx.storyline.trim_end(),
        };
        let list: Vec<&str> = words.iter().map(|w| w.as_str()).collect();
        json!({"storyline": format!("{base} {TONE_MARKER} {}.", list.join(", "))})
    }

    fn entities(&self, ctx: &EntityContext, rng: &mut ChaCha8Rng) -> Value {
        let mut names: BTreeSet<String> = BTreeSet::new();
        let mut npcs = Vec::new();
        let mut items = Vec::new();

        // The companion's name depends only on the player, so it recurs unchanged.
        let companion = COMPANIONS[ctx.player_name.len() % COMPANIONS.len()];
        names.insert(companion.to_lowercase());
        npcs.push(json!({
            "name": companion, "desc": "A quiet companion who keeps the map.",
            "dialogue": [format!("Stay close, {}.", ctx.player_name)],
            "atk": 2, "ranged": false, "hp": 20, "friend": true, "door": null,
        }));

        let mut defeat_targets = 0;
        for t in &ctx.outgoing {
            if !names.insert(t.target.to_lowercase()) {
                continue;
            }
            match t.kind {
                TriggerKind::TalkTo => npcs.push(json!({
                    "name": t.target, "desc": "A local who knows the way.",
                    "dialogue": ["The next door opens for those who listen."],
                    "atk": rng.gen_range(0..=2), "ranged": false, "hp": rng.gen_range(10..=20),
                    "friend": true, "door": t.to,
                })),
                TriggerKind::PickUp => items.push(json!({
                    "name": t.target, "desc": format!("A {} left here long ago.", t.target),
                    "pickable": true, "atk": rng.gen_range(0..=3), "hp": rng.gen_range(0..=10),
                })),
                TriggerKind::Defeat => {
                    defeat_targets += 1;
                    npcs.push(hostile(&t.target, Some(t.to), rng));
                }
            }
        }

        let wanted = match ctx.node.label {
            Some(ArcDirection::Fall) => rng.gen_range(1..=2),
            Some(ArcDirection::Rise) => rng.gen_range(0..=1),
            None => rng.gen_range(0..=2),
        };
        for _ in defeat_targets..wanted {
            let free: Vec<&&str> = FOES
                .iter()
                .filter(|f| !names.contains(&f.to_lowercase()))
                .collect();
            if let Some(f) = free.choose(rng) {
                names.insert(f.to_lowercase());
                npcs.push(hostile(f, None, rng));
            }
        }

        let scenery = SCENERY.choose(rng).unwrap();
        if names.insert(scenery.to_string()) {
            items.push(json!({
                "name": scenery, "desc": "Part of the room.", "pickable": false, "atk": 0, "hp": 0,
            }));
        }

        let doors: BTreeSet<u32> = ctx.outgoing.iter().map(|t| t.to).collect();
        let doors: Vec<Value> = doors
            .into_iter()
            .map(|idx| json!({"idx": idx, "sprite": format!("{} door", THINGS.choose(rng).unwrap())}))
            .collect();
        json!({"NPCs": npcs, "items": items, "doors": doors})
    }
}

fn hostile(name: &str, door: Option<u32>, rng: &mut ChaCha8Rng) -> Value {
    json!({
        "name": name, "desc": format!("A {name} blocking the way."),
        "dialogue": ["You shall not pass."],
        "atk": rng.gen_range(3..=6), "ranged": rng.gen_bool(0.3), "hp": rng.gen_range(8..=14),
        "friend": false, "door": door,
    })
}

fn trigger_kind(label: Option<ArcDirection>, rng: &mut ChaCha8Rng) -> TriggerKind {
    match label {
        Some(ArcDirection::Fall) => TriggerKind::Defeat,
        Some(ArcDirection::Rise) => *[TriggerKind::TalkTo, TriggerKind::PickUp]
            .choose(rng)
            .unwrap(),
        None => *[
            TriggerKind::TalkTo,
            TriggerKind::PickUp,
            TriggerKind::Defeat,
        ]
        .choose(rng)
        .unwrap(),
    }
}

/// A target not in `local`; item names are also kept unique across the graph.
fn pick_target(
    kind: TriggerKind,
    local: &mut BTreeSet<String>,
    items: &mut BTreeSet<String>,
    rng: &mut ChaCha8Rng,
) -> String {
    let pool: Vec<String> = match kind {
        TriggerKind::TalkTo => FRIENDS.iter().map(|s| s.to_string()).collect(),
        TriggerKind::Defeat => FOES.iter().map(|s| s.to_string()).collect(),
        TriggerKind::PickUp => ITEM_ADJ
            .iter()
            .flat_map(|a| ITEM_NOUN.iter().map(move |n| format!("{a} {n}")))
            .collect(),
    };
    let free: Vec<&String> = pool
        .iter()
        .filter(|t| !local.contains(&t.to_lowercase()) && !items.contains(&t.to_lowercase()))
        .collect();
    let target = free
        .choose(rng)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("{} {}", pool[0], local.len()));
    local.insert(target.to_lowercase());
    if kind == TriggerKind::PickUp {
        items.insert(target.to_lowercase());
    }
    target
}

fn phrase(kind: TriggerKind, target: &str, rng: &mut ChaCha8Rng) -> String {
    let forms: &[&str] = match kind {
        TriggerKind::TalkTo => &[
            "talk to {}",
            "speak with {}",
            "talk to a friendly NPC named {}",
        ],
        TriggerKind::PickUp => &["pick up the {}", "take the {}", "collect the {}"],
        TriggerKind::Defeat => &[
            "defeat the {}",
            "slay the {}",
            "defeat the {} to unlock the door",
        ],
    };
    forms.choose(rng).unwrap().replace("{}", target)
}

/// Layer widths and labels. Layers never straddle a phase boundary, the
/// root layer has width 1 and the final layer holds `min_endings` nodes.
/// Budgets that cannot satisfy this fall back to a plain chain.
fn layout(
    template: &ArcTemplate,
    n: usize,
    min_endings: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, Option<ArcDirection>)> {
    let chain = |n: usize| -> Vec<(usize, Option<ArcDirection>)> {
        (0..n)
            .map(|i| {
                let label = (!template.segments.is_empty())
                    .then(|| template.segments[i % template.segments.len()]);
                (1, label)
            })
            .collect()
    };
    let m = min_endings.max(1);
    if n == 1 && m == 1 {
        return vec![(1, template.segments.first().copied())];
    }
    let (mut runs, labels): (Vec<usize>, Vec<Option<ArcDirection>>) =
        if template.segments.is_empty() {
            (vec![n], vec![None])
        } else {
            match assign_phases(template, n) {
                Ok(p) => (
                    p.run_lengths(),
                    template.segments.iter().map(|d| Some(*d)).collect(),
                ),
                Err(_) => return chain(n),
            }
        };
    let k = runs.len();
    let last_need = if k == 1 { m + 1 } else { m };
    if n < (k - 1) + last_need {
        return chain(n);
    }
    while runs[k - 1] < last_need {
        let donor = (0..k - 1).rev().max_by_key(|&i| runs[i]).unwrap();
        runs[donor] -= 1;
        runs[k - 1] += 1;
    }

    let mut layers = Vec::new();
    for (r, (&len, &label)) in runs.iter().zip(&labels).enumerate() {
        let mut rest = len;
        let mut widths = Vec::new();
        if r == 0 {
            widths.push(1);
            rest -= 1;
        }
        let tail = if r == k - 1 { m } else { 0 };
        rest -= tail;
        while rest > 0 {
            let w = if rest >= 2 && rng.gen_bool(0.35) {
                2
            } else {
                1
            };
            widths.push(w);
            rest -= w;
        }
        if tail > 0 {
            widths.push(tail);
        }
        layers.extend(widths.into_iter().map(|w| (w, label)));
    }
    layers
}

impl TextGenBackend for TemplateBackend {
    fn name(&self) -> &str {
        "template"
    }

    fn complete(&self, system: &str, user: &str, schema: SchemaId) -> Result<String, BackendError> {
        let mut rng = self.rng(system, user, schema);
        let bad = || {
            BackendError::new(
                "template",
                format!("prompt has no readable {schema} context"),
            )
        };
        let doc = match schema {
            SchemaId::StorySkeleton => {
                self.skeleton(&read_context(user).ok_or_else(bad)?, &mut rng)
            }
            SchemaId::Criteria => self.criteria(&read_context(user).ok_or_else(bad)?, &mut rng),
            SchemaId::PlayerData => self.player(&read_context(user).ok_or_else(bad)?, &mut rng),
            SchemaId::RevisedStoryline => {
                self.revise(&read_context(user).ok_or_else(bad)?, &mut rng)
            }
            SchemaId::LevelEntities => {
                self.entities(&read_context(user).ok_or_else(bad)?, &mut rng)
            }
        };
        Ok(format!(
            "```json\n{}\n```",
            serde_json::to_string_pretty(&doc).expect("json value serializes")
        ))
    }
}
