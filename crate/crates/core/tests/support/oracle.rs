//! Independent reference checks used by integration and acceptance tests.
//!
//! Nothing here calls the validators under test: the graph oracle walks
//! every root path explicitly and the arc segments are written out by hand.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use arcforge_core::arc::{ArcDirection, ArcKind};
use arcforge_core::graph::{StoryEdge, StoryGraph, StoryNode, Trigger, TriggerKind};
use rand::Rng;

use ArcDirection::{Fall, Rise};

pub fn segments(kind: ArcKind) -> Vec<ArcDirection> {
    match kind {
        ArcKind::RagsToRiches => vec![Rise],
        ArcKind::Tragedy => vec![Fall],
        ArcKind::ManInAHole => vec![Fall, Rise],
        ArcKind::Icarus => vec![Rise, Fall],
        ArcKind::Cinderella => vec![Rise, Fall, Rise],
        ArcKind::Oedipus => vec![Fall, Rise, Fall],
        ArcKind::None => vec![],
    }
}

fn children(g: &StoryGraph) -> BTreeMap<u32, Vec<u32>> {
    let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for e in &g.edges {
        out.entry(e.from).or_default().push(e.to);
    }
    out
}

fn has_cycle(g: &StoryGraph) -> bool {
    fn visit(
        v: u32,
        kids: &BTreeMap<u32, Vec<u32>>,
        on_stack: &mut BTreeSet<u32>,
        done: &mut BTreeSet<u32>,
    ) -> bool {
        if on_stack.contains(&v) {
            return true;
        }
        if !done.insert(v) {
            return false;
        }
        on_stack.insert(v);
        let cyc = kids
            .get(&v)
            .into_iter()
            .flatten()
            .any(|&c| visit(c, kids, on_stack, done));
        on_stack.remove(&v);
        cyc
    }
    let kids = children(g);
    let mut done = BTreeSet::new();
    g.nodes
        .iter()
        .any(|n| visit(n.idx, &kids, &mut BTreeSet::new(), &mut done))
}

/// Every maximal path from the root, by plain recursion.
pub fn all_root_paths(g: &StoryGraph) -> Vec<Vec<u32>> {
    fn walk(v: u32, kids: &BTreeMap<u32, Vec<u32>>, path: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        path.push(v);
        match kids.get(&v) {
            Some(cs) if !cs.is_empty() => {
                for &c in cs {
                    walk(c, kids, path, out);
                }
            }
            _ => out.push(path.clone()),
        }
        path.pop();
    }
    let mut out = Vec::new();
    walk(g.root, &children(g), &mut Vec::new(), &mut out);
    out
}

/// Brute-force validity verdict for graphs with short storylines.
pub fn brute_force_valid(g: &StoryGraph, min_endings: usize) -> bool {
    let ids: BTreeSet<u32> = g.nodes.iter().map(|n| n.idx).collect();
    if ids.len() != g.nodes.len() || !ids.contains(&g.root) {
        return false;
    }
    if g.edges
        .iter()
        .any(|e| e.from == e.to || !ids.contains(&e.from) || !ids.contains(&e.to))
    {
        return false;
    }
    if has_cycle(g) {
        return false;
    }
    let has_parent: BTreeSet<u32> = g.edges.iter().map(|e| e.to).collect();
    if has_parent.contains(&g.root) || ids.iter().any(|i| *i != g.root && !has_parent.contains(i)) {
        return false;
    }
    let paths = all_root_paths(g);
    let on_paths: BTreeSet<u32> = paths.iter().flatten().copied().collect();
    if on_paths != ids {
        return false;
    }
    let endings: BTreeSet<u32> = paths.iter().map(|p| *p.last().unwrap()).collect();
    if endings.len() < min_endings {
        return false;
    }
    let level: BTreeMap<u32, u32> = g.nodes.iter().map(|n| (n.idx, n.level_index)).collect();
    if g.edges.iter().any(|e| level[&e.from] >= level[&e.to]) {
        return false;
    }
    let label: BTreeMap<u32, Option<ArcDirection>> =
        g.nodes.iter().map(|n| (n.idx, n.label)).collect();
    let segs = segments(g.arc);
    if segs.is_empty() {
        return label.values().all(Option::is_none);
    }
    paths.iter().all(|p| {
        let mut compressed: Vec<ArcDirection> = Vec::new();
        for v in p {
            let Some(l) = label[v] else { return false };
            if compressed.last() != Some(&l) {
                compressed.push(l);
            }
        }
        compressed == segs
    })
}

pub const ALL_WITH_BASELINE: [ArcKind; 7] = [
    ArcKind::RagsToRiches,
    ArcKind::Tragedy,
    ArcKind::ManInAHole,
    ArcKind::Icarus,
    ArcKind::Cinderella,
    ArcKind::Oedipus,
    ArcKind::None,
];

/// Random graph of at most 12 nodes, biased so that a good share is valid.
///
/// Labels follow the arc phase of each node's longest-path depth, then get
/// randomly flipped or dropped; structure occasionally gets an orphan,
/// a back edge or a missing root.
pub fn random_graph<R: Rng>(rng: &mut R) -> (StoryGraph, usize) {
    let n = rng.gen_range(1..=12u32);
    let arc = ALL_WITH_BASELINE[rng.gen_range(0..ALL_WITH_BASELINE.len())];
    let mut g = StoryGraph::new(arc, 0);
    for i in 0..n {
        g.nodes.push(StoryNode::new(i, None, format!("scene {i}")));
    }
    let edge = |from: u32, to: u32| StoryEdge {
        from,
        to,
        criteria: Trigger::canonical(TriggerKind::TalkTo, format!("keeper {to}")),
    };
    for j in 1..n {
        if rng.gen_bool(0.04) {
            continue;
        }
        let parents = if j > 1 && rng.gen_bool(0.3) { 2 } else { 1 };
        for _ in 0..parents {
            // Prefer recent parents so graphs get depth.
            let lo = j.saturating_sub(3);
            g.edges.push(edge(rng.gen_range(lo..j), j));
        }
    }
    for _ in 0..rng.gen_range(0..3) {
        if n >= 3 {
            let a = rng.gen_range(0..n - 1);
            let b = rng.gen_range(a + 1..n);
            g.edges.push(edge(a, b));
        }
    }
    if n >= 2 && rng.gen_bool(0.04) {
        let a = rng.gen_range(1..n);
        g.edges.push(edge(a, rng.gen_range(0..a)));
    }
    if rng.gen_bool(0.02) {
        g.root = 99;
    }
    let _ = g.recompute_levels();

    let segs = segments(arc);
    let depth_max = g.nodes.iter().map(|n| n.level_index).max().unwrap_or(0);
    for node in &mut g.nodes {
        if segs.is_empty() {
            if rng.gen_bool(0.05) {
                node.label = Some(Rise);
            }
            continue;
        }
        let k = (node.level_index as usize * segs.len()) / (depth_max as usize + 1);
        node.label = Some(segs[k.min(segs.len() - 1)]);
        if rng.gen_bool(0.04) {
            node.label = Some(node.label.unwrap().opposite());
        } else if rng.gen_bool(0.02) {
            node.label = None;
        }
    }
    let min_endings = if rng.gen_bool(0.8) {
        1
    } else {
        rng.gen_range(2..=3)
    };
    (g, min_endings)
}
