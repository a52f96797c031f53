use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::arc::{run_compress, ArcDirection, ArcKind, ArcTemplate};
use crate::report::{Subject, ValidationReport, ViolationCode};
use crate::text::word_count;

use super::StoryGraph;

pub const DEFAULT_STORYLINE_WORD_CAP: usize = 50;

/// What a graph is checked against.
#[derive(Debug, Clone)]
pub struct GraphRules<'a> {
    pub template: Option<&'a ArcTemplate>,
    pub min_endings: usize,
    /// `None` disables the storyline length check.
    pub storyline_word_cap: Option<usize>,
}

impl<'a> GraphRules<'a> {
    pub fn new(template: Option<&'a ArcTemplate>, min_endings: usize) -> Self {
        Self {
            template,
            min_endings,
            storyline_word_cap: Some(DEFAULT_STORYLINE_WORD_CAP),
        }
    }
}

/// Full validation with the default storyline word cap.
pub fn validate_graph(
    g: &StoryGraph,
    template: Option<&ArcTemplate>,
    min_endings: usize,
) -> ValidationReport {
    validate_graph_with(g, &GraphRules::new(template, min_endings))
}

struct Indexed {
    ids: BTreeSet<u32>,
    adj: BTreeMap<u32, BTreeSet<u32>>,
    indeg: BTreeMap<u32, usize>,
}

fn index(g: &StoryGraph, report: &mut ValidationReport) -> Indexed {
    let mut ids = BTreeSet::new();
    for n in &g.nodes {
        if !ids.insert(n.idx) {
            report.push(
                ViolationCode::DuplicateNode,
                Subject::Node { idx: n.idx },
                format!("node id {} appears more than once", n.idx),
            );
        }
    }
    let mut adj: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    let mut indeg: BTreeMap<u32, usize> = ids.iter().map(|&i| (i, 0)).collect();
    for e in &g.edges {
        let subject = Subject::Edge {
            from: e.from,
            to: e.to,
        };
        if e.from == e.to {
            report.push(
                ViolationCode::SelfLoop,
                subject,
                format!("edge {0}->{0} is a self loop", e.from),
            );
            continue;
        }
        let missing: Vec<u32> = [e.from, e.to]
            .into_iter()
            .filter(|i| !ids.contains(i))
            .collect();
        if !missing.is_empty() {
            report.push(
                ViolationCode::DanglingEdge,
                subject,
                format!(
                    "edge {}->{} references missing node(s) {missing:?}",
                    e.from, e.to
                ),
            );
            continue;
        }
        if adj.entry(e.from).or_default().insert(e.to) {
            *indeg.get_mut(&e.to).unwrap() += 1;
        }
    }
    Indexed { ids, adj, indeg }
}

/// Nodes left over by Kahn's algorithm: cycle members and everything downstream of them.
fn cyclic_nodes(ix: &Indexed) -> BTreeSet<u32> {
    let mut indeg = ix.indeg.clone();
    let mut queue: VecDeque<u32> = indeg
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&i, _)| i)
        .collect();
    let mut seen = BTreeSet::new();
    while let Some(i) = queue.pop_front() {
        seen.insert(i);
        for &t in ix.adj.get(&i).into_iter().flatten() {
            let d = indeg.get_mut(&t).unwrap();
            *d -= 1;
            if *d == 0 {
                queue.push_back(t);
            }
        }
    }
    ix.ids.difference(&seen).copied().collect()
}

fn reachable(ix: &Indexed, root: u32) -> BTreeSet<u32> {
    let mut seen = BTreeSet::new();
    if !ix.ids.contains(&root) {
        return seen;
    }
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        if seen.insert(i) {
            stack.extend(ix.adj.get(&i).into_iter().flatten().copied());
        }
    }
    seen
}

/// Checks that must hold after every committed edit: unique ids, no dangling
/// or self-loop edges, an existing root, and no cycles.
pub fn structural_check(g: &StoryGraph) -> ValidationReport {
    let mut report = ValidationReport::new();
    let ix = index(g, &mut report);
    check_root_and_cycles(g, &ix, &mut report);
    report
}

fn check_root_and_cycles(g: &StoryGraph, ix: &Indexed, report: &mut ValidationReport) -> bool {
    if !ix.ids.contains(&g.root) {
        report.push(
            ViolationCode::NoRoot,
            Subject::Node { idx: g.root },
            format!("root {} is not a node of the graph", g.root),
        );
    }
    let cyclic = cyclic_nodes(ix);
    if !cyclic.is_empty() {
        report.push(
            ViolationCode::Cycle,
            Subject::Graph,
            format!("nodes {cyclic:?} lie on or below a cycle"),
        );
    }
    cyclic.is_empty()
}

pub fn validate_graph_with(g: &StoryGraph, rules: &GraphRules<'_>) -> ValidationReport {
    let mut report = ValidationReport::new();
    let ix = index(g, &mut report);
    let acyclic = check_root_and_cycles(g, &ix, &mut report);

    if ix.ids.contains(&g.root) && ix.indeg[&g.root] > 0 {
        report.push(
            ViolationCode::RootHasParent,
            Subject::Node { idx: g.root },
            format!("root {} has incoming edges", g.root),
        );
    }
    for (&i, &d) in &ix.indeg {
        if d == 0 && i != g.root {
            report.push(
                ViolationCode::MultipleRoots,
                Subject::Node { idx: i },
                format!("node {i} has no incoming edge but is not the root"),
            );
        }
    }

    let reach = reachable(&ix, g.root);
    for &i in ix.ids.difference(&reach) {
        report.push(
            ViolationCode::Unreachable,
            Subject::Node { idx: i },
            format!("node {i} is not reachable from root {}", g.root),
        );
    }

    let endings: Vec<u32> = reach
        .iter()
        .copied()
        .filter(|i| ix.adj.get(i).is_none_or(BTreeSet::is_empty))
        .collect();
    if endings.len() < rules.min_endings {
        report.push(
            ViolationCode::TooFewEndings,
            Subject::Graph,
            format!(
                "{} reachable ending(s), at least {} required",
                endings.len(),
                rules.min_endings
            ),
        );
    }

    let level: BTreeMap<u32, u32> = g.nodes.iter().map(|n| (n.idx, n.level_index)).collect();
    for (&from, tos) in &ix.adj {
        for &to in tos {
            if level[&from] >= level[&to] {
                report.push(
                    ViolationCode::LevelOrder,
                    Subject::Edge { from, to },
                    format!(
                        "edge {from}->{to} does not increase level index ({} -> {})",
                        level[&from], level[&to]
                    ),
                );
            }
        }
    }

    if let Some(cap) = rules.storyline_word_cap {
        for n in &g.nodes {
            let words = word_count(&n.storyline);
            if words > cap {
                report.push(
                    ViolationCode::StorylineTooLong,
                    Subject::Node { idx: n.idx },
                    format!("storyline has {words} words, cap is {cap}"),
                );
            }
        }
    }

    check_labels(g, rules.template, &reach, &mut report);
    if acyclic && ix.ids.contains(&g.root) {
        if let Some(t) = rules.template {
            report.merge(arc_consistency(g, t));
        }
    }
    report
}

fn check_labels(
    g: &StoryGraph,
    template: Option<&ArcTemplate>,
    reach: &BTreeSet<u32>,
    report: &mut ValidationReport,
) {
    if g.arc == ArcKind::None {
        for n in g.nodes.iter().filter(|n| n.label.is_some()) {
            report.push(
                ViolationCode::LabelInBaseline,
                Subject::Node { idx: n.idx },
                format!("node {} is labeled in a baseline (arc none) graph", n.idx),
            );
        }
    } else if template.is_none() {
        // Without a template the arc check does not run, so report
        // unlabeled nodes here; with one they surface as ARC_MISMATCH.
        for n in g.nodes.iter().filter(|n| n.label.is_none()) {
            if reach.contains(&n.idx) {
                report.push(
                    ViolationCode::UnlabeledNode,
                    Subject::Node { idx: n.idx },
                    format!("node {} has no Rise/Fall label", n.idx),
                );
            }
        }
    }
}

/// Per-path arc check: every root-to-ending path's labels must run-compress
/// to the template segments.
///
/// Runs a dynamic program over (node, template segment) states in
/// topological order instead of enumerating paths, keeping one witness
/// predecessor per state so each violation carries a concrete path.
/// Assumes an acyclic graph with an existing root; edges with missing
/// endpoints are ignored.
pub fn arc_consistency(g: &StoryGraph, template: &ArcTemplate) -> ValidationReport {
    let mut report = ValidationReport::new();
    let segs = &template.segments;
    let Ok(order) = g.topo_order() else {
        return report;
    };
    let labels: BTreeMap<u32, Option<ArcDirection>> =
        g.nodes.iter().map(|n| (n.idx, n.label)).collect();
    if segs.is_empty() || !labels.contains_key(&g.root) {
        return report;
    }
    let mut succ: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for e in &g.edges {
        if e.from != e.to && labels.contains_key(&e.from) && labels.contains_key(&e.to) {
            succ.entry(e.from).or_default().insert(e.to);
        }
    }

    // state k: labels so far compress to segs[..=k]; value: witness predecessor.
    type Pred = Option<(u32, usize)>;
    let mut states: BTreeMap<u32, BTreeMap<usize, Pred>> = BTreeMap::new();
    let mut bad_nodes: BTreeSet<u32> = BTreeSet::new();

    let witness = |states: &BTreeMap<u32, BTreeMap<usize, Pred>>, mut node: u32, mut k: usize| {
        let mut path = vec![node];
        while let Some(Some((p, pk))) = states.get(&node).and_then(|m| m.get(&k)) {
            path.push(*p);
            node = *p;
            k = *pk;
        }
        path.reverse();
        path
    };

    let describe = |l: Option<ArcDirection>| l.map_or("unlabeled".to_string(), |d| d.to_string());

    if labels[&g.root] == Some(segs[0]) {
        states.entry(g.root).or_default().insert(0, None);
    } else {
        bad_nodes.insert(g.root);
        report.push(
            ViolationCode::ArcMismatch,
            Subject::Path {
                nodes: vec![g.root],
                level: None,
            },
            format!(
                "root is {} but the arc starts with {}",
                describe(labels[&g.root]),
                segs[0]
            ),
        );
    }

    for &v in &order {
        let Some(here) = states.get(&v).cloned() else {
            continue;
        };
        let outs = succ.get(&v).cloned().unwrap_or_default();
        if outs.is_empty() {
            for &k in here.keys() {
                if k + 1 != segs.len() {
                    let path = witness(&states, v, k);
                    report.push(
                        ViolationCode::ArcMismatch,
                        Subject::Path {
                            nodes: path,
                            level: None,
                        },
                        format!(
                            "path ends at node {v} after {} of {} arc segments",
                            k + 1,
                            segs.len()
                        ),
                    );
                    break;
                }
            }
            continue;
        }
        for &w in &outs {
            let lw = labels[&w];
            for &k in here.keys() {
                let next = if lw == Some(segs[k]) {
                    Some(k)
                } else if k + 1 < segs.len() && lw == Some(segs[k + 1]) {
                    Some(k + 1)
                } else {
                    None
                };
                match next {
                    Some(nk) => {
                        states
                            .entry(w)
                            .or_default()
                            .entry(nk)
                            .or_insert(Some((v, k)));
                    }
                    None => {
                        if bad_nodes.insert(w) {
                            let mut path = witness(&states, v, k);
                            path.push(w);
                            let mut seen: Vec<ArcDirection> =
                                path.iter().filter_map(|i| labels[i]).collect();
                            seen = run_compress(&seen);
                            report.push(
                                ViolationCode::ArcMismatch,
                                Subject::Path { nodes: path, level: None },
                                format!(
                                    "node {w} ({}) breaks the arc: prefix compresses to {seen:?}, template is {segs:?}",
                                    describe(lw)
                                ),
                            );
                        }
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arc::canonical_template;
    use crate::arc::ArcDirection::{Fall as F, Rise as R};
    use crate::graph::fixtures::*;
    use crate::graph::{StoryEdge, StoryNode};

    #[test]
    fn two_node_cycle() {
        let mut g = labeled(ArcKind::None, &[None, None], &[(0, 1), (1, 0)]);
        g.nodes[0].level_index = 0;
        g.nodes[1].level_index = 1;
        let r = validate_graph(&g, None, 1);
        assert!(r.has(ViolationCode::Cycle));
        assert!(!r.ok);
    }

    #[test]
    fn single_rise_node() {
        let g = chain(ArcKind::RagsToRiches, &[R]);
        let t = canonical_template(ArcKind::RagsToRiches).unwrap();
        let r = validate_graph(&g, Some(&t), 1);
        assert!(r.ok, "{r}");
    }

    #[test]
    fn seven_chain_against_two_templates() {
        let g = chain(ArcKind::Icarus, &[R, R, R, R, F, F, F]);
        let icarus = canonical_template(ArcKind::Icarus).unwrap();
        assert!(validate_graph(&g, Some(&icarus), 1).ok);
        let hole = canonical_template(ArcKind::ManInAHole).unwrap();
        let r = validate_graph(&g, Some(&hole), 1);
        assert!(r.has(ViolationCode::ArcMismatch));
    }

    #[test]
    fn branch_that_skips_a_phase() {
        // 0(R) -> 1(F) -> 3(R); 0(R) -> 2(R) -> 3(R): second path never falls.
        let g = labeled(
            ArcKind::Cinderella,
            &[Some(R), Some(F), Some(R), Some(R)],
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        );
        let t = canonical_template(ArcKind::Cinderella).unwrap();
        let r = arc_consistency(&g, &t);
        assert_eq!(r.violations.len(), 1);
        match &r.violations[0].subject {
            Subject::Path { nodes, .. } => assert_eq!(nodes, &vec![0, 2, 3]),
            other => panic!("unexpected subject {other:?}"),
        }
    }

    #[test]
    fn path_ending_early() {
        let g = chain(ArcKind::Cinderella, &[R, F]);
        let t = canonical_template(ArcKind::Cinderella).unwrap();
        assert!(arc_consistency(&g, &t).has(ViolationCode::ArcMismatch));
    }

    #[test]
    fn structure_violations() {
        let mut g = labeled(ArcKind::None, &[None, None, None], &[(0, 1)]);
        g.edges.push(StoryEdge {
            from: 1,
            to: 9,
            criteria: g.edges[0].criteria.clone(),
        });
        g.edges.push(StoryEdge {
            from: 1,
            to: 1,
            criteria: g.edges[0].criteria.clone(),
        });
        g.nodes.push(StoryNode::new(1, None, "dup"));
        let r = validate_graph(&g, None, 3);
        for code in [
            ViolationCode::DanglingEdge,
            ViolationCode::SelfLoop,
            ViolationCode::DuplicateNode,
            ViolationCode::MultipleRoots,
            ViolationCode::Unreachable,
            ViolationCode::TooFewEndings,
        ] {
            assert!(r.has(code), "missing {code}: {r}");
        }
    }

    #[test]
    fn missing_root_and_level_order() {
        let mut g = chain(ArcKind::Tragedy, &[F, F]);
        g.nodes[1].level_index = 0;
        let r = validate_graph(&g, None, 1);
        assert!(r.has(ViolationCode::LevelOrder));
        g.root = 42;
        assert!(structural_check(&g).has(ViolationCode::NoRoot));
    }

    #[test]
    fn baseline_rules() {
        let g = labeled(ArcKind::None, &[None, Some(R)], &[(0, 1)]);
        assert!(validate_graph(&g, None, 1).has(ViolationCode::LabelInBaseline));
        let g = labeled(ArcKind::Icarus, &[Some(R), None], &[(0, 1)]);
        assert!(validate_graph(&g, None, 1).has(ViolationCode::UnlabeledNode));
        let t = canonical_template(ArcKind::Icarus).unwrap();
        assert!(validate_graph(&g, Some(&t), 1).has(ViolationCode::ArcMismatch));
    }

    #[test]
    fn word_cap() {
        let mut g = chain(ArcKind::Tragedy, &[F]);
        g.nodes[0].storyline = vec!["word"; 51].join(" ");
        assert!(validate_graph(&g, None, 1).has(ViolationCode::StorylineTooLong));
        let rules = GraphRules {
            storyline_word_cap: Some(60),
            ..GraphRules::new(None, 1)
        };
        assert!(validate_graph_with(&g, &rules).ok);
    }
}
