//! Branching story DAG with trigger-bearing edges.

mod edit;
mod paths;
mod trigger;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arc::{ArcDirection, ArcKind};

pub use edit::{apply_edit, EditError, GraphEdit};
pub use paths::{enumerate_paths, PathSet, DEFAULT_PATH_CAP};
pub use trigger::{parse_trigger, Trigger, TriggerError, TriggerKind};
pub use validate::{
    arc_consistency, structural_check, validate_graph, validate_graph_with, GraphRules,
    DEFAULT_STORYLINE_WORD_CAP,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("story graph contains a cycle")]
    Cycle,
    #[error("node {0} not found")]
    NotFound(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryNode {
    pub idx: u32,
    /// Unset for baseline (arc `none`) stories.
    pub label: Option<ArcDirection>,
    pub storyline: String,
    pub goal: String,
    pub level_index: u32,
}

impl StoryNode {
    pub fn new(idx: u32, label: Option<ArcDirection>, storyline: impl Into<String>) -> Self {
        Self {
            idx,
            label,
            storyline: storyline.into(),
            goal: String::new(),
            level_index: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryEdge {
    pub from: u32,
    pub to: u32,
    pub criteria: Trigger,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryGraph {
    pub arc: ArcKind,
    pub root: u32,
    pub nodes: Vec<StoryNode>,
    pub edges: Vec<StoryEdge>,
}

impl StoryGraph {
    pub fn new(arc: ArcKind, root: u32) -> Self {
        Self {
            arc,
            root,
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn node(&self, idx: u32) -> Option<&StoryNode> {
        self.nodes.iter().find(|n| n.idx == idx)
    }

    pub fn node_mut(&mut self, idx: u32) -> Option<&mut StoryNode> {
        self.nodes.iter_mut().find(|n| n.idx == idx)
    }

    pub fn contains(&self, idx: u32) -> bool {
        self.node(idx).is_some()
    }

    /// Edges leaving `idx`, in stored order.
    pub fn outgoing(&self, idx: u32) -> impl Iterator<Item = &StoryEdge> {
        self.edges.iter().filter(move |e| e.from == idx)
    }

    /// Distinct successor ids in ascending order.
    pub fn successors(&self, idx: u32) -> Vec<u32> {
        self.outgoing(idx)
            .map(|e| e.to)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Nodes with no outgoing edge.
    pub fn endings(&self) -> Vec<u32> {
        let with_out: BTreeSet<u32> = self.edges.iter().map(|e| e.from).collect();
        self.nodes
            .iter()
            .map(|n| n.idx)
            .filter(|i| !with_out.contains(i))
            .collect()
    }

    /// Node ids in a topological order (ties by ascending id), or `Cycle`.
    ///
    /// Edges with a missing endpoint are ignored.
    pub fn topo_order(&self) -> Result<Vec<u32>, GraphError> {
        let ids: BTreeSet<u32> = self.nodes.iter().map(|n| n.idx).collect();
        let mut indeg: BTreeMap<u32, usize> = ids.iter().map(|&i| (i, 0)).collect();
        let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for e in &self.edges {
            if ids.contains(&e.from) && ids.contains(&e.to) {
                *indeg.get_mut(&e.to).unwrap() += 1;
                adj.entry(e.from).or_default().push(e.to);
            }
        }
        let mut ready: BTreeSet<u32> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&i, _)| i)
            .collect();
        let mut order = Vec::with_capacity(ids.len());
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &t in adj.get(&i).map(Vec::as_slice).unwrap_or_default() {
                let d = indeg.get_mut(&t).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(t);
                }
            }
        }
        if order.len() == ids.len() {
            Ok(order)
        } else {
            Err(GraphError::Cycle)
        }
    }

    /// Sets each node's `level_index` to its longest-path depth from a source.
    ///
    /// Leaves the graph untouched when it is cyclic.
    pub fn recompute_levels(&mut self) -> Result<(), GraphError> {
        let order = self.topo_order()?;
        let mut depth: BTreeMap<u32, u32> = order.iter().map(|&i| (i, 0)).collect();
        for &i in &order {
            let d = depth[&i];
            for e in self.edges.iter().filter(|e| e.from == i) {
                if let Some(t) = depth.get_mut(&e.to) {
                    *t = (*t).max(d + 1);
                }
            }
        }
        for n in &mut self.nodes {
            n.level_index = depth[&n.idx];
        }
        Ok(())
    }

    /// Smallest id not used by any node.
    pub fn next_free_idx(&self) -> u32 {
        self.nodes.iter().map(|n| n.idx + 1).max().unwrap_or(0)
    }

    /// Canonical JSON (pretty, stable field order, trailing newline).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("story graph serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Nodes sorted by `level_index`, ties by ascending `idx`.
pub fn linearize(g: &StoryGraph) -> Vec<&StoryNode> {
    let mut nodes: Vec<&StoryNode> = g.nodes.iter().collect();
    nodes.sort_by_key(|n| (n.level_index, n.idx));
    nodes
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::arc::ArcDirection::*;

    #[test]
    fn linearize_chain_and_diamond() {
        let g = chain(ArcKind::RagsToRiches, &[Rise, Rise, Rise]);
        let order: Vec<u32> = linearize(&g).iter().map(|n| n.idx).collect();
        assert_eq!(order, vec![0, 1, 2]);

        let d = diamond();
        let lin = linearize(&d);
        assert_eq!(
            lin.iter().map(|n| n.idx).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(lin[1].level_index, lin[2].level_index);
    }

    #[test]
    fn linearize_orders_by_level_before_id() {
        let mut g = labeled(ArcKind::None, &[None, None, None], &[(0, 2), (2, 1)]);
        g.recompute_levels().unwrap();
        let order: Vec<u32> = linearize(&g).iter().map(|n| n.idx).collect();
        assert_eq!(order, vec![0, 2, 1]);
    }

    #[test]
    fn seven_node_study_graph_linearizes_to_seven() {
        let g = chain(
            ArcKind::Cinderella,
            &[Rise, Rise, Rise, Fall, Fall, Rise, Rise],
        );
        assert_eq!(linearize(&g).len(), 7);
    }

    #[test]
    fn levels_use_longest_path() {
        let g = labeled(
            ArcKind::None,
            &[None, None, None, None],
            &[(0, 1), (1, 2), (0, 3), (2, 3)],
        );
        assert_eq!(g.node(3).unwrap().level_index, 3);
    }

    #[test]
    fn json_is_stable() {
        let g = diamond();
        let s = g.to_json();
        let back = StoryGraph::from_json(&s).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), s);
    }
}
