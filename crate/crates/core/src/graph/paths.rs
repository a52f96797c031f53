use serde::{Deserialize, Serialize};

use super::{GraphError, StoryGraph};

pub const DEFAULT_PATH_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<Vec<u32>>,
    /// More root-to-ending paths exist than were returned.
    pub truncated: bool,
}

/// All root-to-ending paths, depth-first with successors in ascending id order.
///
/// Parallel edges between the same pair yield a single path.
pub fn enumerate_paths(g: &StoryGraph, cap: usize) -> Result<PathSet, GraphError> {
    g.topo_order()?;
    if !g.contains(g.root) {
        return Err(GraphError::NotFound(g.root));
    }
    let mut paths = Vec::new();
    let mut truncated = false;
    let mut path = vec![g.root];
    let mut stack: Vec<(Vec<u32>, usize)> = vec![(existing_successors(g, g.root), 0)];

    while let Some((succ, next)) = stack.last_mut() {
        if succ.is_empty() {
            if paths.len() == cap {
                truncated = true;
                break;
            }
            paths.push(path.clone());
        }
        let child = succ.get(*next).copied();
        *next += 1;
        match child {
            Some(child) => {
                path.push(child);
                stack.push((existing_successors(g, child), 0));
            }
            None => {
                stack.pop();
                path.pop();
            }
        }
    }
    Ok(PathSet { paths, truncated })
}

fn existing_successors(g: &StoryGraph, idx: u32) -> Vec<u32> {
    g.successors(idx)
        .into_iter()
        .filter(|&t| g.contains(t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arc::ArcDirection::Rise;
    use crate::arc::ArcKind;
    use crate::graph::fixtures::*;

    #[test]
    fn chain_has_one_path() {
        let g = chain(ArcKind::RagsToRiches, &[Rise, Rise, Rise]);
        let p = enumerate_paths(&g, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(p.paths, vec![vec![0, 1, 2]]);
        assert!(!p.truncated);
    }

    #[test]
    fn diamond_paths() {
        let p = enumerate_paths(&diamond(), DEFAULT_PATH_CAP).unwrap();
        assert_eq!(p.paths, vec![vec![0, 1, 3], vec![0, 2, 3]]);
    }

    fn binary_tree(depth: u32) -> crate::graph::StoryGraph {
        let n = (1u32 << (depth + 1)) - 1;
        let labels = vec![None; n as usize];
        let edges: Vec<(u32, u32)> = (0..n)
            .filter(|i| 2 * i + 2 < n)
            .flat_map(|i| [(i, 2 * i + 1), (i, 2 * i + 2)])
            .collect();
        labeled(ArcKind::None, &labels, &edges)
    }

    /// Counts root-to-leaf paths by plain recursion over the edge list.
    fn count_paths_oracle(g: &crate::graph::StoryGraph, at: u32) -> usize {
        let kids: Vec<u32> = g
            .edges
            .iter()
            .filter(|e| e.from == at)
            .map(|e| e.to)
            .collect();
        if kids.is_empty() {
            1
        } else {
            kids.iter().map(|&k| count_paths_oracle(g, k)).sum()
        }
    }

    #[test]
    fn binary_tree_is_truncated_at_cap() {
        let g = binary_tree(10);
        assert_eq!(count_paths_oracle(&g, 0), 1024);
        let capped = enumerate_paths(&g, 100).unwrap();
        assert_eq!(capped.paths.len(), 100);
        assert!(capped.truncated);
        let full = enumerate_paths(&g, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(full.paths.len(), 1024);
        assert!(!full.truncated);
    }

    #[test]
    fn cyclic_graph_is_an_error() {
        let g = labeled(ArcKind::None, &[None, None], &[(0, 1), (1, 0)]);
        assert_eq!(enumerate_paths(&g, 10), Err(GraphError::Cycle));
    }

    #[test]
    fn parallel_edges_collapse() {
        let g = labeled(ArcKind::None, &[None, None], &[(0, 1), (0, 1)]);
        assert_eq!(enumerate_paths(&g, 10).unwrap().paths, vec![vec![0, 1]]);
    }
}
