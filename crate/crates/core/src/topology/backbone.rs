//! Backbone graph over bus blocks and simple-path enumeration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::topology::feeder::{Feeder, LineClass, LineIdx};
use crate::topology::partition::{BlockId, BlockPartition};

/// Edge between two blocks induced by one or more switchable lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneEdge {
    /// Lower block id.
    pub a: BlockId,
    /// Higher block id.
    pub b: BlockId,
    /// Originating switchable lines, ascending.
    pub lines: Vec<LineIdx>,
    /// True when at least one originating line carries an SSW.
    pub ssw: bool,
}

impl BackboneEdge {
    pub fn other(&self, k: BlockId) -> BlockId {
        if k == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn touches(&self, k: BlockId) -> bool {
        self.a == k || self.b == k
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneGraph {
    pub n_blocks: usize,
    /// Edges sorted by `(a, b)`.
    pub edges: Vec<BackboneEdge>,
    /// Indices into `edges` of SSW edges, ascending.
    pub ssw_edges: Vec<usize>,
    /// Per block: `(neighbour, edge index)` sorted by neighbour.
    pub adjacency: Vec<Vec<(BlockId, usize)>>,
}

impl BackboneGraph {
    pub fn edge_between(&self, k: BlockId, k2: BlockId) -> Option<usize> {
        self.adjacency.get(k)?.iter().find(|(n, _)| *n == k2).map(|(_, e)| *e)
    }

    pub fn neighbours(&self, k: BlockId) -> impl Iterator<Item = BlockId> + '_ {
        self.adjacency[k].iter().map(|(n, _)| *n)
    }

    /// Position of an edge in `ssw_edges`, if it is an SSW edge.
    pub fn ssw_position(&self, edge: usize) -> Option<usize> {
        self.ssw_edges.binary_search(&edge).ok()
    }
}

/// Builds the block graph; parallel switchable lines between one block pair
/// collapse into a single edge that keeps every line id.
pub fn build_backbone(p: &BlockPartition, f: &Feeder) -> BackboneGraph {
    let mut map: BTreeMap<(BlockId, BlockId), (Vec<LineIdx>, bool)> = BTreeMap::new();
    for (i, l) in f.lines.iter().enumerate() {
        if !l.class.is_switchable() {
            continue;
        }
        let (x, y) = (p.block_of[l.from.0], p.block_of[l.to.0]);
        let key = (x.min(y), x.max(y));
        let entry = map.entry(key).or_default();
        entry.0.push(LineIdx(i));
        entry.1 |= l.class == LineClass::Ssw;
    }
    let edges: Vec<BackboneEdge> =
        map.into_iter().map(|((a, b), (lines, ssw))| BackboneEdge { a, b, lines, ssw }).collect();
    let n = p.len();
    let mut adjacency = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        adjacency[e.a].push((e.b, i));
        adjacency[e.b].push((e.a, i));
    }
    for adj in &mut adjacency {
        adj.sort();
    }
    let ssw_edges = edges.iter().enumerate().filter(|(_, e)| e.ssw).map(|(i, _)| i).collect();
    BackboneGraph { n_blocks: n, edges, ssw_edges, adjacency }
}

/// Simple path as a vertex sequence plus the edges it traverses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub vertices: Vec<BlockId>,
    pub edges: Vec<usize>,
}

impl Path {
    /// Number of edges.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// All simple paths from `k` to `k2`, in lexicographic order of their vertex
/// sequences.
pub fn enumerate_simple_paths(g: &BackboneGraph, k: BlockId, k2: BlockId) -> Vec<Path> {
    let mut out = Vec::new();
    if k == k2 || k >= g.n_blocks || k2 >= g.n_blocks {
        return out;
    }
    let mut visited = vec![false; g.n_blocks];
    let mut verts = vec![k];
    let mut edges = Vec::new();
    visited[k] = true;
    dfs(g, k2, &mut visited, &mut verts, &mut edges, &mut out);
    out
}

fn dfs(
    g: &BackboneGraph,
    target: BlockId,
    visited: &mut [bool],
    verts: &mut Vec<BlockId>,
    edges: &mut Vec<usize>,
    out: &mut Vec<Path>,
) {
    let cur = *verts.last().expect("path never empty");
    for &(n, e) in &g.adjacency[cur] {
        if visited[n] {
            continue;
        }
        verts.push(n);
        edges.push(e);
        if n == target {
            out.push(Path { vertices: verts.clone(), edges: edges.clone() });
        } else {
            visited[n] = true;
            dfs(g, target, visited, verts, edges, out);
            visited[n] = false;
        }
        verts.pop();
        edges.pop();
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Graph from an explicit edge list; used by unit tests here and elsewhere.
    pub(crate) fn graph(n: usize, edges: &[(usize, usize, bool)]) -> BackboneGraph {
        let mut es: Vec<BackboneEdge> = edges
            .iter()
            .enumerate()
            .map(|(i, &(a, b, ssw))| BackboneEdge { a: a.min(b), b: a.max(b), lines: vec![LineIdx(i)], ssw })
            .collect();
        es.sort_by_key(|e| (e.a, e.b));
        let mut adjacency = vec![Vec::new(); n];
        for (i, e) in es.iter().enumerate() {
            adjacency[e.a].push((e.b, i));
            adjacency[e.b].push((e.a, i));
        }
        for a in &mut adjacency {
            a.sort();
        }
        let ssw_edges = es.iter().enumerate().filter(|(_, e)| e.ssw).map(|(i, _)| i).collect();
        BackboneGraph { n_blocks: n, edges: es, ssw_edges, adjacency }
    }

    #[test]
    fn chain_has_one_path() {
        let g = graph(3, &[(0, 1, false), (1, 2, false)]);
        let ps = enumerate_simple_paths(&g, 0, 2);
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].vertices, vec![0, 1, 2]);
        assert_eq!(ps[0].len(), 2);
    }

    #[test]
    fn four_cycle_opposite_corners() {
        let g = graph(4, &[(0, 1, false), (1, 2, false), (2, 3, false), (3, 0, false)]);
        let ps = enumerate_simple_paths(&g, 0, 2);
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].vertices, vec![0, 1, 2]);
        assert_eq!(ps[1].vertices, vec![0, 3, 2]);
    }

    #[test]
    fn disconnected_pair_is_empty() {
        let g = graph(4, &[(0, 1, false), (2, 3, false)]);
        assert!(enumerate_simple_paths(&g, 0, 3).is_empty());
    }
}
