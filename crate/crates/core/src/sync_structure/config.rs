//! Feasible SSW configurations.

use serde::{Deserialize, Serialize};

use crate::sync_structure::sets::BlackStartSets;
use crate::topology::{enumerate_simple_paths, BackboneGraph, BlockId};

/// Configuration of one SSW edge: open, or synchronizing a pair of BS blocks.
pub type SswConfig = Option<(BlockId, BlockId)>;

/// Feasible configurations per SSW edge, in the order of
/// [`BackboneGraph::ssw_edges`]. The first entry of every list is the open
/// state; pairs follow in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SswConfigSet {
    pub u_tg: bool,
    pub active: Vec<BlockId>,
    pub per_edge: Vec<Vec<SswConfig>>,
}

impl SswConfigSet {
    /// Number of configuration vectors in the Cartesian product.
    pub fn product_size(&self) -> usize {
        self.per_edge.iter().map(Vec::len).product()
    }

    /// Every configuration vector, odometer order with the last edge fastest.
    pub fn vectors(&self) -> impl Iterator<Item = Vec<SswConfig>> + '_ {
        let radix: Vec<usize> = self.per_edge.iter().map(Vec::len).collect();
        (0..self.product_size()).map(move |mut idx| {
            let mut v = vec![None; radix.len()];
            for e in (0..radix.len()).rev() {
                v[e] = self.per_edge[e][idx % radix[e]];
                idx /= radix[e];
            }
            v
        })
    }
}

/// For each SSW edge, the BS pairs joined by a simple path that crosses no
/// other BS block and no other SSW edge. Third BS blocks are excluded using
/// the full BS set, so an unavailable TG block still blocks a path.
pub fn feasible_configurations(g: &BackboneGraph, bs: &BlackStartSets, u_tg: bool) -> SswConfigSet {
    let active = bs.active(u_tg);
    let all_bs = bs.all();
    let mut per_edge: Vec<Vec<SswConfig>> = vec![vec![None]; g.ssw_edges.len()];
    for (i, &k) in active.iter().enumerate() {
        for &k2 in &active[i + 1..] {
            for path in enumerate_simple_paths(g, k, k2) {
                let crosses_bs = path.vertices[1..path.vertices.len() - 1].iter().any(|v| all_bs.contains(v));
                if crosses_bs {
                    continue;
                }
                let ssw_on_path: Vec<usize> = path.edges.iter().filter(|&&e| g.edges[e].ssw).copied().collect();
                if ssw_on_path.len() != 1 {
                    continue;
                }
                let pos = g.ssw_position(ssw_on_path[0]).expect("SSW edge is listed");
                if !per_edge[pos].contains(&Some((k, k2))) {
                    per_edge[pos].push(Some((k, k2)));
                }
            }
        }
    }
    for list in &mut per_edge {
        list[1..].sort();
    }
    SswConfigSet { u_tg, active, per_edge }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::backbone::tests::graph;

    #[test]
    fn direct_ssw_between_two_bess() {
        let g = graph(2, &[(0, 1, true)]);
        let bs = BlackStartSets { bess: vec![0, 1], tg: None };
        let c = feasible_configurations(&g, &bs, false);
        assert_eq!(c.per_edge, vec![vec![None, Some((0, 1))]]);
    }

    #[test]
    fn third_bs_block_on_every_path() {
        // 0 -ssw- 1 -esw- 2 with all three BS: the SSW only ever pairs 0 and 1.
        let g = graph(3, &[(0, 1, true), (1, 2, false)]);
        let bs = BlackStartSets { bess: vec![0, 1, 2], tg: None };
        let c = feasible_configurations(&g, &bs, false);
        assert_eq!(c.per_edge, vec![vec![None, Some((0, 1))]]);
        // 0 -esw- 1 -ssw- 2 with BS at 0 and 2 and 1 also BS: 0-2 blocked by 1.
        let g = graph(3, &[(0, 1, false), (1, 2, true)]);
        let bs = BlackStartSets { bess: vec![0, 2], tg: Some(1) };
        let c = feasible_configurations(&g, &bs, false);
        assert_eq!(c.per_edge, vec![vec![None]]);
    }

    #[test]
    fn tg_pairs_absent_when_unavailable() {
        let g = graph(3, &[(0, 1, true), (1, 2, true)]);
        let bs = BlackStartSets { bess: vec![1], tg: Some(0) };
        let on = feasible_configurations(&g, &bs, true);
        let off = feasible_configurations(&g, &bs, false);
        assert_eq!(on.per_edge[0], vec![None, Some((0, 1))]);
        assert_eq!(off.per_edge[0], vec![None]);
    }
}
