use std::collections::BTreeSet;

use proptest::prelude::*;
use ssdmgf::dsu::Dsu;
use ssdmgf::fixtures::{replica_feeder, toy_feeder_text};
use ssdmgf::sync_structure::{
    check_transition_safety, feasible_configurations, mode_of, BlackStartSets, Mode, ModeCatalogue, SyncMatrix,
};
use ssdmgf::topology::{
    build_backbone, enumerate_simple_paths, load_feeder, partition_blocks, BackboneEdge, BackboneGraph, LineClass,
};

#[test]
fn replica_shape() {
    let f = replica_feeder();
    let p = partition_blocks(&f);
    assert_eq!(p.len(), 12);
    assert_eq!(f.lines_of_class(LineClass::Esw).count(), 9);
    assert_eq!(f.lines_of_class(LineClass::Ssw).count(), 3);
    let g = build_backbone(&p, &f);
    assert_eq!(g.edges.len(), 12);
    assert_eq!(g.ssw_edges.len(), 3);
    let bs = BlackStartSets::from_feeder(&f, &p);
    assert_eq!(bs.bess, vec![2, 5, 8]);
    assert_eq!(bs.tg, Some(0));
    assert_eq!(ModeCatalogue::build(&g, &bs).len(), 15);
}

/// Graph on `n` vertices from an edge list, built the same way the backbone
/// builder lays it out.
fn graph(n: usize, pairs: &[(usize, usize)]) -> BackboneGraph {
    let set: BTreeSet<(usize, usize)> = pairs.iter().filter(|(a, b)| a != b).map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let edges: Vec<BackboneEdge> = set.into_iter().map(|(a, b)| BackboneEdge { a, b, lines: vec![], ssw: false }).collect();
    let mut adjacency = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        adjacency[e.a].push((e.b, i));
        adjacency[e.b].push((e.a, i));
    }
    for a in &mut adjacency {
        a.sort();
    }
    BackboneGraph { n_blocks: n, edges, ssw_edges: vec![], adjacency }
}

/// Edge subsets forming a simple path from `s` to `t`, by checking degrees
/// and connectivity of every subset.
fn paths_by_subsets(g: &BackboneGraph, s: usize, t: usize) -> BTreeSet<Vec<usize>> {
    let m = g.edges.len();
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << m) {
        let chosen: Vec<usize> = (0..m).filter(|&e| mask >> e & 1 == 1).collect();
        let mut deg = vec![0; g.n_blocks];
        let mut dsu = Dsu::new(g.n_blocks);
        let mut acyclic = true;
        for &e in &chosen {
            let (a, b) = (g.edges[e].a, g.edges[e].b);
            deg[a] += 1;
            deg[b] += 1;
            acyclic &= dsu.union(a, b);
        }
        let ends_ok = deg[s] == 1 && deg[t] == 1;
        let inner_ok = (0..g.n_blocks).all(|v| v == s || v == t || deg[v] == 0 || deg[v] == 2);
        // An acyclic subgraph with these degrees is a single s-t path exactly
        // when it has one component with edges.
        let touched: Vec<usize> = (0..g.n_blocks).filter(|&v| deg[v] > 0).collect();
        let one = touched.iter().all(|&v| dsu.find(v) == dsu.find(s));
        if acyclic && ends_ok && inner_ok && one {
            out.insert(chosen);
        }
    }
    out
}

fn edge_pairs(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..=12)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simple_paths_match_subset_oracle((n, pairs) in edge_pairs(8), s in 0usize..8, t in 0usize..8) {
        let g = graph(n, &pairs);
        let (s, t) = (s % n, t % n);
        prop_assume!(s != t);
        let got: BTreeSet<Vec<usize>> = enumerate_simple_paths(&g, s, t)
            .into_iter()
            .map(|p| {
                prop_assert_eq!(p.vertices.first(), Some(&s));
                prop_assert_eq!(p.vertices.last(), Some(&t));
                let mut e = p.edges.clone();
                e.sort();
                Ok(e)
            })
            .collect::<Result<_, _>>()?;
        prop_assert_eq!(got, paths_by_subsets(&g, s, t));
    }

    #[test]
    fn repartition_without_switches_is_identical(seed in 0u64..500, blocks in 2usize..6) {
        let f = load_feeder(&toy_feeder_text(seed, blocks)).unwrap();
        let p = partition_blocks(&f);
        let mut stripped = f.clone();
        stripped.lines.retain(|l| !l.class.is_switchable());
        let q = partition_blocks(&stripped);
        prop_assert_eq!(&p.block_of, &q.block_of);
        prop_assert_eq!(&p.buses, &q.buses);
    }

    #[test]
    fn backbone_edges_have_originating_lines(seed in 0u64..500, blocks in 2usize..6) {
        let f = load_feeder(&toy_feeder_text(seed, blocks)).unwrap();
        let p = partition_blocks(&f);
        let g = build_backbone(&p, &f);
        for e in &g.edges {
            prop_assert!(!e.lines.is_empty());
            for &l in &e.lines {
                let line = f.line(l);
                let ends = (p.block_of[line.from.0], p.block_of[line.to.0]);
                prop_assert!(ends == (e.a, e.b) || ends == (e.b, e.a));
            }
        }
    }

    #[test]
    fn mode_of_ignores_edge_order(n in 2usize..7, raw in prop::collection::vec((0usize..7, 0usize..7, any::<bool>()), 0..6), perm_seed in any::<u64>()) {
        let active: Vec<usize> = (0..n).map(|i| 2 * i).collect();
        let configs: Vec<Option<(usize, usize)>> =
            raw.iter().map(|&(a, b, open)| (!open).then(|| (2 * (a % n), 2 * (b % n)))).collect();
        let m = mode_of(&active, &configs);
        let mut shuffled = configs.clone();
        let len = shuffled.len();
        for i in (1..len).rev() {
            shuffled.swap(i, (perm_seed as usize ^ i.wrapping_mul(2654435761)) % (i + 1));
        }
        prop_assert_eq!(mode_of(&active, &shuffled), m.clone());

        // Class equals the component count of the virtual-edge graph.
        let mut comp: Vec<usize> = (0..n).collect();
        loop {
            let mut changed = false;
            for &(a, b) in configs.iter().flatten() {
                let (i, j) = (a / 2, b / 2);
                let lo = comp[i].min(comp[j]);
                if comp[i] != lo || comp[j] != lo {
                    comp[i] = lo;
                    comp[j] = lo;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let distinct: BTreeSet<usize> = comp.into_iter().collect();
        prop_assert_eq!(m.class(), distinct.len());
    }
}

#[test]
fn every_realization_maps_into_the_catalogue() {
    let f = replica_feeder();
    let p = partition_blocks(&f);
    let g = build_backbone(&p, &f);
    let bs = BlackStartSets::from_feeder(&f, &p);
    let cat = ModeCatalogue::build(&g, &bs);
    for u_tg in [false, true] {
        let omega = feasible_configurations(&g, &bs, u_tg);
        let mut total = 0;
        for v in omega.vectors() {
            assert!(cat.index_of(&mode_of(&omega.active, &v)).is_some());
            total += 1;
        }
        let realized: usize = ModeCatalogue::build_for(&g, &bs, &[u_tg]).entries.iter().map(|e| e.realizations).sum();
        assert_eq!(total, realized);
    }
}

/// Every set partition of `0..n`, as block labels.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &out {
            let used = p.iter().max().map_or(0, |m| m + 1);
            for l in 0..=used {
                let mut q = p.clone();
                q.push(l);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn matrix(blocks: &[usize], labels: &[usize]) -> SyncMatrix {
    let parts: Vec<Vec<usize>> = (0..=*labels.iter().max().unwrap())
        .map(|l| blocks.iter().zip(labels).filter(|(_, &x)| x == l).map(|(&k, _)| k).collect())
        .collect();
    SyncMatrix::from_mode(blocks.to_vec(), &Mode::from_parts(parts))
}

#[test]
fn safety_matches_merge_count_oracle_exhaustively() {
    for n in 2..=6 {
        let blocks: Vec<usize> = (0..n).map(|i| 3 * i + 1).collect();
        for prev in set_partitions(n) {
            let parts = prev.iter().max().unwrap() + 1;
            // Coarsenings: partitions of the previous parts.
            for merge in set_partitions(parts) {
                let next: Vec<usize> = prev.iter().map(|&l| merge[l]).collect();
                let mut merged = vec![0usize; parts];
                for &m in &merge {
                    merged[m] += 1;
                }
                let safe = merged.iter().all(|&c| c <= 2);
                let v = check_transition_safety(&matrix(&blocks, &prev), &matrix(&blocks, &next));
                assert_eq!(v.is_safe(), safe, "n {n} prev {prev:?} next {next:?}");
            }
        }
    }
}
