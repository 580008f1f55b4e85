//! System modes (partitions of the active BS set) and the mode catalogue.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dsu::Dsu;
use crate::sync_structure::config::{SswConfig, SswConfigSet};
use crate::sync_structure::sets::BlackStartSets;
use crate::topology::{BackboneGraph, BlockId};

/// Partition of a set of BS blocks. Parts are sorted internally and ordered
/// by their smallest member, so structural equality is partition equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub parts: Vec<Vec<BlockId>>,
}

impl Mode {
    pub fn from_parts(parts: impl IntoIterator<Item = Vec<BlockId>>) -> Self {
        let mut parts: Vec<Vec<BlockId>> = parts
            .into_iter()
            .filter(|p| !p.is_empty())
            .map(|mut p| {
                p.sort_unstable();
                p
            })
            .collect();
        parts.sort();
        Mode { parts }
    }

    pub fn singletons(blocks: &[BlockId]) -> Self {
        Mode::from_parts(blocks.iter().map(|&k| vec![k]))
    }

    /// Number of synchronized islands.
    pub fn class(&self) -> usize {
        self.parts.len()
    }

    /// Union of all parts, ascending.
    pub fn members(&self) -> Vec<BlockId> {
        let mut v: Vec<BlockId> = self.parts.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn same_part(&self, k: BlockId, k2: BlockId) -> bool {
        self.parts.iter().any(|p| p.contains(&k) && p.contains(&k2))
    }

    pub fn contains(&self, k: BlockId) -> bool {
        self.parts.iter().any(|p| p.contains(&k))
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{{")?;
            for (j, k) in p.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "k{k}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// Components of the virtual-edge graph over `active`.
pub fn mode_of(active: &[BlockId], configs: &[SswConfig]) -> Mode {
    let pos = |k: BlockId| active.binary_search(&k).ok();
    let mut dsu = Dsu::new(active.len());
    for (a, b) in configs.iter().flatten() {
        if let (Some(i), Some(j)) = (pos(*a), pos(*b)) {
            dsu.union(i, j);
        }
    }
    let mut groups: BTreeMap<usize, Vec<BlockId>> = BTreeMap::new();
    for (i, &k) in active.iter().enumerate() {
        groups.entry(dsu.find(i)).or_default().push(k);
    }
    Mode::from_parts(groups.into_values())
}

/// Image of [`mode_of`] over every configuration vector, with the number of
/// vectors realizing each mode. Sorted by the mode's natural order.
pub fn enumerate_modes(omega: &SswConfigSet) -> Vec<(Mode, usize)> {
    let mut counts: BTreeMap<Mode, usize> = BTreeMap::new();
    for v in omega.vectors() {
        *counts.entry(mode_of(&omega.active, &v)).or_default() += 1;
    }
    counts.into_iter().collect()
}

/// Modes grouped by class; every class from 1 to `max_class` gets a bucket.
pub fn modes_by_class(modes: &[Mode], max_class: usize) -> BTreeMap<usize, Vec<Mode>> {
    let mut out: BTreeMap<usize, Vec<Mode>> = (1..=max_class).map(|c| (c, Vec::new())).collect();
    for m in modes {
        out.entry(m.class()).or_default().push(m.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogueEntry {
    pub mode: Mode,
    pub class: usize,
    pub realizations: usize,
    /// Whether the mode's active set includes the TG block.
    pub tg_active: bool,
}

/// Union of the mode sets for both TG availability values. Entries are
/// ordered by class descending, TG-absent modes first, then by parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCatalogue {
    pub entries: Vec<CatalogueEntry>,
    /// Largest possible class, the size of the full BS set.
    pub max_class: usize,
    #[serde(skip)]
    index: HashMap<Mode, usize>,
}

impl ModeCatalogue {
    pub fn build(g: &BackboneGraph, bs: &BlackStartSets) -> Self {
        let flags: &[bool] = if bs.tg.is_some() { &[false, true] } else { &[false] };
        Self::build_for(g, bs, flags)
    }

    /// Catalogue restricted to the given TG availability flags.
    pub fn build_for(g: &BackboneGraph, bs: &BlackStartSets, flags: &[bool]) -> Self {
        let mut entries = Vec::new();
        for &u_tg in flags {
            let omega = super::config::feasible_configurations(g, bs, u_tg);
            for (mode, realizations) in enumerate_modes(&omega) {
                if entries.iter().any(|e: &CatalogueEntry| e.mode == mode) {
                    continue;
                }
                let tg_active = bs.tg.map_or(false, |k| mode.contains(k));
                entries.push(CatalogueEntry { class: mode.class(), mode, realizations, tg_active });
            }
        }
        entries.sort_by(|a, b| b.class.cmp(&a.class).then(a.tg_active.cmp(&b.tg_active)).then(a.mode.cmp(&b.mode)));
        Self::from_entries(entries, bs.all().len())
    }

    pub fn from_entries(entries: Vec<CatalogueEntry>, max_class: usize) -> Self {
        let index = entries.iter().enumerate().map(|(i, e)| (e.mode.clone(), i)).collect();
        ModeCatalogue { entries, max_class, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, m: &Mode) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn mode(&self, i: usize) -> &Mode {
        &self.entries[i].mode
    }

    /// Count of modes per class.
    pub fn class_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for e in &self.entries {
            *h.entry(e.class).or_default() += 1;
        }
        h
    }

    pub fn modes(&self) -> Vec<Mode> {
        self.entries.iter().map(|e| e.mode.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sync_structure::config::feasible_configurations;
    use crate::topology::backbone::tests::graph;

    #[test]
    fn single_ssw_two_modes() {
        let g = graph(2, &[(0, 1, true)]);
        let bs = BlackStartSets { bess: vec![0, 1], tg: None };
        let omega = feasible_configurations(&g, &bs, false);
        let modes = enumerate_modes(&omega);
        assert_eq!(modes.len(), 2);
        assert_eq!(modes[0], (Mode::singletons(&[0, 1]), 1));
        assert_eq!(modes[1], (Mode::from_parts([vec![0, 1]]), 1));
    }

    #[test]
    fn mode_of_components() {
        let m = mode_of(&[2, 5, 8], &[Some((2, 8)), Some((5, 8)), None]);
        assert_eq!(m, Mode::from_parts([vec![2, 5, 8]]));
        assert_eq!(m.class(), 1);
        let m = mode_of(&[0, 2, 5, 8], &[None, None]);
        assert_eq!(m.class(), 4);
    }

    #[test]
    fn class_buckets_sum() {
        let ms = vec![Mode::singletons(&[1, 2]), Mode::from_parts([vec![1, 2]])];
        let b = modes_by_class(&ms, 2);
        assert_eq!(b[&1].len() + b[&2].len(), 2);
        let b = modes_by_class(&ms[..1], 2);
        assert_eq!(b.values().filter(|v| !v.is_empty()).count(), 1);
    }

    #[test]
    fn display_lists_parts() {
        assert_eq!(Mode::from_parts([vec![5, 2], vec![0]]).to_string(), "{{k0}, {k2,k5}}");
    }
}
