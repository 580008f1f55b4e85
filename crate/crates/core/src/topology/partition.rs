//! Bus blocks: connected components over non-switchable lines.

use serde::{Deserialize, Serialize};

use crate::dsu::Dsu;
use crate::error::FeederError;
use crate::topology::feeder::{BusIdx, Feeder, LineClass, LineIdx};

pub type BlockId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    /// Block of every bus, indexed by [`BusIdx`].
    pub block_of: Vec<BlockId>,
    /// Buses of each block, ascending.
    pub buses: Vec<Vec<BusIdx>>,
    /// Non-switchable lines inside each block.
    pub internal_lines: Vec<Vec<LineIdx>>,
    /// ESW lines incident to each block.
    pub esw_lines: Vec<Vec<LineIdx>>,
    /// SSW lines incident to each block.
    pub ssw_lines: Vec<Vec<LineIdx>>,
}

impl BlockPartition {
    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn block_of_bus(&self, b: BusIdx) -> BlockId {
        self.block_of[b.0]
    }
}

/// Components of the graph of buses and non-switchable lines. Blocks are
/// numbered by their lowest bus id, which equals the lowest bus index since
/// buses are sorted.
pub fn partition_blocks(f: &Feeder) -> BlockPartition {
    let n = f.buses.len();
    let mut dsu = Dsu::new(n);
    for l in &f.lines {
        if l.class == LineClass::Ln {
            dsu.union(l.from.0, l.to.0);
        }
    }
    let mut block_of_root = vec![usize::MAX; n];
    let mut block_of = vec![0; n];
    let mut buses: Vec<Vec<BusIdx>> = Vec::new();
    for b in 0..n {
        let r = dsu.find(b);
        if block_of_root[r] == usize::MAX {
            block_of_root[r] = buses.len();
            buses.push(Vec::new());
        }
        block_of[b] = block_of_root[r];
        buses[block_of[b]].push(BusIdx(b));
    }
    let k = buses.len();
    let mut internal_lines = vec![Vec::new(); k];
    let mut esw_lines = vec![Vec::new(); k];
    let mut ssw_lines = vec![Vec::new(); k];
    for (i, l) in f.lines.iter().enumerate() {
        let (a, b) = (block_of[l.from.0], block_of[l.to.0]);
        match l.class {
            LineClass::Ln => internal_lines[a].push(LineIdx(i)),
            LineClass::Esw => {
                esw_lines[a].push(LineIdx(i));
                if b != a {
                    esw_lines[b].push(LineIdx(i));
                }
            }
            LineClass::Ssw => {
                ssw_lines[a].push(LineIdx(i));
                if b != a {
                    ssw_lines[b].push(LineIdx(i));
                }
            }
        }
    }
    BlockPartition { block_of, buses, internal_lines, esw_lines, ssw_lines }
}

/// Checks that need the partition: no switchable line inside a block, at most
/// one BESS per block, and no BESS in the TG block.
pub(crate) fn check_block_invariants(f: &Feeder) -> Result<(), FeederError> {
    let p = partition_blocks(f);
    for l in &f.lines {
        if l.class.is_switchable() && p.block_of[l.from.0] == p.block_of[l.to.0] {
            return Err(FeederError::Invalid(format!(
                "switchable line '{}' joins buses {} and {} of the same block",
                l.id,
                f.buses[l.from.0].id,
                f.buses[l.to.0].id
            )));
        }
    }
    let mut bess_blocks = std::collections::BTreeSet::new();
    for b in &f.bess {
        let k = p.block_of[b.bus.0];
        if !bess_blocks.insert(k) {
            return Err(FeederError::Invalid(format!("block containing bus {} holds more than one BESS", f.buses[b.bus.0].id)));
        }
    }
    if let Some(tg) = &f.tg {
        if bess_blocks.contains(&p.block_of[tg.bus.0]) {
            return Err(FeederError::Invalid("the TG block must not also hold a BESS".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::feeder::load_feeder;

    const Z: &str = "0,0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0,0, 1,1,1, 1,1,1";

    fn doc(lines: &[(&str, u32, u32, &str)], nbus: u32) -> String {
        let mut s = String::from("[buses]\n");
        for b in 1..=nbus {
            s.push_str(&format!("{b}, abc\n"));
        }
        s.push_str("[lines]\n");
        for (id, a, b, class) in lines {
            s.push_str(&format!("{id}, {a}, {b}, abc, {class}, {Z}\n"));
        }
        s
    }

    #[test]
    fn no_switches_single_block() {
        let f = load_feeder(&doc(&[("a", 1, 2, "LN"), ("b", 2, 3, "LN")], 3)).unwrap();
        let p = partition_blocks(&f);
        assert_eq!(p.len(), 1);
        assert_eq!(p.buses[0].len(), 3);
    }

    #[test]
    fn esw_only_two_singletons() {
        let f = load_feeder(&doc(&[("a", 1, 2, "ESW")], 2)).unwrap();
        let p = partition_blocks(&f);
        assert_eq!(p.len(), 2);
        assert_eq!(p.esw_lines[0], vec![LineIdx(0)]);
        assert_eq!(p.esw_lines[1], vec![LineIdx(0)]);
    }

    #[test]
    fn block_numbering_follows_lowest_bus() {
        let f = load_feeder(&doc(&[("a", 3, 4, "LN"), ("b", 1, 3, "ESW"), ("c", 2, 4, "ESW")], 4)).unwrap();
        let p = partition_blocks(&f);
        assert_eq!(p.block_of, vec![0, 1, 2, 2]);
    }

    #[test]
    fn ssw_inside_block_rejected() {
        let d = doc(&[("a", 1, 2, "LN"), ("b", 2, 3, "LN"), ("s", 1, 3, "SSW")], 3);
        assert!(matches!(load_feeder(&d), Err(FeederError::Invalid(m)) if m.contains("same block")));
    }
}
