use serde::{Deserialize, Serialize};

use crate::topology::{BlockId, BlockPartition, Feeder};

/// Blocks holding black-start sources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlackStartSets {
    /// BESS blocks, ascending.
    pub bess: Vec<BlockId>,
    /// TG block, if the feeder has a TG attachment.
    pub tg: Option<BlockId>,
}

impl BlackStartSets {
    pub fn from_feeder(f: &Feeder, p: &BlockPartition) -> Self {
        let mut bess: Vec<BlockId> = f.bess.iter().map(|b| p.block_of[b.bus.0]).collect();
        bess.sort_unstable();
        bess.dedup();
        BlackStartSets { bess, tg: f.tg.as_ref().map(|t| p.block_of[t.bus.0]) }
    }

    /// Every BS block regardless of TG availability, ascending.
    pub fn all(&self) -> Vec<BlockId> {
        let mut v = self.bess.clone();
        v.extend(self.tg);
        v.sort_unstable();
        v
    }

    /// Active BS blocks for a TG availability flag, ascending.
    pub fn active(&self, u_tg: bool) -> Vec<BlockId> {
        let mut v = self.bess.clone();
        if u_tg {
            v.extend(self.tg);
        }
        v.sort_unstable();
        v
    }

    pub fn is_bs(&self, k: BlockId) -> bool {
        self.tg == Some(k) || self.bess.binary_search(&k).is_ok()
    }

    pub fn is_tg(&self, k: BlockId) -> bool {
        self.tg == Some(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn active_set_shrinks_by_tg() {
        let s = BlackStartSets { bess: vec![2, 5, 8], tg: Some(0) };
        assert_eq!(s.active(true), vec![0, 2, 5, 8]);
        assert_eq!(s.active(false), vec![2, 5, 8]);
        assert_eq!(s.all().len() - s.active(false).len(), 1);
        assert!(s.is_tg(0) && !s.is_tg(2) && s.is_bs(8) && !s.is_bs(1));
    }
}
