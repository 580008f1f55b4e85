//! Synchronization indicator matrices and the safe-transition test.

use serde::{Deserialize, Serialize};

use crate::sync_structure::mode::Mode;
use crate::topology::BlockId;

/// Index of the unordered pair `{i, j}` (i != j) among `n` items.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    debug_assert!(b < n && a != b);
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// Symmetric pairwise synchronization indicators over an ordered block list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncMatrix {
    pub blocks: Vec<BlockId>,
    /// Upper-triangle indicators in [`pair_index`] order.
    pub bits: Vec<bool>,
}

impl SyncMatrix {
    pub fn zeros(blocks: Vec<BlockId>) -> Self {
        let n = blocks.len();
        SyncMatrix { blocks, bits: vec![false; n * n.saturating_sub(1) / 2] }
    }

    /// Indicators implied by a partition: same part gives 1.
    pub fn from_mode(blocks: Vec<BlockId>, mode: &Mode) -> Self {
        let mut m = SyncMatrix::zeros(blocks);
        let n = m.blocks.len();
        for i in 0..n {
            for j in i + 1..n {
                m.bits[pair_index(n, i, j)] = mode.same_part(m.blocks[i], m.blocks[j]);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        i != j && self.bits[pair_index(self.n(), i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let n = self.n();
        self.bits[pair_index(n, i, j)] = v;
    }

    fn val(&self, i: usize, j: usize) -> i32 {
        self.get(i, j) as i32
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyVerdict {
    /// Pairs whose indicator dropped from 1 to 0.
    pub monotonicity: Vec<(BlockId, BlockId)>,
    /// Triples `(k, k', k'')` where `k` newly synchronized with both `k'` and
    /// `k''` although those two were not synchronized before.
    pub violations: Vec<(BlockId, BlockId, BlockId)>,
}

impl SafetyVerdict {
    pub fn is_safe(&self) -> bool {
        self.monotonicity.is_empty() && self.violations.is_empty()
    }
}

/// Evaluates `d(k,k') + d(k,k'') - prev(k',k'') <= 1` over every triple of
/// distinct blocks, where `d` is the step increment.
pub fn check_transition_safety(prev: &SyncMatrix, next: &SyncMatrix) -> SafetyVerdict {
    assert_eq!(prev.blocks, next.blocks, "sync matrices over different block sets");
    let n = prev.n();
    let mut verdict = SafetyVerdict::default();
    for i in 0..n {
        for j in i + 1..n {
            if prev.get(i, j) && !next.get(i, j) {
                verdict.monotonicity.push((prev.blocks[i], prev.blocks[j]));
            }
        }
    }
    for k in 0..n {
        for a in 0..n {
            for b in a + 1..n {
                if a == k || b == k {
                    continue;
                }
                let lhs = (next.val(k, a) - prev.val(k, a)) + (next.val(k, b) - prev.val(k, b)) - prev.val(a, b);
                if lhs > 1 {
                    verdict.violations.push((prev.blocks[k], prev.blocks[a], prev.blocks[b]));
                }
            }
        }
    }
    verdict
}
