//! Block-level connectivity of a step.

use crate::dsu::Dsu;
use crate::network::{Network, Switch};
use crate::plan::model::StepRecord;
use crate::topology::BlockId;

/// Component label per block: the lowest block id of its energized
/// component, or `None` for dead blocks.
pub fn block_components(net: &Network, u_bk: &[bool], closed: impl Fn(Switch) -> bool) -> Vec<Option<BlockId>> {
    let n = net.n_blocks();
    let mut dsu = Dsu::new(n);
    for (i, l) in net.esw.iter().enumerate() {
        if closed(Switch::Esw(i)) {
            let (a, b) = net.line_blocks(*l);
            if u_bk[a] && u_bk[b] {
                dsu.union(a, b);
            }
        }
    }
    for (i, l) in net.ssw.iter().enumerate() {
        if closed(Switch::Ssw(i)) {
            let (a, b) = net.line_blocks(*l);
            if u_bk[a] && u_bk[b] {
                dsu.union(a, b);
            }
        }
    }
    (0..n).map(|k| u_bk[k].then(|| dsu.find(k))).collect()
}

/// Islands at the step: every closed switch counts.
pub fn islands(net: &Network, rec: &StepRecord) -> Vec<Option<BlockId>> {
    block_components(net, &rec.u_bk, |s| match s {
        Switch::Esw(i) => rec.u_esw[i],
        Switch::Ssw(i) => rec.u_ssw[i],
    })
}

/// Pre-synchronization groups: SSWs closed at this step count as open.
pub fn groups(net: &Network, prev: Option<&StepRecord>, rec: &StepRecord) -> Vec<Option<BlockId>> {
    block_components(net, &rec.u_bk, |s| match s {
        Switch::Esw(i) => rec.u_esw[i],
        Switch::Ssw(i) => rec.u_ssw[i] && prev.map_or(false, |p| p.u_ssw[i]),
    })
}

/// Island co-membership of every BS pair, in pair order.
pub fn sync_from_islands(net: &Network, islands: &[Option<BlockId>]) -> Vec<bool> {
    let bs = &net.bs_blocks;
    let mut out = Vec::with_capacity(net.n_pairs());
    for i in 0..bs.len() {
        for j in i + 1..bs.len() {
            out.push(matches!((islands[bs[i]], islands[bs[j]]), (Some(a), Some(b)) if a == b));
        }
    }
    out
}
