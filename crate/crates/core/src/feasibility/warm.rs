//! Warm starts built from resolved outputs.

use crate::dsu::Dsu;
use crate::error::{Error, Result};
use crate::feasibility::resolve::{FeasibleOutputs, ResolveContext};
use crate::network::Network;
use crate::optimizer::warm::{PartialAssignment, WarmStrategy};
use crate::sync_structure::{Mode, SyncMatrix};

/// Result of extraction; `degraded` explains why only SSW statuses were kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub warm: PartialAssignment,
    pub degraded: Option<String>,
}

/// Partition of the active BS blocks per step, from replaying the accepted
/// closures as unions of their endpoint labels.
pub fn replay_modes(net: &Network, ctx: &ResolveContext, out: &FeasibleOutputs) -> Vec<Mode> {
    let mut dsu = Dsu::new(ctx.n_labels());
    let mut modes = Vec::with_capacity(out.labels.len());
    for t in 0..out.labels.len() {
        if t > 0 {
            for (e, &acc) in out.sync[t].iter().enumerate() {
                if acc {
                    let (a, b) = ctx.ssw_ends[e];
                    dsu.union(out.labels[t - 1][a], out.labels[t - 1][b]);
                }
            }
        }
        let active = net.bs.active(ctx.tg_available[t]);
        let mut parts: Vec<(usize, Vec<usize>)> = Vec::new();
        for k in active {
            let root = dsu.find(ctx.label_of(k).expect("active blocks are roots"));
            match parts.iter_mut().find(|(r, _)| *r == root) {
                Some((_, p)) => p.push(k),
                None => parts.push((root, vec![k])),
            }
        }
        modes.push(Mode::from_parts(parts.into_iter().map(|(_, p)| p)));
    }
    modes
}

/// SSW statuses accumulate the accepted closures; sync indicators, modes and
/// classes come from the replayed partition. A partition missing from the
/// catalogue leaves only the SSW statuses.
pub fn extract_warm_start(net: &Network, ctx: &ResolveContext, out: &FeasibleOutputs) -> Result<Extracted> {
    if out.labels.len() > ctx.tg_available.len() {
        return Err(Error::Dimension("resolved outputs exceed the scenario horizon".into()));
    }
    let u_ssw = out.cumulative_sync();
    let modes = replay_modes(net, ctx, out);
    let mut u_m = Vec::with_capacity(modes.len());
    for (t, m) in modes.iter().enumerate() {
        match net.catalogue.index_of(m) {
            Some(i) => u_m.push(i),
            None => {
                let warm = PartialAssignment { strategy: WarmStrategy::Caws, u_ssw, u_sync: None, u_m: None, u_c: None };
                return Ok(Extracted { warm, degraded: Some(format!("mode {m} at step {t} is not in the catalogue")) });
            }
        }
    }
    let u_sync = modes.iter().map(|m| SyncMatrix::from_mode(net.bs_blocks.clone(), m).bits).collect();
    let u_c = modes.iter().map(|m| m.class()).collect();
    let warm = PartialAssignment { strategy: WarmStrategy::Caws, u_ssw, u_sync: Some(u_sync), u_m: Some(u_m), u_c: Some(u_c) };
    Ok(Extracted { warm, degraded: None })
}
