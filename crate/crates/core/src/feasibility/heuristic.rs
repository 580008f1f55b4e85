//! Bundled logit provider scoring labels by switching distance and closures
//! by demand pressure.

use std::collections::VecDeque;

use crate::feasibility::logits::Logits;
use crate::feasibility::resolve::ResolveContext;
use crate::network::Network;
use crate::scenario::Scenario;
use crate::topology::LoadClass;

/// Logit scale: one ESW hop is worth this much.
const HOP: f64 = 2.0;

/// ESW hop distance from `src` to every block, avoiding the damaged block.
fn hops(net: &Network, src: usize, damaged: Option<usize>) -> Vec<Option<usize>> {
    let mut dist = vec![None; net.n_blocks()];
    dist[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(k) = q.pop_front() {
        for &l in &net.partition.esw_lines[k] {
            let (a, b) = net.line_blocks(l);
            let n = if a == k { b } else { a };
            if dist[n].is_none() && Some(n) != damaged {
                dist[n] = Some(dist[k].unwrap() + 1);
                q.push_back(n);
            }
        }
    }
    dist
}

/// A block leans towards the nearest source it can reach by the current
/// step and towards dead before that; an SSW leans towards closing once both
/// ends should be energized, more so when the combined demand is high
/// relative to BESS capacity.
pub fn heuristic_logits(net: &Network, sc: &Scenario, ctx: &ResolveContext) -> Logits {
    let dims = ctx.dims();
    let mut z = Logits::zeros(dims);
    let dist: Vec<Vec<Option<usize>>> = ctx.roots.iter().map(|&r| hops(net, r, sc.damaged)).collect();
    let tg_return = |r: usize| -> usize {
        if net.bs.tg == Some(r) {
            sc.u_tg.iter().position(|&u| u).unwrap_or(usize::MAX / 2)
        } else {
            0
        }
    };
    let reach = |k: usize| -> Option<usize> {
        (0..ctx.roots.len()).filter_map(|i| dist[i][k].map(|d| d + tg_return(ctx.roots[i]))).min()
    };
    let demand: f64 = net.feeder.loads.iter().filter(|l| l.class == LoadClass::Cl).map(|l| l.p_nom.iter().sum::<f64>()).sum();
    let rating: f64 = net.feeder.bess.iter().map(|b| b.s_nom).sum::<f64>().max(1e-9);
    let pressure = demand / rating;
    for t in 0..dims.t {
        for k in 0..dims.k {
            let row = z.root_at_mut(t, k);
            let earliest = reach(k);
            row[0] = match earliest {
                Some(e) => HOP * (e as f64 - t as f64),
                None => 10.0 * HOP,
            };
            for (i, &r) in ctx.roots.iter().enumerate() {
                row[i + 1] = match dist[i][k] {
                    Some(d) if t >= tg_return(r) => -HOP * d as f64,
                    _ => -10.0 * HOP,
                };
            }
        }
        for (e, &(a, b)) in ctx.ssw_ends.iter().enumerate() {
            let ready = match (reach(a), reach(b)) {
                (Some(x), Some(y)) => x.max(y) as f64 + 1.0,
                _ => f64::INFINITY,
            };
            z.sync_at_mut(t)[e] = if ready.is_finite() { (t as f64 - ready) + pressure } else { -HOP };
        }
    }
    z
}
