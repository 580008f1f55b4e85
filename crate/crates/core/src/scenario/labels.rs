//! Supervision labels from a solved plan.

use crate::error::{Error, Result};
use crate::feasibility::logits::Dims;
use crate::feasibility::resolve::FeasibleOutputs;
use crate::network::Network;
use crate::plan::islands::islands;
use crate::plan::model::RestorationPlan;
use crate::plan::validate::radiality_terms;

/// Root label of every block at every step: the island's live TG if it has
/// one, else its lowest BS block, and 0 when dead. SSW labels mark closure
/// events. Labels use the extended root index: 0 dead, `i + 1` for the
/// `i`-th BS block.
pub fn extract_labels(net: &Network, plan: &RestorationPlan) -> Result<FeasibleOutputs> {
    let nk = net.n_blocks();
    let dims = Dims { t: plan.horizon(), k: nk, r: net.bs_blocks.len() + 1, e: net.ssw.len() };
    let mut out = FeasibleOutputs { dims, labels: Vec::new(), sync: Vec::new() };
    for (t, rec) in plan.steps.iter().enumerate() {
        rec.check_dimensions(net)?;
        let (lines, buses, s) = radiality_terms(net, rec);
        if lines != buses - s {
            return Err(Error::Topology(format!("step {t} is not radial; labels are undefined")));
        }
        let isl = islands(net, rec);
        let mut rep = vec![None; nk];
        for (i, &k) in net.bs_blocks.iter().enumerate() {
            let Some(c) = isl[k] else { continue };
            let live_tg = rec.u_tg && net.bs.tg == Some(k);
            if live_tg || rep[c].is_none() {
                rep[c] = Some(i + 1);
            }
        }
        let mut row = Vec::with_capacity(nk);
        for k in 0..nk {
            row.push(match isl[k] {
                None => 0,
                Some(c) => rep[c].ok_or_else(|| Error::Topology(format!("step {t}: block k{k} has no source")))?,
            });
        }
        out.labels.push(row);
        let prev = t.checked_sub(1).map(|p| &plan.steps[p]);
        out.sync.push((0..net.ssw.len()).map(|e| rec.u_ssw[e] && !prev.map_or(false, |p| p.u_ssw[e])).collect());
    }
    Ok(out)
}
