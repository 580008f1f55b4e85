//! Completes a step record from the previous steps and this step's
//! switching and pickup actions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, Switch};
use crate::plan::devices::{clpu_multiplier, pv_output};
use crate::plan::frequency::evaluate_frequency;
use crate::plan::islands::{block_components, groups, islands, sync_from_islands};
use crate::plan::model::StepRecord;
use crate::plan::validate::slack_count;
use crate::powerflow::flow_for_record;
use crate::scenario::Scenario;
use crate::sync_structure::Mode;
use crate::topology::LoadClass;

/// New closures and pickups at one step. Indices refer to `Network::esw`,
/// `Network::ssw` and `Network::nl_buses`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepAction {
    pub close_esw: Vec<usize>,
    pub close_ssw: Vec<usize>,
    pub pick_nl: Vec<usize>,
}

impl StepAction {
    pub fn is_empty(&self) -> bool {
        self.close_esw.is_empty() && self.close_ssw.is_empty() && self.pick_nl.is_empty()
    }

    /// Number of switching operations.
    pub fn switch_count(&self) -> usize {
        self.close_esw.len() + self.close_ssw.len()
    }
}

/// Builds the record for step `t`. `history` holds up to three previous
/// records, oldest first. Physical quantities follow from the switch states:
/// blocks energize through closed switches from available sources, each
/// pre-synchronization group is served by its TG or shared among its BESS
/// units by rating, and flows come from the tree evaluation.
pub fn fill(net: &Network, sc: &Scenario, history: &[&StepRecord], t: usize, action: &StepAction) -> Result<StepRecord> {
    let f = &net.feeder;
    let p = &net.params;
    let prev = if t == 0 { None } else { history.last().copied() };
    let back = |o: usize| -> Option<&StepRecord> {
        if o == 0 || o > t || o > history.len() {
            None
        } else {
            Some(history[history.len() - o])
        }
    };
    let mut rec = StepRecord::dead(net);
    rec.u_tg = sc.u_tg[t];
    if let Some(pr) = prev {
        rec.u_esw.clone_from(&pr.u_esw);
        rec.u_ssw.clone_from(&pr.u_ssw);
        rec.u_nlb.clone_from(&pr.u_nlb);
        rec.soc.clone_from(&pr.soc);
    }
    for &i in &action.close_esw {
        rec.u_esw[i] = true;
    }
    for &i in &action.close_ssw {
        rec.u_ssw[i] = true;
    }
    for &i in &action.pick_nl {
        rec.u_nlb[i] = true;
    }

    // Energization spreads from available sources through closed switches.
    let all_on = vec![true; net.n_blocks()];
    let comp = block_components(net, &all_on, |s| match s {
        Switch::Esw(i) => rec.u_esw[i],
        Switch::Ssw(i) => rec.u_ssw[i],
    });
    let mut live_root = vec![false; net.n_blocks()];
    for k in 0..net.n_blocks() {
        let source = net.bess_of_block[k].is_some() || (rec.u_tg && net.bs.tg == Some(k));
        if source {
            live_root[comp[k].expect("all blocks counted")] = true;
        }
    }
    for k in 0..net.n_blocks() {
        rec.u_bk[k] = live_root[comp[k].expect("all blocks counted")];
    }
    for (b, &k) in net.partition.block_of.iter().enumerate() {
        rec.u_b[b] = rec.u_bk[k];
    }
    for (i, line) in f.lines.iter().enumerate() {
        rec.u_l[i] = match net.switch_of_line[i] {
            Some(Switch::Esw(s)) => rec.u_esw[s],
            Some(Switch::Ssw(s)) => rec.u_ssw[s],
            None => rec.u_bk[net.partition.block_of[line.from.0]],
        };
    }

    // Demand with cold load pickup, and PV after its delay.
    for (i, ld) in f.loads.iter().enumerate() {
        let k = net.load_block[i];
        let status = |r: &StepRecord| match ld.class {
            LoadClass::Cl => r.u_bk[k],
            LoadClass::Nl => r.u_nlb[net.nl_of_load[i].expect("NL record indexed")],
        };
        let mut hist = vec![status(&rec)];
        hist.extend((1..4).map_while(|o| back(o).map(status)));
        let mult = clpu_multiplier(&p.clpu_beta, &hist);
        let tan = ld.tan_phi();
        for n in 0..3 {
            rec.p_load[i][n] = ld.p_nom[n] * sc.load_mult[t] * mult;
            rec.q_load[i][n] = rec.p_load[i][n] * tan;
        }
    }
    for (i, pv) in f.pv.iter().enumerate() {
        let k = net.pv_block[i];
        let on = match p.pv_delay {
            0 => rec.u_bk[k],
            d => back(d).map_or(false, |r| r.u_bk[k]),
        };
        let (pp, qq) = pv_output(on, sc.pv_eta[t], pv.s_nom, f.bus(pv.bus).phases, pv.pf_angle.tan());
        rec.p_pv[i] = pp;
        rec.q_pv[i] = qq;
    }

    // Dispatch per pre-synchronization group.
    let grp = groups(net, prev, &rec);
    let nk = net.n_blocks();
    let mut dem_p = vec![[0.0; 3]; nk];
    let mut dem_q = vec![[0.0; 3]; nk];
    for (i, ld) in f.loads.iter().enumerate() {
        if let Some(g) = grp[net.partition.block_of[ld.bus.0]] {
            for n in 0..3 {
                dem_p[g][n] += rec.p_load[i][n];
                dem_q[g][n] += rec.q_load[i][n];
            }
        }
    }
    for (i, pv) in f.pv.iter().enumerate() {
        if let Some(g) = grp[net.partition.block_of[pv.bus.0]] {
            for n in 0..3 {
                dem_p[g][n] -= rec.p_pv[i][n];
                dem_q[g][n] -= rec.q_pv[i][n];
            }
        }
    }
    let tg_group = net.bs.tg.filter(|_| rec.u_tg).and_then(|k| grp[k]);
    let mut rating = vec![0.0; nk];
    for (d, dev) in f.bess.iter().enumerate() {
        if let Some(g) = grp[net.bess_block[d]] {
            rating[g] += dev.s_nom;
        }
    }
    if let Some(g) = tg_group {
        rec.p_tg = dem_p[g];
        rec.q_tg = dem_q[g];
    }
    for (d, dev) in f.bess.iter().enumerate() {
        let Some(g) = grp[net.bess_block[d]] else { continue };
        if Some(g) == tg_group {
            continue;
        }
        let share = dev.s_nom / rating[g];
        for n in 0..3 {
            rec.p_bess[d][n] = share * dem_p[g][n];
            rec.q_bess[d][n] = share * dem_q[g][n];
        }
        rec.soc[d] -= rec.p_bess[d].iter().sum::<f64>() * sc.dt_hours() / dev.e_nom;
    }

    // A looped topology has no tree flow; the record keeps zero flows and
    // the validator reports the radiality and balance breaches.
    match flow_for_record(net, &rec) {
        Ok(flow) => {
            rec.p_line = flow.p_line;
            rec.q_line = flow.q_line;
            rec.v = flow.v;
        }
        Err(Error::Topology(_)) => {}
        Err(e) => return Err(e),
    }

    // Synchronization structure of the step.
    let isl = islands(net, &rec);
    rec.u_sync = sync_from_islands(net, &isl);
    rec.s = slack_count(net, &rec);
    if rec.s >= 0 && (rec.s as usize) < rec.u_c.len() {
        rec.u_c[rec.s as usize] = true;
    }
    let active = net.bs.active(rec.u_tg);
    let mut parts: Vec<Vec<usize>> = Vec::new();
    for &k in &active {
        match parts.iter_mut().find(|p| isl[p[0]].is_some() && isl[p[0]] == isl[k]) {
            Some(part) => part.push(k),
            None => parts.push(vec![k]),
        }
    }
    if let Some(m) = net.catalogue.index_of(&Mode::from_parts(parts)) {
        rec.u_m[m] = true;
    }

    let freq = evaluate_frequency(net, prev, &rec);
    rec.f_block = freq.f_block;
    for (b, &k) in net.partition.block_of.iter().enumerate() {
        rec.f_bus[b] = rec.f_block[k];
    }
    rec.f_qss = freq.f_qss;
    rec.df_sync = freq.df_sync;
    rec.rocof = freq.rocof;
    rec.nadir = freq.nadir;
    let bs = &net.bs_blocks;
    let mut idx = 0;
    for i in 0..bs.len() {
        for j in i + 1..bs.len() {
            if !rec.u_sync[idx] {
                let diff = rec.f_block[bs[j]] - rec.f_block[bs[i]] + p.frequency.mu;
                rec.u_sync_minus[idx] = diff >= 0.0;
                rec.u_sync_plus[idx] = diff < 0.0;
            }
            idx += 1;
        }
    }
    Ok(rec)
}
