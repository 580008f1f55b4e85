//! Frequency trajectory under the configured surrogate.

use crate::network::Network;
use crate::plan::islands::{groups, islands};
use crate::plan::model::StepRecord;
use crate::sync_structure::pair_index;
use crate::topology::BlockId;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyState {
    /// Per block; zero when dead.
    pub f_block: Vec<f64>,
    /// Per BESS device.
    pub f_qss: Vec<f64>,
    pub df_sync: Vec<f64>,
    pub rocof: Vec<f64>,
    pub nadir: Vec<f64>,
    /// Per BESS device, the synchronization event indicator.
    pub delta: Vec<f64>,
}

/// Synchronization event indicator of a BS block: SSW closures this step
/// times the number of sources it is synchronized with.
pub fn sync_event_indicator(net: &Network, prev: Option<&StepRecord>, rec: &StepRecord, k: BlockId) -> f64 {
    let closures = rec
        .u_ssw
        .iter()
        .enumerate()
        .filter(|(i, &u)| u && !prev.map_or(false, |p| p.u_ssw[*i]))
        .count();
    let Some(i) = net.bs_pos(k) else { return 0.0 };
    let n = net.bs_blocks.len();
    let partners = (0..n).filter(|&j| j != i && rec.u_sync[pair_index(n, i, j)]).count();
    (closures * partners) as f64
}

/// Evaluates the surrogate from the step's topology and dispatch.
pub fn evaluate_frequency(net: &Network, prev: Option<&StepRecord>, rec: &StepRecord) -> FrequencyState {
    let fs = &net.params.frequency;
    let n = net.n_blocks();
    let grp = groups(net, prev, rec);
    let isl = islands(net, rec);
    let tg_live = |k: BlockId| rec.u_tg && net.bs.tg == Some(k);

    // Group frequency and total rating, keyed by group label.
    let mut group_f = vec![0.0; n];
    let mut group_s = vec![0.0; n];
    let mut has_tg = vec![false; n];
    let mut members: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let mut output = vec![0.0; n];
    for k in 0..n {
        if let Some(g) = grp[k] {
            has_tg[g] |= tg_live(k);
            if let Some(d) = net.bess_of_block[k] {
                let dev = &net.feeder.bess[d];
                members[g].push((dev.f_set, dev.s_nom));
                output[g] += rec.p_bess[d].iter().sum::<f64>();
            }
        }
    }
    for g in 0..n {
        group_s[g] = members[g].iter().map(|m| m.1).sum();
        group_f[g] = if has_tg[g] {
            fs.nominal_hz
        } else if !members[g].is_empty() {
            fs.group_frequency(&members[g], output[g])
        } else {
            0.0
        };
    }

    // Island frequency: nominal with the TG, else rating-weighted mean of its
    // groups' pre-event frequencies.
    let mut island_tg = vec![false; n];
    let mut island_fs = vec![0.0; n];
    let mut island_s = vec![0.0; n];
    for k in 0..n {
        if let (Some(g), Some(i)) = (grp[k], isl[k]) {
            island_tg[i] |= has_tg[g];
            if g == k {
                island_fs[i] += group_f[g] * group_s[g];
                island_s[i] += group_s[g];
            }
        }
    }
    let island_f = |i: usize| {
        if island_tg[i] {
            fs.nominal_hz
        } else if island_s[i] > 0.0 {
            island_fs[i] / island_s[i]
        } else {
            0.0
        }
    };
    let f_block: Vec<f64> = (0..n).map(|k| isl[k].map_or(0.0, island_f)).collect();

    let nb = net.feeder.bess.len();
    let mut st = FrequencyState {
        f_block,
        f_qss: vec![0.0; nb],
        df_sync: vec![0.0; nb],
        rocof: vec![0.0; nb],
        nadir: vec![0.0; nb],
        delta: vec![0.0; nb],
    };
    for (d, dev) in net.feeder.bess.iter().enumerate() {
        let k = net.bess_block[d];
        let f_qss = grp[k].map_or(0.0, |g| group_f[g]);
        let f = st.f_block[k];
        let delta = sync_event_indicator(net, prev, rec, k);
        let p_now: f64 = rec.p_bess[d].iter().sum();
        let p_before: f64 = prev.map_or(0.0, |p| p.p_bess[d].iter().sum());
        st.f_qss[d] = f_qss;
        st.delta[d] = delta;
        st.df_sync[d] = if delta > 0.0 { (f - f_qss) / delta } else { 0.0 };
        st.rocof[d] = fs.rocof(p_now - p_before, dev.s_nom);
        st.nadir[d] = fs.nadir(f, p_now - p_before, dev.s_nom);
    }
    st
}
