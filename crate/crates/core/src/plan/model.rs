//! Restoration plan data model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::sync_structure::SyncMatrix;
use crate::topology::PhaseVec;

/// Every decision variable at one time step.
///
/// Index spaces: blocks, buses and lines follow the feeder; `u_esw`/`u_ssw`
/// follow `Network::esw`/`Network::ssw`; `u_nlb` follows
/// `Network::nl_buses`; sync indicators follow pair order over
/// `Network::bs_blocks`; BESS quantities follow the feeder's BESS list; loads
/// follow the feeder's load records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub u_tg: bool,
    pub u_bk: Vec<bool>,
    pub u_b: Vec<bool>,
    pub u_l: Vec<bool>,
    pub u_esw: Vec<bool>,
    pub u_ssw: Vec<bool>,
    pub u_nlb: Vec<bool>,
    /// Class selection, indexed by class `0..=|BS|`.
    pub u_c: Vec<bool>,
    /// Mode selection, indexed by catalogue position.
    pub u_m: Vec<bool>,
    pub u_sync: Vec<bool>,
    pub u_sync_minus: Vec<bool>,
    pub u_sync_plus: Vec<bool>,
    /// Number of islands implied by sources and closed SSWs.
    pub s: i64,
    pub f_block: Vec<f64>,
    pub f_bus: Vec<f64>,
    pub f_qss: Vec<f64>,
    pub df_sync: Vec<f64>,
    pub rocof: Vec<f64>,
    pub nadir: Vec<f64>,
    pub p_tg: PhaseVec,
    pub q_tg: PhaseVec,
    pub p_bess: Vec<PhaseVec>,
    pub q_bess: Vec<PhaseVec>,
    pub p_pv: Vec<PhaseVec>,
    pub q_pv: Vec<PhaseVec>,
    pub p_load: Vec<PhaseVec>,
    pub q_load: Vec<PhaseVec>,
    pub p_line: Vec<PhaseVec>,
    pub q_line: Vec<PhaseVec>,
    /// Squared voltage magnitudes.
    pub v: Vec<PhaseVec>,
    pub soc: Vec<f64>,
}

impl StepRecord {
    /// Everything off, zero flows, SoC held at the initial value.
    pub fn dead(net: &Network) -> Self {
        let z = [0.0; 3];
        let nb = net.feeder.bess.len();
        let np = net.n_pairs();
        StepRecord {
            u_tg: false,
            u_bk: vec![false; net.n_blocks()],
            u_b: vec![false; net.n_buses()],
            u_l: vec![false; net.n_lines()],
            u_esw: vec![false; net.esw.len()],
            u_ssw: vec![false; net.ssw.len()],
            u_nlb: vec![false; net.nl_buses.len()],
            u_c: vec![false; net.catalogue.max_class + 1],
            u_m: vec![false; net.catalogue.len()],
            u_sync: vec![false; np],
            u_sync_minus: vec![false; np],
            u_sync_plus: vec![false; np],
            s: 0,
            f_block: vec![0.0; net.n_blocks()],
            f_bus: vec![0.0; net.n_buses()],
            f_qss: vec![0.0; nb],
            df_sync: vec![0.0; nb],
            rocof: vec![0.0; nb],
            nadir: vec![0.0; nb],
            p_tg: z,
            q_tg: z,
            p_bess: vec![z; nb],
            q_bess: vec![z; nb],
            p_pv: vec![z; net.feeder.pv.len()],
            q_pv: vec![z; net.feeder.pv.len()],
            p_load: vec![z; net.feeder.loads.len()],
            q_load: vec![z; net.feeder.loads.len()],
            p_line: vec![z; net.n_lines()],
            q_line: vec![z; net.n_lines()],
            v: vec![z; net.n_buses()],
            soc: net.feeder.bess.iter().map(|b| b.soc_init).collect(),
        }
    }

    pub fn sync_matrix(&self, net: &Network) -> SyncMatrix {
        SyncMatrix { blocks: net.bs_blocks.clone(), bits: self.u_sync.clone() }
    }

    /// Selected class, if exactly one is selected.
    pub fn class(&self) -> Option<usize> {
        one_hot(&self.u_c)
    }

    /// Selected catalogue entry, if exactly one is selected.
    pub fn mode_index(&self) -> Option<usize> {
        one_hot(&self.u_m)
    }

    /// Checks every vector length against the network.
    pub fn check_dimensions(&self, net: &Network) -> Result<()> {
        let nb = net.feeder.bess.len();
        let np = net.n_pairs();
        let checks: [(&str, usize, usize); 30] = [
            ("u_bk", self.u_bk.len(), net.n_blocks()),
            ("u_b", self.u_b.len(), net.n_buses()),
            ("u_l", self.u_l.len(), net.n_lines()),
            ("u_esw", self.u_esw.len(), net.esw.len()),
            ("u_ssw", self.u_ssw.len(), net.ssw.len()),
            ("u_nlb", self.u_nlb.len(), net.nl_buses.len()),
            ("u_c", self.u_c.len(), net.catalogue.max_class + 1),
            ("u_m", self.u_m.len(), net.catalogue.len()),
            ("u_sync", self.u_sync.len(), np),
            ("u_sync_minus", self.u_sync_minus.len(), np),
            ("u_sync_plus", self.u_sync_plus.len(), np),
            ("f_block", self.f_block.len(), net.n_blocks()),
            ("f_bus", self.f_bus.len(), net.n_buses()),
            ("f_qss", self.f_qss.len(), nb),
            ("df_sync", self.df_sync.len(), nb),
            ("rocof", self.rocof.len(), nb),
            ("nadir", self.nadir.len(), nb),
            ("p_bess", self.p_bess.len(), nb),
            ("q_bess", self.q_bess.len(), nb),
            ("p_pv", self.p_pv.len(), net.feeder.pv.len()),
            ("q_pv", self.q_pv.len(), net.feeder.pv.len()),
            ("p_load", self.p_load.len(), net.feeder.loads.len()),
            ("q_load", self.q_load.len(), net.feeder.loads.len()),
            ("p_line", self.p_line.len(), net.n_lines()),
            ("q_line", self.q_line.len(), net.n_lines()),
            ("v", self.v.len(), net.n_buses()),
            ("soc", self.soc.len(), nb),
            ("p_tg", 3, 3),
            ("q_tg", 3, 3),
            ("s", 1, 1),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::Dimension(format!("{name} has {got} entries, expected {want}")));
            }
        }
        Ok(())
    }
}

fn one_hot(v: &[bool]) -> Option<usize> {
    let mut it = v.iter().enumerate().filter(|(_, &b)| b);
    match (it.next(), it.next()) {
        (Some((i, _)), None) => Some(i),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationPlan {
    pub scenario_id: String,
    pub feeder_hash: String,
    pub dt_min: f64,
    pub steps: Vec<StepRecord>,
}

impl RestorationPlan {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// Up to four records ending at `t`, oldest first.
    pub fn window(&self, t: usize) -> Vec<&StepRecord> {
        self.steps[t.saturating_sub(3)..=t].iter().collect()
    }
}
