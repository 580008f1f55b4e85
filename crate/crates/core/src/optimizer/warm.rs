//! Partial assignments of the synchronization family used as warm starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::network::Network;
use crate::plan::config::RuleSet;
use crate::plan::model::RestorationPlan;
use crate::scenario::Scenario;
use crate::sync_structure::{check_transition_safety, Mode, SyncMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum WarmStrategy {
    /// No warm start.
    Wws,
    /// All synchronization variables zero.
    Azws,
    /// Uniformly random bits.
    Rws,
    /// From the feasibility-resolution operator.
    Caws,
    /// From a previously solved plan.
    Osws,
}

impl WarmStrategy {
    pub const ALL: [WarmStrategy; 5] =
        [WarmStrategy::Wws, WarmStrategy::Azws, WarmStrategy::Rws, WarmStrategy::Caws, WarmStrategy::Osws];

    pub fn as_str(self) -> &'static str {
        match self {
            WarmStrategy::Wws => "WWS",
            WarmStrategy::Azws => "AZWS",
            WarmStrategy::Rws => "RWS",
            WarmStrategy::Caws => "CAWS",
            WarmStrategy::Osws => "OSWS",
        }
    }
}

impl std::str::FromStr for WarmStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "wws" | "none" => Ok(WarmStrategy::Wws),
            "azws" | "zero" => Ok(WarmStrategy::Azws),
            "rws" | "random" => Ok(WarmStrategy::Rws),
            "caws" | "resolved" => Ok(WarmStrategy::Caws),
            "osws" | "oracle" => Ok(WarmStrategy::Osws),
            other => Err(format!("unknown warm-start strategy '{other}'")),
        }
    }
}

/// Fixed values for the synchronization family over the horizon. Per-step
/// vectors follow the plan's index spaces. When the mode lookup failed the
/// assignment carries SSW statuses only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialAssignment {
    pub strategy: WarmStrategy,
    pub u_ssw: Vec<Vec<bool>>,
    pub u_sync: Option<Vec<Vec<bool>>>,
    /// Catalogue index of the mode per step.
    pub u_m: Option<Vec<usize>>,
    pub u_c: Option<Vec<usize>>,
}

impl PartialAssignment {
    pub fn horizon(&self) -> usize {
        self.u_ssw.len()
    }

    /// Everything zero: no SSW closes, every source its own island.
    pub fn all_zero(net: &Network, sc: &Scenario) -> Self {
        let steps = sc.steps();
        let mut u_m = Vec::with_capacity(steps);
        let mut u_c = Vec::with_capacity(steps);
        for &u_tg in &sc.u_tg {
            let mode = Mode::singletons(&net.bs.active(u_tg));
            u_c.push(mode.class());
            u_m.push(net.catalogue.index_of(&mode).expect("singleton mode is always reachable"));
        }
        PartialAssignment {
            strategy: WarmStrategy::Azws,
            u_ssw: vec![vec![false; net.ssw.len()]; steps],
            u_sync: Some(vec![vec![false; net.n_pairs()]; steps]),
            u_m: Some(u_m),
            u_c: Some(u_c),
        }
    }

    /// Independent fair coin flips for every indicator, uniform mode and
    /// class picks.
    pub fn random(net: &Network, sc: &Scenario, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let steps = sc.steps();
        let mut bits = |n: usize| -> Vec<Vec<bool>> { (0..steps).map(|_| (0..n).map(|_| rng.gen()).collect()).collect() };
        let u_ssw = bits(net.ssw.len());
        let u_sync = bits(net.n_pairs());
        let u_m = (0..steps).map(|_| rng.gen_range(0..net.catalogue.len().max(1))).collect();
        let u_c = (0..steps).map(|_| rng.gen_range(0..=net.catalogue.max_class)).collect();
        PartialAssignment { strategy: WarmStrategy::Rws, u_ssw, u_sync: Some(u_sync), u_m: Some(u_m), u_c: Some(u_c) }
    }

    /// The synchronization family of a solved plan.
    pub fn from_plan(plan: &RestorationPlan) -> Self {
        PartialAssignment {
            strategy: WarmStrategy::Osws,
            u_ssw: plan.steps.iter().map(|r| r.u_ssw.clone()).collect(),
            u_sync: Some(plan.steps.iter().map(|r| r.u_sync.clone()).collect()),
            u_m: plan.steps.iter().map(|r| r.mode_index()).collect(),
            u_c: plan.steps.iter().map(|r| r.class()).collect(),
        }
    }
}

/// Checks the internal consistency of a partial assignment; the error
/// carries the first reason for rejection.
pub fn check_warm_start(net: &Network, sc: &Scenario, rules: RuleSet, w: &PartialAssignment) -> Result<(), String> {
    let steps = sc.steps();
    if w.u_ssw.len() != steps || w.u_ssw.iter().any(|v| v.len() != net.ssw.len()) {
        return Err("SSW statuses do not match the horizon or switch count".into());
    }
    for t in 1..steps {
        if let Some(i) = (0..net.ssw.len()).find(|&i| w.u_ssw[t - 1][i] && !w.u_ssw[t][i]) {
            return Err(format!("SSW {i} reopens at step {t}"));
        }
    }
    if rules.tg_lockout() {
        if let Some(t) = (0..steps).find(|&t| !sc.u_tg[t] && w.u_ssw[t].iter().any(|&u| u)) {
            return Err(format!("SSW closed before the TG returns at step {t}"));
        }
    }
    let n_bess = net.feeder.bess.len() as i64;
    if let Some(u_c) = &w.u_c {
        if u_c.len() != steps {
            return Err("class trajectory does not match the horizon".into());
        }
        for t in 0..steps {
            let s = n_bess + sc.u_tg[t] as i64 - w.u_ssw[t].iter().filter(|&&u| u).count() as i64;
            if s != u_c[t] as i64 {
                return Err(format!("class {} differs from slack count {s} at step {t}", u_c[t]));
            }
        }
    }
    if let Some(u_m) = &w.u_m {
        if u_m.len() != steps || u_m.iter().any(|&m| m >= net.catalogue.len()) {
            return Err("mode trajectory does not match the horizon or catalogue".into());
        }
        for t in 0..steps {
            let e = &net.catalogue.entries[u_m[t]];
            if let Some(u_c) = &w.u_c {
                if e.class != u_c[t] {
                    return Err(format!("mode class {} differs from class {} at step {t}", e.class, u_c[t]));
                }
            }
            if e.mode.members() != net.bs.active(sc.u_tg[t]) {
                return Err(format!("mode {} does not cover the active sources at step {t}", e.mode));
            }
        }
    }
    if let Some(u_sync) = &w.u_sync {
        if u_sync.len() != steps || u_sync.iter().any(|v| v.len() != net.n_pairs()) {
            return Err("sync indicators do not match the horizon or pair count".into());
        }
        if let Some(u_m) = &w.u_m {
            for t in 0..steps {
                let want = SyncMatrix::from_mode(net.bs_blocks.clone(), net.catalogue.mode(u_m[t]));
                if want.bits != u_sync[t] {
                    return Err(format!("sync indicators disagree with the mode at step {t}"));
                }
            }
        }
        let mut before = SyncMatrix::zeros(net.bs_blocks.clone());
        for (t, bits) in u_sync.iter().enumerate() {
            let now = SyncMatrix { blocks: net.bs_blocks.clone(), bits: bits.clone() };
            let verdict = check_transition_safety(&before, &now);
            if !verdict.monotonicity.is_empty() {
                return Err(format!("sync indicator drops at step {t}"));
            }
            if rules.safe_transitions() && !verdict.violations.is_empty() {
                return Err(format!("unsafe synchronization at step {t}"));
            }
            before = now;
        }
    }
    Ok(())
}
