//! Outage scenarios and the scenario grid.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::topology::{BlockId, Season};

/// One outage case: when restoration starts, how long the TG stays out,
/// which block is damaged, and the resolved per-step profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub season: Season,
    /// Restoration start, hour of day.
    pub t0_hour: f64,
    /// TG outage duration in minutes; `None` when the feeder has no TG.
    pub tg_outage_min: Option<u32>,
    pub damaged: Option<BlockId>,
    /// Step length in minutes.
    pub dt_min: f64,
    /// TG availability per step.
    pub u_tg: Vec<bool>,
    /// Load multiplier applied to nominal demand per step.
    pub load_mult: Vec<f64>,
    /// Normalized PV output per step.
    pub pv_eta: Vec<f64>,
}

impl Scenario {
    /// Resolves profiles from the feeder for `steps` steps of `dt_min`.
    pub fn build(
        net: &Network,
        season: Season,
        t0_hour: f64,
        tg_outage_min: u32,
        damaged: Option<BlockId>,
        steps: usize,
        dt_min: f64,
    ) -> Result<Self> {
        if !(dt_min > 0.0) {
            return Err(Error::Scenario("step length must be positive".into()));
        }
        let mut load_mult = Vec::with_capacity(steps);
        let mut pv_eta = Vec::with_capacity(steps);
        for t in 0..steps {
            let hour = t0_hour + t as f64 * dt_min / 60.0;
            let profiles = &net.feeder.profiles;
            load_mult.push(
                profiles
                    .load_at(season, hour)
                    .ok_or_else(|| Error::Scenario(format!("no load profile for {}", season.as_str())))?,
            );
            pv_eta.push(
                profiles
                    .pv_at(season, hour)
                    .ok_or_else(|| Error::Scenario(format!("no PV profile for {}", season.as_str())))?,
            );
        }
        let has_tg = net.bs.tg.is_some();
        let u_tg = (0..steps).map(|t| has_tg && t as f64 * dt_min >= tg_outage_min as f64).collect();
        let id = format!(
            "{}-t{:02}-nu{}-{}",
            season.as_str(),
            t0_hour,
            tg_outage_min,
            damaged.map_or("none".to_string(), |k| format!("k{k}"))
        );
        let sc = Scenario {
            id,
            season,
            t0_hour,
            tg_outage_min: has_tg.then_some(tg_outage_min),
            damaged,
            dt_min,
            u_tg,
            load_mult,
            pv_eta,
        };
        sc.check(net)?;
        Ok(sc)
    }

    /// Scenario with explicit per-step vectors, for hand-built instances.
    pub fn custom(
        id: impl Into<String>,
        u_tg: Vec<bool>,
        load_mult: Vec<f64>,
        pv_eta: Vec<f64>,
        damaged: Option<BlockId>,
        dt_min: f64,
    ) -> Self {
        Scenario {
            id: id.into(),
            season: Season::Spring,
            t0_hour: 0.0,
            tg_outage_min: None,
            damaged,
            dt_min,
            u_tg,
            load_mult,
            pv_eta,
        }
    }

    pub fn steps(&self) -> usize {
        self.u_tg.len()
    }

    pub fn dt_hours(&self) -> f64 {
        self.dt_min / 60.0
    }

    /// Consistency against a network.
    pub fn check(&self, net: &Network) -> Result<()> {
        let n = self.u_tg.len();
        if self.load_mult.len() != n || self.pv_eta.len() != n {
            return Err(Error::Scenario("per-step vectors differ in length".into()));
        }
        if !(self.dt_min > 0.0) {
            return Err(Error::Scenario("step length must be positive".into()));
        }
        if let Some(k) = self.damaged {
            if k >= net.n_blocks() {
                return Err(Error::Scenario(format!("damaged block k{k} does not exist")));
            }
            if net.bs.is_bs(k) {
                return Err(Error::Scenario(format!("damaged block k{k} holds a black-start source")));
            }
        }
        if net.bs.tg.is_none() && self.u_tg.iter().any(|&u| u) {
            return Err(Error::Scenario("TG available but the feeder has no TG".into()));
        }
        if self.u_tg.windows(2).any(|w| w[0] && !w[1]) {
            return Err(Error::Scenario("TG availability must not drop once restored".into()));
        }
        if self.pv_eta.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
            return Err(Error::Scenario("PV output must lie in [0, 1]".into()));
        }
        if self.load_mult.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::Scenario("load multipliers must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub seasons: Vec<Season>,
    pub t0_hours: Vec<u32>,
    pub outage_minutes: Vec<u32>,
    /// Damage locations; every non-BS block when absent.
    pub damaged: Option<Vec<BlockId>>,
    pub dt_min: f64,
    /// Steps per scenario; by default the longest outage plus four hours.
    pub steps: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            seasons: Season::ALL.to_vec(),
            t0_hours: (6..=16).collect(),
            outage_minutes: vec![60, 120, 240],
            damaged: None,
            dt_min: 15.0,
            steps: None,
        }
    }
}

impl GridConfig {
    pub fn horizon_steps(&self) -> usize {
        self.steps.unwrap_or_else(|| {
            let longest = self.outage_minutes.iter().copied().max().unwrap_or(0) as f64;
            ((longest + 240.0) / self.dt_min).round() as usize
        })
    }
}

/// Cartesian product in the order season, start hour, outage, damage.
pub fn generate_grid(net: &Network, cfg: &GridConfig) -> Result<Vec<Scenario>> {
    let damaged: Vec<BlockId> = match &cfg.damaged {
        Some(v) => v.clone(),
        None => (0..net.n_blocks()).filter(|&k| !net.bs.is_bs(k)).collect(),
    };
    if damaged.is_empty() {
        return Err(Error::Scenario("empty damage set".into()));
    }
    let steps = cfg.horizon_steps();
    let mut out = Vec::with_capacity(cfg.seasons.len() * cfg.t0_hours.len() * cfg.outage_minutes.len() * damaged.len());
    for &season in &cfg.seasons {
        for &t0 in &cfg.t0_hours {
            for &nu in &cfg.outage_minutes {
                for &k in &damaged {
                    out.push(Scenario::build(net, season, t0 as f64, nu, Some(k), steps, cfg.dt_min)?);
                }
            }
        }
    }
    Ok(out)
}

/// Train/validation/test index split in the ratio 8:1:1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_dataset(n: usize, seed: u64) -> DatasetSplit {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    DatasetSplit { seed, train: idx, val, test }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_a_partition() {
        let s = split_dataset(1056, 42);
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (844, 105, 107));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1056).collect::<Vec<_>>());
        assert_eq!(split_dataset(1056, 42), s);
    }

    #[test]
    fn default_horizon_is_eight_hours() {
        assert_eq!(GridConfig::default().horizon_steps(), 32);
    }
}
