//! Plot-ready long-format tables from solved plans.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::network::Network;
use crate::plan::RestorationPlan;
use crate::topology::LoadClass;

/// Restored active demand per step; `class` is `cl`, `nl` or `total`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestoredRow {
    pub scenario_id: String,
    pub step: usize,
    pub minute: f64,
    pub class: String,
    pub p_restored: f64,
}

/// System class and mode per step. `mode` is the catalogue label, empty when
/// no mode is selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub scenario_id: String,
    pub step: usize,
    pub minute: f64,
    pub tg_available: bool,
    pub class: Option<usize>,
    pub mode_index: Option<usize>,
    pub mode: String,
}

/// Range of one quantity over energized elements at a step. Frequency spans
/// energized BS blocks, SoC spans BESS units, voltage spans phases of
/// energized buses and is squared magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub scenario_id: String,
    pub step: usize,
    pub minute: f64,
    pub quantity: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RenderedTables {
    pub restored: Vec<RestoredRow>,
    pub classes: Vec<ClassRow>,
    pub envelopes: Vec<EnvelopeRow>,
}

pub const RESTORED_FILE: &str = "restored_load.csv";
pub const CLASS_FILE: &str = "class_mode.csv";
pub const ENVELOPE_FILE: &str = "envelopes.csv";

fn range(it: impl Iterator<Item = f64>) -> (Option<f64>, Option<f64>) {
    it.fold((None, None), |(lo, hi), x| {
        (Some(lo.map_or(x, |l: f64| l.min(x))), Some(hi.map_or(x, |h: f64| h.max(x))))
    })
}

pub fn report_render(net: &Network, plans: &[RestorationPlan]) -> RenderedTables {
    let mut out = RenderedTables::default();
    let f = &net.feeder;
    for plan in plans {
        let id = &plan.scenario_id;
        for (t, r) in plan.steps.iter().enumerate() {
            let minute = t as f64 * plan.dt_min;
            let (mut cl, mut nl) = (0.0, 0.0);
            for (ld, p) in f.loads.iter().zip(&r.p_load) {
                match ld.class {
                    LoadClass::Cl => cl += p.iter().sum::<f64>(),
                    LoadClass::Nl => nl += p.iter().sum::<f64>(),
                }
            }
            for (class, p) in [("cl", cl), ("nl", nl), ("total", cl + nl)] {
                out.restored.push(RestoredRow {
                    scenario_id: id.clone(),
                    step: t,
                    minute,
                    class: class.into(),
                    p_restored: p,
                });
            }
            let mode_index = r.mode_index();
            out.classes.push(ClassRow {
                scenario_id: id.clone(),
                step: t,
                minute,
                tg_available: r.u_tg,
                class: r.class(),
                mode_index,
                mode: mode_index
                    .and_then(|m| net.catalogue.entries.get(m))
                    .map(|e| e.mode.to_string())
                    .unwrap_or_default(),
            });
            let freq = range(net.bs_blocks.iter().filter(|&&k| r.u_bk[k]).map(|&k| r.f_block[k]));
            let soc = range(r.soc.iter().copied());
            let volt = range(
                (0..net.n_buses())
                    .filter(|&b| r.u_b[b])
                    .flat_map(|b| f.buses[b].phases.iter().map(move |n| r.v[b][n])),
            );
            for (q, (min, max)) in [("frequency", freq), ("soc", soc), ("voltage", volt)] {
                out.envelopes.push(EnvelopeRow { scenario_id: id.clone(), step: t, minute, quantity: q.into(), min, max });
            }
        }
    }
    out
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

impl RenderedTables {
    /// Writes one CSV per figure family into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_rows(&dir.join(RESTORED_FILE), &self.restored)?;
        write_rows(&dir.join(CLASS_FILE), &self.classes)?;
        write_rows(&dir.join(ENVELOPE_FILE), &self.envelopes)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::replica_feeder;
    use crate::optimizer::{solve, Budget};
    use crate::plan::RuleSet;
    use crate::scenario::Scenario;
    use crate::topology::Season;

    #[test]
    fn replica_trajectories_respect_limits() {
        let net = Network::new(replica_feeder()).unwrap();
        let sc = Scenario::build(&net, Season::Summer, 10.0, 60, Some(1), 32, 15.0).unwrap();
        let (plan, _) = solve(&net, &sc, RuleSet::Ssdmgf, None, &Budget::nodes(20_000)).unwrap();
        let tabs = report_render(&net, std::slice::from_ref(&plan));
        assert_eq!(tabs.restored.len(), 3 * 32);
        assert_eq!(tabs.classes.len(), 32);
        assert_eq!(tabs.envelopes.len(), 3 * 32);
        for w in tabs.classes.windows(2) {
            let (a, b) = (w[0].class.unwrap(), w[1].class.unwrap());
            assert!(b <= a || (w[1].tg_available && !w[0].tg_available), "{a} -> {b}");
        }
        let band = net.params.voltage_band;
        for e in &tabs.envelopes {
            let (lo, hi) = match e.quantity.as_str() {
                "soc" => (0.2, 1.0),
                "voltage" => (band.lo, band.hi),
                _ => continue,
            };
            assert!(e.min.unwrap() >= lo - 1e-9 && e.max.unwrap() <= hi + 1e-9, "{e:?}");
        }
        let dir = tempfile::tempdir().unwrap();
        tabs.write_dir(dir.path()).unwrap();
        for name in [RESTORED_FILE, CLASS_FILE, ENVELOPE_FILE] {
            assert!(dir.path().join(name).exists());
        }
    }
}
