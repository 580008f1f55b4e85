//! Plan directories: a JSON manifest plus one CSV per variable family, with
//! one row per step.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::plan::model::{RestorationPlan, StepRecord};
use crate::topology::PhaseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanManifest {
    pub scenario_id: String,
    pub feeder_hash: String,
    pub dt_min: f64,
    pub horizon: usize,
    pub families: Vec<String>,
    /// Effective configuration of the run that produced the plan.
    #[serde(default)]
    pub config: serde_json::Value,
}

type Getter = Box<dyn Fn(&StepRecord) -> Vec<f64>>;
type Setter = Box<dyn Fn(&mut StepRecord, &[f64])>;

struct Family {
    name: &'static str,
    columns: Vec<String>,
    get: Getter,
    set: Setter,
}

fn bools(
    name: &'static str,
    columns: Vec<String>,
    get: fn(&StepRecord) -> &Vec<bool>,
    get_mut: fn(&mut StepRecord) -> &mut Vec<bool>,
) -> Family {
    Family {
        name,
        columns,
        get: Box::new(move |r| get(r).iter().map(|&b| b as i32 as f64).collect()),
        set: Box::new(move |r, v| *get_mut(r) = v.iter().map(|&x| x != 0.0).collect()),
    }
}

fn floats(
    name: &'static str,
    columns: Vec<String>,
    get: fn(&StepRecord) -> &Vec<f64>,
    get_mut: fn(&mut StepRecord) -> &mut Vec<f64>,
) -> Family {
    Family { name, columns, get: Box::new(move |r| get(r).clone()), set: Box::new(move |r, v| *get_mut(r) = v.to_vec()) }
}

fn phased(
    name: &'static str,
    entities: &[String],
    get: fn(&StepRecord) -> &Vec<PhaseVec>,
    get_mut: fn(&mut StepRecord) -> &mut Vec<PhaseVec>,
) -> Family {
    let columns = entities.iter().flat_map(|e| ["a", "b", "c"].map(|p| format!("{e}.{p}"))).collect();
    Family {
        name,
        columns,
        get: Box::new(move |r| get(r).iter().flatten().copied().collect()),
        set: Box::new(move |r, v| *get_mut(r) = v.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()),
    }
}

fn families(net: &Network) -> Vec<Family> {
    let f = &net.feeder;
    let blocks: Vec<String> = (0..net.n_blocks()).map(|k| format!("k{k}")).collect();
    let buses: Vec<String> = f.buses.iter().map(|b| b.id.to_string()).collect();
    let lines: Vec<String> = f.lines.iter().map(|l| l.id.clone()).collect();
    let esw: Vec<String> = net.esw.iter().map(|&l| f.line(l).id.clone()).collect();
    let ssw: Vec<String> = net.ssw.iter().map(|&l| f.line(l).id.clone()).collect();
    let nlb: Vec<String> = net.nl_buses.iter().map(|&b| f.bus(b).id.to_string()).collect();
    let classes: Vec<String> = (0..=net.catalogue.max_class).map(|c| format!("c{c}")).collect();
    let modes: Vec<String> = (0..net.catalogue.len()).map(|m| format!("m{m}")).collect();
    let bs = &net.bs_blocks;
    let mut pairs = Vec::new();
    for i in 0..bs.len() {
        for j in i + 1..bs.len() {
            pairs.push(format!("k{}-k{}", bs[i], bs[j]));
        }
    }
    let bess: Vec<String> = f.bess.iter().map(|b| b.id.clone()).collect();
    let pv: Vec<String> = f.pv.iter().map(|p| p.id.clone()).collect();
    let loads: Vec<String> = f.loads.iter().enumerate().map(|(i, l)| format!("L{i}@{}", f.bus(l.bus).id)).collect();

    vec![
        Family {
            name: "scalars",
            columns: vec!["u_tg".into(), "s".into()],
            get: Box::new(|r| vec![r.u_tg as i32 as f64, r.s as f64]),
            set: Box::new(|r, v| {
                r.u_tg = v[0] != 0.0;
                r.s = v[1] as i64;
            }),
        },
        bools("u_bk", blocks.clone(), |r| &r.u_bk, |r| &mut r.u_bk),
        bools("u_b", buses.clone(), |r| &r.u_b, |r| &mut r.u_b),
        bools("u_l", lines.clone(), |r| &r.u_l, |r| &mut r.u_l),
        bools("u_esw", esw, |r| &r.u_esw, |r| &mut r.u_esw),
        bools("u_ssw", ssw, |r| &r.u_ssw, |r| &mut r.u_ssw),
        bools("u_nlb", nlb, |r| &r.u_nlb, |r| &mut r.u_nlb),
        bools("u_c", classes, |r| &r.u_c, |r| &mut r.u_c),
        bools("u_m", modes, |r| &r.u_m, |r| &mut r.u_m),
        bools("u_sync", pairs.clone(), |r| &r.u_sync, |r| &mut r.u_sync),
        bools("u_sync_minus", pairs.clone(), |r| &r.u_sync_minus, |r| &mut r.u_sync_minus),
        bools("u_sync_plus", pairs, |r| &r.u_sync_plus, |r| &mut r.u_sync_plus),
        floats("f_block", blocks, |r| &r.f_block, |r| &mut r.f_block),
        floats("f_bus", buses.clone(), |r| &r.f_bus, |r| &mut r.f_bus),
        floats("f_qss", bess.clone(), |r| &r.f_qss, |r| &mut r.f_qss),
        floats("df_sync", bess.clone(), |r| &r.df_sync, |r| &mut r.df_sync),
        floats("rocof", bess.clone(), |r| &r.rocof, |r| &mut r.rocof),
        floats("nadir", bess.clone(), |r| &r.nadir, |r| &mut r.nadir),
        floats("soc", bess.clone(), |r| &r.soc, |r| &mut r.soc),
        Family {
            name: "tg",
            columns: ["a", "b", "c"].iter().flat_map(|n| [format!("p.{n}"), format!("q.{n}")]).collect(),
            get: Box::new(|r| (0..3).flat_map(|n| [r.p_tg[n], r.q_tg[n]]).collect()),
            set: Box::new(|r, v| {
                for n in 0..3 {
                    r.p_tg[n] = v[2 * n];
                    r.q_tg[n] = v[2 * n + 1];
                }
            }),
        },
        phased("p_bess", &bess, |r| &r.p_bess, |r| &mut r.p_bess),
        phased("q_bess", &bess, |r| &r.q_bess, |r| &mut r.q_bess),
        phased("p_pv", &pv, |r| &r.p_pv, |r| &mut r.p_pv),
        phased("q_pv", &pv, |r| &r.q_pv, |r| &mut r.q_pv),
        phased("p_load", &loads, |r| &r.p_load, |r| &mut r.p_load),
        phased("q_load", &loads, |r| &r.q_load, |r| &mut r.q_load),
        phased("p_line", &lines, |r| &r.p_line, |r| &mut r.p_line),
        phased("q_line", &lines, |r| &r.q_line, |r| &mut r.q_line),
        phased("v", &buses, |r| &r.v, |r| &mut r.v),
    ]
}

/// Writes `manifest.json` and the family CSVs into `dir`.
pub fn write_plan_dir(dir: &Path, net: &Network, plan: &RestorationPlan, config: serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let fams = families(net);
    for fam in &fams {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", fam.name)))?;
        let mut header = vec!["t".to_string()];
        header.extend(fam.columns.iter().cloned());
        w.write_record(&header)?;
        for (t, rec) in plan.steps.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend((fam.get)(rec).iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    let manifest = PlanManifest {
        scenario_id: plan.scenario_id.clone(),
        feeder_hash: plan.feeder_hash.clone(),
        dt_min: plan.dt_min,
        horizon: plan.steps.len(),
        families: fams.iter().map(|f| f.name.to_string()).collect(),
        config,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Reads a plan directory written by [`write_plan_dir`].
pub fn read_plan_dir(dir: &Path, net: &Network) -> Result<RestorationPlan> {
    let manifest: PlanManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let mut steps = vec![StepRecord::dead(net); manifest.horizon];
    for fam in families(net) {
        let path = dir.join(format!("{}.csv", fam.name));
        let mut r = csv::Reader::from_path(&path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() != fam.columns.len() + 1 || header[1..] != fam.columns[..] {
            return Err(Error::Format(format!("{}: columns do not match the feeder", path.display())));
        }
        let mut n = 0;
        for (t, row) in r.records().enumerate() {
            let row = row?;
            if t >= manifest.horizon {
                return Err(Error::Format(format!("{}: more rows than the horizon", path.display())));
            }
            let vals: Vec<f64> = row
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>().map_err(|_| Error::Format(format!("{}: bad number '{s}'", path.display()))))
                .collect::<Result<_>>()?;
            (fam.set)(&mut steps[t], &vals);
            n += 1;
        }
        if n != manifest.horizon {
            return Err(Error::Format(format!("{}: {n} rows, expected {}", path.display(), manifest.horizon)));
        }
    }
    Ok(RestorationPlan { scenario_id: manifest.scenario_id, feeder_hash: manifest.feeder_hash, dt_min: manifest.dt_min, steps })
}
