//! Per-block, per-step input features of a scenario.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::scenario::Scenario;
use crate::topology::LoadClass;

pub const CHANNELS: [&str; 10] =
    ["p_cl", "p_nl", "p_pv", "u_tg", "y_dmg", "y_bess", "s_bess", "e_bess", "n_esw", "n_ssw"];

/// Node features `[t][k][f]` flattened, plus one flag per switch edge
/// (ESWs then SSWs) marking the SSWs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTensor {
    pub steps: usize,
    pub blocks: usize,
    pub channels: Vec<String>,
    pub x: Vec<f64>,
    pub edge_ssw: Vec<f64>,
}

/// Shape header written next to the binary tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHeader {
    pub scenario_id: String,
    #[serde(rename = "T")]
    pub steps: usize,
    #[serde(rename = "K")]
    pub blocks: usize,
    #[serde(rename = "F")]
    pub features: usize,
    pub channels: Vec<String>,
    pub dtype: String,
    pub edge_ssw: Vec<f64>,
}

impl FeatureTensor {
    pub fn get(&self, t: usize, k: usize, f: usize) -> f64 {
        self.x[(t * self.blocks + k) * self.channels.len() + f]
    }

    pub fn channel(name: &str) -> Option<usize> {
        CHANNELS.iter().position(|&c| c == name)
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.x.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    /// Writes the raw little-endian tensor to `path` and the JSON shape
    /// header to the same path with a `.json` extension.
    pub fn write(&self, scenario_id: &str, path: &Path) -> Result<()> {
        let io = |e| Error::File { path: path.display().to_string(), source: e };
        std::fs::File::create(path).and_then(|mut f| f.write_all(&self.to_le_bytes())).map_err(io)?;
        let header = FeatureHeader {
            scenario_id: scenario_id.to_string(),
            steps: self.steps,
            blocks: self.blocks,
            features: self.channels.len(),
            channels: self.channels.clone(),
            dtype: "f64-le".into(),
            edge_ssw: self.edge_ssw.clone(),
        };
        let hp = path.with_extension("json");
        std::fs::write(&hp, serde_json::to_string_pretty(&header)?)
            .map_err(|e| Error::File { path: hp.display().to_string(), source: e })?;
        Ok(())
    }
}

pub fn build_features(net: &Network, sc: &Scenario) -> Result<FeatureTensor> {
    let steps = sc.steps();
    if sc.load_mult.len() != steps || sc.pv_eta.len() != steps {
        return Err(Error::Scenario(format!("profile length does not match the horizon of {}", sc.id)));
    }
    let nk = net.n_blocks();
    let nf = CHANNELS.len();
    let f = &net.feeder;
    let mut p_cl = vec![0.0; nk];
    let mut p_nl = vec![0.0; nk];
    for (i, ld) in f.loads.iter().enumerate() {
        let p: f64 = ld.p_nom.iter().sum();
        match ld.class {
            LoadClass::Cl => p_cl[net.load_block[i]] += p,
            LoadClass::Nl => p_nl[net.load_block[i]] += p,
        }
    }
    let mut pv = vec![0.0; nk];
    for (i, d) in f.pv.iter().enumerate() {
        pv[net.pv_block[i]] += d.s_nom;
    }
    let mut n_esw = vec![0.0; nk];
    let mut n_ssw = vec![0.0; nk];
    for &l in &net.esw {
        let (a, b) = net.line_blocks(l);
        n_esw[a] += 1.0;
        n_esw[b] += 1.0;
    }
    for &l in &net.ssw {
        let (a, b) = net.line_blocks(l);
        n_ssw[a] += 1.0;
        n_ssw[b] += 1.0;
    }
    let mut x = vec![0.0; steps * nk * nf];
    for t in 0..steps {
        for k in 0..nk {
            let bess = net.bess_of_block[k].map(|d| &f.bess[d]);
            let row = [
                p_cl[k] * sc.load_mult[t],
                p_nl[k] * sc.load_mult[t],
                pv[k] * sc.pv_eta[t],
                sc.u_tg[t] as i32 as f64,
                (sc.damaged == Some(k)) as i32 as f64,
                bess.is_some() as i32 as f64,
                bess.map_or(0.0, |b| b.s_nom),
                bess.map_or(0.0, |b| b.e_nom),
                n_esw[k],
                n_ssw[k],
            ];
            let at = (t * nk + k) * nf;
            x[at..at + nf].copy_from_slice(&row);
        }
    }
    let edge_ssw = net.esw.iter().map(|_| 0.0).chain(net.ssw.iter().map(|_| 1.0)).collect();
    Ok(FeatureTensor { steps, blocks: nk, channels: CHANNELS.iter().map(|s| s.to_string()).collect(), x, edge_ssw })
}
