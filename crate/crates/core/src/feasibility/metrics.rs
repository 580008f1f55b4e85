//! Discrepancy metrics between predicted and reference decision tensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::logits::Dims;

/// Root and synchronization decision tensors, `[t][k][r]` and `[t][e]`
/// flattened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTensors {
    pub dims: Dims,
    pub root: Vec<f64>,
    pub sync: Vec<f64>,
}

impl DecisionTensors {
    pub fn check(&self) -> Result<()> {
        if self.root.len() != self.dims.root_len() || self.sync.len() != self.dims.sync_len() {
            return Err(Error::Dimension(format!("tensor sizes do not match shape {:?}", self.dims)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub j_root: f64,
    pub j_sync: f64,
    pub j_spar: f64,
    pub j_temp: f64,
    pub j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    pub gamma: f64,
    pub eta: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        MetricWeights { gamma: 0.1, eta: 0.1 }
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Root discrepancy, synchronization discrepancy, mean closure rate of the
/// prediction, its temporal label churn, and their weighted sum. Needs at
/// least two steps for the churn term.
pub fn metrics(y: &DecisionTensors, y_ref: &DecisionTensors, w: MetricWeights) -> Result<Metrics> {
    y.check()?;
    y_ref.check()?;
    if y.dims != y_ref.dims {
        return Err(Error::Dimension(format!("shapes {:?} and {:?} differ", y.dims, y_ref.dims)));
    }
    let d = y.dims;
    if d.t < 2 {
        return Err(Error::Dimension("label churn needs at least two steps".into()));
    }
    let kr = d.k * d.r;
    let te = (d.t * d.e) as f64;
    let j_root = l1(&y.root, &y_ref.root) / (d.t * kr) as f64;
    let (j_sync, j_spar) = if d.e == 0 {
        (0.0, 0.0)
    } else {
        (l1(&y.sync, &y_ref.sync) / te, y.sync.iter().sum::<f64>() / te)
    };
    let churn: f64 = (1..d.t).map(|t| l1(&y.root[t * kr..(t + 1) * kr], &y.root[(t - 1) * kr..t * kr])).sum();
    let j_temp = churn / ((d.t - 1) * kr) as f64;
    Ok(Metrics { j_root, j_sync, j_spar, j_temp, j: j_root + j_sync + w.gamma * j_spar + w.eta * j_temp })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_flip_churn() {
        let dims = Dims { t: 2, k: 1, r: 2, e: 1 };
        let y = DecisionTensors { dims, root: vec![1.0, 0.0, 0.0, 1.0], sync: vec![1.0, 1.0] };
        let m = metrics(&y, &y, MetricWeights::default()).unwrap();
        assert_eq!(m.j_temp, 1.0);
        assert_eq!(m.j_spar, 1.0);
        assert_eq!((m.j_root, m.j_sync), (0.0, 0.0));
    }

    #[test]
    fn one_step_is_an_error() {
        let dims = Dims { t: 1, k: 1, r: 2, e: 0 };
        let y = DecisionTensors { dims, root: vec![1.0, 0.0], sync: vec![] };
        assert!(metrics(&y, &y, MetricWeights::default()).is_err());
    }
}
