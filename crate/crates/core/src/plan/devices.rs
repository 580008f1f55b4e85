//! Device models: cold load pickup, battery state of charge, PV output.

use crate::error::{Error, Result};
use crate::topology::{PhaseSet, PhaseVec};

/// CLPU multiplier at `t` from energization at `t, t-1, t-2, t-3`
/// (`history[0]` is `t`). Missing history counts as de-energized.
pub fn clpu_multiplier(beta: &[f64; 3], history: &[bool]) -> f64 {
    let u = |o: usize| history.get(o).copied().unwrap_or(false) as i32 as f64;
    let mut m = u(0);
    for (o, b) in beta.iter().enumerate() {
        m += b * (u(o) - u(o + 1));
    }
    m
}

/// Demand trajectory of one load given nominal demand and energization per
/// step.
pub fn clpu_demand(p_ld: &[f64], energized: &[bool], beta: &[f64; 3], tan_phi: f64) -> Vec<(f64, f64)> {
    (0..energized.len())
        .map(|t| {
            let hist: Vec<bool> = (0..4).map_while(|o| t.checked_sub(o).map(|s| energized[s])).collect();
            let p = p_ld[t] * clpu_multiplier(beta, &hist);
            (p, p * tan_phi)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BessStep {
    pub soc: f64,
    pub within_bounds: bool,
}

/// Advances the state of charge by one step of `dt_h` hours.
pub fn bess_step(soc_prev: f64, p: &PhaseVec, dt_h: f64, e_nom: f64, bounds: (f64, f64)) -> Result<BessStep> {
    if e_nom == 0.0 {
        return Err(Error::Config("BESS energy rating is zero".into()));
    }
    let soc = soc_prev - p.iter().sum::<f64>() * dt_h / e_nom;
    Ok(BessStep { soc, within_bounds: bounds.0 <= soc && soc <= bounds.1 })
}

/// Per-phase PV output; `energized` is the block status `delay` steps ago.
pub fn pv_output(energized: bool, eta: f64, s_nom: f64, phases: PhaseSet, tan_phi: f64) -> (PhaseVec, PhaseVec) {
    let mut p = [0.0; 3];
    let mut q = [0.0; 3];
    if energized {
        for n in phases.iter() {
            p[n] = eta * s_nom / 3.0;
            q[n] = p[n] * tan_phi;
        }
    }
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BETA: [f64; 3] = [1.0, 0.6, 0.3];

    #[test]
    fn staircase_after_pickup() {
        let on = [false, true, true, true, true, true];
        let d = clpu_demand(&[1.0; 6], &on, &BETA, 0.0);
        let p: Vec<f64> = d.iter().map(|x| x.0).collect();
        let want = [0.0, 2.0, 1.6, 1.3, 1.0, 1.0];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn never_energized_is_zero() {
        let d = clpu_demand(&[1.0; 4], &[false; 4], &BETA, 0.5);
        assert!(d.iter().all(|&(p, q)| p == 0.0 && q == 0.0));
    }

    #[test]
    fn soc_arithmetic() {
        let s = bess_step(0.9, &[0.5, 0.25, 0.25], 0.25, 2.0, (0.2, 1.0)).unwrap();
        assert!((s.soc - 0.775).abs() < 1e-12 && s.within_bounds);
        assert_eq!(bess_step(0.5, &[0.0; 3], 0.25, 2.0, (0.2, 1.0)).unwrap().soc, 0.5);
        assert!(bess_step(0.5, &[0.0; 3], 0.25, 0.0, (0.2, 1.0)).is_err());
    }

    #[test]
    fn pv_per_phase() {
        let (p, q) = pv_output(true, 0.5, 0.3, PhaseSet::ABC, 0.0);
        assert!(p.iter().all(|&x| (x - 0.05).abs() < 1e-12));
        assert_eq!(q, [0.0; 3]);
        assert_eq!(pv_output(false, 0.5, 0.3, PhaseSet::ABC, 0.0).0, [0.0; 3]);
    }
}
