//! Exhaustive enumeration for tiny instances, used as an oracle for the
//! branch and bound.

use crate::error::{Error, Result};
use crate::network::Network;
use crate::optimizer::fill::{fill, StepAction};
use crate::plan::config::RuleSet;
use crate::plan::model::{RestorationPlan, StepRecord};
use crate::plan::objective::step_score;
use crate::plan::validate::validate_step;
use crate::scenario::Scenario;

pub const MAX_BLOCKS: usize = 5;
pub const MAX_STEPS: usize = 6;
pub const MAX_SSW: usize = 2;

struct Search<'a> {
    net: &'a Network,
    sc: &'a Scenario,
    rules: RuleSet,
    path: Vec<StepRecord>,
    score: Vec<f64>,
    best: Option<(f64, Vec<StepRecord>)>,
    visited: usize,
}

impl Search<'_> {
    fn go(&mut self, t: usize) -> Result<()> {
        if t == self.sc.steps() {
            let total: f64 = self.score.iter().sum();
            if self.best.as_ref().map_or(true, |(b, _)| total > *b) {
                self.best = Some((total, self.path.clone()));
            }
            return Ok(());
        }
        let net = self.net;
        let prev = self.path.last();
        let open_esw: Vec<usize> = (0..net.esw.len()).filter(|&i| prev.map_or(true, |p| !p.u_esw[i])).collect();
        let open_ssw: Vec<usize> = (0..net.ssw.len()).filter(|&i| prev.map_or(true, |p| !p.u_ssw[i])).collect();
        let open_nl: Vec<usize> = (0..net.nl_buses.len()).filter(|&i| prev.map_or(true, |p| !p.u_nlb[i])).collect();
        let bits = open_esw.len() + open_ssw.len() + open_nl.len();
        for mask in 0u64..(1u64 << bits) {
            let pick = |items: &[usize], off: usize| -> Vec<usize> {
                items.iter().enumerate().filter(|(j, _)| mask >> (off + j) & 1 == 1).map(|(_, &i)| i).collect()
            };
            let action = StepAction {
                close_esw: pick(&open_esw, 0),
                close_ssw: pick(&open_ssw, open_esw.len()),
                pick_nl: pick(&open_nl, open_esw.len() + open_ssw.len()),
            };
            let start = self.path.len().saturating_sub(3);
            let hist: Vec<&StepRecord> = self.path[start..].iter().collect();
            let rec = fill(net, self.sc, &hist, t, &action)?;
            self.visited += 1;
            let mut window = hist;
            window.push(&rec);
            if !validate_step(net, self.sc, self.rules, &window, t)?.is_empty() {
                continue;
            }
            self.score.push(self.sc.dt_min * step_score(net, &rec));
            self.path.push(rec);
            self.go(t + 1)?;
            self.path.pop();
            self.score.pop();
        }
        Ok(())
    }
}

/// Enumerates every switching and pickup trajectory and returns an optimal
/// feasible plan with its objective.
pub fn brute_force_small(net: &Network, sc: &Scenario, rules: RuleSet) -> Result<(RestorationPlan, f64)> {
    if net.n_blocks() > MAX_BLOCKS || sc.steps() > MAX_STEPS || net.ssw.len() > MAX_SSW {
        return Err(Error::TooLarge(format!(
            "{} blocks, {} steps, {} SSWs exceed the exhaustive limits {MAX_BLOCKS}/{MAX_STEPS}/{MAX_SSW}",
            net.n_blocks(),
            sc.steps(),
            net.ssw.len()
        )));
    }
    sc.check(net)?;
    let mut s = Search { net, sc, rules, path: Vec::new(), score: Vec::new(), best: None, visited: 0 };
    s.go(0)?;
    let (obj, steps) = s.best.ok_or_else(|| Error::Infeasible(format!("no feasible trajectory for {}", sc.id)))?;
    let plan = RestorationPlan {
        scenario_id: sc.id.clone(),
        feeder_hash: net.feeder.source_hash.clone(),
        dt_min: sc.dt_min,
        steps,
    };
    Ok((plan, obj))
}
