use crate::network::Network;
use crate::plan::model::{RestorationPlan, StepRecord};
use crate::topology::LoadClass;

/// Weighted restored demand of one step, before multiplying by the step
/// length.
pub fn step_score(net: &Network, rec: &StepRecord) -> f64 {
    let p = &net.params;
    net.feeder
        .loads
        .iter()
        .zip(&rec.p_load)
        .map(|(ld, pl)| {
            let w = match ld.class {
                LoadClass::Cl => p.alpha_cl,
                LoadClass::Nl => p.alpha_nl,
            };
            w * pl.iter().sum::<f64>()
        })
        .sum()
}

/// Restored-energy score: step length in minutes times weighted restored
/// active demand, summed over the horizon.
pub fn objective_value(net: &Network, plan: &RestorationPlan) -> f64 {
    plan.steps.iter().map(|r| plan.dt_min * step_score(net, r)).sum()
}
