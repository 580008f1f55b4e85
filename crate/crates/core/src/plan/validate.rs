//! Constraint validator for restoration plans.

use crate::dsu::Dsu;
use crate::error::{Error, Result};
use crate::network::{Network, Switch};
use crate::plan::config::RuleSet;
use crate::plan::devices::clpu_multiplier;
use crate::plan::frequency::{evaluate_frequency, sync_event_indicator};
use crate::plan::islands::{islands, sync_from_islands};
use crate::plan::model::{RestorationPlan, StepRecord};
use crate::plan::report::{Collector, Constraint as C, Violation, ViolationReport};
use crate::powerflow::{nodal_balance_check, security_check, voltage_drop_check};
use crate::scenario::Scenario;
use crate::sync_structure::{check_transition_safety, pair_index, SyncMatrix};
use crate::topology::{LoadClass, PhaseVec};

/// Validates every step of a plan.
pub fn validate_plan(net: &Network, sc: &Scenario, plan: &RestorationPlan, rules: RuleSet) -> Result<ViolationReport> {
    if plan.steps.len() != sc.steps() {
        return Err(Error::Dimension(format!(
            "plan has {} steps, scenario has {}",
            plan.steps.len(),
            sc.steps()
        )));
    }
    let mut violations = Vec::new();
    for t in 0..plan.steps.len() {
        violations.extend(validate_step(net, sc, rules, &plan.window(t), t)?);
    }
    Ok(ViolationReport { violations })
}

/// Both sides of the radiality identity and the slack count at one step.
pub fn radiality_terms(net: &Network, rec: &StepRecord) -> (i64, i64, i64) {
    let lines = rec.u_l.iter().filter(|&&u| u).count() as i64;
    let buses = rec.u_b.iter().filter(|&&u| u).count() as i64;
    (lines, buses, slack_count(net, rec))
}

/// Sources minus closed SSWs.
pub fn slack_count(net: &Network, rec: &StepRecord) -> i64 {
    net.feeder.bess.len() as i64 + rec.u_tg as i64 - rec.u_ssw.iter().filter(|&&u| u).count() as i64
}

/// Validates step `t`. `window` holds up to four consecutive records ending
/// at `t`, oldest first.
pub fn validate_step(
    net: &Network,
    sc: &Scenario,
    rules: RuleSet,
    window: &[&StepRecord],
    t: usize,
) -> Result<Vec<Violation>> {
    let rec = *window.last().ok_or_else(|| Error::Dimension("empty window".into()))?;
    if window.len() < (t + 1).min(4) {
        return Err(Error::Dimension(format!("window for step {t} has {} records", window.len())));
    }
    for r in window {
        r.check_dimensions(net)?;
    }
    if t >= sc.steps() {
        return Err(Error::Dimension(format!("step {t} beyond horizon {}", sc.steps())));
    }
    let back = |o: usize| -> Option<&StepRecord> { (o < window.len()).then(|| window[window.len() - 1 - o]) };
    let prev = if t == 0 { None } else { back(1) };
    let p = &net.params;
    let mut c = Collector::new(t, p.tolerance);

    check_frequency(net, prev, rec, &mut c);
    check_sync(net, rules, prev, rec, &mut c);
    check_energization(net, sc, rules, prev, rec, &mut c);
    check_devices(net, sc, t, &back, prev, rec, &mut c);

    let mut out = c.out;
    out.extend(nodal_balance_check(net, rec, t));
    out.extend(voltage_drop_check(net, rec, t));
    out.extend(security_check(net, prev, rec, t));
    Ok(out)
}

fn check_frequency(net: &Network, prev: Option<&StepRecord>, rec: &StepRecord, c: &mut Collector) {
    let fs = &net.params.frequency;
    let f_cap = fs.f.hi;
    if let Some(k) = net.bs.tg {
        c.equal(C::TgFrequency, || format!("k{k}"), rec.f_block[k], fs.nominal_hz * rec.u_tg as i32 as f64);
        if rec.u_tg {
            c.check(C::FrequencySecurity, || format!("k{k}/f"), fs.f.excess(rec.f_block[k]));
        }
    }
    let expect = evaluate_frequency(net, prev, rec);
    for (d, dev) in net.feeder.bess.iter().enumerate() {
        let k = net.bess_block[d];
        let ent = |what: &str| format!("{}/k{k}/{what}", dev.id);
        let delta = sync_event_indicator(net, prev, rec, k);
        c.equal(C::BessFrequency, || ent("f"), rec.f_block[k], rec.f_qss[d] + delta * rec.df_sync[d]);
        c.equal(C::BessFrequency, || ent("qss"), rec.f_qss[d], expect.f_qss[d]);
        c.equal(C::BessFrequency, || ent("sync"), delta * rec.df_sync[d], expect.delta[d] * expect.df_sync[d]);
        c.equal(C::BessFrequency, || ent("rocof"), rec.rocof[d], expect.rocof[d]);
        c.equal(C::BessFrequency, || ent("nadir"), rec.nadir[d], expect.nadir[d]);
        if rec.u_bk[k] {
            c.check(C::FrequencySecurity, || ent("f"), fs.f.excess(rec.f_block[k]));
            c.check(C::FrequencySecurity, || ent("qss"), fs.qss.excess(rec.f_qss[d]));
            c.check(C::FrequencySecurity, || ent("rocof"), fs.rocof.excess(rec.rocof[d]));
            c.check(C::FrequencySecurity, || ent("nadir"), fs.nadir.excess(rec.nadir[d]));
        }
    }
    for &k in &net.bs_blocks {
        for &b in &net.partition.buses[k] {
            if net.switch_terminal[b.0] {
                let id = net.feeder.bus(b).id;
                c.equal(C::TerminalFrequency, || format!("bus {id}"), rec.f_bus[b.0], rec.f_block[k]);
            }
        }
    }
    for (i, &l) in net.esw.iter().enumerate() {
        let line = net.feeder.line(l);
        let gap = (rec.f_bus[line.from.0] - rec.f_bus[line.to.0]).abs();
        let relax = if rec.u_esw[i] { 0.0 } else { f_cap };
        c.check(C::EswFrequency, || format!("line {}", line.id), gap - relax);
    }
    for (i, &l) in net.ssw.iter().enumerate() {
        let line = net.feeder.line(l);
        let gap = (rec.f_bus[line.from.0] - rec.f_bus[line.to.0]).abs();
        let relax = if rec.u_ssw[i] { 0.0 } else { f_cap };
        c.check(C::SswFrequency, || format!("line {}", line.id), gap - relax - fs.epsilon);
    }
}

fn check_sync(net: &Network, rules: RuleSet, prev: Option<&StepRecord>, rec: &StepRecord, c: &mut Collector) {
    let fs = &net.params.frequency;
    let n = net.bs_blocks.len();
    let bs = &net.bs_blocks;

    // Class and mode selection.
    let ones = rec.u_c.iter().filter(|&&u| u).count();
    c.require(C::ClassSelection, || "one-hot".into(), ones == 1);
    let weighted: i64 = rec.u_c.iter().enumerate().filter(|(_, &u)| u).map(|(k, _)| k as i64).sum();
    c.check(C::ClassSelection, || "class".into(), (weighted - rec.s).abs() as f64);
    for (class, &uc) in rec.u_c.iter().enumerate() {
        let sum = net
            .catalogue
            .entries
            .iter()
            .zip(&rec.u_m)
            .filter(|(e, &u)| u && e.class == class)
            .count() as f64;
        c.equal(C::ModeSelection, || format!("class {class}"), sum, uc as i32 as f64);
    }

    // Indicators against frequencies.
    for i in 0..n {
        for j in i + 1..n {
            let idx = pair_index(n, i, j);
            let ent = || format!("k{}-k{}", bs[i], bs[j]);
            if let Some(pr) = prev {
                c.require(C::SyncMonotone, ent, rec.u_sync[idx] || !pr.u_sync[idx]);
            }
            let (m, s, pl) = (rec.u_sync_minus[idx], rec.u_sync[idx], rec.u_sync_plus[idx]);
            c.require(C::SyncIndicator, ent, (m as u8 + s as u8 + pl as u8) == 1);
            let diff = rec.f_block[bs[j]] - rec.f_block[bs[i]] + fs.mu;
            let (mf, sf, pf) = (m as i32 as f64, s as i32 as f64, pl as i32 as f64);
            let lower = 2.0 * fs.epsilon * mf - fs.epsilon * sf - fs.f.hi * pf;
            let upper = fs.f.hi * mf + fs.epsilon * sf - 2.0 * fs.epsilon * pf;
            c.check(C::SyncIndicator, ent, (lower - diff).max(diff - upper));
        }
    }

    // Mode against indicators.
    for (mi, e) in net.catalogue.entries.iter().enumerate() {
        if !rec.u_m[mi] {
            continue;
        }
        for i in 0..n {
            for j in i + 1..n {
                let want = e.mode.same_part(bs[i], bs[j]);
                c.require(C::ModeSync, || format!("k{}-k{}", bs[i], bs[j]), rec.u_sync[pair_index(n, i, j)] == want);
            }
        }
        let active = net.bs.active(rec.u_tg);
        c.require(C::ModeActiveSet, || format!("mode {}", e.mode), e.mode.members() == active);
    }

    let isl = islands(net, rec);
    let physical = sync_from_islands(net, &isl);
    for i in 0..n {
        for j in i + 1..n {
            let idx = pair_index(n, i, j);
            c.require(C::SyncIslands, || format!("k{}-k{}", bs[i], bs[j]), physical[idx] == rec.u_sync[idx]);
        }
    }

    if rules.safe_transitions() {
        let before = prev.map_or_else(|| SyncMatrix::zeros(bs.clone()), |p| p.sync_matrix(net));
        let verdict = check_transition_safety(&before, &rec.sync_matrix(net));
        for (a, b, d) in verdict.violations {
            c.require(C::SafeTransition, || format!("k{a}-k{b}-k{d}"), false);
        }
    }
}

fn check_energization(
    net: &Network,
    sc: &Scenario,
    rules: RuleSet,
    prev: Option<&StepRecord>,
    rec: &StepRecord,
    c: &mut Collector,
) {
    let f = &net.feeder;
    let bit = |b: bool| b as i32 as f64;
    let prev_bk = |k: usize| prev.map_or(false, |p| p.u_bk[k]);
    let prev_b = |b: usize| prev.map_or(false, |p| p.u_b[b]);
    let t = c.t;

    c.require(C::TgSchedule, || "u_tg".into(), rec.u_tg == sc.u_tg[t]);
    for k in 0..net.n_blocks() {
        c.require(C::BlockMonotone, || format!("k{k}"), rec.u_bk[k] || !prev_bk(k));
        for &b in &net.partition.buses[k] {
            c.require(C::BlockBuses, || format!("bus {}", f.bus(b).id), rec.u_b[b.0] == rec.u_bk[k]);
        }
        for &l in &net.partition.internal_lines[k] {
            c.require(C::BlockLines, || format!("line {}", f.line(l).id), rec.u_l[l.0] == rec.u_bk[k]);
        }
        let mut new_closures = 0.0;
        for &l in &net.partition.esw_lines[k] {
            let Some(Switch::Esw(i)) = net.switch_of_line[l.0] else { continue };
            c.require(C::EswBlock, || format!("k{k}/line {}", f.line(l).id), rec.u_bk[k] || !rec.u_esw[i]);
            new_closures += bit(rec.u_esw[i]) - bit(prev.map_or(false, |p| p.u_esw[i]));
        }
        let cap = bit(prev_bk(k)) * net.esw_big_m(k) as f64 + 1.0;
        c.check(C::EswPickup, || format!("k{k}"), new_closures - cap);
        if net.bess_of_block[k].is_some() {
            c.require(C::SourceEnergization, || format!("k{k}"), rec.u_bk[k]);
        }
        if net.bs.tg == Some(k) {
            c.require(C::SourceEnergization, || format!("k{k}"), rec.u_bk[k] == rec.u_tg);
        }
        if sc.damaged == Some(k) {
            c.require(C::DamagedBlock, || format!("k{k}"), !rec.u_bk[k]);
        }
    }
    for (i, &l) in net.esw.iter().enumerate() {
        let line = f.line(l);
        let ent = || format!("line {}", line.id);
        let ends = bit(prev_b(line.from.0)) + bit(prev_b(line.to.0));
        c.check(C::EswTerminal, ent, bit(rec.u_esw[i]) - ends);
        let delta = bit(rec.u_esw[i]) - bit(prev.map_or(false, |p| p.u_esw[i]));
        c.check(C::EswMerge, ent, delta - (2.0 - ends));
        c.require(C::LineStatus, ent, rec.u_l[l.0] == rec.u_esw[i]);
    }
    for (i, &l) in net.ssw.iter().enumerate() {
        let line = f.line(l);
        let ent = || format!("line {}", line.id);
        let before = prev.map_or(false, |p| p.u_ssw[i]);
        c.require(C::SswMonotone, ent, rec.u_ssw[i] || !before);
        let ends = bit(prev_b(line.from.0)) + bit(prev_b(line.to.0));
        c.check(C::SswTerminals, ent, 2.0 * bit(rec.u_ssw[i]) - ends);
        c.require(C::LineStatus, ent, rec.u_l[l.0] == rec.u_ssw[i]);
        if rules.tg_lockout() && !rec.u_tg {
            c.require(C::TgLockout, ent, !rec.u_ssw[i]);
        }
    }
    for (i, line) in f.lines.iter().enumerate() {
        if rec.u_l[i] {
            c.require(C::LineStatus, || format!("line {}", line.id), rec.u_b[line.from.0] && rec.u_b[line.to.0]);
        }
    }

    let (lines, buses, s) = radiality_terms(net, rec);
    c.check(C::SlackCount, || "s".into(), (rec.s - s).abs() as f64);
    c.check(C::Radiality, || "lines".into(), (lines - (buses - rec.s)).abs() as f64);
    check_forest(net, rec, c);
}

/// The energized graph is acyclic and every tree holds an available source.
fn check_forest(net: &Network, rec: &StepRecord, c: &mut Collector) {
    let f = &net.feeder;
    let nb = f.buses.len();
    let mut dsu = Dsu::new(nb);
    for (i, line) in f.lines.iter().enumerate() {
        if rec.u_l[i] && rec.u_b[line.from.0] && rec.u_b[line.to.0] && !dsu.union(line.from.0, line.to.0) {
            c.require(C::Forest, || format!("cycle at line {}", line.id), false);
        }
    }
    let mut sourced = vec![false; nb];
    for dev in &f.bess {
        sourced[dsu.find(dev.bus.0)] = true;
    }
    if let Some(tg) = f.tg.as_ref().filter(|_| rec.u_tg) {
        sourced[dsu.find(tg.bus.0)] = true;
    }
    for b in 0..nb {
        if rec.u_b[b] && dsu.find(b) == b && !sourced[b] {
            c.require(C::Forest, || format!("no source for bus {}", f.buses[b].id), false);
        }
    }
}

fn check_devices<'a>(
    net: &Network,
    sc: &Scenario,
    t: usize,
    back: &dyn Fn(usize) -> Option<&'a StepRecord>,
    prev: Option<&StepRecord>,
    rec: &StepRecord,
    c: &mut Collector,
) {
    let f = &net.feeder;
    let p = &net.params;
    let sq = |x: &PhaseVec, y: &PhaseVec, n: usize| x[n] * x[n] + y[n] * y[n];
    // Capacities compare squared quantities.
    if let Some(tg) = &f.tg {
        let cap = (rec.u_tg as i32 as f64 * tg.s_max / 3.0).powi(2);
        for n in 0..3 {
            c.check(C::TgCapacity, || format!("tg/{}", n), sq(&rec.p_tg, &rec.q_tg, n) - cap);
        }
    } else {
        let any = rec.p_tg.iter().chain(&rec.q_tg).map(|x| x.abs()).fold(0.0, f64::max);
        c.check(C::TgCapacity, || "tg".into(), any);
    }
    for (d, dev) in f.bess.iter().enumerate() {
        let cap = (dev.s_nom / 3.0).powi(2);
        for n in 0..3 {
            c.check(C::BessCapacity, || format!("{}/{}", dev.id, n), sq(&rec.p_bess[d], &rec.q_bess[d], n) - cap);
        }
        let before = prev.map_or(dev.soc_init, |r| r.soc[d]);
        let expect = before - rec.p_bess[d].iter().sum::<f64>() * sc.dt_hours() / dev.e_nom;
        c.equal(C::SocDynamics, || dev.id.clone(), rec.soc[d], expect);
        c.check(C::SocBounds, || dev.id.clone(), (dev.soc_min - rec.soc[d]).max(rec.soc[d] - dev.soc_max));
    }
    for (i, pv) in f.pv.iter().enumerate() {
        let k = net.pv_block[i];
        let on = if t >= p.pv_delay { back(p.pv_delay).map_or(false, |r| r.u_bk[k]) } else { false };
        let phases = f.bus(pv.bus).phases;
        let tan = pv.pf_angle.tan();
        for n in 0..3 {
            let want = if on && phases.contains(n) { sc.pv_eta[t] * pv.s_nom / 3.0 } else { 0.0 };
            let ent = || format!("{}/{}", pv.id, n);
            c.equal(C::PvOutput, ent, rec.p_pv[i][n], want);
            c.equal(C::PvOutput, ent, rec.q_pv[i][n], rec.p_pv[i][n] * tan);
        }
    }
    for (i, ld) in f.loads.iter().enumerate() {
        let k = net.load_block[i];
        let bus_id = f.bus(ld.bus).id;
        let (family, hist): (C, Vec<bool>) = match net.nl_of_load[i] {
            None => (C::ClDemand, (0..4).map_while(|o| (o <= t).then(|| back(o).map(|r| r.u_bk[k]))).flatten().collect()),
            Some(j) => {
                c.require(C::NlBlock, || format!("bus {bus_id}"), !rec.u_nlb[j] || rec.u_bk[k]);
                if let Some(pr) = prev {
                    c.require(C::NlMonotone, || format!("bus {bus_id}"), rec.u_nlb[j] || !pr.u_nlb[j]);
                }
                (C::NlDemand, (0..4).map_while(|o| (o <= t).then(|| back(o).map(|r| r.u_nlb[j]))).flatten().collect())
            }
        };
        debug_assert!(matches!(ld.class, LoadClass::Cl) == (family == C::ClDemand));
        let mult = clpu_multiplier(&p.clpu_beta, &hist);
        let tan = ld.tan_phi();
        for n in 0..3 {
            let want = ld.p_nom[n] * sc.load_mult[t] * mult;
            let ent = || format!("bus {bus_id}/{n}");
            c.equal(family, ent, rec.p_load[i][n], want);
            c.equal(family, ent, rec.q_load[i][n], rec.p_load[i][n] * tan);
        }
    }
}
