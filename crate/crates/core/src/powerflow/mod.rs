//! Switched linear unbalanced power flow: tree evaluation, nodal balance,
//! voltage drop and operating limits.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::network::{Network, Switch};
use crate::plan::islands::islands;
use crate::plan::model::StepRecord;
use crate::plan::report::{Collector, Constraint, Violation};
use crate::topology::{BusIdx, Feeder, LineIdx, PhaseVec};

/// Net injections per bus and phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Injections {
    pub p: Vec<PhaseVec>,
    pub q: Vec<PhaseVec>,
}

impl Injections {
    pub fn zeros(n_buses: usize) -> Self {
        Injections { p: vec![[0.0; 3]; n_buses], q: vec![[0.0; 3]; n_buses] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    /// Line flows in the file orientation (from-bus to to-bus positive).
    pub p_line: Vec<PhaseVec>,
    pub q_line: Vec<PhaseVec>,
    /// Squared voltages; zero on dead buses.
    pub v: Vec<PhaseVec>,
}

/// Generation minus demand at every bus.
pub fn bus_injections(net: &Network, rec: &StepRecord) -> Injections {
    let f = &net.feeder;
    let mut inj = Injections::zeros(f.buses.len());
    let mut add = |b: BusIdx, p: &PhaseVec, q: &PhaseVec, sign: f64| {
        for n in 0..3 {
            inj.p[b.0][n] += sign * p[n];
            inj.q[b.0][n] += sign * q[n];
        }
    };
    if let Some(tg) = &f.tg {
        add(tg.bus, &rec.p_tg, &rec.q_tg, 1.0);
    }
    for (d, dev) in f.bess.iter().enumerate() {
        add(dev.bus, &rec.p_bess[d], &rec.q_bess[d], 1.0);
    }
    for (i, pv) in f.pv.iter().enumerate() {
        add(pv.bus, &rec.p_pv[i], &rec.q_pv[i], 1.0);
    }
    for (i, ld) in f.loads.iter().enumerate() {
        add(ld.bus, &rec.p_load[i], &rec.q_load[i], -1.0);
    }
    inj
}

/// Evaluates flows and voltages on an energized forest.
///
/// `closed` marks lines in service; a closed line joins two buses only when
/// both are energized. Each tree must contain exactly one of `roots`, whose
/// voltage is held at 1.0.
pub fn solve_tree_flow(
    feeder: &Feeder,
    energized: &[bool],
    closed: &[bool],
    inj: &Injections,
    roots: &[BusIdx],
) -> Result<FlowState> {
    let nb = feeder.buses.len();
    let mut adj: Vec<Vec<LineIdx>> = vec![Vec::new(); nb];
    for (i, l) in feeder.lines.iter().enumerate() {
        if closed[i] && energized[l.from.0] && energized[l.to.0] {
            adj[l.from.0].push(LineIdx(i));
            adj[l.to.0].push(LineIdx(i));
        }
    }
    let mut parent: Vec<Option<LineIdx>> = vec![None; nb];
    let mut visited = vec![false; nb];
    let mut order = Vec::with_capacity(nb);
    let mut queue = VecDeque::new();
    for &r in roots {
        if !energized[r.0] {
            return Err(Error::Topology(format!("root bus {} is not energized", feeder.bus(r).id)));
        }
        if visited[r.0] {
            return Err(Error::Topology(format!("bus {} is reached from two roots", feeder.bus(r).id)));
        }
        visited[r.0] = true;
        queue.push_back(r);
        while let Some(b) = queue.pop_front() {
            order.push(b);
            for &l in &adj[b.0] {
                if Some(l) == parent[b.0] {
                    continue;
                }
                let c = feeder.line(l).other_end(b);
                if visited[c.0] {
                    return Err(Error::Topology(format!("cycle through line {}", feeder.line(l).id)));
                }
                visited[c.0] = true;
                parent[c.0] = Some(l);
                queue.push_back(c);
            }
        }
    }
    if let Some(b) = (0..nb).find(|&b| energized[b] && !visited[b]) {
        return Err(Error::Topology(format!("energized bus {} has no root", feeder.buses[b].id)));
    }

    let mut p_line = vec![[0.0; 3]; feeder.lines.len()];
    let mut q_line = vec![[0.0; 3]; feeder.lines.len()];
    // Downstream demand, accumulated leaves first.
    let mut dp: Vec<PhaseVec> = (0..nb).map(|b| neg(&inj.p[b])).collect();
    let mut dq: Vec<PhaseVec> = (0..nb).map(|b| neg(&inj.q[b])).collect();
    for &c in order.iter().rev() {
        let Some(l) = parent[c.0] else { continue };
        let line = feeder.line(l);
        let up = line.other_end(c);
        let sign = if line.to == c { 1.0 } else { -1.0 };
        for n in line.phases.iter() {
            p_line[l.0][n] = sign * dp[c.0][n];
            q_line[l.0][n] = sign * dq[c.0][n];
            dp[up.0][n] += dp[c.0][n];
            dq[up.0][n] += dq[c.0][n];
        }
    }

    let mut v = vec![[0.0; 3]; nb];
    for &b in &order {
        let phases = feeder.bus(b).phases;
        match parent[b.0] {
            None => {
                for n in phases.iter() {
                    v[b.0][n] = 1.0;
                }
            }
            Some(l) => {
                let line = feeder.line(l);
                let up = line.other_end(b);
                // Flow from parent to this bus.
                let s = if line.to == b { 1.0 } else { -1.0 };
                for n in phases.iter() {
                    if !line.phases.contains(n) {
                        continue;
                    }
                    let drop: f64 = line
                        .phases
                        .iter()
                        .map(|m| line.r[n][m] * s * p_line[l.0][m] + line.x[n][m] * s * q_line[l.0][m])
                        .sum();
                    v[b.0][n] = v[up.0][n] - 2.0 * drop;
                }
            }
        }
    }
    Ok(FlowState { p_line, q_line, v })
}

fn neg(x: &PhaseVec) -> PhaseVec {
    [-x[0], -x[1], -x[2]]
}

/// Root bus of every island: the TG bus when the TG is in it, else the bus
/// of the BESS in the lowest block, else the island's lowest bus.
pub fn island_roots(net: &Network, rec: &StepRecord) -> Vec<BusIdx> {
    let isl = islands(net, rec);
    let mut roots = Vec::new();
    let mut labels: Vec<usize> = isl.iter().flatten().copied().collect();
    labels.sort_unstable();
    labels.dedup();
    for lab in labels {
        let blocks: Vec<usize> = (0..net.n_blocks()).filter(|&k| isl[k] == Some(lab)).collect();
        let root = if let Some(tg) = net.feeder.tg.as_ref().filter(|_| net.bs.tg.map_or(false, |k| blocks.contains(&k))) {
            tg.bus
        } else if let Some(d) = blocks.iter().find_map(|&k| net.bess_of_block[k]) {
            net.feeder.bess[d].bus
        } else {
            net.partition.buses[blocks[0]][0]
        };
        roots.push(root);
    }
    roots
}

/// Fills flows and voltages of a record from its injections.
pub fn flow_for_record(net: &Network, rec: &StepRecord) -> Result<FlowState> {
    let inj = bus_injections(net, rec);
    let roots = island_roots(net, rec);
    solve_tree_flow(&net.feeder, &rec.u_b, &rec.u_l, &inj, &roots)
}

/// Per bus and phase: injection plus inflow minus outflow, for active and
/// reactive power.
pub fn nodal_balance_residuals(net: &Network, rec: &StepRecord) -> Vec<(BusIdx, usize, f64, f64)> {
    let f = &net.feeder;
    let inj = bus_injections(net, rec);
    let mut rp = inj.p.clone();
    let mut rq = inj.q.clone();
    for (i, l) in f.lines.iter().enumerate() {
        for n in 0..3 {
            rp[l.to.0][n] += rec.p_line[i][n];
            rq[l.to.0][n] += rec.q_line[i][n];
            rp[l.from.0][n] -= rec.p_line[i][n];
            rq[l.from.0][n] -= rec.q_line[i][n];
        }
    }
    let mut out = Vec::new();
    for (b, bus) in f.buses.iter().enumerate() {
        for n in 0..3 {
            if bus.phases.contains(n) || rp[b][n] != 0.0 || rq[b][n] != 0.0 {
                out.push((BusIdx(b), n, rp[b][n], rq[b][n]));
            }
        }
    }
    out
}

pub(crate) fn phase_name(n: usize) -> char {
    ['a', 'b', 'c'][n]
}

/// Violations of the nodal balance at step `t`.
pub fn nodal_balance_check(net: &Network, rec: &StepRecord, t: usize) -> Vec<Violation> {
    let mut c = Collector::new(t, net.params.tolerance);
    for (b, n, rp, rq) in nodal_balance_residuals(net, rec) {
        let id = net.feeder.bus(b).id;
        c.check(Constraint::NodalBalance, || format!("bus {id}/{}", phase_name(n)), rp.abs().max(rq.abs()));
    }
    c.out
}

/// Violations of the linear voltage drop at step `t`. Open lines are
/// relaxed by the upper voltage limit.
pub fn voltage_drop_check(net: &Network, rec: &StepRecord, t: usize) -> Vec<Violation> {
    let mut c = Collector::new(t, net.params.tolerance);
    let vmax = net.params.voltage_band.hi;
    for (i, l) in net.feeder.lines.iter().enumerate() {
        let relax = if rec.u_l[i] { 0.0 } else { vmax };
        for n in l.phases.iter() {
            let drop: f64 =
                l.phases.iter().map(|m| l.r[n][m] * rec.p_line[i][m] + l.x[n][m] * rec.q_line[i][m]).sum();
            let gap = rec.v[l.to.0][n] - (rec.v[l.from.0][n] - 2.0 * drop);
            c.check(Constraint::VoltageDrop, || format!("line {}/{}", l.id, phase_name(n)), gap.abs() - relax);
        }
    }
    c.out
}

/// Line limits, the voltage band, and SSW flow at closing and while open.
pub fn security_check(net: &Network, prev: Option<&StepRecord>, rec: &StepRecord, t: usize) -> Vec<Violation> {
    let mut c = Collector::new(t, net.params.tolerance);
    let band = net.params.voltage_band;
    for (i, l) in net.feeder.lines.iter().enumerate() {
        let on = rec.u_l[i] as i32 as f64;
        for n in 0..3 {
            let (p, q) = (rec.p_line[i][n].abs(), rec.q_line[i][n].abs());
            let ent = || format!("line {}/{}", l.id, phase_name(n));
            match net.switch_of_line[i] {
                Some(Switch::Ssw(s)) => {
                    let closing = rec.u_ssw[s] && !prev.map_or(false, |r| r.u_ssw[s]);
                    if closing {
                        c.check(Constraint::SswClosingFlow, ent, p.max(q));
                    } else if !rec.u_ssw[s] {
                        c.check(Constraint::OpenSswFlow, ent, p.max(q));
                    }
                }
                _ => {
                    let lim_p = if l.phases.contains(n) { l.p_max[n] } else { 0.0 };
                    let lim_q = if l.phases.contains(n) { l.q_max[n] } else { 0.0 };
                    c.check(Constraint::LineLimit, ent, (p - on * lim_p).max(q - on * lim_q));
                }
            }
        }
    }
    for (b, bus) in net.feeder.buses.iter().enumerate() {
        let on = rec.u_b[b] as i32 as f64;
        for n in bus.phases.iter() {
            let v = rec.v[b][n];
            c.check(
                Constraint::VoltageBand,
                || format!("bus {}/{}", bus.id, phase_name(n)),
                (on * band.lo - v).max(v - on * band.hi),
            );
        }
    }
    c.out
}
