//! Best-first branch and bound over per-step switching and pickup actions.
//!
//! A node is a validated prefix of step records. Children are generated from
//! the last record and only filled and validated when they are taken off the
//! open list. The bound adds to the exact prefix objective the best demand
//! each load could still contribute, ignoring capacity limits.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dsu::Dsu;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::optimizer::fill::{fill, StepAction};
use crate::optimizer::warm::{check_warm_start, PartialAssignment};
use crate::plan::config::RuleSet;
use crate::plan::islands::islands;
use crate::plan::model::{RestorationPlan, StepRecord};
use crate::plan::objective::step_score;
use crate::plan::validate::validate_step;
use crate::scenario::Scenario;
use crate::topology::LoadClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_nodes: usize,
    pub max_time: Duration,
    /// Cap on the open list; reaching it ends the search like the other limits.
    pub max_open: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_nodes: 100_000, max_time: Duration::from_secs(60), max_open: 2_000_000 }
    }
}

impl Budget {
    pub fn nodes(max_nodes: usize) -> Self {
        Budget { max_nodes, ..Budget::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// The open list was exhausted: the incumbent is optimal.
    Optimal,
    /// A limit was hit with an incumbent in hand.
    Feasible,
    /// A limit was hit before any complete plan was found.
    BudgetExhausted,
    /// The open list was exhausted without a complete plan.
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::BudgetExhausted => "budget-exhausted",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub status: SolveStatus,
    /// Filled and validated nodes.
    pub nodes: usize,
    pub time_s: f64,
    pub first_feasible_nodes: Option<usize>,
    pub first_feasible_time_s: Option<f64>,
    pub first_feasible_objective: Option<f64>,
    pub best_objective: Option<f64>,
    /// Largest bound left on the open list when the search stopped.
    pub best_bound: Option<f64>,
    pub warm_start_accepted: Option<bool>,
    pub warm_start_reason: Option<String>,
    /// Whether the initial depth-first dive reached a complete plan.
    pub dive_completed: bool,
}

impl SolveStats {
    /// Relative gap between incumbent and best remaining bound.
    pub fn gap(&self) -> Option<f64> {
        let best = self.best_objective?;
        match self.best_bound {
            None => Some(0.0),
            Some(b) => Some(((b - best) / best.abs().max(1e-9)).max(0.0)),
        }
    }
}

/// Children of one dive node: those still to try in dive order, and those
/// held back by the warm start.
struct Frame {
    dive: Vec<Open>,
    rest: Vec<Open>,
}

struct Node {
    rec: StepRecord,
    parent: Option<Rc<Node>>,
    t: usize,
    /// Objective through step `t`.
    obj: f64,
    /// Step at which each load was first served.
    since: Vec<Option<usize>>,
}

impl Node {
    /// Up to `n` records ending at this node, oldest first.
    fn tail(&self, n: usize) -> Vec<&StepRecord> {
        let mut out = vec![&self.rec];
        let mut cur = self.parent.as_deref();
        while out.len() < n {
            match cur {
                Some(p) => {
                    out.push(&p.rec);
                    cur = p.parent.as_deref();
                }
                None => break,
            }
        }
        out.reverse();
        out
    }

    fn records(&self) -> Vec<StepRecord> {
        self.tail(usize::MAX).into_iter().cloned().collect()
    }
}

struct Open {
    bound: f64,
    switches: usize,
    seq: u64,
    parent: Option<Rc<Node>>,
    t: usize,
    action: StepAction,
}

impl PartialEq for Open {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        self.bound
            .total_cmp(&o.bound)
            .then(o.switches.cmp(&self.switches))
            .then(o.seq.cmp(&self.seq))
    }
}

/// Per-load data for the optimistic completion bound.
struct BoundTables {
    steps: usize,
    /// Weighted step demand with no pickup surge, per load and step.
    base: Vec<Vec<f64>>,
    /// Surge multipliers minus one for offsets 0, 1, 2 after pickup.
    surge: Vec<f64>,
    /// Best suffix value over pickup times at or after a step, per load.
    best_from: Vec<Vec<f64>>,
}

impl BoundTables {
    fn new(net: &Network, sc: &Scenario) -> Self {
        let steps = sc.steps();
        let p = &net.params;
        let surge = p.clpu_beta.to_vec();
        let base: Vec<Vec<f64>> = net
            .feeder
            .loads
            .iter()
            .map(|ld| {
                let a = match ld.class {
                    LoadClass::Cl => p.alpha_cl,
                    LoadClass::Nl => p.alpha_nl,
                };
                let w = a * sc.dt_min * ld.p_nom.iter().sum::<f64>();
                (0..steps).map(|s| w * sc.load_mult[s]).collect()
            })
            .collect();
        let mut tables = BoundTables { steps, base, surge, best_from: Vec::new() };
        tables.best_from = (0..tables.base.len())
            .map(|i| {
                let mut b = vec![0.0f64; steps + 1];
                for tau in (0..steps).rev() {
                    b[tau] = b[tau + 1].max(tables.served_from(i, tau, tau));
                }
                b
            })
            .collect();
        tables
    }

    /// Contribution from step `from` on of load `i` picked up at `tau`.
    fn served_from(&self, i: usize, tau: usize, from: usize) -> f64 {
        let mut v: f64 = self.base[i][from.min(self.steps)..].iter().sum();
        for (o, b) in self.surge.iter().enumerate() {
            let s = tau + o;
            if s >= from && s < self.steps {
                v += self.base[i][s] * b;
            }
        }
        v
    }
}

struct Ctx<'a> {
    net: &'a Network,
    sc: &'a Scenario,
    rules: RuleSet,
    tables: BoundTables,
    /// Block pairs of each ESW.
    esw_ends: Vec<(usize, usize)>,
    ssw_ends: Vec<(usize, usize)>,
    nl_block: Vec<usize>,
    /// ESW indices incident to each block.
    esw_at: Vec<Vec<usize>>,
}

impl<'a> Ctx<'a> {
    fn new(net: &'a Network, sc: &'a Scenario, rules: RuleSet) -> Self {
        let esw_ends: Vec<_> = net.esw.iter().map(|&l| net.line_blocks(l)).collect();
        let ssw_ends = net.ssw.iter().map(|&l| net.line_blocks(l)).collect();
        let nl_block = net.nl_buses.iter().map(|b| net.partition.block_of[b.0]).collect();
        let mut esw_at = vec![Vec::new(); net.n_blocks()];
        for (i, &(a, b)) in esw_ends.iter().enumerate() {
            esw_at[a].push(i);
            esw_at[b].push(i);
        }
        Ctx { net, sc, rules, tables: BoundTables::new(net, sc), esw_ends, ssw_ends, nl_block, esw_at }
    }

    /// Earliest step each block could be energized, given the blocks
    /// energized at `t`. ESWs spread energization one block per step.
    fn earliest(&self, on_at_t: &[bool], t: usize) -> Vec<usize> {
        let n = self.net.n_blocks();
        let never = self.tables.steps;
        let mut at = vec![never; n];
        for k in 0..n {
            if on_at_t[k] {
                at[k] = t;
            }
        }
        if let Some(k) = self.net.bs.tg {
            if !on_at_t[k] {
                if let Some(s) = (t + 1..self.tables.steps).find(|&s| self.sc.u_tg[s]) {
                    at[k] = s;
                }
            }
        }
        // Small graph: relax until stable.
        let mut changed = true;
        while changed {
            changed = false;
            for &(a, b) in &self.esw_ends {
                for (x, y) in [(a, b), (b, a)] {
                    if at[x] >= never || Some(y) == self.sc.damaged || Some(y) == self.net.bs.tg || at[y] <= at[x] + 1 {
                        continue;
                    }
                    at[y] = at[x] + 1;
                    changed = true;
                }
            }
        }
        at
    }

    /// Bound for taking `action` at step `t` after `parent`.
    fn bound(&self, parent: Option<&Node>, t: usize, action: &StepAction, on_at_t: &[bool]) -> f64 {
        let net = self.net;
        let base = parent.map_or(0.0, |p| p.obj);
        let earliest = self.earliest(on_at_t, t);
        let mut picked = parent.map_or_else(|| vec![false; net.nl_buses.len()], |p| p.rec.u_nlb.clone());
        for &i in &action.pick_nl {
            picked[i] = true;
        }
        let mut total = base;
        for (i, ld) in net.feeder.loads.iter().enumerate() {
            let k = net.load_block[i];
            let served = match ld.class {
                LoadClass::Cl => on_at_t[k],
                LoadClass::Nl => picked[net.nl_of_load[i].expect("NL record indexed")],
            };
            if served {
                let tau = parent.and_then(|p| p.since[i]).unwrap_or(t);
                total += self.tables.served_from(i, tau, t);
            } else {
                let e = match ld.class {
                    LoadClass::Cl => earliest[k],
                    LoadClass::Nl if on_at_t[k] => t + 1,
                    LoadClass::Nl => earliest[k],
                };
                total += self.tables.best_from[i][e.max(t + 1).min(self.tables.steps)];
            }
        }
        total
    }

    /// Candidate actions for step `t` with their bounds, best first.
    fn children(&self, parent: Option<&Node>, t: usize) -> Vec<(f64, StepAction)> {
        let net = self.net;
        let nk = net.n_blocks();
        let prev_on = parent.map_or_else(|| vec![false; nk], |p| p.rec.u_bk.clone());
        let u_tg = self.sc.u_tg[t];

        // One ESW per dead frontier block, within each feeding block's limit.
        let mut esw_opts: Vec<Vec<Option<usize>>> = Vec::new();
        if parent.is_some() {
            for d in 0..nk {
                if prev_on[d] || Some(d) == self.sc.damaged || net.is_source_block(d) {
                    continue;
                }
                let mut opts = vec![None];
                for &e in &self.esw_at[d] {
                    let (a, b) = self.esw_ends[e];
                    let other = if a == d { b } else { a };
                    if prev_on[other] {
                        opts.push(Some(e));
                    }
                }
                if opts.len() > 1 {
                    esw_opts.push(opts);
                }
            }
        }
        let mut esw_sets: Vec<Vec<usize>> = vec![Vec::new()];
        for opts in &esw_opts {
            let mut next = Vec::with_capacity(esw_sets.len() * opts.len());
            for s in &esw_sets {
                for o in opts {
                    let mut v = s.clone();
                    if let Some(e) = o {
                        v.push(*e);
                    }
                    next.push(v);
                }
            }
            esw_sets = next;
        }
        esw_sets.retain(|set| {
            let mut count = vec![0usize; nk];
            for &e in set {
                let (a, b) = self.esw_ends[e];
                let feeder = if prev_on[a] { a } else { b };
                count[feeder] += 1;
            }
            (0..nk).all(|k| count[k] <= net.esw_big_m(k) + 1)
        });

        // SSW subsets joining distinct islands without cycles; under the safe
        // rules an island takes part in at most one new closure.
        let mut ssw_sets: Vec<Vec<usize>> = vec![Vec::new()];
        if let Some(p) = parent {
            if u_tg || !self.rules.tg_lockout() {
                let isl = islands(net, &p.rec);
                let cand: Vec<usize> = (0..net.ssw.len())
                    .filter(|&i| {
                        let (a, b) = self.ssw_ends[i];
                        !p.rec.u_ssw[i] && prev_on[a] && prev_on[b] && isl[a] != isl[b]
                    })
                    .collect();
                for mask in 1u64..(1u64 << cand.len()) {
                    let chosen: Vec<usize> =
                        cand.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, &i)| i).collect();
                    let mut dsu = Dsu::new(nk);
                    let mut used = vec![false; nk];
                    let mut ok = true;
                    for &i in &chosen {
                        let (a, b) = self.ssw_ends[i];
                        let (ia, ib) = (isl[a].expect("energized"), isl[b].expect("energized"));
                        if self.rules.safe_transitions() {
                            if used[ia] || used[ib] {
                                ok = false;
                                break;
                            }
                            used[ia] = true;
                            used[ib] = true;
                        }
                        if !dsu.union(ia, ib) {
                            ok = false;
                            break;
                        }
                    }
                    if ok {
                        ssw_sets.push(chosen);
                    }
                }
            }
        }

        let picked = parent.map_or_else(|| vec![false; net.nl_buses.len()], |p| p.rec.u_nlb.clone());
        let mut out = Vec::new();
        for esw in &esw_sets {
            let mut on = prev_on.clone();
            for k in 0..nk {
                if net.bess_of_block[k].is_some() || (u_tg && net.bs.tg == Some(k)) {
                    on[k] = true;
                }
            }
            for &e in esw {
                let (a, b) = self.esw_ends[e];
                on[a] = true;
                on[b] = true;
            }
            let nl_cand: Vec<usize> =
                (0..net.nl_buses.len()).filter(|&i| !picked[i] && on[self.nl_block[i]]).collect();
            for ssw in &ssw_sets {
                for mask in 0u64..(1u64 << nl_cand.len()) {
                    let pick_nl =
                        nl_cand.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, &i)| i).collect();
                    let action = StepAction { close_esw: esw.clone(), close_ssw: ssw.clone(), pick_nl };
                    let b = self.bound(parent, t, &action, &on);
                    out.push((b, action));
                }
            }
        }
        out
    }

    /// Fills and validates one child; `None` if the step is infeasible.
    fn expand(&self, parent: Option<&Rc<Node>>, t: usize, action: &StepAction) -> Result<Option<Node>> {
        let hist = parent.map_or_else(Vec::new, |p| p.tail(3));
        let rec = fill(self.net, self.sc, &hist, t, action)?;
        let mut window = hist;
        window.push(&rec);
        let start = window.len().saturating_sub(4);
        let v = validate_step(self.net, self.sc, self.rules, &window[start..], t)?;
        if !v.is_empty() {
            return Ok(None);
        }
        let mut since = parent.map_or_else(|| vec![None; self.net.feeder.loads.len()], |p| p.since.clone());
        for (i, ld) in self.net.feeder.loads.iter().enumerate() {
            let served = match ld.class {
                LoadClass::Cl => rec.u_bk[self.net.load_block[i]],
                LoadClass::Nl => rec.u_nlb[self.net.nl_of_load[i].expect("NL record indexed")],
            };
            if served && since[i].is_none() {
                since[i] = Some(t);
            }
        }
        let obj = parent.map_or(0.0, |p| p.obj) + self.sc.dt_min * step_score(self.net, &rec);
        Ok(Some(Node { rec, parent: parent.cloned(), t, obj, since }))
    }
}

/// Whether a child agrees with the warm start's SSW schedule.
fn consistent_action(warm: &PartialAssignment, parent: Option<&Node>, t: usize, a: &StepAction) -> bool {
    let want = &warm.u_ssw[t];
    let mut have = parent.map_or_else(|| vec![false; want.len()], |p| p.rec.u_ssw.clone());
    for &i in &a.close_ssw {
        have[i] = true;
    }
    &have == want
}

fn consistent_record(warm: &PartialAssignment, t: usize, rec: &StepRecord) -> bool {
    warm.u_sync.as_ref().map_or(true, |u| u[t] == rec.u_sync)
        && warm.u_m.as_ref().map_or(true, |m| rec.mode_index() == Some(m[t]))
        && warm.u_c.as_ref().map_or(true, |c| rec.class() == Some(c[t]))
}

/// Outcome of a search, with or without a plan.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub plan: Option<RestorationPlan>,
    pub stats: SolveStats,
}

/// Maximizes restored energy. A warm start that passes the consistency
/// check steers the initial dive; a rejected one is ignored.
pub fn solve(
    net: &Network,
    sc: &Scenario,
    rules: RuleSet,
    warm: Option<&PartialAssignment>,
    budget: &Budget,
) -> Result<(RestorationPlan, SolveStats)> {
    let out = solve_outcome(net, sc, rules, warm, budget)?;
    match out.plan {
        Some(p) => Ok((p, out.stats)),
        None => Err(Error::Infeasible(format!(
            "no feasible plan for scenario {} ({:?} after {} nodes)",
            sc.id, out.stats.status, out.stats.nodes
        ))),
    }
}

pub fn solve_outcome(
    net: &Network,
    sc: &Scenario,
    rules: RuleSet,
    warm: Option<&PartialAssignment>,
    budget: &Budget,
) -> Result<SolveOutcome> {
    sc.check(net)?;
    let start = Instant::now();
    let ctx = Ctx::new(net, sc, rules);
    let steps = sc.steps();
    let mut stats = SolveStats {
        status: SolveStatus::Infeasible,
        nodes: 0,
        time_s: 0.0,
        first_feasible_nodes: None,
        first_feasible_time_s: None,
        first_feasible_objective: None,
        best_objective: None,
        best_bound: None,
        warm_start_accepted: None,
        warm_start_reason: None,
        dive_completed: false,
    };
    let warm = match warm {
        Some(w) => match check_warm_start(net, sc, rules, w) {
            Ok(()) => {
                stats.warm_start_accepted = Some(true);
                Some(w)
            }
            Err(reason) => {
                stats.warm_start_accepted = Some(false);
                stats.warm_start_reason = Some(reason);
                None
            }
        },
        None => None,
    };
    let plan_of = |n: &Node| RestorationPlan {
        scenario_id: sc.id.clone(),
        feeder_hash: net.feeder.source_hash.clone(),
        dt_min: sc.dt_min,
        steps: n.records(),
    };
    if steps == 0 {
        stats.status = SolveStatus::Optimal;
        stats.best_objective = Some(0.0);
        stats.first_feasible_nodes = Some(0);
        stats.first_feasible_time_s = Some(0.0);
        stats.first_feasible_objective = Some(0.0);
        let plan = RestorationPlan {
            scenario_id: sc.id.clone(),
            feeder_hash: net.feeder.source_hash.clone(),
            dt_min: sc.dt_min,
            steps: Vec::new(),
        };
        return Ok(SolveOutcome { plan: Some(plan), stats });
    }

    let mut seq = 0u64;
    let mut make_open = |bound: f64, parent: Option<&Rc<Node>>, t: usize, action: StepAction| {
        seq += 1;
        Open { bound, switches: action.switch_count(), seq, parent: parent.cloned(), t, action }
    };
    let mut incumbent: Option<Rc<Node>> = None;
    let mut best = f64::NEG_INFINITY;
    // Without an incumbent every bound beats it; the tolerance term would be NaN.
    let beats = |bound: f64, best: f64| best == f64::NEG_INFINITY || bound > best + 1e-12 * best.abs().max(1.0);
    let out_of_budget = |stats: &SolveStats, open: usize| {
        stats.nodes >= budget.max_nodes || start.elapsed() >= budget.max_time || open >= budget.max_open
    };
    let mut heap: BinaryHeap<Open> = BinaryHeap::new();
    let mut stopped = false;

    let record_leaf = |node: Rc<Node>, stats: &mut SolveStats, incumbent: &mut Option<Rc<Node>>, best: &mut f64| {
        if stats.first_feasible_nodes.is_none() {
            stats.first_feasible_nodes = Some(stats.nodes);
            stats.first_feasible_time_s = Some(start.elapsed().as_secs_f64());
            stats.first_feasible_objective = Some(node.obj);
        }
        if node.obj > *best {
            *best = node.obj;
            *incumbent = Some(node);
        }
    };

    // Depth-first dive: take the best child that validates, backtrack when
    // none does. With a warm start the dive first keeps to consistent
    // children; once a depth runs out of them it continues unguided from
    // there. Untried children go to the open list afterwards.
    let sorted = |mut v: Vec<Open>| {
        v.sort();
        v
    };
    let mut guided = warm;
    let split = |kids: Vec<Open>, parent: Option<&Node>, t: usize, guided: Option<&PartialAssignment>| {
        let (dive, rest): (Vec<Open>, Vec<Open>) =
            kids.into_iter().partition(|o| guided.map_or(true, |w| consistent_action(w, parent, t, &o.action)));
        Frame { dive: sorted(dive), rest }
    };
    let root_children: Vec<Open> =
        ctx.children(None, 0).into_iter().map(|(b, a)| make_open(b, None, 0, a)).collect();
    let mut frames: Vec<Frame> = vec![split(root_children, None, 0, guided)];
    while let Some(frame) = frames.last_mut() {
        if out_of_budget(&stats, heap.len()) {
            stopped = true;
            break;
        }
        let Some(cand) = frame.dive.pop() else {
            if guided.is_some() && !frame.rest.is_empty() {
                guided = None;
                frame.dive = sorted(std::mem::take(&mut frame.rest));
            } else {
                frames.pop();
            }
            continue;
        };
        stats.nodes += 1;
        let Some(node) = ctx.expand(cand.parent.as_ref(), cand.t, &cand.action)? else {
            continue;
        };
        if let Some(w) = guided {
            if !consistent_record(w, cand.t, &node.rec) {
                frame.rest.push(cand);
                continue;
            }
        }
        let node = Rc::new(node);
        if node.t + 1 == steps {
            record_leaf(node, &mut stats, &mut incumbent, &mut best);
            stats.dive_completed = true;
            break;
        }
        let t = node.t + 1;
        let kids = ctx.children(Some(&node), t).into_iter().map(|(b, a)| make_open(b, Some(&node), t, a)).collect();
        frames.push(split(kids, Some(&node), t, guided));
    }
    for f in frames {
        heap.extend(f.dive.into_iter().chain(f.rest).filter(|o| beats(o.bound, best)));
    }

    // Best-first phase.
    while !stopped {
        let Some(cand) = heap.pop() else { break };
        if !beats(cand.bound, best) {
            // Everything left is bounded by this entry.
            heap.clear();
            break;
        }
        if out_of_budget(&stats, heap.len()) {
            heap.push(cand);
            stopped = true;
            break;
        }
        stats.nodes += 1;
        let Some(node) = ctx.expand(cand.parent.as_ref(), cand.t, &cand.action)? else {
            continue;
        };
        let node = Rc::new(node);
        if node.t + 1 == steps {
            record_leaf(node, &mut stats, &mut incumbent, &mut best);
            continue;
        }
        let t = node.t + 1;
        for (b, a) in ctx.children(Some(&node), t) {
            if beats(b, best) {
                heap.push(make_open(b, Some(&node), t, a));
            }
        }
    }

    stats.time_s = start.elapsed().as_secs_f64();
    stats.best_objective = incumbent.as_ref().map(|n| n.obj);
    stats.best_bound = heap.iter().map(|o| o.bound).filter(|&b| beats(b, best)).reduce(f64::max);
    stats.status = match (stopped && stats.best_bound.is_some(), incumbent.is_some()) {
        (false, true) => SolveStatus::Optimal,
        (false, false) => SolveStatus::Infeasible,
        (true, true) => SolveStatus::Feasible,
        (true, false) => SolveStatus::BudgetExhausted,
    };
    Ok(SolveOutcome { plan: incumbent.as_deref().map(plan_of), stats })
}
