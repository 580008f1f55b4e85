//! Mixed-integer linear model of the restoration problem in LP file format.
//!
//! Quadratic capability limits become an inscribed octagon per phase, the
//! product of synchronization events and frequency adjustments is linearized
//! with McCormick rows, and each BESS quasi-steady frequency uses its own
//! droop line instead of the group mean the bundled search evaluates.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::network::{Network, Switch};
use crate::plan::config::RuleSet;
use crate::plan::model::RestorationPlan;
use crate::plan::report::Constraint;
use crate::scenario::Scenario;
use crate::sync_structure::pair_index;
use crate::topology::LoadClass;

const PHASE: [&str; 3] = ["a", "b", "c"];
const SEGMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn as_str(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub family: Constraint,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub binaries: usize,
    pub continuous: usize,
    pub rows: usize,
    pub rows_by_family: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default)]
pub struct LpModel {
    pub names: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub binary: Vec<bool>,
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<LpRow>,
    index: HashMap<String, usize>,
}

/// Affine expression over model variables.
#[derive(Debug, Clone, Default)]
struct Ex {
    terms: Vec<(usize, f64)>,
    c: f64,
}

impl Ex {
    fn var(v: usize) -> Self {
        Ex { terms: vec![(v, 1.0)], c: 0.0 }
    }

    fn konst(c: f64) -> Self {
        Ex { terms: Vec::new(), c }
    }

    fn add(mut self, a: f64, v: usize) -> Self {
        self.terms.push((v, a));
        self
    }

    fn plus(mut self, a: f64, o: &Ex) -> Self {
        self.terms.extend(o.terms.iter().map(|&(v, x)| (v, a * x)));
        self.c += a * o.c;
        self
    }

    fn shift(mut self, c: f64) -> Self {
        self.c += c;
        self
    }
}

impl LpModel {
    fn var(&mut self, name: String, lo: f64, hi: f64, binary: bool) -> usize {
        let i = self.names.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        self.lo.push(lo);
        self.hi.push(hi);
        self.binary.push(binary);
        i
    }

    fn bin(&mut self, name: String) -> usize {
        self.var(name, 0.0, 1.0, true)
    }

    /// Adds `lhs sense rhs` with duplicate terms merged.
    fn row(&mut self, family: Constraint, name: String, lhs: Ex, sense: Sense, rhs: Ex) {
        let e = lhs.plus(-1.0, &rhs);
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (v, a) in e.terms {
            *merged.entry(v).or_default() += a;
        }
        let terms: Vec<(usize, f64)> = merged.into_iter().filter(|&(_, a)| a != 0.0).collect();
        let name = format!("{}_{}", family.name(), name);
        self.rows.push(LpRow { name, family, terms, sense, rhs: -e.c });
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn census(&self) -> Census {
        let binaries = self.binary.iter().filter(|&&b| b).count();
        let mut rows_by_family = BTreeMap::new();
        for r in &self.rows {
            *rows_by_family.entry(r.family.name().to_string()).or_default() += 1;
        }
        Census { binaries, continuous: self.names.len() - binaries, rows: self.rows.len(), rows_by_family }
    }

    /// Rows violated by more than `tol` at the point `x`; missing variables
    /// count as zero.
    pub fn violated_rows(&self, x: &[f64], tol: f64) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for r in &self.rows {
            let lhs: f64 = r.terms.iter().map(|&(v, a)| a * x[v]).sum();
            let gap = match r.sense {
                Sense::Le => lhs - r.rhs,
                Sense::Ge => r.rhs - lhs,
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            if gap > tol {
                out.push((r.name.clone(), gap));
            }
        }
        out
    }

    pub fn to_lp_string(&self) -> String {
        let mut s = String::new();
        let num = |x: f64| format!("{x:?}");
        let expr = |s: &mut String, terms: &[(usize, f64)]| {
            if terms.is_empty() {
                s.push_str(" 0 ");
                s.push_str(&self.names[0]);
            }
            for (i, &(v, a)) in terms.iter().enumerate() {
                let sign = if a < 0.0 { "-" } else { "+" };
                if i > 0 || a < 0.0 {
                    let _ = write!(s, " {sign}");
                }
                let _ = write!(s, " {} {}", num(a.abs()), self.names[v]);
                if (i + 1) % 6 == 0 {
                    s.push_str("\n   ");
                }
            }
        };
        s.push_str("\\ restoration model\nMaximize\n obj:");
        expr(&mut s, &self.objective);
        s.push_str("\nSubject To\n");
        for r in &self.rows {
            let _ = write!(s, " {}:", r.name);
            expr(&mut s, &r.terms);
            let _ = writeln!(s, " {} {}", r.sense.as_str(), num(r.rhs));
        }
        s.push_str("Bounds\n");
        for (i, n) in self.names.iter().enumerate() {
            if self.binary[i] {
                continue;
            }
            let lo = if self.lo[i] == f64::NEG_INFINITY { "-inf".to_string() } else { num(self.lo[i]) };
            let hi = if self.hi[i] == f64::INFINITY { "+inf".to_string() } else { num(self.hi[i]) };
            let _ = writeln!(s, " {lo} <= {n} <= {hi}");
        }
        s.push_str("Binaries\n");
        for (i, n) in self.names.iter().enumerate() {
            if self.binary[i] {
                let _ = writeln!(s, " {n}");
            }
        }
        s.push_str("End\n");
        s
    }
}

/// Variable indices of one step.
struct StepVars {
    ubk: Vec<usize>,
    ub: Vec<usize>,
    ul: Vec<usize>,
    uesw: Vec<usize>,
    ussw: Vec<usize>,
    unlb: Vec<usize>,
    uc: Vec<usize>,
    um: Vec<usize>,
    usync: Vec<usize>,
    usm: Vec<usize>,
    usp: Vec<usize>,
    /// Frequency per BS block, by position in `bs_blocks`.
    f: Vec<usize>,
    f_bus: Vec<Option<usize>>,
    f_qss: Vec<usize>,
    df: Vec<usize>,
    rocof: Vec<usize>,
    nadir: Vec<usize>,
    dp: Vec<usize>,
    soc: Vec<usize>,
    p_tg: Vec<Option<usize>>,
    q_tg: Vec<Option<usize>>,
    p_bess: Vec<[Option<usize>; 3]>,
    q_bess: Vec<[Option<usize>; 3]>,
    p_load: Vec<[Option<usize>; 3]>,
    q_load: Vec<[Option<usize>; 3]>,
    p_line: Vec<[Option<usize>; 3]>,
    q_line: Vec<[Option<usize>; 3]>,
    v: Vec<[Option<usize>; 3]>,
}

/// Builds the model. Step-0 predecessors are all dead and open.
pub fn build_model(net: &Network, sc: &Scenario, rules: RuleSet) -> Result<LpModel> {
    sc.check(net)?;
    let f = &net.feeder;
    let p = &net.params;
    let fs = &p.frequency;
    let f_cap = fs.f.hi;
    let vmax = p.voltage_band.hi;
    let n_bs = net.bs_blocks.len();
    let nb = f.bess.len();
    let steps = sc.steps();
    let mut m = LpModel::default();
    let bus_id = |b: usize| f.buses[b].id;

    let mut sv: Vec<StepVars> = Vec::with_capacity(steps);
    for t in 0..steps {
        let ubk = (0..net.n_blocks()).map(|k| m.bin(format!("ubk_k{k}_t{t}"))).collect();
        let ub = (0..net.n_buses()).map(|b| m.bin(format!("ub_{}_t{t}", bus_id(b)))).collect();
        let ul = f.lines.iter().map(|l| m.bin(format!("ul_{}_t{t}", l.id))).collect();
        let uesw = net.esw.iter().map(|&l| m.bin(format!("uesw_{}_t{t}", f.line(l).id))).collect();
        let ussw = net.ssw.iter().map(|&l| m.bin(format!("ussw_{}_t{t}", f.line(l).id))).collect();
        let unlb = net.nl_buses.iter().map(|&b| m.bin(format!("unlb_{}_t{t}", bus_id(b.0)))).collect();
        let uc = (0..=net.catalogue.max_class).map(|c| m.bin(format!("uc_c{c}_t{t}"))).collect();
        let um = (0..net.catalogue.len()).map(|i| m.bin(format!("um_m{i}_t{t}"))).collect();
        let mut usync = Vec::new();
        let mut usm = Vec::new();
        let mut usp = Vec::new();
        for i in 0..n_bs {
            for j in i + 1..n_bs {
                let (a, b) = (net.bs_blocks[i], net.bs_blocks[j]);
                usync.push(m.bin(format!("usync_k{a}_k{b}_t{t}")));
                usm.push(m.bin(format!("usyncm_k{a}_k{b}_t{t}")));
                usp.push(m.bin(format!("usyncp_k{a}_k{b}_t{t}")));
            }
        }
        let fv = net.bs_blocks.iter().map(|&k| m.var(format!("f_k{k}_t{t}"), 0.0, f_cap, false)).collect();
        let f_bus = (0..net.n_buses())
            .map(|b| net.switch_terminal[b].then(|| m.var(format!("fbus_{}_t{t}", bus_id(b)), 0.0, f_cap, false)))
            .collect();
        let mut dev = |name: &str, lo: f64, hi: f64| -> Vec<usize> {
            f.bess.iter().map(|d| m.var(format!("{name}_{}_t{t}", d.id), lo, hi, false)).collect()
        };
        let f_qss = dev("fqss", 0.0, f_cap);
        let df = dev("dfsync", -f_cap, f_cap);
        let rocof = dev("rocof", f64::NEG_INFINITY, f64::INFINITY);
        let nadir = dev("nadir", f64::NEG_INFINITY, f64::INFINITY);
        let dp = dev("dpup", 0.0, f64::INFINITY);
        let soc = dev("soc", f64::NEG_INFINITY, f64::INFINITY);
        let phased = |m: &mut LpModel, name: String, phases: crate::topology::PhaseSet, lo: f64, hi: f64| {
            let mut out = [None; 3];
            for n in phases.iter() {
                out[n] = Some(m.var(format!("{name}_{}_t{t}", PHASE[n]), lo, hi, false));
            }
            out
        };
        let inf = f64::INFINITY;
        let (mut p_tg, mut q_tg) = (vec![None; 3], vec![None; 3]);
        if let Some(tg) = &f.tg {
            let ph = f.bus(tg.bus).phases;
            let pt = phased(&mut m, "ptg".into(), ph, -inf, inf);
            let qt = phased(&mut m, "qtg".into(), ph, -inf, inf);
            p_tg = pt.to_vec();
            q_tg = qt.to_vec();
        }
        let p_bess =
            f.bess.iter().map(|d| phased(&mut m, format!("pbess_{}", d.id), f.bus(d.bus).phases, -inf, inf)).collect();
        let q_bess =
            f.bess.iter().map(|d| phased(&mut m, format!("qbess_{}", d.id), f.bus(d.bus).phases, -inf, inf)).collect();
        let p_load = f
            .loads
            .iter()
            .enumerate()
            .map(|(i, ld)| phased(&mut m, format!("pld{i}_{}", bus_id(ld.bus.0)), f.bus(ld.bus).phases, -inf, inf))
            .collect();
        let q_load = f
            .loads
            .iter()
            .enumerate()
            .map(|(i, ld)| phased(&mut m, format!("qld{i}_{}", bus_id(ld.bus.0)), f.bus(ld.bus).phases, -inf, inf))
            .collect();
        let p_line = f.lines.iter().map(|l| phased(&mut m, format!("pl_{}", l.id), l.phases, -inf, inf)).collect();
        let q_line = f.lines.iter().map(|l| phased(&mut m, format!("ql_{}", l.id), l.phases, -inf, inf)).collect();
        let v = (0..net.n_buses())
            .map(|b| phased(&mut m, format!("v_{}", bus_id(b)), f.buses[b].phases, 0.0, vmax))
            .collect();
        sv.push(StepVars {
            ubk,
            ub,
            ul,
            uesw,
            ussw,
            unlb,
            uc,
            um,
            usync,
            usm,
            usp,
            f: fv,
            f_bus,
            f_qss,
            df,
            rocof,
            nadir,
            dp,
            soc,
            p_tg,
            q_tg,
            p_bess,
            q_bess,
            p_load,
            q_load,
            p_line,
            q_line,
            v,
        });
    }

    // Previous-step value of a binary: zero before the horizon.
    let prev = |t: usize, pick: &dyn Fn(&StepVars) -> usize| -> Ex {
        if t == 0 {
            Ex::konst(0.0)
        } else {
            Ex::var(pick(&sv[t - 1]))
        }
    };
    let delta = |t: usize, pick: &dyn Fn(&StepVars) -> usize| -> Ex { Ex::var(pick(&sv[t])).plus(-1.0, &prev(t, pick)) };

    use Constraint as C;
    use Sense::*;
    for t in 0..steps {
        let s = &sv[t];
        let u_tg = sc.u_tg[t] as i32 as f64;
        // Slack count as an expression.
        let mut slack = Ex::konst(nb as f64 + u_tg);
        for &x in &s.ussw {
            slack = slack.add(-1.0, x);
        }

        // Source frequencies.
        for (i, &k) in net.bs_blocks.iter().enumerate() {
            if net.bs.tg == Some(k) {
                m.row(C::TgFrequency, format!("k{k}_t{t}"), Ex::var(s.f[i]), Eq, Ex::konst(fs.nominal_hz * u_tg));
                if u_tg > 0.0 {
                    m.row(C::FrequencySecurity, format!("k{k}_lo_t{t}"), Ex::var(s.f[i]), Ge, Ex::konst(fs.f.lo));
                }
            }
        }
        for (d, dev) in f.bess.iter().enumerate() {
            let k = net.bess_block[d];
            let i = net.bs_pos(k).expect("BESS blocks are BS");
            let id = &dev.id;
            // f = f_qss + sum over (SSW, partner) of event * adjustment.
            let mut rhs = Ex::var(s.f_qss[d]);
            for (l, _) in net.ssw.iter().enumerate() {
                for j in 0..n_bs {
                    if j == i {
                        continue;
                    }
                    let pk = net.bs_blocks[j];
                    let w = m.var(format!("w_{id}_s{l}_k{pk}_t{t}"), 0.0, 1.0, false);
                    let g = m.var(format!("g_{id}_s{l}_k{pk}_t{t}"), -f_cap, f_cap, false);
                    let du = delta(t, &|x: &StepVars| x.ussw[l]);
                    let sy = Ex::var(s.usync[pair_index(n_bs, i, j)]);
                    let tag = format!("{id}_s{l}_k{pk}_t{t}");
                    m.row(C::BessFrequency, format!("w1_{tag}"), Ex::var(w), Le, du.clone());
                    m.row(C::BessFrequency, format!("w2_{tag}"), Ex::var(w), Le, sy.clone());
                    m.row(C::BessFrequency, format!("w3_{tag}"), Ex::var(w), Ge, du.plus(1.0, &sy).shift(-1.0));
                    let dfv = Ex::var(s.df[d]);
                    m.row(C::BessFrequency, format!("g1_{tag}"), Ex::var(g), Le, Ex::konst(0.0).add(f_cap, w));
                    m.row(C::BessFrequency, format!("g2_{tag}"), Ex::var(g), Ge, Ex::konst(0.0).add(-f_cap, w));
                    m.row(C::BessFrequency, format!("g3_{tag}"), Ex::var(g), Le, dfv.clone().shift(f_cap).add(-f_cap, w));
                    m.row(C::BessFrequency, format!("g4_{tag}"), Ex::var(g), Ge, dfv.shift(-f_cap).add(f_cap, w));
                    rhs = rhs.add(1.0, g);
                }
            }
            m.row(C::BessFrequency, format!("{id}_f_t{t}"), Ex::var(s.f[i]), Eq, rhs);
            // Individual droop line for the quasi-steady value.
            let mut droop = Ex::konst(dev.f_set);
            for pv in s.p_bess[d].iter().flatten() {
                droop = droop.add(-fs.droop_gain / dev.s_nom, *pv);
            }
            m.row(C::BessFrequency, format!("{id}_qss_t{t}"), Ex::var(s.f_qss[d]), Eq, droop);
            // Step increase of output, its rate of change and nadir.
            let mut inc = Ex::konst(0.0);
            for pv in s.p_bess[d].iter().flatten() {
                inc = inc.add(1.0, *pv);
            }
            if t > 0 {
                for pv in sv[t - 1].p_bess[d].iter().flatten() {
                    inc = inc.add(-1.0, *pv);
                }
            }
            m.row(C::BessFrequency, format!("{id}_dp_t{t}"), Ex::var(s.dp[d]), Ge, inc);
            let rate = fs.nominal_hz / (2.0 * fs.inertia_s * dev.s_nom);
            m.row(C::BessFrequency, format!("{id}_rocof_t{t}"), Ex::var(s.rocof[d]), Eq, Ex::konst(0.0).add(rate, s.dp[d]));
            m.row(
                C::BessFrequency,
                format!("{id}_nadir_t{t}"),
                Ex::var(s.nadir[d]),
                Eq,
                Ex::var(s.f[i]).add(-fs.nadir_depth / dev.s_nom, s.dp[d]),
            );
            for (tag, var, band) in [
                ("f", s.f[i], fs.f),
                ("qss", s.f_qss[d], fs.qss),
                ("rocof", s.rocof[d], fs.rocof),
                ("nadir", s.nadir[d], fs.nadir),
            ] {
                m.row(C::FrequencySecurity, format!("{id}_{tag}_lo_t{t}"), Ex::var(var), Ge, Ex::konst(band.lo));
                m.row(C::FrequencySecurity, format!("{id}_{tag}_hi_t{t}"), Ex::var(var), Le, Ex::konst(band.hi));
            }
        }

        // Frequency propagation and matching across switches.
        for (i, &k) in net.bs_blocks.iter().enumerate() {
            for &b in &net.partition.buses[k] {
                if let Some(fb) = s.f_bus[b.0] {
                    m.row(C::TerminalFrequency, format!("{}_t{t}", bus_id(b.0)), Ex::var(fb), Eq, Ex::var(s.f[i]));
                }
            }
        }
        for (kind, list, vars, eps) in [
            (C::EswFrequency, &net.esw, &s.uesw, 0.0),
            (C::SswFrequency, &net.ssw, &s.ussw, fs.epsilon),
        ] {
            for (i, &l) in list.iter().enumerate() {
                let line = f.line(l);
                let (a, b) = (s.f_bus[line.from.0].unwrap(), s.f_bus[line.to.0].unwrap());
                let slack = Ex::konst(f_cap + eps).add(-f_cap, vars[i]);
                m.row(kind, format!("{}_hi_t{t}", line.id), Ex::var(a), Le, Ex::var(b).plus(1.0, &slack));
                m.row(kind, format!("{}_lo_t{t}", line.id), Ex::var(a), Ge, Ex::var(b).plus(-1.0, &slack));
            }
        }
        for (i, &l) in net.ssw.iter().enumerate() {
            let line = f.line(l);
            let du = delta(t, &|x: &StepVars| x.ussw[i]);
            for n in line.phases.iter() {
                for (tag, var, cap) in [("p", s.p_line[l.0][n], line.p_max[n]), ("q", s.q_line[l.0][n], line.q_max[n])] {
                    let var = var.unwrap();
                    let bound = Ex::konst(cap).plus(-cap, &du);
                    let nm = format!("{}_{tag}{}_t{t}", line.id, PHASE[n]);
                    m.row(C::SswClosingFlow, format!("{nm}_hi"), Ex::var(var), Le, bound.clone());
                    m.row(C::SswClosingFlow, format!("{nm}_lo"), Ex::var(var), Ge, Ex::konst(0.0).plus(-1.0, &bound));
                }
            }
        }

        // Class, mode and synchronization indicators.
        let mut weighted = Ex::konst(0.0);
        let mut ones = Ex::konst(0.0);
        for (c, &x) in s.uc.iter().enumerate() {
            weighted = weighted.add(c as f64, x);
            ones = ones.add(1.0, x);
        }
        m.row(C::ClassSelection, format!("weighted_t{t}"), weighted, Eq, slack.clone());
        m.row(C::ClassSelection, format!("onehot_t{t}"), ones, Eq, Ex::konst(1.0));
        for (c, &x) in s.uc.iter().enumerate() {
            let mut sum = Ex::konst(0.0);
            for (mi, e) in net.catalogue.entries.iter().enumerate() {
                if e.class == c {
                    sum = sum.add(1.0, s.um[mi]);
                }
            }
            m.row(C::ModeSelection, format!("c{c}_t{t}"), sum, Eq, Ex::var(x));
        }
        let active = net.bs.active(sc.u_tg[t]);
        for (mi, e) in net.catalogue.entries.iter().enumerate() {
            if e.mode.members() != active {
                m.row(C::ModeActiveSet, format!("m{mi}_t{t}"), Ex::var(s.um[mi]), Eq, Ex::konst(0.0));
            }
        }
        for i in 0..n_bs {
            for j in i + 1..n_bs {
                let idx = pair_index(n_bs, i, j);
                let (a, b) = (net.bs_blocks[i], net.bs_blocks[j]);
                let tag = format!("k{a}_k{b}_t{t}");
                if t > 0 {
                    m.row(C::SyncMonotone, tag.clone(), Ex::var(s.usync[idx]), Ge, Ex::var(sv[t - 1].usync[idx]));
                }
                let three = Ex::var(s.usm[idx]).add(1.0, s.usync[idx]).add(1.0, s.usp[idx]);
                m.row(C::SyncIndicator, format!("onehot_{tag}"), three, Eq, Ex::konst(1.0));
                let diff = Ex::var(s.f[j]).add(-1.0, s.f[i]).shift(fs.mu);
                let lower = Ex::konst(0.0).add(2.0 * fs.epsilon, s.usm[idx]).add(-fs.epsilon, s.usync[idx]).add(-f_cap, s.usp[idx]);
                let upper = Ex::konst(0.0).add(f_cap, s.usm[idx]).add(fs.epsilon, s.usync[idx]).add(-2.0 * fs.epsilon, s.usp[idx]);
                m.row(C::SyncIndicator, format!("lo_{tag}"), lower, Le, diff.clone());
                m.row(C::SyncIndicator, format!("hi_{tag}"), upper, Ge, diff);
                for (mi, e) in net.catalogue.entries.iter().enumerate() {
                    let nm = format!("m{mi}_{tag}");
                    if e.mode.same_part(a, b) {
                        m.row(C::ModeSync, nm, Ex::var(s.usync[idx]), Ge, Ex::var(s.um[mi]));
                    } else {
                        m.row(C::ModeSync, nm, Ex::var(s.usync[idx]), Le, Ex::konst(1.0).add(-1.0, s.um[mi]));
                    }
                }
            }
        }
        if rules.safe_transitions() {
            for c in 0..n_bs {
                for a in 0..n_bs {
                    for b in a + 1..n_bs {
                        if a == c || b == c {
                            continue;
                        }
                        let (ica, icb, iab) = (pair_index(n_bs, c, a), pair_index(n_bs, c, b), pair_index(n_bs, a, b));
                        let lhs = delta(t, &|x: &StepVars| x.usync[ica])
                            .plus(1.0, &delta(t, &|x: &StepVars| x.usync[icb]))
                            .plus(-1.0, &prev(t, &|x: &StepVars| x.usync[iab]));
                        let (kc, ka, kb) = (net.bs_blocks[c], net.bs_blocks[a], net.bs_blocks[b]);
                        m.row(C::SafeTransition, format!("k{kc}_k{ka}_k{kb}_t{t}"), lhs, Le, Ex::konst(1.0));
                    }
                }
            }
        }
        if rules.tg_lockout() && !sc.u_tg[t] {
            for (i, &l) in net.ssw.iter().enumerate() {
                m.row(C::TgLockout, format!("{}_t{t}", f.line(l).id), Ex::var(s.ussw[i]), Eq, Ex::konst(0.0));
            }
        }

        // Energization.
        for k in 0..net.n_blocks() {
            if t > 0 {
                m.row(C::BlockMonotone, format!("k{k}_t{t}"), Ex::var(s.ubk[k]), Ge, Ex::var(sv[t - 1].ubk[k]));
            }
            for &b in &net.partition.buses[k] {
                m.row(C::BlockBuses, format!("{}_t{t}", bus_id(b.0)), Ex::var(s.ub[b.0]), Eq, Ex::var(s.ubk[k]));
            }
            for &l in &net.partition.internal_lines[k] {
                m.row(C::BlockLines, format!("{}_t{t}", f.line(l).id), Ex::var(s.ul[l.0]), Eq, Ex::var(s.ubk[k]));
            }
            let mut new = Ex::konst(0.0);
            for &l in &net.partition.esw_lines[k] {
                let Some(Switch::Esw(i)) = net.switch_of_line[l.0] else { continue };
                m.row(C::EswBlock, format!("k{k}_{}_t{t}", f.line(l).id), Ex::var(s.ubk[k]), Ge, Ex::var(s.uesw[i]));
                new = new.plus(1.0, &delta(t, &|x: &StepVars| x.uesw[i]));
            }
            if !net.partition.esw_lines[k].is_empty() {
                let cap = prev(t, &|x: &StepVars| x.ubk[k]);
                let cap = Ex::konst(1.0).plus(net.esw_big_m(k) as f64, &cap);
                m.row(C::EswPickup, format!("k{k}_t{t}"), new, Le, cap);
            }
            let source = if net.bess_of_block[k].is_some() {
                Some(1.0)
            } else if net.bs.tg == Some(k) {
                Some(u_tg)
            } else {
                None
            };
            if let Some(on) = source {
                m.row(C::SourceEnergization, format!("k{k}_t{t}"), Ex::var(s.ubk[k]), Eq, Ex::konst(on));
            }
            if sc.damaged == Some(k) {
                m.row(C::DamagedBlock, format!("k{k}_t{t}"), Ex::var(s.ubk[k]), Eq, Ex::konst(0.0));
            }
        }
        for (i, &l) in net.esw.iter().enumerate() {
            let line = f.line(l);
            let ends = prev(t, &|x: &StepVars| x.ub[line.from.0]).plus(1.0, &prev(t, &|x: &StepVars| x.ub[line.to.0]));
            m.row(C::EswTerminal, format!("{}_t{t}", line.id), Ex::var(s.uesw[i]), Le, ends.clone());
            let du = delta(t, &|x: &StepVars| x.uesw[i]);
            m.row(C::EswMerge, format!("{}_t{t}", line.id), du, Le, Ex::konst(2.0).plus(-1.0, &ends));
            m.row(C::LineStatus, format!("{}_t{t}", line.id), Ex::var(s.ul[l.0]), Eq, Ex::var(s.uesw[i]));
        }
        for (i, &l) in net.ssw.iter().enumerate() {
            let line = f.line(l);
            if t > 0 {
                m.row(C::SswMonotone, format!("{}_t{t}", line.id), Ex::var(s.ussw[i]), Ge, Ex::var(sv[t - 1].ussw[i]));
            }
            let ends = prev(t, &|x: &StepVars| x.ub[line.from.0]).plus(1.0, &prev(t, &|x: &StepVars| x.ub[line.to.0]));
            m.row(C::SswTerminals, format!("{}_t{t}", line.id), Ex::konst(0.0).add(2.0, s.ussw[i]), Le, ends);
            m.row(C::LineStatus, format!("{}_t{t}", line.id), Ex::var(s.ul[l.0]), Eq, Ex::var(s.ussw[i]));
        }
        let mut lines = Ex::konst(0.0);
        for &x in &s.ul {
            lines = lines.add(1.0, x);
        }
        let mut buses = Ex::konst(0.0);
        for &x in &s.ub {
            buses = buses.add(1.0, x);
        }
        m.row(C::Radiality, format!("t{t}"), lines, Eq, buses.plus(-1.0, &slack));

        // Devices.
        let octagon = |m: &mut LpModel, fam: Constraint, tag: String, pv: usize, qv: usize, radius: f64| {
            for j in 0..SEGMENTS {
                let th = (2 * j + 1) as f64 * PI / SEGMENTS as f64;
                let lhs = Ex::konst(0.0).add(th.cos(), pv).add(th.sin(), qv);
                m.row(fam, format!("{tag}_s{j}"), lhs, Le, Ex::konst(radius * (PI / SEGMENTS as f64).cos()));
            }
        };
        if let Some(tg) = &f.tg {
            for n in 0..3 {
                if let (Some(pv), Some(qv)) = (s.p_tg[n], s.q_tg[n]) {
                    octagon(&mut m, C::TgCapacity, format!("{}_t{t}", PHASE[n]), pv, qv, u_tg * tg.s_max / 3.0);
                }
            }
        }
        for (d, dev) in f.bess.iter().enumerate() {
            for n in 0..3 {
                if let (Some(pv), Some(qv)) = (s.p_bess[d][n], s.q_bess[d][n]) {
                    octagon(&mut m, C::BessCapacity, format!("{}_{}_t{t}", dev.id, PHASE[n]), pv, qv, dev.s_nom / 3.0);
                }
            }
            let before = if t == 0 { Ex::konst(dev.soc_init) } else { Ex::var(sv[t - 1].soc[d]) };
            let mut rhs = before;
            for pv in s.p_bess[d].iter().flatten() {
                rhs = rhs.add(-sc.dt_hours() / dev.e_nom, *pv);
            }
            m.row(C::SocDynamics, format!("{}_t{t}", dev.id), Ex::var(s.soc[d]), Eq, rhs);
            m.row(C::SocBounds, format!("{}_lo_t{t}", dev.id), Ex::var(s.soc[d]), Ge, Ex::konst(dev.soc_min));
            m.row(C::SocBounds, format!("{}_hi_t{t}", dev.id), Ex::var(s.soc[d]), Le, Ex::konst(dev.soc_max));
        }

        // Loads with cold load pickup: nominal demand times the staircase.
        let mut objective_terms = Vec::new();
        for (i, ld) in f.loads.iter().enumerate() {
            let k = net.load_block[i];
            let status = |x: &StepVars| match ld.class {
                LoadClass::Cl => x.ubk[k],
                LoadClass::Nl => x.unlb[net.nl_of_load[i].expect("NL record indexed")],
            };
            let at = |o: usize| -> Ex {
                if o > t {
                    Ex::konst(0.0)
                } else {
                    Ex::var(status(&sv[t - o]))
                }
            };
            let mut mult = at(0);
            for (o, beta) in p.clpu_beta.iter().enumerate() {
                mult = mult.plus(*beta, &at(o)).plus(-*beta, &at(o + 1));
            }
            let fam = match ld.class {
                LoadClass::Cl => C::ClDemand,
                LoadClass::Nl => C::NlDemand,
            };
            let w = match ld.class {
                LoadClass::Cl => p.alpha_cl,
                LoadClass::Nl => p.alpha_nl,
            };
            for n in 0..3 {
                let (Some(pv), Some(qv)) = (s.p_load[i][n], s.q_load[i][n]) else { continue };
                let nom = ld.p_nom[n] * sc.load_mult[t];
                let tag = format!("{i}_{}_t{t}", PHASE[n]);
                m.row(fam, format!("p{tag}"), Ex::var(pv), Eq, Ex::konst(0.0).plus(nom, &mult));
                m.row(fam, format!("q{tag}"), Ex::var(qv), Eq, Ex::konst(0.0).add(ld.tan_phi(), pv));
                objective_terms.push((pv, sc.dt_min * w));
            }
        }
        m.objective.extend(objective_terms);
        for (i, &b) in net.nl_buses.iter().enumerate() {
            let k = net.partition.block_of[b.0];
            let tag = format!("{}_t{t}", bus_id(b.0));
            m.row(C::NlBlock, tag.clone(), Ex::var(s.unlb[i]), Le, Ex::var(s.ubk[k]));
            if t > 0 {
                m.row(C::NlMonotone, tag, Ex::var(s.unlb[i]), Ge, Ex::var(sv[t - 1].unlb[i]));
            }
        }

        // Nodal balance, with PV as a constant times a delayed block status.
        let mut inj_p: Vec<[Ex; 3]> = (0..net.n_buses()).map(|_| Default::default()).collect();
        let mut inj_q: Vec<[Ex; 3]> = (0..net.n_buses()).map(|_| Default::default()).collect();
        if let Some(tg) = &f.tg {
            for n in 0..3 {
                if let (Some(pv), Some(qv)) = (s.p_tg[n], s.q_tg[n]) {
                    inj_p[tg.bus.0][n] = std::mem::take(&mut inj_p[tg.bus.0][n]).add(1.0, pv);
                    inj_q[tg.bus.0][n] = std::mem::take(&mut inj_q[tg.bus.0][n]).add(1.0, qv);
                }
            }
        }
        for (d, dev) in f.bess.iter().enumerate() {
            for n in 0..3 {
                if let (Some(pv), Some(qv)) = (s.p_bess[d][n], s.q_bess[d][n]) {
                    inj_p[dev.bus.0][n] = std::mem::take(&mut inj_p[dev.bus.0][n]).add(1.0, pv);
                    inj_q[dev.bus.0][n] = std::mem::take(&mut inj_q[dev.bus.0][n]).add(1.0, qv);
                }
            }
        }
        for (i, pvd) in f.pv.iter().enumerate() {
            let k = net.pv_block[i];
            let on = if t >= p.pv_delay { Ex::var(sv[t - p.pv_delay].ubk[k]) } else { Ex::konst(0.0) };
            let phases = f.bus(pvd.bus).phases;
            let per = sc.pv_eta[t] * pvd.s_nom / phases.len().max(1) as f64;
            for n in phases.iter() {
                inj_p[pvd.bus.0][n] = std::mem::take(&mut inj_p[pvd.bus.0][n]).plus(per, &on);
                inj_q[pvd.bus.0][n] = std::mem::take(&mut inj_q[pvd.bus.0][n]).plus(per * pvd.pf_angle.tan(), &on);
            }
        }
        for (i, ld) in f.loads.iter().enumerate() {
            for n in 0..3 {
                if let (Some(pv), Some(qv)) = (s.p_load[i][n], s.q_load[i][n]) {
                    inj_p[ld.bus.0][n] = std::mem::take(&mut inj_p[ld.bus.0][n]).add(-1.0, pv);
                    inj_q[ld.bus.0][n] = std::mem::take(&mut inj_q[ld.bus.0][n]).add(-1.0, qv);
                }
            }
        }
        for (l, line) in f.lines.iter().enumerate() {
            for n in line.phases.iter() {
                let (pv, qv) = (s.p_line[l][n].unwrap(), s.q_line[l][n].unwrap());
                inj_p[line.from.0][n] = std::mem::take(&mut inj_p[line.from.0][n]).add(-1.0, pv);
                inj_q[line.from.0][n] = std::mem::take(&mut inj_q[line.from.0][n]).add(-1.0, qv);
                inj_p[line.to.0][n] = std::mem::take(&mut inj_p[line.to.0][n]).add(1.0, pv);
                inj_q[line.to.0][n] = std::mem::take(&mut inj_q[line.to.0][n]).add(1.0, qv);
            }
        }
        for b in 0..net.n_buses() {
            for n in f.buses[b].phases.iter() {
                let tag = format!("{}_{}_t{t}", bus_id(b), PHASE[n]);
                m.row(C::NodalBalance, format!("p{tag}"), std::mem::take(&mut inj_p[b][n]), Eq, Ex::konst(0.0));
                m.row(C::NodalBalance, format!("q{tag}"), std::mem::take(&mut inj_q[b][n]), Eq, Ex::konst(0.0));
            }
        }

        // Voltage drop, line limits, voltage band.
        for (l, line) in f.lines.iter().enumerate() {
            for n in line.phases.iter() {
                let mut drop = Ex::var(s.v[line.from.0][n].unwrap());
                for mm in line.phases.iter() {
                    drop = drop
                        .add(-2.0 * line.r[n][mm], s.p_line[l][mm].unwrap())
                        .add(-2.0 * line.x[n][mm], s.q_line[l][mm].unwrap());
                }
                let relax = Ex::konst(vmax).add(-vmax, s.ul[l]);
                let to = Ex::var(s.v[line.to.0][n].unwrap());
                let tag = format!("{}_{}_t{t}", line.id, PHASE[n]);
                m.row(C::VoltageDrop, format!("hi_{tag}"), to.clone(), Le, drop.clone().plus(1.0, &relax));
                m.row(C::VoltageDrop, format!("lo_{tag}"), to, Ge, drop.plus(-1.0, &relax));
                for (kind, var, cap) in [("p", s.p_line[l][n], line.p_max[n]), ("q", s.q_line[l][n], line.q_max[n])] {
                    let var = var.unwrap();
                    let bound = Ex::konst(0.0).add(cap, s.ul[l]);
                    m.row(C::LineLimit, format!("{kind}hi_{tag}"), Ex::var(var), Le, bound.clone());
                    m.row(C::LineLimit, format!("{kind}lo_{tag}"), Ex::var(var), Ge, Ex::konst(0.0).plus(-1.0, &bound));
                }
            }
        }
        for b in 0..net.n_buses() {
            for n in f.buses[b].phases.iter() {
                let v = Ex::var(s.v[b][n].unwrap());
                let tag = format!("{}_{}_t{t}", bus_id(b), PHASE[n]);
                let lo = Ex::konst(0.0).add(p.voltage_band.lo, s.ub[b]);
                let hi = Ex::konst(0.0).add(p.voltage_band.hi, s.ub[b]);
                m.row(C::VoltageBand, format!("lo_{tag}"), v.clone(), Ge, lo);
                m.row(C::VoltageBand, format!("hi_{tag}"), v, Le, hi);
            }
        }
        if let Some(tg) = &f.tg {
            if sc.u_tg[t] {
                for n in f.bus(tg.bus).phases.iter() {
                    let tag = format!("{}_t{t}", PHASE[n]);
                    m.row(C::VoltageBand, format!("tgroot_{tag}"), Ex::var(s.v[tg.bus.0][n].unwrap()), Eq, Ex::konst(1.0));
                }
            }
        }
    }
    Ok(m)
}

/// LP-format text of the model.
pub fn export_model(net: &Network, sc: &Scenario, rules: RuleSet) -> Result<String> {
    Ok(build_model(net, sc, rules)?.to_lp_string())
}

/// Maps a plan onto the model's variables. Auxiliary product and ramp
/// variables take the values the plan implies.
pub fn plan_point(net: &Network, model: &LpModel, plan: &RestorationPlan) -> Vec<f64> {
    let f = &net.feeder;
    let n_bs = net.bs_blocks.len();
    let mut x = vec![0.0; model.names.len()];
    let mut set = |name: String, v: f64| {
        if let Some(i) = model.var_index(&name) {
            x[i] = v;
        }
    };
    let bit = |b: bool| b as i32 as f64;
    let bus_id = |b: usize| f.buses[b].id;
    for (t, r) in plan.steps.iter().enumerate() {
        let prev = t.checked_sub(1).map(|p| &plan.steps[p]);
        for k in 0..net.n_blocks() {
            set(format!("ubk_k{k}_t{t}"), bit(r.u_bk[k]));
        }
        for b in 0..net.n_buses() {
            set(format!("ub_{}_t{t}", bus_id(b)), bit(r.u_b[b]));
            if net.switch_terminal[b] {
                set(format!("fbus_{}_t{t}", bus_id(b)), r.f_bus[b]);
            }
            for n in f.buses[b].phases.iter() {
                set(format!("v_{}_{}_t{t}", bus_id(b), PHASE[n]), r.v[b][n]);
            }
        }
        for (l, line) in f.lines.iter().enumerate() {
            set(format!("ul_{}_t{t}", line.id), bit(r.u_l[l]));
            for n in line.phases.iter() {
                set(format!("pl_{}_{}_t{t}", line.id, PHASE[n]), r.p_line[l][n]);
                set(format!("ql_{}_{}_t{t}", line.id, PHASE[n]), r.q_line[l][n]);
            }
        }
        for (i, &l) in net.esw.iter().enumerate() {
            set(format!("uesw_{}_t{t}", f.line(l).id), bit(r.u_esw[i]));
        }
        for (i, &l) in net.ssw.iter().enumerate() {
            set(format!("ussw_{}_t{t}", f.line(l).id), bit(r.u_ssw[i]));
        }
        for (i, &b) in net.nl_buses.iter().enumerate() {
            set(format!("unlb_{}_t{t}", bus_id(b.0)), bit(r.u_nlb[i]));
        }
        for (c, &u) in r.u_c.iter().enumerate() {
            set(format!("uc_c{c}_t{t}"), bit(u));
        }
        for (i, &u) in r.u_m.iter().enumerate() {
            set(format!("um_m{i}_t{t}"), bit(u));
        }
        for i in 0..n_bs {
            let k = net.bs_blocks[i];
            set(format!("f_k{k}_t{t}"), r.f_block[k]);
            for j in i + 1..n_bs {
                let idx = pair_index(n_bs, i, j);
                let tag = format!("k{k}_k{}_t{t}", net.bs_blocks[j]);
                set(format!("usync_{tag}"), bit(r.u_sync[idx]));
                set(format!("usyncm_{tag}"), bit(r.u_sync_minus[idx]));
                set(format!("usyncp_{tag}"), bit(r.u_sync_plus[idx]));
            }
        }
        for (d, dev) in f.bess.iter().enumerate() {
            let id = &dev.id;
            let k = net.bess_block[d];
            let i = net.bs_pos(k).unwrap();
            set(format!("fqss_{id}_t{t}"), r.f_qss[d]);
            set(format!("dfsync_{id}_t{t}"), r.df_sync[d]);
            set(format!("rocof_{id}_t{t}"), r.rocof[d]);
            set(format!("nadir_{id}_t{t}"), r.nadir[d]);
            set(format!("soc_{id}_t{t}"), r.soc[d]);
            let out: f64 = r.p_bess[d].iter().sum();
            let before: f64 = prev.map_or(0.0, |p| p.p_bess[d].iter().sum());
            set(format!("dpup_{id}_t{t}"), (out - before).max(0.0));
            for n in 0..3 {
                set(format!("pbess_{id}_{}_t{t}", PHASE[n]), r.p_bess[d][n]);
                set(format!("qbess_{id}_{}_t{t}", PHASE[n]), r.q_bess[d][n]);
            }
            for l in 0..net.ssw.len() {
                let du = bit(r.u_ssw[l]) - prev.map_or(0.0, |p| bit(p.u_ssw[l]));
                for j in 0..n_bs {
                    if j == i {
                        continue;
                    }
                    let w = du * bit(r.u_sync[pair_index(n_bs, i, j)]);
                    let tag = format!("{id}_s{l}_k{}_t{t}", net.bs_blocks[j]);
                    set(format!("w_{tag}"), w);
                    set(format!("g_{tag}"), w * r.df_sync[d]);
                }
            }
        }
        for n in 0..3 {
            set(format!("ptg_{}_t{t}", PHASE[n]), r.p_tg[n]);
            set(format!("qtg_{}_t{t}", PHASE[n]), r.q_tg[n]);
        }
        for (i, ld) in f.loads.iter().enumerate() {
            for n in 0..3 {
                set(format!("pld{i}_{}_{}_t{t}", bus_id(ld.bus.0), PHASE[n]), r.p_load[i][n]);
                set(format!("qld{i}_{}_{}_t{t}", bus_id(ld.bus.0), PHASE[n]), r.q_load[i][n]);
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{toy_instance, triple_merge_instance};
    use crate::optimizer::{solve, Budget};
    use crate::plan::objective_value;

    #[test]
    fn census_counts_binaries_and_rows() {
        let (net, sc) = toy_instance(3, 2, 2);
        let m = build_model(&net, &sc, RuleSet::Ssdmgf).unwrap();
        let c = m.census();
        let n_bs = net.bs_blocks.len();
        let per_step = net.n_blocks()
            + net.n_buses()
            + net.feeder.lines.len()
            + net.esw.len()
            + net.ssw.len()
            + net.nl_buses.len()
            + net.catalogue.max_class
            + 1
            + net.catalogue.len()
            + 3 * n_bs * (n_bs - 1) / 2;
        assert_eq!(c.binaries, 2 * per_step);
        assert_eq!(c.rows, c.rows_by_family.values().sum::<usize>());
        assert_eq!(c.rows_by_family["radiality"], 2);
    }

    #[test]
    fn lockout_rows_only_under_rule_based() {
        let (net, sc) = triple_merge_instance();
        let rr = build_model(&net, &sc, RuleSet::Rr).unwrap().census();
        let nd = build_model(&net, &sc, RuleSet::Ndmgf).unwrap().census();
        let safe = build_model(&net, &sc, RuleSet::Ssdmgf).unwrap().census();
        let off = sc.u_tg.iter().filter(|&&u| !u).count();
        assert_eq!(rr.rows - safe.rows, off * net.ssw.len());
        assert_eq!(rr.rows_by_family["tg-lockout"], off * net.ssw.len());
        assert!(safe.rows_by_family["safe-transition"] > 0);
        assert!(!nd.rows_by_family.contains_key("safe-transition"));
    }

    #[test]
    fn text_has_all_sections_and_declared_names() {
        let (net, sc) = toy_instance(5, 3, 2);
        let m = build_model(&net, &sc, RuleSet::Ssdmgf).unwrap();
        let text = m.to_lp_string();
        let pos: Vec<usize> =
            ["Maximize", "Subject To", "Bounds", "Binaries", "End"].iter().map(|h| text.find(h).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        for n in &m.names {
            assert!(!n.starts_with(|c: char| c.is_ascii_digit() || c == 'e' || c == 'E'), "{n}");
        }
        let rows = text.lines().filter(|l| l.starts_with(' ') && l.contains(':') && !l.contains("obj:")).count();
        assert_eq!(rows, m.rows.len());
    }

    #[test]
    fn solved_plan_satisfies_topology_and_balance_rows() {
        let (net, sc) = toy_instance(0, 3, 4);
        let (plan, _) = solve(&net, &sc, RuleSet::Ssdmgf, None, &Budget::default()).unwrap();
        let m = build_model(&net, &sc, RuleSet::Ssdmgf).unwrap();
        let x = plan_point(&net, &m, &plan);
        let obj: f64 = m.objective.iter().map(|&(v, a)| a * x[v]).sum();
        assert!((obj - objective_value(&net, &plan)).abs() < 1e-9);
        let skip = [
            Constraint::BessFrequency,
            Constraint::FrequencySecurity,
            Constraint::TgCapacity,
            Constraint::BessCapacity,
            Constraint::SyncIndicator,
        ];
        let bad: Vec<_> = m
            .violated_rows(&x, 1e-7)
            .into_iter()
            .filter(|(n, _)| !skip.iter().any(|c| n.starts_with(&format!("{}_", c.name()))))
            .collect();
        assert!(bad.is_empty(), "{bad:?}");
    }
}
