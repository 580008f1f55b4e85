//! Feasibility resolution of predicted root labels and SSW closures.
//!
//! Labels live in the extended root set: 0 is dead and label `i >= 1` is
//! the BS block `roots[i - 1]`. The representative map sends each root label
//! to the root of its merged group; it is kept path-compressed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::logits::{softmax, Dims, Logits};
use crate::network::Network;
use crate::scenario::Scenario;
use crate::topology::BlockId;

pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Static data the operator needs about the feeder and scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolveContext {
    pub n_blocks: usize,
    /// BS block behind each nonzero label, ascending.
    pub roots: Vec<BlockId>,
    pub tg_label: Option<usize>,
    /// Block pair of each SSW.
    pub ssw_ends: Vec<(BlockId, BlockId)>,
    /// TG availability per step; the TG label is not selectable while false.
    pub tg_available: Vec<bool>,
    pub lambda: f64,
}

impl ResolveContext {
    pub fn new(net: &Network, sc: &Scenario, lambda: f64) -> Self {
        Self::with_availability(net, sc.u_tg.clone(), lambda)
    }

    pub fn with_availability(net: &Network, tg_available: Vec<bool>, lambda: f64) -> Self {
        let roots = net.bs_blocks.clone();
        let tg_label = net.bs.tg.and_then(|k| roots.iter().position(|&r| r == k)).map(|i| i + 1);
        ResolveContext {
            n_blocks: net.n_blocks(),
            roots,
            tg_label,
            ssw_ends: net.ssw.iter().map(|&l| net.line_blocks(l)).collect(),
            tg_available,
            lambda,
        }
    }

    pub fn n_labels(&self) -> usize {
        self.roots.len() + 1
    }

    pub fn dims(&self) -> Dims {
        Dims { t: self.tg_available.len(), k: self.n_blocks, r: self.n_labels(), e: self.ssw_ends.len() }
    }

    /// Block id of a nonzero label.
    pub fn block_of(&self, label: usize) -> Option<BlockId> {
        label.checked_sub(1).map(|i| self.roots[i])
    }

    /// Label of a BS block.
    pub fn label_of(&self, k: BlockId) -> Option<usize> {
        self.roots.binary_search(&k).ok().map(|i| i + 1)
    }

    fn tg_at(&self, t: usize) -> Option<usize> {
        self.tg_label.filter(|_| self.tg_available.get(t).copied().unwrap_or(true))
    }

    /// Root probabilities at `(t, k)`, with the TG label's mass removed while
    /// the TG is unavailable.
    pub fn root_probabilities(&self, logits: &Logits, t: usize, k: usize) -> Vec<f64> {
        let mut z = logits.root_at(t, k).to_vec();
        if let Some(tg) = self.tg_label {
            if self.tg_at(t).is_none() {
                z[tg] = f64::NEG_INFINITY;
            }
        }
        softmax(&z)
    }
}

/// Label assignment from a probability vector: the TG label above the
/// threshold, else dead above the threshold, else the most likely label
/// with ties to the lowest index.
pub fn assign_root(p: &[f64], lambda: f64, tg_label: Option<usize>) -> usize {
    if let Some(tg) = tg_label {
        if p[tg] > lambda {
            return tg;
        }
    }
    if p[0] > lambda {
        return 0;
    }
    let mut best = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > p[best] {
            best = i;
        }
    }
    best
}

/// Merges the groups of root labels `i` and `j`. The TG label always stays
/// representative; otherwise the larger label points to the smaller.
pub fn unite(rep: &mut [usize], i: usize, j: usize, tg_label: Option<usize>) -> Result<()> {
    if i == j {
        return Err(Error::Invalid(format!("cannot unite label {i} with itself")));
    }
    if i == 0 || j == 0 {
        return Err(Error::Invalid("cannot unite the dead label".into()));
    }
    if Some(i) == tg_label {
        rep[j] = i;
    } else if Some(j) == tg_label {
        rep[i] = j;
    } else {
        rep[i.max(j)] = i.min(j);
    }
    Ok(())
}

/// Full path compression of a representative map.
pub fn compress(rep: &mut [usize]) {
    for x in 0..rep.len() {
        let mut r = x;
        while rep[r] != r {
            r = rep[r];
        }
        rep[x] = r;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionState {
    /// Label per block.
    pub labels: Vec<usize>,
    /// Closure status per SSW.
    pub closed: Vec<bool>,
    /// Representative per label; label 0 maps to itself.
    pub rep: Vec<usize>,
}

impl ResolutionState {
    /// State at the first step: labels by the assignment rule, no closures,
    /// identity representatives.
    pub fn initial(ctx: &ResolveContext, logits: &Logits) -> Self {
        let labels =
            (0..ctx.n_blocks).map(|k| assign_root(&ctx.root_probabilities(logits, 0, k), ctx.lambda, ctx.tg_at(0))).collect();
        ResolutionState { labels, closed: vec![false; ctx.ssw_ends.len()], rep: (0..ctx.n_labels()).collect() }
    }
}

/// One step of the operator. Returns the new state and the SSWs accepted at
/// this step.
pub fn resolve_step(ctx: &ResolveContext, prev: &ResolutionState, logits: &Logits, t: usize) -> (ResolutionState, Vec<bool>) {
    let z = logits.sync_at(t);
    let lab = |k: BlockId| prev.labels[k];
    let mut productive: Vec<usize> = (0..ctx.ssw_ends.len())
        .filter(|&e| {
            let (a, b) = ctx.ssw_ends[e];
            z[e] > 0.0 && !prev.closed[e] && lab(a) != 0 && lab(b) != 0 && lab(a) != lab(b)
        })
        .collect();
    productive.sort_by(|&x, &y| z[y].total_cmp(&z[x]).then(x.cmp(&y)));

    let mut used = vec![false; ctx.n_labels()];
    let mut accepted = vec![false; ctx.ssw_ends.len()];
    let mut rep = prev.rep.clone();
    let mut closed = prev.closed.clone();
    for e in productive {
        let (a, b) = ctx.ssw_ends[e];
        let (i, j) = (lab(a), lab(b));
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        accepted[e] = true;
        closed[e] = true;
        unite(&mut rep, i, j, ctx.tg_label).expect("productive labels are distinct roots");
    }
    compress(&mut rep);

    let tg = ctx.tg_at(t);
    let labels = (0..ctx.n_blocks)
        .map(|k| match prev.labels[k] {
            0 => rep[assign_root(&ctx.root_probabilities(logits, t, k), ctx.lambda, tg)],
            l => rep[l],
        })
        .collect();
    (ResolutionState { labels, closed, rep }, accepted)
}

/// Hard outputs over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleOutputs {
    pub dims: Dims,
    /// Label per step and block.
    pub labels: Vec<Vec<usize>>,
    /// Acceptance per step and SSW; set only at the accepting step.
    pub sync: Vec<Vec<bool>>,
}

impl FeasibleOutputs {
    /// One-hot root tensor, `[t][k][r]` flattened.
    pub fn root_tensor(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dims.root_len()];
        for (t, row) in self.labels.iter().enumerate() {
            for (k, &l) in row.iter().enumerate() {
                out[(t * self.dims.k + k) * self.dims.r + l] = 1.0;
            }
        }
        out
    }

    pub fn sync_tensor(&self) -> Vec<f64> {
        self.sync.iter().flatten().map(|&b| b as i32 as f64).collect()
    }

    /// Closure status per step, accumulated.
    pub fn cumulative_sync(&self) -> Vec<Vec<bool>> {
        let mut acc = vec![false; self.dims.e];
        self.sync
            .iter()
            .map(|row| {
                for (a, &s) in acc.iter_mut().zip(row) {
                    *a |= s;
                }
                acc.clone()
            })
            .collect()
    }
}

/// Runs the operator over the horizon.
pub fn resolve_sequence(ctx: &ResolveContext, logits: &Logits) -> Result<(FeasibleOutputs, ResolutionState)> {
    logits.check()?;
    let d = logits.dims;
    let want = ctx.dims();
    if d.k != want.k || d.r != want.r || d.e != want.e || d.t > want.t {
        return Err(Error::Dimension(format!("logit shape {d:?} does not fit the feeder shape {want:?}")));
    }
    let mut out = FeasibleOutputs { dims: d, labels: Vec::with_capacity(d.t), sync: Vec::with_capacity(d.t) };
    if d.t == 0 {
        let st = ResolutionState { labels: vec![0; d.k], closed: vec![false; d.e], rep: (0..d.r).collect() };
        return Ok((out, st));
    }
    let mut state = ResolutionState::initial(ctx, logits);
    out.labels.push(state.labels.clone());
    out.sync.push(vec![false; d.e]);
    for t in 1..d.t {
        let (next, accepted) = resolve_step(ctx, &state, logits, t);
        out.labels.push(next.labels.clone());
        out.sync.push(accepted);
        state = next;
    }
    Ok((out, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ResolveContext {
        // Blocks 0..4, roots k0 (TG), k2, k3; SSWs k2-k3, k3-k4, k0-k2.
        ResolveContext {
            n_blocks: 5,
            roots: vec![0, 2, 3],
            tg_label: Some(1),
            ssw_ends: vec![(2, 3), (3, 4), (0, 2)],
            tg_available: vec![true; 3],
            lambda: 0.5,
        }
    }

    #[test]
    fn assignment_branches() {
        assert_eq!(assign_root(&[0.1, 0.6, 0.2, 0.1], 0.5, Some(1)), 1);
        assert_eq!(assign_root(&[0.7, 0.2, 0.05, 0.05], 0.5, Some(1)), 0);
        assert_eq!(assign_root(&[0.25; 4], 0.5, Some(1)), 0);
        assert_eq!(assign_root(&[0.1, 0.2, 0.4, 0.3], 0.5, Some(1)), 2);
    }

    #[test]
    fn unite_cases() {
        let mut rep: Vec<usize> = (0..6).collect();
        unite(&mut rep, 1, 5, Some(1)).unwrap();
        assert_eq!(rep[5], 1);
        let mut rep: Vec<usize> = (0..6).collect();
        unite(&mut rep, 5, 2, Some(1)).unwrap();
        assert_eq!(rep[5], 2);
        unite(&mut rep, 4, 1, Some(1)).unwrap();
        assert_eq!(rep[4], 1);
        assert!(unite(&mut rep, 3, 3, Some(1)).is_err());
    }

    #[test]
    fn greedy_keeps_disjoint_pairs() {
        let c = ctx();
        let d = c.dims();
        let mut z = Logits::zeros(d);
        // Every block takes its own root or dead; k4 sits with k3.
        for t in 0..d.t {
            for (k, l) in [(0, 1), (1, 0), (2, 2), (3, 3), (4, 3)] {
                z.root_at_mut(t, k)[l] = 10.0;
            }
        }
        z.sync_at_mut(1).copy_from_slice(&[2.0, 5.0, 1.5]);
        let (out, st) = resolve_sequence(&c, &z).unwrap();
        // k3-k4 shares a label and is unproductive; k2-k3 at 2.0 wins over
        // k0-k2 at 1.5, which shares label 2.
        assert_eq!(out.sync[1], vec![true, false, false]);
        assert_eq!(out.labels[1], vec![1, 0, 2, 2, 2]);
        assert_eq!(st.rep, vec![0, 1, 2, 2]);
    }

    #[test]
    fn dead_endpoint_is_unproductive() {
        let c = ctx();
        let mut z = Logits::zeros(c.dims());
        for t in 0..3 {
            for (k, l) in [(0, 1), (2, 2), (3, 0), (4, 3)] {
                z.root_at_mut(t, k)[l] = 10.0;
            }
            z.sync_at_mut(t).fill(1.0);
        }
        let (out, _) = resolve_sequence(&c, &z).unwrap();
        assert_eq!(out.sync[1], vec![false, false, true]);
        assert_eq!(out.labels[1][2], 1);
    }

    #[test]
    fn zero_logits_take_lowest_label() {
        let c = ctx();
        let (out, _) = resolve_sequence(&c, &Logits::zeros(c.dims())).unwrap();
        assert!(out.labels.iter().flatten().all(|&l| l == 0));
        assert!(out.sync.iter().flatten().all(|&s| !s));
    }

    #[test]
    fn masked_tg_is_not_selected() {
        let mut c = ctx();
        c.tg_available = vec![false, false, true];
        let mut z = Logits::zeros(c.dims());
        for t in 0..3 {
            z.root_at_mut(t, 1)[1] = 10.0;
        }
        let (out, _) = resolve_sequence(&c, &z).unwrap();
        assert_ne!(out.labels[0][1], 1);
        assert_eq!(out.labels[2][1], 1);
    }
}
