//! Batch runs over scenarios and warm-start strategies.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{extract_warm_start, heuristic_logits, resolve_sequence, Logits, ResolveContext, DEFAULT_LAMBDA};
use crate::network::Network;
use crate::optimizer::{solve_outcome, Budget, PartialAssignment, SolveOutcome, WarmStrategy};
use crate::plan::{validate_plan, RestorationPlan, RuleSet};
use crate::scenario::Scenario;

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub rules: RuleSet,
    pub budget: Budget,
    pub seed: u64,
    pub lambda: f64,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Directory of `<scenario id>.csv` logit files for CAWS. Scenarios
    /// without a file fall back to the heuristic provider.
    pub logits_dir: Option<PathBuf>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            rules: RuleSet::Ssdmgf,
            budget: Budget::default(),
            seed: 42,
            lambda: DEFAULT_LAMBDA,
            threads: None,
            logits_dir: None,
        }
    }
}

/// One (scenario, strategy) solve.
///
/// CSV columns, in order: `scenario_id`, `strategy`, `status`, `nodes`,
/// `time_s`, `first_feasible_nodes`, `first_feasible_time_s`,
/// `first_feasible_objective`, `objective`, `best_bound`, `gap`,
/// `warm_start_accepted`, `warm_start_reason`, `violations`, `error`.
/// Empty cells mean "not available".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub scenario_id: String,
    pub strategy: WarmStrategy,
    pub status: Option<String>,
    pub nodes: Option<usize>,
    pub time_s: Option<f64>,
    pub first_feasible_nodes: Option<usize>,
    pub first_feasible_time_s: Option<f64>,
    pub first_feasible_objective: Option<f64>,
    pub objective: Option<f64>,
    pub best_bound: Option<f64>,
    pub gap: Option<f64>,
    pub warm_start_accepted: Option<bool>,
    pub warm_start_reason: Option<String>,
    pub violations: Option<usize>,
    pub error: Option<String>,
}

impl BatchRow {
    fn failed(scenario_id: &str, strategy: WarmStrategy, err: String) -> Self {
        BatchRow {
            scenario_id: scenario_id.to_string(),
            strategy,
            status: None,
            nodes: None,
            time_s: None,
            first_feasible_nodes: None,
            first_feasible_time_s: None,
            first_feasible_objective: None,
            objective: None,
            best_bound: None,
            gap: None,
            warm_start_accepted: None,
            warm_start_reason: None,
            violations: None,
            error: Some(err),
        }
    }

    /// Upper bound on the optimum this run certifies.
    fn certified_bound(&self) -> Option<f64> {
        match (self.best_bound, self.objective) {
            (Some(b), Some(o)) => Some(b.max(o)),
            (Some(b), None) => Some(b),
            (None, Some(o)) if self.status.as_deref() == Some("optimal") => Some(o),
            _ => None,
        }
    }
}

/// Per-strategy comparison against WWS on the scenarios both solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyAggregate {
    pub strategy: WarmStrategy,
    pub rows: usize,
    pub failures: usize,
    pub warm_start_accepted: usize,
    /// Scenarios where both this strategy and WWS found a first feasible plan.
    pub compared: usize,
    pub geo_mean_time_speedup: Option<f64>,
    pub median_time_speedup: Option<f64>,
    pub geo_mean_node_speedup: Option<f64>,
    pub median_node_speedup: Option<f64>,
    pub geo_mean_first_feasible_nodes: Option<f64>,
    /// WWS first-feasible gap minus this strategy's, over all scenarios
    /// solved by both runs.
    pub mean_gap_improvement: Option<f64>,
    pub median_gap_improvement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<BatchRow>,
    pub aggregates: Vec<StrategyAggregate>,
}

impl ExperimentReport {
    pub fn from_rows(rows: Vec<BatchRow>) -> Self {
        let aggregates = aggregate(&rows);
        ExperimentReport { rows, aggregates }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_file_error(path, e))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Vec<BatchRow>> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_file_error(path, e))?;
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }

    pub fn write_aggregates_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_file_error(path, e))?;
        for a in &self.aggregates {
            w.serialize(a)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_file_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::File { path: path.display().to_string(), source },
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

fn geo_mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    Some((v.iter().map(|x| x.ln()).sum::<f64>() / v.len() as f64).exp())
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Shortest time credited to a run, so instant solves still give finite ratios.
const MIN_TIME_S: f64 = 1e-6;

/// Recomputes the per-strategy aggregates from rows.
///
/// A scenario's reference bound is the tightest upper bound certified by any
/// of its rows; a run's first-feasible gap is measured against it, and a run
/// without an incumbent counts as a full gap of 1.
pub fn aggregate(rows: &[BatchRow]) -> Vec<StrategyAggregate> {
    let mut by_scenario: BTreeMap<&str, Vec<&BatchRow>> = BTreeMap::new();
    for r in rows {
        by_scenario.entry(&r.scenario_id).or_default().push(r);
    }
    let reference: BTreeMap<&str, f64> = by_scenario
        .iter()
        .filter_map(|(id, rs)| {
            rs.iter().filter_map(|r| r.certified_bound()).min_by(f64::total_cmp).map(|b| (*id, b))
        })
        .collect();
    let ff_gap = |r: &BatchRow| -> Option<f64> {
        let b = *reference.get(r.scenario_id.as_str())?;
        Some(match r.first_feasible_objective {
            Some(o) => ((b - o) / b.abs().max(1e-9)).clamp(0.0, 1.0),
            None => 1.0,
        })
    };
    let mut strategies: Vec<WarmStrategy> = Vec::new();
    for r in rows {
        if !strategies.contains(&r.strategy) {
            strategies.push(r.strategy);
        }
    }
    strategies
        .into_iter()
        .map(|s| {
            let mine: Vec<&BatchRow> = rows.iter().filter(|r| r.strategy == s).collect();
            let (mut time_ratio, mut node_ratio, mut gap_gain) = (Vec::new(), Vec::new(), Vec::new());
            for r in &mine {
                let Some(w) = by_scenario[r.scenario_id.as_str()].iter().find(|x| x.strategy == WarmStrategy::Wws) else {
                    continue;
                };
                if r.error.is_none() && w.error.is_none() {
                    if let (Some(a), Some(b)) = (ff_gap(w), ff_gap(r)) {
                        gap_gain.push(a - b);
                    }
                }
                if let (Some(tw), Some(ts), Some(nw), Some(ns)) =
                    (w.first_feasible_time_s, r.first_feasible_time_s, w.first_feasible_nodes, r.first_feasible_nodes)
                {
                    time_ratio.push(tw.max(MIN_TIME_S) / ts.max(MIN_TIME_S));
                    node_ratio.push(nw.max(1) as f64 / ns.max(1) as f64);
                }
            }
            let ff_nodes: Vec<f64> = mine.iter().filter_map(|r| r.first_feasible_nodes).map(|n| n.max(1) as f64).collect();
            StrategyAggregate {
                strategy: s,
                rows: mine.len(),
                failures: mine.iter().filter(|r| r.error.is_some()).count(),
                warm_start_accepted: mine.iter().filter(|r| r.warm_start_accepted == Some(true)).count(),
                compared: time_ratio.len(),
                geo_mean_time_speedup: geo_mean(&time_ratio),
                median_time_speedup: median(&time_ratio),
                geo_mean_node_speedup: geo_mean(&node_ratio),
                median_node_speedup: median(&node_ratio),
                geo_mean_first_feasible_nodes: geo_mean(&ff_nodes),
                mean_gap_improvement: mean(&gap_gain),
                median_gap_improvement: median(&gap_gain),
            }
        })
        .collect()
}

/// Warm start for one strategy; `oracle` is a reference plan for OSWS.
pub fn warm_start_for(
    net: &Network,
    sc: &Scenario,
    strategy: WarmStrategy,
    opts: &BatchOptions,
    oracle: Option<&RestorationPlan>,
) -> Result<Option<PartialAssignment>> {
    Ok(match strategy {
        WarmStrategy::Wws => None,
        WarmStrategy::Azws => Some(PartialAssignment::all_zero(net, sc)),
        WarmStrategy::Rws => Some(PartialAssignment::random(net, sc, scenario_seed(opts.seed, &sc.id))),
        WarmStrategy::Caws => {
            let ctx = ResolveContext::new(net, sc, opts.lambda);
            let logits = match opts.logits_dir.as_ref().map(|d| d.join(format!("{}.csv", sc.id))) {
                Some(p) if p.exists() => Logits::load(&p)?,
                _ => heuristic_logits(net, sc, &ctx),
            };
            let (out, _) = resolve_sequence(&ctx, &logits)?;
            Some(extract_warm_start(net, &ctx, &out)?.warm)
        }
        WarmStrategy::Osws => {
            let plan = oracle.ok_or_else(|| Error::Infeasible(format!("{}: no reference plan for OSWS", sc.id)))?;
            Some(PartialAssignment::from_plan(plan))
        }
    })
}

/// Per-scenario seed derived from the run seed and the scenario id.
pub fn scenario_seed(seed: u64, id: &str) -> u64 {
    id.bytes().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn row_from(net: &Network, sc: &Scenario, s: WarmStrategy, rules: RuleSet, o: &SolveOutcome) -> BatchRow {
    let st = &o.stats;
    let violations = o.plan.as_ref().map(|p| validate_plan(net, sc, p, rules).map(|v| v.len()));
    let (violations, error) = match violations {
        Some(Ok(n)) => (Some(n), None),
        Some(Err(e)) => (None, Some(e.to_string())),
        None => (None, None),
    };
    BatchRow {
        scenario_id: sc.id.clone(),
        strategy: s,
        status: Some(st.status.as_str().to_string()),
        nodes: Some(st.nodes),
        time_s: Some(st.time_s),
        first_feasible_nodes: st.first_feasible_nodes,
        first_feasible_time_s: st.first_feasible_time_s,
        first_feasible_objective: st.first_feasible_objective,
        objective: st.best_objective,
        best_bound: st.best_bound,
        gap: st.gap(),
        warm_start_accepted: st.warm_start_accepted,
        warm_start_reason: st.warm_start_reason.clone(),
        violations,
        error,
    }
}

/// Solves one scenario under every strategy with the same budget. OSWS
/// uses the WWS plan as its reference, solving cold first if WWS is not in
/// the list.
pub fn run_scenario(
    net: &Network,
    sc: &Scenario,
    strategies: &[WarmStrategy],
    opts: &BatchOptions,
) -> Vec<(BatchRow, Option<RestorationPlan>)> {
    let mut cold: Option<SolveOutcome> = None;
    let cold_needed = strategies.contains(&WarmStrategy::Osws) || strategies.contains(&WarmStrategy::Wws);
    let mut cold_err = None;
    if cold_needed {
        match solve_outcome(net, sc, opts.rules, None, &opts.budget) {
            Ok(o) => cold = Some(o),
            Err(e) => cold_err = Some(e.to_string()),
        }
    }
    strategies
        .iter()
        .map(|&s| {
            if s == WarmStrategy::Wws {
                return match (&cold, &cold_err) {
                    (Some(o), _) => (row_from(net, sc, s, opts.rules, o), o.plan.clone()),
                    (None, e) => (BatchRow::failed(&sc.id, s, e.clone().unwrap_or_default()), None),
                };
            }
            let oracle = cold.as_ref().and_then(|o| o.plan.as_ref());
            let result = warm_start_for(net, sc, s, opts, oracle)
                .and_then(|w| solve_outcome(net, sc, opts.rules, w.as_ref(), &opts.budget));
            match result {
                Ok(o) => (row_from(net, sc, s, opts.rules, &o), o.plan),
                Err(e) => (BatchRow::failed(&sc.id, s, e.to_string()), None),
            }
        })
        .collect()
}

/// Solves every (scenario, strategy) pair; failures become rows with an
/// error and the batch continues. Rows come back in scenario-major order
/// together with the plans found.
pub fn run_batch(
    net: &Network,
    scenarios: &[Scenario],
    strategies: &[WarmStrategy],
    opts: &BatchOptions,
) -> Result<(ExperimentReport, Vec<Option<RestorationPlan>>)> {
    let work = || -> Vec<Vec<(BatchRow, Option<RestorationPlan>)>> {
        scenarios.par_iter().map(|sc| run_scenario(net, sc, strategies, opts)).collect()
    };
    let nested = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    let (rows, plans): (Vec<_>, Vec<_>) = nested.into_iter().flatten().unzip();
    Ok((ExperimentReport::from_rows(rows), plans))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, s: WarmStrategy, ff_nodes: usize, ff_t: f64, ff_obj: f64, obj: f64) -> BatchRow {
        BatchRow {
            status: Some("optimal".into()),
            nodes: Some(ff_nodes * 2),
            time_s: Some(ff_t * 2.0),
            first_feasible_nodes: Some(ff_nodes),
            first_feasible_time_s: Some(ff_t),
            first_feasible_objective: Some(ff_obj),
            objective: Some(obj),
            error: None,
            ..BatchRow::failed(id, s, String::new())
        }
    }

    #[test]
    fn wws_alone_has_unit_speedups() {
        let rows = vec![row("a", WarmStrategy::Wws, 10, 0.5, 5.0, 10.0), row("b", WarmStrategy::Wws, 3, 0.2, 1.0, 2.0)];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].geo_mean_time_speedup, Some(1.0));
        assert_eq!(agg[0].median_time_speedup, Some(1.0));
        assert_eq!(agg[0].geo_mean_node_speedup, Some(1.0));
        assert_eq!(agg[0].mean_gap_improvement, Some(0.0));
    }

    #[test]
    fn speedups_and_gap_gain_against_wws() {
        let rows = vec![
            row("a", WarmStrategy::Wws, 40, 4.0, 5.0, 10.0),
            row("a", WarmStrategy::Osws, 10, 1.0, 10.0, 10.0),
            row("b", WarmStrategy::Wws, 9, 1.0, 10.0, 10.0),
            row("b", WarmStrategy::Osws, 1, 1.0, 10.0, 10.0),
        ];
        let agg = aggregate(&rows);
        let o = agg.iter().find(|a| a.strategy == WarmStrategy::Osws).unwrap();
        assert!((o.geo_mean_node_speedup.unwrap() - 6.0).abs() < 1e-12);
        assert!((o.geo_mean_time_speedup.unwrap() - 2.0).abs() < 1e-12);
        assert!((o.median_time_speedup.unwrap() - 2.5).abs() < 1e-12);
        assert!((o.mean_gap_improvement.unwrap() - 0.25).abs() < 1e-12);
        assert!((o.median_gap_improvement.unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn failed_rows_are_counted_not_compared() {
        let rows = vec![
            row("a", WarmStrategy::Wws, 4, 1.0, 5.0, 10.0),
            BatchRow::failed("a", WarmStrategy::Caws, "boom".into()),
        ];
        let agg = aggregate(&rows);
        let c = agg.iter().find(|a| a.strategy == WarmStrategy::Caws).unwrap();
        assert_eq!((c.rows, c.failures, c.compared), (1, 1, 0));
        assert_eq!(c.geo_mean_time_speedup, None);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = vec![row("a", WarmStrategy::Wws, 4, 1.0, 5.0, 10.0), BatchRow::failed("a", WarmStrategy::Rws, "x".into())];
        let rep = ExperimentReport::from_rows(rows.clone());
        rep.write_csv(&path).unwrap();
        let back = ExperimentReport::read_csv(&path).unwrap();
        assert_eq!(back, rows);
        assert_eq!(ExperimentReport::from_rows(back).aggregates, rep.aggregates);
    }
}
