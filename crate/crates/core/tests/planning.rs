use proptest::prelude::*;
use ssdmgf::feasibility::{extract_warm_start, heuristic_logits, resolve_sequence, ResolveContext};
use ssdmgf::fixtures::toy_instance;
use ssdmgf::optimizer::{solve_outcome, Budget, PartialAssignment, SolveStatus};
use ssdmgf::plan::{radiality_terms, validate_plan, RestorationPlan, RuleSet, StepRecord};
use ssdmgf::scenario::Scenario;
use ssdmgf::sync_structure::SyncMatrix;
use ssdmgf::topology::LoadClass;
use ssdmgf::Network;

fn nondecreasing(plan: &RestorationPlan, pick: impl Fn(&StepRecord) -> &Vec<bool>) -> bool {
    plan.steps.windows(2).all(|w| pick(&w[0]).iter().zip(pick(&w[1])).all(|(&a, &b)| !a || b))
}

/// Demand factor `steps_on` steps after pickup, written out from the
/// decay schedule.
fn pickup_factor(beta: &[f64; 3], steps_on: Option<usize>) -> f64 {
    match steps_on {
        None => 0.0,
        Some(j) if j < 3 => 1.0 + beta[j],
        Some(_) => 1.0,
    }
}

fn check_structure(net: &Network, sc: &Scenario, plan: &RestorationPlan) -> Result<(), TestCaseError> {
    prop_assert!(nondecreasing(plan, |r| &r.u_bk));
    prop_assert!(nondecreasing(plan, |r| &r.u_ssw));
    prop_assert!(nondecreasing(plan, |r| &r.u_nlb));
    prop_assert!(nondecreasing(plan, |r| &r.u_sync));
    let beta = net.params.clpu_beta;
    for (t, rec) in plan.steps.iter().enumerate() {
        for (b, &k) in net.partition.block_of.iter().enumerate() {
            prop_assert_eq!(rec.u_b[b], rec.u_bk[k]);
        }
        for (l, line) in net.feeder.lines.iter().enumerate() {
            if net.switch_of_line[l].is_none() {
                prop_assert_eq!(rec.u_l[l], rec.u_bk[net.partition.block_of[line.from.0]]);
            }
        }
        let weighted: i64 = rec.u_c.iter().enumerate().filter(|(_, &u)| u).map(|(c, _)| c as i64).sum();
        prop_assert_eq!(rec.u_c.iter().filter(|&&u| u).count(), 1);
        prop_assert_eq!(weighted, rec.s);

        let m = rec.mode_index().expect("one mode selected");
        let expect = SyncMatrix::from_mode(net.bs_blocks.clone(), &net.catalogue.entries[m].mode);
        prop_assert_eq!(&rec.u_sync, &expect.bits, "step {}", t);

        let (lines, buses, slack) = radiality_terms(net, rec);
        prop_assert_eq!(lines, buses - slack, "step {}", t);

        for (i, ld) in net.feeder.loads.iter().enumerate() {
            let on = |r: &StepRecord| match ld.class {
                LoadClass::Cl => r.u_bk[net.load_block[i]],
                LoadClass::Nl => r.u_nlb[net.nl_of_load[i].unwrap()],
            };
            let since = (0..=t).find(|&s| on(&plan.steps[s])).map(|s| t - s);
            let factor = pickup_factor(&beta, since);
            for n in 0..3 {
                let expect = ld.p_nom[n] * sc.load_mult[t] * factor;
                prop_assert!((rec.p_load[i][n] - expect).abs() <= 1e-12, "load {} step {}", i, t);
            }
        }
    }
    Ok(())
}

fn cold(net: &Network, sc: &Scenario, warm: Option<&PartialAssignment>) -> ssdmgf::optimizer::SolveOutcome {
    solve_outcome(net, sc, RuleSet::Ssdmgf, warm, &Budget::nodes(20_000)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn solved_plans_respect_structural_invariants(seed in 0u64..10_000, blocks in 2usize..5, steps in 2usize..6) {
        let (net, sc) = toy_instance(seed, blocks, steps);
        let out = cold(&net, &sc, None);
        prop_assume!(out.plan.is_some());
        let plan = out.plan.unwrap();
        prop_assert!(validate_plan(&net, &sc, &plan, RuleSet::Ssdmgf).unwrap().is_empty());
        check_structure(&net, &sc, &plan)?;
    }

    #[test]
    fn warm_starts_do_not_change_the_optimum(seed in 0u64..10_000, blocks in 2usize..5, steps in 2usize..6) {
        let (net, sc) = toy_instance(seed, blocks, steps);
        let base = cold(&net, &sc, None);
        prop_assume!(base.stats.status == SolveStatus::Optimal);
        let best = base.stats.best_objective.unwrap();

        let ctx = ResolveContext::new(&net, &sc, 0.5);
        let (resolved, _) = resolve_sequence(&ctx, &heuristic_logits(&net, &sc, &ctx)).unwrap();
        let warms = [
            PartialAssignment::all_zero(&net, &sc),
            extract_warm_start(&net, &ctx, &resolved).unwrap().warm,
            PartialAssignment::from_plan(base.plan.as_ref().unwrap()),
        ];
        for w in &warms {
            let o = cold(&net, &sc, Some(w));
            prop_assert_eq!(o.stats.status, SolveStatus::Optimal, "{:?}", w.strategy);
            prop_assert!((o.stats.best_objective.unwrap() - best).abs() <= 1e-9, "{:?}", w.strategy);
        }
    }

    #[test]
    fn larger_budgets_never_do_worse(seed in 0u64..10_000, blocks in 2usize..5, steps in 2usize..6, small in 1usize..40) {
        let (net, sc) = toy_instance(seed, blocks, steps);
        let a = solve_outcome(&net, &sc, RuleSet::Ssdmgf, None, &Budget::nodes(small)).unwrap();
        let b = solve_outcome(&net, &sc, RuleSet::Ssdmgf, None, &Budget::nodes(small * 4)).unwrap();
        if let Some(x) = a.stats.best_objective {
            prop_assert!(b.stats.best_objective.unwrap() >= x - 1e-12);
        }
    }
}

#[test]
fn dead_end_warm_dive_is_repaired() {
    // The resolved schedule closes an SSW this toy cannot close in time, so
    // the guided part of the dive dead-ends.
    let (net, sc) = toy_instance(37, 3, 4);
    let ctx = ResolveContext::new(&net, &sc, 0.5);
    let (resolved, _) = resolve_sequence(&ctx, &heuristic_logits(&net, &sc, &ctx)).unwrap();
    let warm = extract_warm_start(&net, &ctx, &resolved).unwrap().warm;
    let guided = cold(&net, &sc, Some(&warm));
    assert_eq!(guided.stats.warm_start_accepted, Some(true));
    assert!(guided.stats.dive_completed);
    let base = cold(&net, &sc, None);
    assert_eq!(guided.stats.status, SolveStatus::Optimal);
    assert!((guided.stats.best_objective.unwrap() - base.stats.best_objective.unwrap()).abs() <= 1e-9);
}
