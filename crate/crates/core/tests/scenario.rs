use std::collections::BTreeSet;

use proptest::prelude::*;
use ssdmgf::feasibility::{extract_warm_start, ResolveContext};
use ssdmgf::fixtures::{replica_feeder, toy_instance};
use ssdmgf::optimizer::{check_warm_start, solve_outcome, Budget};
use ssdmgf::plan::RuleSet;
use ssdmgf::scenario::{build_features, extract_labels, generate_grid, split_dataset, FeatureTensor, GridConfig};
use ssdmgf::topology::Season;
use ssdmgf::Network;

fn replica() -> Network {
    Network::new(replica_feeder()).unwrap()
}

fn subset<T: Clone>(all: &[T], mask: u32) -> Vec<T> {
    let v: Vec<T> = all.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, x)| x.clone()).collect();
    if v.is_empty() {
        vec![all[0].clone()]
    } else {
        v
    }
}

fn grid_config() -> impl Strategy<Value = GridConfig> {
    (1u32..16, 1u32..2048, 1u32..8, prop::option::of(1u32..512), prop::option::of(1usize..12)).prop_map(
        |(s, h, o, d, steps)| GridConfig {
            seasons: subset(&Season::ALL, s),
            t0_hours: subset(&(6..=16).collect::<Vec<u32>>(), h),
            outage_minutes: subset(&[60, 120, 240], o),
            damaged: d.map(|m| subset(&[1, 3, 4, 6, 7, 9, 10, 11], m)),
            dt_min: 15.0,
            steps,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn grid_size_is_the_product_of_axes(cfg in grid_config()) {
        let net = replica();
        let scs = generate_grid(&net, &cfg).unwrap();
        let damage = cfg.damaged.as_ref().map_or(8, |d| d.len());
        prop_assert_eq!(scs.len(), cfg.seasons.len() * cfg.t0_hours.len() * cfg.outage_minutes.len() * damage);
        let ids: BTreeSet<&str> = scs.iter().map(|s| s.id.as_str()).collect();
        prop_assert_eq!(ids.len(), scs.len());
        let steps = cfg.steps.unwrap_or_else(|| (*cfg.outage_minutes.iter().max().unwrap() as usize + 240) / 15);
        for sc in &scs {
            prop_assert_eq!(sc.steps(), steps);
            sc.check(&net).unwrap();
        }
    }

    #[test]
    fn splits_partition_the_indices(n in 0usize..3000, seed in any::<u64>()) {
        let s = split_dataset(n, seed);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(s.train.len(), n * 8 / 10);
        prop_assert_eq!(s.val.len(), n / 10);
        prop_assert_eq!(split_dataset(n, seed), s);
    }

    #[test]
    fn features_are_reproducible_and_static_channels_hold(idx in 0usize..1056) {
        let net = replica();
        let sc = &generate_grid(&net, &GridConfig::default()).unwrap()[idx];
        let a = build_features(&net, sc).unwrap();
        prop_assert_eq!(a.to_le_bytes(), build_features(&net, sc).unwrap().to_le_bytes());
        let ch = |n: &str| FeatureTensor::channel(n).unwrap();
        let ssw_sum: f64 = (0..a.blocks).map(|k| a.get(0, k, ch("n_ssw"))).sum();
        prop_assert_eq!(ssw_sum, 6.0);
        for name in ["y_dmg", "y_bess", "s_bess", "e_bess", "n_esw", "n_ssw"] {
            for t in 1..a.steps {
                for k in 0..a.blocks {
                    prop_assert_eq!(a.get(t, k, ch(name)), a.get(0, k, ch(name)), "{} at ({}, {})", name, t, k);
                }
            }
        }
        let dmg: f64 = (0..a.blocks).map(|k| a.get(0, k, ch("y_dmg"))).sum();
        prop_assert_eq!(dmg, 1.0);
        for t in 0..a.steps {
            prop_assert_eq!(a.get(t, 0, ch("u_tg")), sc.u_tg[t] as i32 as f64);
        }
    }

    #[test]
    fn labels_round_trip_to_the_plan_schedule(seed in 0u64..5000, blocks in 2usize..5, steps in 2usize..6) {
        let (net, sc) = toy_instance(seed, blocks, steps);
        let out = solve_outcome(&net, &sc, RuleSet::Ssdmgf, None, &Budget::nodes(20_000)).unwrap();
        prop_assume!(out.plan.is_some());
        let plan = out.plan.unwrap();
        let labels = extract_labels(&net, &plan).unwrap();
        let ctx = ResolveContext::new(&net, &sc, 0.5);
        let ex = extract_warm_start(&net, &ctx, &labels).unwrap();
        prop_assert!(ex.degraded.is_none(), "{:?}", ex.degraded);
        let sync = ex.warm.u_sync.as_ref().unwrap();
        for (t, rec) in plan.steps.iter().enumerate() {
            prop_assert_eq!(&sync[t], &rec.u_sync, "step {}", t);
            prop_assert_eq!(&ex.warm.u_ssw[t], &rec.u_ssw, "step {}", t);
        }
        prop_assert!(check_warm_start(&net, &sc, RuleSet::Ssdmgf, &ex.warm).is_ok());
    }
}

#[test]
fn default_grid_has_the_full_product() {
    let net = replica();
    assert_eq!(generate_grid(&net, &GridConfig::default()).unwrap().len(), 4 * 11 * 3 * 8);
}
