use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssdmgf::dsu::Dsu;
use ssdmgf::feasibility::{resolve_sequence, resolve_step, Logits, ResolutionState, ResolveContext};
use ssdmgf::fixtures::replica_feeder;
use ssdmgf::sync_structure::{check_transition_safety, Mode, SyncMatrix};
use ssdmgf::Network;

fn random_case(net: &Network, seed: u64, steps: usize) -> (ResolveContext, Logits) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let avail: Vec<bool> = (0..steps).map(|_| rng.gen_bool(0.5)).collect();
    let ctx = ResolveContext::with_availability(net, avail, rng.gen_range(0.2..0.8));
    let dims = ctx.dims();
    let root = (0..dims.root_len()).map(|_| rng.gen_range(-4.0..4.0)).collect();
    let sync = (0..dims.sync_len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
    (ctx, Logits::new(dims, root, sync).unwrap())
}

/// Root-label groups as a synchronization matrix over the root blocks.
fn groups(ctx: &ResolveContext, dsu: &mut Dsu) -> SyncMatrix {
    let n = ctx.roots.len();
    let mut parts: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n + 1];
    for l in 1..=n {
        let r = dsu.find(l);
        if slot[r] == usize::MAX {
            slot[r] = parts.len();
            parts.push(Vec::new());
        }
        parts[slot[r]].push(ctx.roots[l - 1]);
    }
    SyncMatrix::from_mode(ctx.roots.clone(), &Mode::from_parts(parts))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn resolved_schedules_are_safe_and_consistent(seed in any::<u64>(), steps in 1usize..40) {
        let net = Network::new(replica_feeder()).unwrap();
        let (ctx, logits) = random_case(&net, seed, steps);
        let (out, last) = resolve_sequence(&ctx, &logits).unwrap();
        prop_assert_eq!(resolve_sequence(&ctx, &logits).unwrap(), (out.clone(), last.clone()));

        let mut dsu = Dsu::new(ctx.n_labels());
        let mut state = ResolutionState::initial(&ctx, &logits);
        prop_assert_eq!(&state.labels, &out.labels[0]);
        prop_assert!(out.sync[0].iter().all(|&s| !s));
        for t in 1..steps {
            let before = groups(&ctx, &mut dsu);
            let prev = &out.labels[t - 1];
            let mut touched = vec![false; ctx.n_labels()];
            for (e, &acc) in out.sync[t].iter().enumerate() {
                if !acc {
                    continue;
                }
                let (a, b) = ctx.ssw_ends[e];
                let (i, j) = (prev[a], prev[b]);
                prop_assert!(i != 0 && j != 0 && i != j, "step {} switch {}", t, e);
                // Exclusive: a label group joins at most one merge per step.
                prop_assert!(!touched[i] && !touched[j], "step {} switch {}", t, e);
                touched[i] = true;
                touched[j] = true;
                prop_assert!(dsu.union(i, j));
            }
            let after = groups(&ctx, &mut dsu);
            prop_assert!(check_transition_safety(&before, &after).is_safe(), "step {}", t);

            for (k, (&p, &l)) in prev.iter().zip(&out.labels[t]).enumerate() {
                if p != 0 {
                    prop_assert!(l != 0, "block {} died at step {}", k, t);
                    prop_assert_eq!(dsu.find(l), dsu.find(p));
                }
            }

            let (next, accepted) = resolve_step(&ctx, &state, &logits, t);
            prop_assert_eq!(&accepted, &out.sync[t]);
            prop_assert_eq!(&next.labels, &out.labels[t]);
            for x in 0..next.rep.len() {
                prop_assert_eq!(next.rep[next.rep[x]], next.rep[x]);
            }
            prop_assert!(out.labels[t].iter().all(|&l| next.rep[l] == l));
            state = next;
        }
        prop_assert_eq!(&state, &last);

        let root = out.root_tensor();
        let r = out.dims.r;
        for cell in root.chunks(r) {
            prop_assert_eq!(cell.iter().filter(|&&x| x == 1.0).count(), 1);
            prop_assert_eq!(cell.iter().sum::<f64>(), 1.0);
        }
        let closed = out.cumulative_sync();
        prop_assert_eq!(closed.last().unwrap(), &last.closed);
    }
}
