use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssdmgf::fixtures::toy_feeder_text;
use ssdmgf::powerflow::{solve_tree_flow, FlowState, Injections};
use ssdmgf::topology::{load_feeder, BusIdx, Feeder, LineClass};

fn feeder(seed: u64, blocks: usize) -> Feeder {
    load_feeder(&toy_feeder_text(seed, blocks)).unwrap()
}

/// Internal lines and ESWs closed, SSWs open: one tree over every bus.
fn tree_status(f: &Feeder) -> Vec<bool> {
    f.lines.iter().map(|l| l.class != LineClass::Ssw).collect()
}

fn random_injections(f: &Feeder, seed: u64) -> Injections {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inj = Injections::zeros(f.buses.len());
    for (b, bus) in f.buses.iter().enumerate() {
        for n in bus.phases.iter() {
            inj.p[b][n] = rng.gen_range(-0.5..0.5);
            inj.q[b][n] = rng.gen_range(-0.3..0.3);
        }
    }
    inj
}

/// Largest nodal-balance and voltage-drop residuals, recomputed from the
/// line records in file orientation. Root buses absorb the mismatch.
fn residuals(f: &Feeder, closed: &[bool], inj: &Injections, s: &FlowState, roots: &[BusIdx]) -> (f64, f64) {
    let mut bal_p = inj.p.clone();
    let mut bal_q = inj.q.clone();
    let mut drop = 0.0f64;
    for (l, line) in f.lines.iter().enumerate() {
        if !closed[l] {
            continue;
        }
        for n in line.phases.iter() {
            bal_p[line.from.0][n] -= s.p_line[l][n];
            bal_q[line.from.0][n] -= s.q_line[l][n];
            bal_p[line.to.0][n] += s.p_line[l][n];
            bal_q[line.to.0][n] += s.q_line[l][n];
            let mut expect = s.v[line.from.0][n];
            for m in line.phases.iter() {
                expect -= 2.0 * (line.r[n][m] * s.p_line[l][m] + line.x[n][m] * s.q_line[l][m]);
            }
            drop = drop.max((s.v[line.to.0][n] - expect).abs());
        }
    }
    for r in roots {
        bal_p[r.0] = [0.0; 3];
        bal_q[r.0] = [0.0; 3];
    }
    let bal = bal_p.iter().chain(&bal_q).flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    (bal, drop)
}

/// Buses reachable from `start` over closed lines.
fn side(f: &Feeder, closed: &[bool], start: BusIdx) -> Vec<bool> {
    let mut seen = vec![false; f.buses.len()];
    let mut stack = vec![start];
    seen[start.0] = true;
    while let Some(b) = stack.pop() {
        for (l, line) in f.lines.iter().enumerate() {
            if !closed[l] || (line.from != b && line.to != b) {
                continue;
            }
            let c = line.other_end(b);
            if !seen[c.0] {
                seen[c.0] = true;
                stack.push(c);
            }
        }
    }
    seen
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tree_flow_residuals_vanish(seed in 0u64..1000, blocks in 2usize..7, inj_seed in any::<u64>()) {
        let f = feeder(seed, blocks);
        let closed = tree_status(&f);
        let inj = random_injections(&f, inj_seed);
        let energized = vec![true; f.buses.len()];
        let s = solve_tree_flow(&f, &energized, &closed, &inj, &[BusIdx(0)]).unwrap();
        let (bal, drop) = residuals(&f, &closed, &inj, &s, &[BusIdx(0)]);
        prop_assert!(bal <= 1e-9, "balance residual {bal}");
        prop_assert!(drop <= 1e-9, "voltage residual {drop}");
        for n in f.buses[0].phases.iter() {
            prop_assert_eq!(s.v[0][n], 1.0);
        }
    }

    #[test]
    fn flows_superpose(seed in 0u64..1000, blocks in 2usize..7, a in any::<u64>(), b in any::<u64>()) {
        let f = feeder(seed, blocks);
        let closed = tree_status(&f);
        let energized = vec![true; f.buses.len()];
        let (ia, ib) = (random_injections(&f, a), random_injections(&f, b));
        let mut sum = Injections::zeros(f.buses.len());
        for x in 0..f.buses.len() {
            for n in 0..3 {
                sum.p[x][n] = ia.p[x][n] + ib.p[x][n];
                sum.q[x][n] = ia.q[x][n] + ib.q[x][n];
            }
        }
        let solve = |inj: &Injections| solve_tree_flow(&f, &energized, &closed, inj, &[BusIdx(0)]).unwrap();
        let (sa, sb, ss) = (solve(&ia), solve(&ib), solve(&sum));
        for l in 0..f.lines.len() {
            for n in 0..3 {
                prop_assert!((ss.p_line[l][n] - sa.p_line[l][n] - sb.p_line[l][n]).abs() < 1e-12);
                prop_assert!((ss.q_line[l][n] - sa.q_line[l][n] - sb.q_line[l][n]).abs() < 1e-12);
            }
        }
        for x in 0..f.buses.len() {
            for n in f.buses[x].phases.iter() {
                // Voltages are affine: deviations from the root value add up.
                prop_assert!(((ss.v[x][n] - 1.0) - (sa.v[x][n] - 1.0) - (sb.v[x][n] - 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn open_switch_decouples_sides(seed in 0u64..1000, blocks in 2usize..7, inj_seed in any::<u64>(), pick in any::<prop::sample::Index>(), bump in -0.5f64..0.5) {
        let f = feeder(seed, blocks);
        let mut closed = tree_status(&f);
        let esw: Vec<usize> = (0..f.lines.len()).filter(|&l| f.lines[l].class == LineClass::Esw).collect();
        let cut = esw[pick.index(esw.len())];
        closed[cut] = false;
        let line = &f.lines[cut];
        let roots = [line.from, line.to];
        let near = side(&f, &closed, line.from);
        let energized = vec![true; f.buses.len()];
        let inj = random_injections(&f, inj_seed);
        let base = solve_tree_flow(&f, &energized, &closed, &inj, &roots).unwrap();
        let mut changed = inj.clone();
        let far_bus = (0..f.buses.len()).find(|&b| !near[b]).unwrap();
        for n in f.buses[far_bus].phases.iter() {
            changed.p[far_bus][n] += bump;
            changed.q[far_bus][n] -= bump;
        }
        let after = solve_tree_flow(&f, &energized, &closed, &changed, &roots).unwrap();
        for (l, ln) in f.lines.iter().enumerate() {
            if near[ln.from.0] && near[ln.to.0] {
                prop_assert_eq!(base.p_line[l], after.p_line[l]);
                prop_assert_eq!(base.q_line[l], after.q_line[l]);
            }
        }
        for b in 0..f.buses.len() {
            if near[b] {
                prop_assert_eq!(base.v[b], after.v[b]);
            }
        }
        prop_assert_eq!(base.p_line[cut], [0.0; 3]);
    }
}

#[test]
fn loops_and_orphans_are_rejected() {
    let f = feeder(3, 4);
    let energized = vec![true; f.buses.len()];
    let inj = Injections::zeros(f.buses.len());
    let all_closed = vec![true; f.lines.len()];
    let has_ssw = f.lines.iter().any(|l| l.class == LineClass::Ssw);
    if has_ssw {
        assert!(solve_tree_flow(&f, &energized, &all_closed, &inj, &[BusIdx(0)]).is_err());
    }
    let none_closed = vec![false; f.lines.len()];
    assert!(solve_tree_flow(&f, &energized, &none_closed, &inj, &[BusIdx(0)]).is_err());
}
