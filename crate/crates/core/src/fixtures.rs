//! Bundled feeders and small generated instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::Network;
use crate::scenario::Scenario;
use crate::topology::{load_feeder, Feeder};

/// Source text of the bundled 12-block replica feeder.
pub const REPLICA_FEEDER: &str = include_str!("../data/replica123.feeder");

pub fn replica_feeder() -> Feeder {
    load_feeder(REPLICA_FEEDER).expect("bundled replica feeder is valid")
}

const FLAT_PROFILES: &str = "[profiles]
load, spring, 1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1
pv, spring, 0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5
";

fn diag(v: f64) -> String {
    format!("{v},0,0,0,{v},0,0,0,{v}")
}

fn line_row(id: &str, from: u32, to: u32, class: &str, r: f64) -> String {
    format!("{id}, {from}, {to}, abc, {class}, {}, {}, 1,1,1, 1,1,1\n", diag(r), diag(2.0 * r))
}

/// Random small feeder: `blocks` blocks of two buses joined in a random tree
/// of ESWs, up to two SSWs, one to three BESS units with distinct set points,
/// an optional TG, a CL load per block and NL loads at ESW terminals.
pub fn toy_feeder_text(seed: u64, blocks: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = blocks.clamp(2, 5);
    let bus = |k: usize, i: u32| (k as u32 + 1) * 10 + i;
    let mut s = String::from("[base]\ns_base_mva = 1.0\nv_base_kv = 4.16\n\n[buses]\n");
    for k in 0..blocks {
        s += &format!("{}, abc\n{}, abc\n", bus(k, 1), bus(k, 2));
    }
    s += "\n[lines]\n";
    for k in 0..blocks {
        s += &line_row(&format!("L{k}"), bus(k, 1), bus(k, 2), "LN", 0.004);
    }
    let mut parent = vec![usize::MAX; blocks];
    for k in 1..blocks {
        parent[k] = rng.gen_range(0..k);
        s += &line_row(&format!("E{k}"), bus(parent[k], 2), bus(k, 1), "ESW", 0.002);
    }
    let n_bess = rng.gen_range(1..=blocks.min(3));
    let mut order: Vec<usize> = (0..blocks).collect();
    order.shuffle(&mut rng);
    let mut bess: Vec<usize> = order[..n_bess].to_vec();
    bess.sort_unstable();
    let tg = (n_bess < blocks && rng.gen_bool(0.5)).then(|| order[n_bess]);
    let mut n_ssw = 0;
    for _ in 0..2 {
        let a = rng.gen_range(0..blocks);
        let b = rng.gen_range(0..blocks);
        if a != b && parent[a] != b && parent[b] != a && rng.gen_bool(0.7) {
            n_ssw += 1;
            s += &line_row(&format!("S{n_ssw}"), bus(a, 2), bus(b, 2), "SSW", 0.002);
        }
    }
    s += "\n[devices]\n";
    if let Some(k) = tg {
        s += &format!("tg, {}, {:.3}\n", bus(k, 1), rng.gen_range(0.6..1.5));
    }
    let setpoints = [60.45, 60.30, 60.15];
    for (i, &k) in bess.iter().enumerate() {
        s += &format!(
            "bess, B{i}, {}, {:.3}, {:.3}, {:.2}, 0.2, 1.0, {}\n",
            bus(k, 1),
            rng.gen_range(0.6..1.4),
            rng.gen_range(0.3..1.2),
            rng.gen_range(0.6..1.0),
            setpoints[i]
        );
    }
    if rng.gen_bool(0.5) {
        s += &format!("pv, PV0, {}, {:.3}, 0.95\n", bus(rng.gen_range(0..blocks), 2), rng.gen_range(0.02..0.1));
    }
    s += "\n[loads]\n";
    for k in 0..blocks {
        let p: f64 = rng.gen_range(0.01..0.08);
        s += &format!("{}, CL, {p:.4}, {p:.4}, {p:.4}, 0.95\n", bus(k, 2));
    }
    let mut nl = 0;
    for k in 1..blocks {
        if nl < 2 && rng.gen_bool(0.6) {
            nl += 1;
            let p: f64 = rng.gen_range(0.01..0.06);
            s += &format!("{}, NL, {p:.4}, {p:.4}, {p:.4}, 0.95\n", bus(k, 1));
        }
    }
    s + "\n" + FLAT_PROFILES
}

/// A random toy network with a scenario of `steps` steps; the TG, if any,
/// returns at a random step.
pub fn toy_instance(seed: u64, blocks: usize, steps: usize) -> (Network, Scenario) {
    let feeder = load_feeder(&toy_feeder_text(seed, blocks)).expect("toy feeder is valid");
    let net = Network::new(feeder).expect("toy network is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let back = rng.gen_range(0..=steps);
    let u_tg = (0..steps).map(|t| net.bs.tg.is_some() && t >= back).collect();
    let load_mult = (0..steps).map(|_| rng.gen_range(0.7..1.0)).collect();
    let pv_eta = (0..steps).map(|_| rng.gen_range(0.0..0.8)).collect();
    let sc = Scenario::custom(format!("toy-{seed}"), u_tg, load_mult, pv_eta, None, 15.0);
    (net, sc)
}

/// Three BESS blocks chained by two SSWs and a dead block with a heavy
/// single-phase load behind an ESW from the middle unit. Serving the load
/// within the horizon needs all three units, which only a simultaneous
/// triple merge can provide in time.
pub fn triple_merge_instance() -> (Network, Scenario) {
    let mut s = String::from("[base]\ns_base_mva = 1.0\nv_base_kv = 4.16\n\n[buses]\n");
    for k in 1..=4 {
        s += &format!("{k}1, abc\n{k}2, abc\n");
    }
    s += "\n[lines]\n";
    for k in 1..=4 {
        s += &line_row(&format!("L{k}"), k * 10 + 1, k * 10 + 2, "LN", 0.004);
    }
    s += &line_row("E1", 22, 41, "ESW", 0.002);
    s += &line_row("S1", 12, 21, "SSW", 0.002);
    s += &line_row("S2", 22, 31, "SSW", 0.002);
    s += "\n[devices]\n";
    s += "bess, BA, 11, 1.0, 10.0, 0.9, 0.2, 1.0, 60.45\n";
    s += "bess, BB, 21, 1.0, 10.0, 0.9, 0.2, 1.0, 60.30\n";
    s += "bess, BC, 31, 1.0, 10.0, 0.9, 0.2, 1.0, 60.15\n";
    s += "\n[loads]\n";
    for k in 1..=3 {
        s += &format!("{k}2, CL, 0.005, 0.005, 0.005, 0.99\n");
    }
    s += "42, CL, 0.4, 0, 0, 0.99\n\n";
    s += FLAT_PROFILES;
    let net = Network::new(load_feeder(&s).expect("crafted feeder is valid")).expect("crafted network is valid");
    let sc = Scenario::custom("triple-merge", vec![false; 3], vec![1.0; 3], vec![0.0; 3], None, 15.0);
    (net, sc)
}
