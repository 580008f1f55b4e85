use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use ssdmgf::feasibility::{extract_warm_start, heuristic_logits, resolve_sequence, ResolveContext};
use ssdmgf::fixtures::replica_feeder;
use ssdmgf::optimizer::{build_model, solve_outcome, Budget, PartialAssignment};
use ssdmgf::plan::{objective_value, read_plan_dir, write_plan_dir, RuleSet};
use ssdmgf::scenario::{generate_grid, GridConfig, Scenario};
use ssdmgf::sync_structure::CatalogueEntry;
use ssdmgf::Network;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ssdmgf"));
    c.env_remove("SSDMGF_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn net() -> Network {
    Network::new(replica_feeder()).unwrap()
}

/// One 32-step replica scenario written to `dir`.
fn scenario_file(dir: &Path) -> (Scenario, PathBuf) {
    let net = net();
    let cfg = GridConfig {
        seasons: vec![ssdmgf::topology::Season::Summer],
        t0_hours: vec![10],
        outage_minutes: vec![60],
        damaged: Some(vec![1]),
        steps: Some(32),
        ..GridConfig::default()
    };
    let sc = generate_grid(&net, &cfg).unwrap().remove(0);
    let p = dir.join("scenario.json");
    std::fs::write(&p, serde_json::to_string(&sc).unwrap()).unwrap();
    (sc, p)
}

#[test]
fn modes_match_the_library_catalogue() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("modes.json");
    let o = run(&["modes", "--feeder", "replica", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let entries: Vec<CatalogueEntry> = serde_json::from_value(read_json(&out)).unwrap();
    assert_eq!(entries, net().catalogue.entries);
    assert_eq!(entries.len(), 15);

    let o = run(&["modes", "--feeder", "replica", "--tg", "0", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let off: Vec<CatalogueEntry> = serde_json::from_value(read_json(&out)).unwrap();
    assert!(off.iter().all(|e| !e.tg_active));
    assert!(off.len() < entries.len());
}

#[test]
fn scenarios_follow_the_grid_and_echo_config() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(&grid, r#"{"seasons":["winter"],"t0_hours":[8,9],"outage_minutes":[60],"steps":8}"#).unwrap();
    let out = dir.path().join("scen");
    let o = run(&["scenarios", "--feeder", "replica", "--config", s(&grid), "--seed", "5", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&out.join("manifest.json"));
    let expected = generate_grid(&net(), &serde_json::from_str(&std::fs::read_to_string(&grid).unwrap()).unwrap()).unwrap();
    assert_eq!(m["count"].as_u64().unwrap() as usize, expected.len());
    assert_eq!(m["config"]["seed"], 5);
    for sc in &expected {
        let back: Scenario = serde_json::from_value(read_json(&out.join(format!("{}.json", sc.id)))).unwrap();
        assert_eq!(&back, sc);
    }
}

#[test]
fn config_precedence_is_flag_then_file_then_default() {
    let dir = tempfile::tempdir().unwrap();
    let (_, scen) = scenario_file(dir.path());
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 7\nmax_nodes = 1234\n").unwrap();
    let stats = dir.path().join("stats.json");
    let plan = dir.path().join("plan");
    let args = ["solve", "--feeder", "replica", "--scenario", s(&scen), "--out", s(&plan), "--stats", s(&stats)];

    assert_eq!(code(&run(&args)), 0);
    assert_eq!(read_json(&stats)["config"]["seed"], 42);

    let mut with_file = args.to_vec();
    with_file.extend(["--config", s(&cfg)]);
    assert_eq!(code(&run(&with_file)), 0);
    let st = read_json(&stats);
    assert_eq!(st["config"]["seed"], 7);
    assert_eq!(st["config"]["max_nodes"], 1234);

    with_file.extend(["--seed", "9", "--budget", "999"]);
    assert_eq!(code(&run(&with_file)), 0);
    let st = read_json(&stats);
    assert_eq!(st["config"]["seed"], 9);
    assert_eq!(st["config"]["max_nodes"], 999);
    assert_eq!(read_json(&plan.join("manifest.json"))["config"]["seed"], 9);

    std::fs::write(&cfg, "seeed = 1\n").unwrap();
    assert_eq!(code(&run(&with_file)), 3);
}

#[test]
fn solve_and_validate_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (sc, scen) = scenario_file(dir.path());
    let plan_dir = dir.path().join("plan");
    let o = run(&["solve", "--feeder", "replica", "--scenario", s(&scen), "--out", s(&plan_dir)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let net = net();
    let plan = read_plan_dir(&plan_dir, &net).unwrap();
    let lib = solve_outcome(&net, &sc, RuleSet::Ssdmgf, None, &Budget::default()).unwrap().plan.unwrap();
    assert!((objective_value(&net, &plan) - objective_value(&net, &lib)).abs() < 1e-9);

    let report = dir.path().join("violations.json");
    let o = run(&["validate", "--feeder", "replica", "--scenario", s(&scen), "--plan", s(&plan_dir), "--out", s(&report)]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&report), Value::Array(vec![]));

    // Drop a source block at one step: the validator must object.
    let mut bad = plan.clone();
    let k = net.bess_block[0];
    bad.steps[3].u_bk[k] = false;
    let bad_dir = dir.path().join("bad");
    write_plan_dir(&bad_dir, &net, &bad, Value::Null).unwrap();
    let o = run(&["validate", "--feeder", "replica", "--scenario", s(&scen), "--plan", s(&bad_dir), "--out", s(&report)]);
    assert_eq!(code(&o), 2);
    assert!(!read_json(&report).as_array().unwrap().is_empty());
}

#[test]
fn resolve_and_warmstart_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (sc, scen) = scenario_file(dir.path());
    let resolved = dir.path().join("feasible.json");
    let warm = dir.path().join("warm.json");
    assert_eq!(code(&run(&["resolve", "--feeder", "replica", "--scenario", s(&scen), "--out", s(&resolved)])), 0);
    assert_eq!(code(&run(&["warmstart", "--feeder", "replica", "--resolved", s(&resolved), "--out", s(&warm)])), 0);
    let net = net();
    let ctx = ResolveContext::new(&net, &sc, 0.5);
    let (out, _) = resolve_sequence(&ctx, &heuristic_logits(&net, &sc, &ctx)).unwrap();
    let lib = extract_warm_start(&net, &ctx, &out).unwrap().warm;
    let cli: PartialAssignment = serde_json::from_value(read_json(&warm)).unwrap();
    assert_eq!(cli, lib);

    let plan = dir.path().join("plan");
    let stats = dir.path().join("stats.json");
    let o = run(&[
        "solve", "--feeder", "replica", "--scenario", s(&scen), "--warm", s(&warm), "--out", s(&plan), "--stats", s(&stats),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&stats)["stats"]["warm_start_accepted"], true);
}

#[test]
fn export_model_census_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (sc, scen) = scenario_file(dir.path());
    let lp = dir.path().join("model.lp");
    let o = run(&["export-model", "--feeder", "replica", "--scenario", s(&scen), "--rules", "rr", "--out", s(&lp)]);
    assert_eq!(code(&o), 0);
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    let census = build_model(&net(), &sc, RuleSet::Rr).unwrap().census();
    assert_eq!(printed["census"], serde_json::to_value(&census).unwrap());
    let text = std::fs::read_to_string(&lp).unwrap();
    assert!(text.starts_with("\\") && text.trim_end().ends_with("End"));
}

#[test]
fn batch_with_only_wws_has_unit_speedups_and_report_renders() {
    let dir = tempfile::tempdir().unwrap();
    let scen_dir = dir.path().join("scen");
    std::fs::create_dir_all(&scen_dir).unwrap();
    let (_, scen) = scenario_file(dir.path());
    std::fs::copy(&scen, scen_dir.join("a.json")).unwrap();
    let out = dir.path().join("batch");
    let o = bin()
        .args(["batch", "--feeder", "replica", "--scenarios", s(&scen_dir), "--strategies", "WWS", "--out", s(&out)])
        .env("SSDMGF_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("report.json"));
    let agg = &report["aggregates"][0];
    assert_eq!(agg["geo_mean_time_speedup"], 1.0);
    assert_eq!(agg["median_node_speedup"], 1.0);
    assert_eq!(read_json(&out.join("manifest.json"))["config"]["threads"], 1);

    let rep = dir.path().join("rep");
    let o = run(&["report", "--feeder", "replica", "--plans", s(&out.join("plans")), "--out", s(&rep)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let classes = std::fs::read_to_string(rep.join("class_mode.csv")).unwrap();
    assert_eq!(classes.lines().count(), 33);

    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&run(&["report", "--feeder", "replica", "--plans", s(&empty), "--out", s(&rep)])), 3);
}

#[test]
fn parse_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.feeder");
    std::fs::write(&bad, "[buses]\nnot a bus\n").unwrap();
    assert_eq!(code(&run(&["ingest", "--feeder", s(&bad)])), 3);
    assert_eq!(code(&run(&["ingest", "--feeder", s(&dir.path().join("missing"))])), 3);
    assert_eq!(code(&run(&["no-such-command"])), 3);
    let o = run(&["ingest", "--feeder", "replica"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["blocks"].as_array().unwrap().len(), 12);
    assert_eq!(v["modes"], 15);
}
