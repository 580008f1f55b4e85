use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use ssdmgf::experiment::{run_batch, warm_start_for, BatchOptions};
use ssdmgf::feasibility::{
    extract_warm_start, heuristic_logits, resolve_sequence, FeasibleOutputs, Logits, ResolveContext,
};
use ssdmgf::optimizer::{build_model, solve_outcome, PartialAssignment, WarmStrategy};
use ssdmgf::plan::{read_plan_dir, validate_plan, write_plan_dir, RuleSet};
use ssdmgf::scenario::{build_features, generate_grid, split_dataset, GridConfig, Scenario};
use ssdmgf::settings::RunConfig;
use ssdmgf::sync_structure::ModeCatalogue;
use ssdmgf::topology::{load_feeder, Feeder};
use ssdmgf::{Error, Network};

const EXIT_VIOLATIONS: u8 = 2;
const EXIT_PARSE_OR_INFEASIBLE: u8 = 3;
const THREADS_ENV: &str = "SSDMGF_THREADS";

#[derive(Parser)]
#[command(name = "ssdmgf", version, about = "Synchronization-safe microgrid formation for black-start restoration")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Feeder file; `replica` selects the bundled 12-block replica.
    #[arg(long)]
    feeder: String,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct SolveFlags {
    #[arg(long)]
    rules: Option<RuleSet>,
    /// Node budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TgFlag {
    #[value(name = "0")]
    Off,
    #[value(name = "1")]
    On,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a feeder and print its block structure.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate system modes.
    Modes {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "both")]
        tg: TgFlag,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the scenario grid.
    Scenarios {
        #[arg(long)]
        feeder: String,
        /// Grid as JSON, or a TOML run configuration with a `[grid]` table.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the feature tensor of a scenario.
    Features {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a scenario.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: SolveFlags,
        #[arg(long)]
        scenario: PathBuf,
        /// Warm start: none, zero, random, resolved, oracle, or a JSON file.
        #[arg(long, default_value = "none")]
        warm: String,
        /// Logit file for `--warm resolved`; heuristic logits otherwise.
        #[arg(long)]
        logits: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Plan directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Check a plan against every constraint.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        rules: Option<RuleSet>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn logits into a safe synchronization schedule.
    Resolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        /// Logit file; heuristic logits when absent.
        #[arg(long)]
        logits: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract a warm start from a resolved schedule.
    Warmstart {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolved: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve every scenario in a directory under several warm starts.
    Batch {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: SolveFlags,
        /// Directory of scenario JSON files.
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "WWS,AZWS,RWS,CAWS,OSWS")]
        strategies: Vec<WarmStrategy>,
        /// Directory of `<scenario id>.csv` logit files for CAWS.
        #[arg(long)]
        logits: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Keep at most this many scenarios, in file-name order.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render plot-ready tables from plan directories.
    Report {
        #[command(flatten)]
        common: Common,
        /// Plan directories, or directories containing them.
        #[arg(long, required = true, num_args = 1..)]
        plans: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the mixed-integer model in LP format.
    ExportModel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        rules: Option<RuleSet>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Error tagged with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Feeder(_) | Error::File { .. } | Error::Config(_) | Error::Format(_) | Error::Json(_) | Error::Csv(_) | Error::Infeasible(_) => {
                EXIT_PARSE_OR_INFEASIBLE
            }
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

type Run<T = ExitCode> = std::result::Result<T, Failure>;

fn load_config(path: Option<&Path>) -> Run<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

impl Common {
    fn config(&self) -> Run<RunConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

impl SolveFlags {
    fn apply(&self, cfg: &mut RunConfig) -> Run<()> {
        if let Some(r) = self.rules {
            cfg.rules = r;
        }
        if let Some(n) = self.budget {
            cfg.max_nodes = n;
        }
        if let Some(t) = self.time_limit {
            cfg.max_time_s = t;
        }
        Ok(cfg.check()?)
    }
}

fn set_lambda(cfg: &mut RunConfig, lambda: Option<f64>) -> Run<()> {
    if let Some(l) = lambda {
        cfg.lambda = l;
    }
    Ok(cfg.check()?)
}

fn read_feeder(spec: &str) -> Run<Feeder> {
    if spec == "replica" {
        return Ok(ssdmgf::fixtures::replica_feeder());
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Error::File { path: spec.to_string(), source: e })?;
    Ok(load_feeder(&text).map_err(Error::from)?)
}

fn network(spec: &str, cfg: &RunConfig) -> Run<Network> {
    Ok(Network::with_params(read_feeder(spec)?, cfg.params.clone())?)
}

fn read_text(path: &Path) -> Run<String> {
    Ok(std::fs::read_to_string(path).map_err(|e| Error::File { path: path.display().to_string(), source: e })?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Run<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure { code: EXIT_PARSE_OR_INFEASIBLE, message: format!("{}: {e}", path.display()) })
}

fn read_scenario(net: &Network, path: &Path) -> Run<Scenario> {
    let sc: Scenario = read_json(path)?;
    sc.check(net)?;
    Ok(sc)
}

fn write_text(path: &Path, text: &str) -> Run<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::File { path: dir.display().to_string(), source: e })?;
    }
    std::fs::write(path, text).map_err(|e| Error::File { path: path.display().to_string(), source: e })?;
    Ok(())
}

fn write_json(path: &Path, v: &impl Serialize) -> Run<()> {
    write_text(path, &serde_json::to_string_pretty(v).map_err(Error::from)?)
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, v: &impl Serialize) -> Run<()> {
    match out {
        Some(p) => write_json(p, v),
        None => {
            use std::io::Write;
            let text = serde_json::to_string_pretty(v).map_err(Error::from)?;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io(e).into()),
                _ => Ok(()),
            }
        }
    }
}

fn echo(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn ingest(common: &Common, out: Option<&Path>) -> Run {
    let cfg = common.config()?;
    let net = network(&common.feeder, &cfg)?;
    let f = &net.feeder;
    let line_ids = |ls: &[ssdmgf::topology::LineIdx]| ls.iter().map(|&l| f.line(l).id.clone()).collect::<Vec<_>>();
    let blocks: Vec<_> = (0..net.n_blocks())
        .map(|k| {
            json!({
                "block": k,
                "buses": net.partition.buses[k].iter().map(|b| f.bus(*b).id).collect::<Vec<_>>(),
                "bess": net.bess_of_block[k].map(|d| f.bess[d].id.clone()),
                "tg": net.bs.tg == Some(k),
            })
        })
        .collect();
    let summary = json!({
        "feeder_hash": f.source_hash,
        "buses": net.n_buses(),
        "lines": net.n_lines(),
        "blocks": blocks,
        "esw": line_ids(&net.esw),
        "ssw": line_ids(&net.ssw),
        "bs_blocks": net.bs_blocks,
        "nl_buses": net.nl_buses.iter().map(|b| f.bus(*b).id).collect::<Vec<_>>(),
        "modes": net.catalogue.len(),
        "config": echo(&cfg),
    });
    emit(out, &summary)?;
    Ok(ExitCode::SUCCESS)
}

fn modes(common: &Common, tg: TgFlag, out: Option<&Path>) -> Run {
    let cfg = common.config()?;
    let net = network(&common.feeder, &cfg)?;
    let cat = match tg {
        TgFlag::Off => ModeCatalogue::build_for(&net.backbone, &net.bs, &[false]),
        TgFlag::On => ModeCatalogue::build_for(&net.backbone, &net.bs, &[true]),
        TgFlag::Both => net.catalogue.clone(),
    };
    emit(out, &cat.entries)?;
    eprintln!("{} modes, class histogram {:?}", cat.len(), cat.class_histogram());
    Ok(ExitCode::SUCCESS)
}

fn scenarios(feeder: &str, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Run {
    let mut cfg = match config {
        Some(p) if p.extension().is_some_and(|e| e == "json") => {
            RunConfig { grid: read_json::<GridConfig>(p)?, ..RunConfig::default() }
        }
        other => load_config(other)?,
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let net = network(feeder, &cfg)?;
    let grid = generate_grid(&net, &cfg.grid)?;
    for sc in &grid {
        write_json(&out.join(format!("{}.json", sc.id)), sc)?;
    }
    let split = split_dataset(grid.len(), cfg.seed);
    let manifest = json!({
        "count": grid.len(),
        "ids": grid.iter().map(|s| s.id.clone()).collect::<Vec<_>>(),
        "split": split,
        "feeder_hash": net.feeder.source_hash,
        "config": echo(&cfg),
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    eprintln!("{} scenarios written to {}", grid.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn features(common: &Common, scenario: &Path, out: &Path) -> Run {
    let cfg = common.config()?;
    let net = network(&common.feeder, &cfg)?;
    let sc = read_scenario(&net, scenario)?;
    build_features(&net, &sc)?.write(&sc.id, out)?;
    Ok(ExitCode::SUCCESS)
}

fn warm_from_flag(
    net: &Network,
    sc: &Scenario,
    cfg: &RunConfig,
    warm: &str,
    logits: Option<&Path>,
) -> Run<Option<PartialAssignment>> {
    let strategy: Option<WarmStrategy> = warm.parse().ok();
    let Some(strategy) = strategy else {
        return Ok(Some(read_json(Path::new(warm))?));
    };
    let opts = BatchOptions { seed: cfg.seed, lambda: cfg.lambda, ..BatchOptions::default() };
    match strategy {
        WarmStrategy::Caws if logits.is_some() => {
            let ctx = ResolveContext::new(net, sc, cfg.lambda);
            let z = Logits::load(logits.unwrap())?;
            let (out, _) = resolve_sequence(&ctx, &z)?;
            Ok(Some(extract_warm_start(net, &ctx, &out)?.warm))
        }
        WarmStrategy::Osws => {
            let cold = solve_outcome(net, sc, cfg.rules, None, &cfg.budget())?;
            Ok(warm_start_for(net, sc, strategy, &opts, cold.plan.as_ref())?)
        }
        _ => Ok(warm_start_for(net, sc, strategy, &opts, None)?),
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    common: &Common,
    flags: &SolveFlags,
    scenario: &Path,
    warm: &str,
    logits: Option<&Path>,
    lambda: Option<f64>,
    out: &Path,
    stats_path: Option<&Path>,
) -> Run {
    let mut cfg = common.config()?;
    flags.apply(&mut cfg)?;
    set_lambda(&mut cfg, lambda)?;
    let net = network(&common.feeder, &cfg)?;
    let sc = read_scenario(&net, scenario)?;
    let w = warm_from_flag(&net, &sc, &cfg, warm, logits)?;
    let o = solve_outcome(&net, &sc, cfg.rules, w.as_ref(), &cfg.budget())?;
    let stats = json!({ "scenario_id": sc.id, "warm": warm, "stats": o.stats, "config": echo(&cfg) });
    if let Some(p) = stats_path {
        write_json(p, &stats)?;
    }
    let Some(plan) = o.plan else {
        return Err(Failure {
            code: EXIT_PARSE_OR_INFEASIBLE,
            message: format!("no plan found for {} ({})", sc.id, o.stats.status.as_str()),
        });
    };
    write_plan_dir(out, &net, &plan, echo(&cfg))?;
    let report = validate_plan(&net, &sc, &plan, cfg.rules)?;
    eprintln!(
        "{}: {} objective {:.6} after {} nodes",
        sc.id,
        o.stats.status.as_str(),
        o.stats.best_objective.unwrap_or(0.0),
        o.stats.nodes
    );
    if !report.is_empty() {
        eprintln!("{} violations", report.len());
        return Ok(ExitCode::from(EXIT_VIOLATIONS));
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(common: &Common, scenario: &Path, plan: &Path, rules: Option<RuleSet>, out: Option<&Path>) -> Run {
    let mut cfg = common.config()?;
    if let Some(r) = rules {
        cfg.rules = r;
    }
    let net = network(&common.feeder, &cfg)?;
    let sc = read_scenario(&net, scenario)?;
    let plan = read_plan_dir(plan, &net)?;
    let report = validate_plan(&net, &sc, &plan, cfg.rules)?;
    emit(out, &report)?;
    Ok(if report.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VIOLATIONS) })
}

/// Resolved schedule plus what is needed to turn it into a warm start.
#[derive(Serialize, serde::Deserialize)]
struct ResolvedFile {
    scenario_id: String,
    lambda: f64,
    tg_available: Vec<bool>,
    outputs: FeasibleOutputs,
    #[serde(default)]
    config: serde_json::Value,
}

fn resolve(common: &Common, scenario: &Path, logits: Option<&Path>, lambda: Option<f64>, out: &Path) -> Run {
    let mut cfg = common.config()?;
    set_lambda(&mut cfg, lambda)?;
    let net = network(&common.feeder, &cfg)?;
    let sc = read_scenario(&net, scenario)?;
    let ctx = ResolveContext::new(&net, &sc, cfg.lambda);
    let z = match logits {
        Some(p) => Logits::load(p)?,
        None => heuristic_logits(&net, &sc, &ctx),
    };
    let (outputs, _) = resolve_sequence(&ctx, &z)?;
    let file =
        ResolvedFile { scenario_id: sc.id.clone(), lambda: cfg.lambda, tg_available: sc.u_tg.clone(), outputs, config: echo(&cfg) };
    write_json(out, &file)?;
    Ok(ExitCode::SUCCESS)
}

fn warmstart(common: &Common, resolved: &Path, out: &Path) -> Run {
    let cfg = common.config()?;
    let net = network(&common.feeder, &cfg)?;
    let file: ResolvedFile = read_json(resolved)?;
    let ctx = ResolveContext::with_availability(&net, file.tg_available, file.lambda);
    let ex = extract_warm_start(&net, &ctx, &file.outputs)?;
    if let Some(reason) = &ex.degraded {
        eprintln!("warm start reduced to switch statuses: {reason}");
    }
    write_json(out, &ex.warm)?;
    Ok(ExitCode::SUCCESS)
}

fn scenario_files(dir: &Path) -> Run<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::File { path: dir.display().to_string(), source: e })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json") && p.file_name().is_some_and(|n| n != "manifest.json"))
        .collect();
    files.sort();
    Ok(files)
}

fn threads_cap(flag: Option<usize>, cfg: &RunConfig) -> Run<Option<usize>> {
    let env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
            Failure { code: EXIT_PARSE_OR_INFEASIBLE, message: format!("{THREADS_ENV}={v} is not a positive integer") }
        })?),
        Err(_) => None,
    };
    Ok(match (flag.or(cfg.threads), env) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    })
}

#[allow(clippy::too_many_arguments)]
fn batch(
    common: &Common,
    flags: &SolveFlags,
    dir: &Path,
    strategies: &[WarmStrategy],
    logits: Option<&Path>,
    lambda: Option<f64>,
    threads: Option<usize>,
    limit: Option<usize>,
    out: &Path,
) -> Run {
    let mut cfg = common.config()?;
    flags.apply(&mut cfg)?;
    set_lambda(&mut cfg, lambda)?;
    cfg.threads = threads_cap(threads, &cfg)?;
    let net = network(&common.feeder, &cfg)?;
    let mut files = scenario_files(dir)?;
    if let Some(n) = limit {
        files.truncate(n);
    }
    let scenarios = files.iter().map(|p| read_scenario(&net, p)).collect::<Run<Vec<_>>>()?;
    let opts = BatchOptions {
        rules: cfg.rules,
        budget: cfg.budget(),
        seed: cfg.seed,
        lambda: cfg.lambda,
        threads: cfg.threads,
        logits_dir: logits.map(Path::to_path_buf),
    };
    let (report, plans) = run_batch(&net, &scenarios, strategies, &opts)?;
    std::fs::create_dir_all(out).map_err(|e| Error::File { path: out.display().to_string(), source: e })?;
    for (row, plan) in report.rows.iter().zip(&plans) {
        if let Some(plan) = plan {
            let d = out.join("plans").join(&row.scenario_id).join(row.strategy.as_str());
            write_plan_dir(&d, &net, plan, echo(&cfg))?;
        }
    }
    report.write_csv(&out.join("rows.csv"))?;
    report.write_aggregates_csv(&out.join("aggregates.csv"))?;
    write_json(&out.join("report.json"), &report)?;
    let manifest = json!({
        "scenarios": scenarios.len(),
        "strategies": strategies,
        "feeder_hash": net.feeder.source_hash,
        "config": echo(&cfg),
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    let failures = report.rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!("{} rows, {failures} failed", report.rows.len());
    Ok(ExitCode::SUCCESS)
}

fn find_plan_dirs(p: &Path, out: &mut Vec<PathBuf>) -> Run<()> {
    if p.join("manifest.json").is_file() && p.join("u_bk.csv").is_file() {
        out.push(p.to_path_buf());
        return Ok(());
    }
    let entries = std::fs::read_dir(p).map_err(|e| Error::File { path: p.display().to_string(), source: e })?;
    let mut subs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|s| s.is_dir()).collect();
    subs.sort();
    for s in subs {
        find_plan_dirs(&s, out)?;
    }
    Ok(())
}

fn report(common: &Common, roots: &[PathBuf], out: &Path) -> Run {
    let cfg = common.config()?;
    let net = network(&common.feeder, &cfg)?;
    let mut dirs = Vec::new();
    for r in roots {
        find_plan_dirs(r, &mut dirs)?;
    }
    if dirs.is_empty() {
        return Err(Failure { code: EXIT_PARSE_OR_INFEASIBLE, message: "no plan directories found".into() });
    }
    let plans = dirs.iter().map(|d| Ok(read_plan_dir(d, &net)?)).collect::<Run<Vec<_>>>()?;
    ssdmgf::experiment::report_render(&net, &plans).write_dir(out)?;
    let manifest = json!({
        "plans": dirs.iter().map(|d| d.display().to_string()).collect::<Vec<_>>(),
        "config": echo(&cfg),
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn export_model(common: &Common, scenario: &Path, rules: Option<RuleSet>, out: &Path) -> Run {
    let mut cfg = common.config()?;
    if let Some(r) = rules {
        cfg.rules = r;
    }
    let net = network(&common.feeder, &cfg)?;
    let sc = read_scenario(&net, scenario)?;
    let model = build_model(&net, &sc, cfg.rules)?;
    write_text(out, &model.to_lp_string())?;
    emit(None, &json!({ "census": model.census(), "config": echo(&cfg) }))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Run {
    match &cli.cmd {
        Cmd::Ingest { common, out } => ingest(common, out.as_deref()),
        Cmd::Modes { common, tg, out } => modes(common, *tg, out.as_deref()),
        Cmd::Scenarios { feeder, config, seed, out } => scenarios(feeder, config.as_deref(), *seed, out),
        Cmd::Features { common, scenario, out } => features(common, scenario, out),
        Cmd::Solve { common, flags, scenario, warm, logits, lambda, out, stats } => {
            solve(common, flags, scenario, warm, logits.as_deref(), *lambda, out, stats.as_deref())
        }
        Cmd::Validate { common, scenario, plan, rules, out } => validate(common, scenario, plan, *rules, out.as_deref()),
        Cmd::Resolve { common, scenario, logits, lambda, out } => resolve(common, scenario, logits.as_deref(), *lambda, out),
        Cmd::Warmstart { common, resolved, out } => warmstart(common, resolved, out),
        Cmd::Batch { common, flags, scenarios, strategies, logits, lambda, threads, limit, out } => {
            batch(common, flags, scenarios, strategies, logits.as_deref(), *lambda, *threads, *limit, out)
        }
        Cmd::Report { common, plans, out } => report(common, plans, out),
        Cmd::ExportModel { common, scenario, rules, out } => export_model(common, scenario, *rules, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_PARSE_OR_INFEASIBLE),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
