//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when `solve` blocks a request, 2 on any
//! input or usage error.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::engine::{Engine, EngineKind};
use crate::expand::build_expanded;
use crate::model::{allowed_operators, check_embedding, ResidualState, Scenario, SliceRequest};
use crate::pricing::{PricingMode, PricingPolicy};
use crate::sim::compare::{compare, summary_csv};
use crate::sim::output::{simulate, to_pretty, write_run, RunConfig};
use crate::sim::{generate_scenario, ScenarioGen};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BLOCKED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "slicebed",
    version,
    about = "Multi-domain network slice embedding and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random multi-operator scenario.
    Gen(GenArgs),
    /// Embed one slice request with one or more engines.
    Solve(SolveArgs),
    /// Run one simulation and write its run directory.
    Simulate(SimArgs),
    /// Run several configurations over common seeds.
    Compare(CompareArgs),
    /// Print the expanded network of one service as Graphviz DOT.
    DumpExpanded(DumpArgs),
    /// Check a scenario file and print a short inventory.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum EngineArg {
    Nl,
    Pl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PricingArg {
    Static,
    Kleinrock,
}

impl From<PricingArg> for PricingMode {
    fn from(p: PricingArg) -> Self {
        match p {
            PricingArg::Static => PricingMode::Static,
            PricingArg::Kleinrock => PricingMode::Kleinrock,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator parameters as JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub operators: Option<usize>,
    #[arg(long)]
    pub nodes_per_operator: Option<usize>,
    /// Inter-operator link probability.
    #[arg(long)]
    pub pi: Option<f64>,
    /// Target utilization of the reference load.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub trust_density: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub holding: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EngineOpts {
    #[arg(long, value_enum)]
    pub pricing: Option<PricingArg>,
    /// Candidate paths per service for the path–link engine.
    #[arg(long, default_value_t = 8)]
    pub k_paths: usize,
    #[arg(long)]
    pub time_limit_ms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Request file (one request or an array); defaults to the first
    /// request stored in the scenario.
    #[arg(long)]
    pub slice: Option<PathBuf>,
    #[arg(long, value_enum, default_values_t = [EngineArg::Nl])]
    pub engine: Vec<EngineArg>,
    #[command(flatten)]
    pub opts: EngineOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorkloadOpts {
    /// Arrival rate; the scenario's when absent.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Mean holding time.
    #[arg(long)]
    pub holding: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Use the mean holding time for every request.
    #[arg(long)]
    pub deterministic_holding: bool,
    /// Skip the independent check of admitted embeddings.
    #[arg(long)]
    pub no_verify: bool,
    /// Compare the ledger with admitted footprints after every event.
    #[arg(long)]
    pub audit: bool,
    /// Write events.jsonl.
    #[arg(long)]
    pub events: bool,
    /// Utilization sampling interval; no time series when zero.
    #[arg(long, default_value_t = 0.0)]
    pub sample_interval: f64,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = EngineArg::Pl)]
    pub engine: EngineArg,
    #[command(flatten)]
    pub opts: EngineOpts,
    #[command(flatten)]
    pub workload: WorkloadOpts,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_values_t = [EngineArg::Pl])]
    pub engine: Vec<EngineArg>,
    /// Pricing modes to compare; the scenario's when absent.
    #[arg(long, value_enum)]
    pub pricing: Vec<PricingArg>,
    /// Candidate path counts for the path–link engine.
    #[arg(long, default_values_t = [8])]
    pub k_paths: Vec<usize>,
    #[arg(long)]
    pub time_limit_ms: Option<u64>,
    #[command(flatten)]
    pub workload: WorkloadOpts,
    /// Seed range `A..B` (end exclusive).
    #[arg(long, default_value = "1..6", value_parser = parse_seeds)]
    pub seeds: std::ops::Range<u64>,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub slice: Option<PathBuf>,
    /// Position of the service within the request.
    #[arg(long, default_value_t = 0)]
    pub service: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub scenario: PathBuf,
}

fn parse_seeds(s: &str) -> Result<std::ops::Range<u64>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a >= b {
        return Err(format!("empty seed range {s:?}"));
    }
    Ok(a..b)
}

/// Error carrying the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

fn input(message: impl std::fmt::Display) -> CliError {
    CliError {
        code: EXIT_INPUT,
        message: message.to_string(),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    Scenario::load(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_requests(scenario: &Scenario, path: Option<&Path>) -> Result<Vec<SliceRequest>, CliError> {
    let requests = match path {
        None => scenario
            .slices
            .first()
            .cloned()
            .map(|s| vec![s])
            .ok_or_else(|| input("the scenario holds no request; pass --slice"))?,
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", p.display())))?;
            let parsed = if value.is_array() {
                serde_json::from_value::<Vec<SliceRequest>>(value)
            } else {
                serde_json::from_value::<SliceRequest>(value).map(|s| vec![s])
            };
            parsed.map_err(|e| input(format!("{}: {e}", p.display())))?
        }
    };
    for r in &requests {
        scenario.validate_slice(r).map_err(input)?;
    }
    Ok(requests)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| input(format!("stdout: {e}")))
        }
    }
}

fn pricing(scenario: &Scenario, arg: Option<PricingArg>) -> PricingPolicy {
    match arg {
        Some(p) => scenario.pricing.with_mode(p.into()),
        None => scenario.pricing,
    }
}

fn engine_kind(arg: EngineArg, k: usize) -> EngineKind {
    match arg {
        EngineArg::Nl => EngineKind::Nl,
        EngineArg::Pl => EngineKind::Pl { k },
    }
}

fn run_gen(args: GenArgs) -> Result<i32, CliError> {
    let mut gen: ScenarioGen = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", p.display())))?
        }
        None => ScenarioGen::default(),
    };
    if let Some(v) = args.operators {
        gen.operators = v;
    }
    if let Some(v) = args.nodes_per_operator {
        gen.nodes_per_operator = v;
    }
    if let Some(v) = args.pi {
        gen.inter_link_probability = v;
    }
    if let Some(v) = args.rho {
        gen.rho = v;
    }
    if let Some(v) = args.trust_density {
        gen.trust_density = v;
    }
    if let Some(v) = args.lambda {
        gen.workload.arrival_rate = v;
    }
    if let Some(v) = args.holding {
        gen.workload.mean_holding_time = v;
    }
    if let Some(v) = args.horizon {
        gen.workload.horizon = v;
    }
    let file = generate_scenario(&gen, args.seed).map_err(input)?;
    let value = serde_json::to_value(&file).expect("serializable");
    emit(args.out.as_deref(), &to_pretty(&value))?;
    Ok(EXIT_OK)
}

fn run_solve(args: SolveArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let requests = load_requests(&scenario, args.slice.as_deref())?;
    let policy = pricing(&scenario, args.opts.pricing);
    policy.validate().map_err(input)?;
    let mut blocked = false;
    let mut results = Vec::new();
    for request in &requests {
        let state = ResidualState::new(&scenario.network);
        for &e in &args.engine {
            let kind = engine_kind(e, args.opts.k_paths);
            let engine = Engine::new(kind, policy)
                .with_time_limit(args.opts.time_limit_ms.map(Duration::from_millis));
            let decision = engine.admit(&scenario, &state, request);
            let mut entry = json!({
                "slice": request.id,
                "engine": kind.to_string(),
                "variables": decision.stats.variables,
                "constraints": decision.stats.constraints,
                "bnb_nodes": decision.stats.bnb_nodes,
            });
            match &decision.outcome {
                Ok(adm) => {
                    let check = match check_embedding(&scenario, &state, request, &adm.embedding) {
                        Ok(()) => json!("ok"),
                        Err(v) => json!(v.iter().map(ToString::to_string).collect::<Vec<_>>()),
                    };
                    entry["admitted"] = json!(true);
                    entry["optimal"] = json!(adm.optimal);
                    entry["cost"] = json!(adm.embedding.total_cost);
                    entry["latency"] = json!(adm
                        .embedding
                        .services
                        .iter()
                        .map(|s| s.latency)
                        .collect::<Vec<_>>());
                    entry["check"] = check;
                    entry["embedding"] =
                        serde_json::to_value(&adm.embedding).expect("serializable");
                }
                Err(b) => {
                    blocked = true;
                    entry["admitted"] = json!(false);
                    entry["blocked"] = serde_json::to_value(b).expect("serializable");
                    entry["reason"] = json!(b.to_string());
                }
            }
            results.push(entry);
        }
    }
    emit(
        args.out.as_deref(),
        &to_pretty(&json!({ "results": results })),
    )?;
    Ok(if blocked { EXIT_BLOCKED } else { EXIT_OK })
}

fn run_config(
    scenario: &Scenario,
    kind: EngineKind,
    policy: PricingPolicy,
    time_limit_ms: Option<u64>,
    w: &WorkloadOpts,
) -> Result<RunConfig, CliError> {
    let mut c = RunConfig::from_scenario(scenario, kind);
    c.pricing = policy;
    c.time_limit_ms = time_limit_ms;
    if let Some(v) = w.lambda {
        c.arrival_rate = v;
    }
    if let Some(v) = w.holding {
        c.mean_holding_time = v;
    }
    if let Some(v) = w.horizon {
        c.horizon = v;
    }
    c.deterministic_holding |= w.deterministic_holding;
    c.verify = !w.no_verify;
    c.audit = w.audit;
    c.events = w.events;
    c.sample_interval = w.sample_interval;
    policy.validate().map_err(input)?;
    if !(c.arrival_rate >= 0.0 && c.arrival_rate.is_finite()) {
        return Err(input("--lambda must be finite and nonnegative"));
    }
    if !(c.mean_holding_time > 0.0 && c.mean_holding_time.is_finite()) {
        return Err(input("--holding must be positive"));
    }
    if !(c.horizon > 0.0 && c.horizon.is_finite()) {
        return Err(input("--horizon must be positive"));
    }
    if !(c.sample_interval >= 0.0 && c.sample_interval.is_finite()) {
        return Err(input("--sample-interval must be nonnegative"));
    }
    Ok(c)
}

fn run_simulate(args: SimArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let kind = engine_kind(args.engine, args.opts.k_paths);
    let policy = pricing(&scenario, args.opts.pricing);
    let config = run_config(
        &scenario,
        kind,
        policy,
        args.opts.time_limit_ms,
        &args.workload,
    )?;
    let result = simulate(&scenario, &config, args.seed);
    let dir = write_run(&args.out, &scenario, &config, args.seed, &result)
        .map_err(|e| input(format!("{}: {e}", args.out.display())))?;
    let all = result.metrics.all();
    println!(
        "{} offered={} accepted={} blocking={:.4} mean_cost={:.3}",
        dir.display(),
        all.offered,
        all.accepted,
        all.blocking_probability(),
        all.mean_cost()
    );
    Ok(EXIT_OK)
}

fn run_compare(args: CompareArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let policies: Vec<PricingPolicy> = if args.pricing.is_empty() {
        vec![scenario.pricing]
    } else {
        args.pricing
            .iter()
            .map(|&p| pricing(&scenario, Some(p)))
            .collect()
    };
    let engines: BTreeSet<EngineArg> = args.engine.iter().copied().collect();
    let mut configs = Vec::new();
    for e in [EngineArg::Nl, EngineArg::Pl] {
        if !engines.contains(&e) {
            continue;
        }
        let ks: Vec<usize> = if e == EngineArg::Nl {
            vec![0]
        } else {
            args.k_paths.clone()
        };
        for k in ks {
            for &p in &policies {
                configs.push(run_config(
                    &scenario,
                    engine_kind(e, k),
                    p,
                    args.time_limit_ms,
                    &args.workload,
                )?);
            }
        }
    }
    let cells = compare(&scenario, &configs, args.seeds.clone(), Some(&args.out))
        .map_err(|e| input(format!("{}: {e}", args.out.display())))?;
    print!("{}", summary_csv(&configs, &cells));
    Ok(EXIT_OK)
}

fn run_dump(args: DumpArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let requests = load_requests(&scenario, args.slice.as_deref())?;
    let request = &requests[0];
    let service = request
        .services
        .get(args.service)
        .ok_or_else(|| input(format!("request has {} services", request.services.len())))?;
    let allowed = allowed_operators(request, &scenario.trust).map_err(input)?;
    let prices = Engine::new(EngineKind::Nl, scenario.pricing)
        .prices(&scenario, &ResidualState::new(&scenario.network));
    let exp =
        build_expanded(&scenario, request, service, &allowed, &prices, None).map_err(input)?;
    emit(args.out.as_deref(), &exp.to_dot())?;
    Ok(EXIT_OK)
}

fn run_validate(args: ValidateArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let net = &scenario.network;
    println!(
        "ok: {} operators, {} nodes ({} function nodes), {} directed links, {} VNFs, {} requests",
        net.operators.len(),
        net.nodes.len(),
        net.function_nodes().count(),
        net.links.len(),
        scenario.vnfs.len(),
        scenario.slices.len()
    );
    for v in &scenario.vnfs {
        if scenario.deployable_nodes(v.id).is_empty() {
            println!("warning: VNF {} has no deployable node", v.id);
        }
    }
    for n in &net.nodes {
        if net.out_links(n.id).is_empty() {
            println!("warning: node {} has no outgoing link", n.id);
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Solve(a) => run_solve(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Compare(a) => run_compare(a),
        Command::DumpExpanded(a) => run_dump(a),
        Command::Validate(a) => run_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
