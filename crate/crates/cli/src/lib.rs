//! Subcommands of the `iakrc` binary.
//!
//! Every command resolves its inputs into plain config structs first, so the
//! same code paths are reachable from tests without going through argv.

use clap::{ArgAction, Args, Parser, Subcommand};
use iakrc_core::bench::{scaling_bench, BenchError};
use iakrc_core::grid::Cell;
use iakrc_core::grouping::{Affiliation, Algorithm};
use iakrc_core::interference::{
    read_samples_csv, synthetic_straight_line, train_intent, write_samples_csv, IntentError, IntentNet, TrainConfig,
};
use iakrc_core::metrics::StructureReport;
use iakrc_core::params::{ParamError, Params};
use iakrc_core::pipeline::{default_intent_net, Episode, EpisodeConfig, EpisodeLog, PipelineError, StepOutput};
use iakrc_core::reachability::{dijkstra_bounded, ReachError};
use iakrc_core::rng;
use iakrc_core::world::{EntityId, Scenario, ScenarioError, Team};
use iakrc_core::Cost;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Intent(#[from] IntentError),
}

impl CliError {
    /// 2 config, 3 scenario, 4 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Scenario(_) => 3,
            _ => 4,
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    }
    fs::write(path, contents).map_err(io_err(format!("writing {}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output types serialize") + "\n"
}

#[derive(Debug, Parser)]
#[command(name = "iakrc", version, about = "Interference-aware K-step reachable grouping on grid battles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run full episodes and write logs, structure reports and layer dumps.
    Run(RunArgs),
    /// Print the K-step reachable region of one ally.
    Reach(ReachArgs),
    /// Print one step's group assignment.
    Group(GroupArgs),
    /// Count Dijkstra expansions over team sizes.
    BenchScale(BenchArgs),
    /// Train the enemy intent net.
    TrainIntent(TrainArgs),
    /// Run two algorithms on one scenario and diff their structure reports.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Hyperparameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Reachability horizon.
    #[arg(long = "k")]
    pub horizon: Option<f64>,
    /// Number of leaders.
    #[arg(long, short = 'm')]
    pub leaders: Option<usize>,
    /// Defaults to the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct EpisodeArgs {
    #[arg(long = "algo", default_value = "iakrc")]
    pub algorithm: Algorithm,
    #[arg(long = "interference-enabled", default_value_t = true, action = ArgAction::Set)]
    pub interference_enabled: bool,
    /// Recompute all reachability every step instead of reusing cached searches.
    #[arg(long)]
    pub full_rebuild: bool,
    /// Which side sources the affiliation search: `leader` or `follower`.
    #[arg(long, default_value = "leader")]
    pub direction: Affiliation,
    /// Intent-net weights JSON; a seeded random net otherwise.
    #[arg(long)]
    pub intent_net: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub episode: EpisodeArgs,
    #[arg(long, default_value_t = 500)]
    pub steps: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Write `heatmaps/step_XXXXX.csv` every step.
    #[arg(long)]
    pub emit_heatmaps: bool,
    /// Run this many episodes with seeds `seed, seed+1, ...` in parallel.
    #[arg(long, default_value_t = 1)]
    pub parallel_episodes: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ReachArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub episode: EpisodeArgs,
    /// Ally entity id.
    #[arg(long)]
    pub agent: u32,
    /// Query after this many world steps.
    #[arg(long, default_value_t = 0)]
    pub step: u64,
    /// Also print an ASCII map of the region.
    #[arg(long)]
    pub ascii: bool,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GroupArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub episode: EpisodeArgs,
    #[arg(long, default_value_t = 0)]
    pub step: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Sample CSV: 21 input columns then 2 target columns.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Generate this many straight-line samples instead of reading `--data`.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start from these weights instead of a fresh net.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Where to write the trained weights.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the training samples as CSV.
    #[arg(long)]
    pub save_data: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub episode: EpisodeArgs,
    /// Two algorithms, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "iakrc,euclid")]
    pub algos: Vec<Algorithm>,
    #[arg(long, default_value_t = 500)]
    pub steps: u64,
    /// Directory for `structure.csv`; stdout only if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved inputs of one `run` invocation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub algorithm: Algorithm,
    pub horizon: f64,
    pub leaders: usize,
    pub steps: u64,
    pub seed: u64,
    pub interference_enabled: bool,
    /// Not part of the written config: two runs into different directories must match byte for byte.
    #[serde(skip)]
    pub out: PathBuf,
    pub overrides: Vec<String>,
    pub params: Params,
    pub direction: Affiliation,
    pub full_rebuild: bool,
    pub emit_heatmaps: bool,
    pub parallel_episodes: usize,
    pub intent_net: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<(Self, Scenario), CliError> {
        let (scenario, params, seed) = resolve_scenario(&args.scenario)?;
        if args.steps == 0 {
            return Err(CliError::Config("--steps must be at least 1".into()));
        }
        if args.parallel_episodes == 0 {
            return Err(CliError::Config("--parallel-episodes must be at least 1".into()));
        }
        let config = RunConfig {
            scenario: args.scenario.scenario.clone(),
            algorithm: args.episode.algorithm,
            horizon: params.horizon,
            leaders: params.leaders,
            steps: args.steps,
            seed,
            interference_enabled: args.episode.interference_enabled,
            out: args.out.clone(),
            overrides: args.scenario.overrides.clone(),
            params,
            direction: args.episode.direction,
            full_rebuild: args.episode.full_rebuild,
            emit_heatmaps: args.emit_heatmaps,
            parallel_episodes: args.parallel_episodes,
            intent_net: args.episode.intent_net.clone(),
        };
        Ok((config, scenario))
    }

    fn episode_config(&self, seed: u64) -> EpisodeConfig {
        EpisodeConfig {
            algorithm: self.algorithm,
            params: self.params.clone(),
            steps: self.steps,
            seed,
            interference_enabled: self.interference_enabled,
            full_rebuild: self.full_rebuild,
            direction: self.direction,
            ..EpisodeConfig::default()
        }
    }
}

/// Load the scenario and layer its header, `--set` overrides and explicit flags, in that order.
fn resolve_scenario(args: &ScenarioArgs) -> Result<(Scenario, Params, u64), CliError> {
    let scenario = Scenario::load(&args.scenario)?;
    let mut params = scenario.params.clone();
    for o in &args.overrides {
        params.apply_assignment(o)?;
    }
    if let Some(k) = args.horizon {
        params.set("k", &k.to_string())?;
    }
    if let Some(m) = args.leaders {
        params.set("leaders", &m.to_string())?;
    }
    let seed = args.seed.unwrap_or(scenario.world.rng_seed);
    Ok((scenario, params, seed))
}

fn load_net(path: Option<&Path>, seed: u64) -> Result<IntentNet, CliError> {
    match path {
        None => Ok(default_intent_net(seed)),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            IntentNet::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// One episode into `dir`: `config.json` (describing this episode alone), `episode.json`, `structure.csv`,
/// `layers.json` and optionally `heatmaps/`.
fn run_one(config: &RunConfig, scenario: &Scenario, seed: u64, dir: &Path) -> Result<EpisodeLog, CliError> {
    let net = load_net(config.intent_net.as_deref(), seed)?;
    let mut episode = Episode::new(scenario.world.clone(), net, config.episode_config(seed));
    while !episode.done() {
        let out = episode.step()?;
        if config.emit_heatmaps {
            write_file(&dir.join(format!("heatmaps/step_{:05}.csv", out.record.step)), &episode.heatmap())?;
        }
    }
    if let Some(dump) = episode.layer_dump() {
        write_file(&dir.join("layers.json"), &to_json(&dump))?;
    }
    let log = episode.into_log()?;
    write_file(&dir.join("config.json"), &to_json(&RunConfig { seed, parallel_episodes: 1, ..config.clone() }))?;
    write_file(&dir.join("episode.json"), &to_json(&log))?;
    write_file(&dir.join("structure.csv"), &StructureReport::to_csv(std::slice::from_ref(&log.summary.structure)))?;
    log::info!(
        "{} seed {seed}: {} steps, iso_rate {:.4}, lambda2 mean {:.4}",
        log.algorithm,
        log.summary.steps,
        log.summary.structure.iso_rate,
        log.summary.structure.lambda2_mean
    );
    Ok(log)
}

/// Run the configured episodes. With more than one, each seed writes to `out/seed_<seed>/`.
pub fn cmd_run(config: &RunConfig, scenario: &Scenario) -> Result<Vec<EpisodeLog>, CliError> {
    if config.parallel_episodes == 1 {
        return Ok(vec![run_one(config, scenario, config.seed, &config.out)?]);
    }
    let seeds: Vec<u64> = (0..config.parallel_episodes as u64).map(|i| config.seed.wrapping_add(i)).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let dir = config.out.join(format!("seed_{seed}"));
                s.spawn(move || run_one(config, scenario, seed, &dir))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("episode thread panicked")).collect()
    })
}

/// Build the episode described by the shared flags and advance it to `step`,
/// returning the pipeline output of that step.
fn episode_at(
    scenario: &Scenario,
    params: Params,
    seed: u64,
    ep: &EpisodeArgs,
    step: u64,
    before_last: impl FnOnce(&Episode) -> Result<(), CliError>,
) -> Result<StepOutput, CliError> {
    let config = EpisodeConfig {
        algorithm: ep.algorithm,
        params,
        steps: step + 1,
        seed,
        interference_enabled: ep.interference_enabled,
        full_rebuild: ep.full_rebuild,
        direction: ep.direction,
        ..EpisodeConfig::default()
    };
    let mut episode = Episode::new(scenario.world.clone(), load_net(ep.intent_net.as_deref(), seed)?, config);
    for _ in 0..step {
        if episode.done() {
            return Err(CliError::Config(format!("episode ended before step {step}")));
        }
        episode.step()?;
    }
    if episode.done() {
        return Err(CliError::Config(format!("episode ended before step {step}")));
    }
    before_last(&episode)?;
    Ok(episode.step()?)
}

#[derive(Debug, Serialize)]
pub struct ReachOutput {
    pub source: Cell,
    #[serde(rename = "K")]
    pub k: f64,
    pub members: Vec<Cell>,
    /// Keyed `"x,y"`.
    pub dist: BTreeMap<String, Cost>,
    pub expansions: u64,
}

pub fn cmd_reach(args: &ReachArgs) -> Result<(ReachOutput, String), CliError> {
    let (scenario, params, seed) = resolve_scenario(&args.scenario)?;
    let id = EntityId(args.agent);
    let k = params.horizon;
    let mut source = None;
    let out = episode_at(&scenario, params, seed, &args.episode, args.step, |ep| {
        let e = ep.world.entity(id).filter(|e| e.team == Team::Ally && e.alive);
        let e = e.ok_or_else(|| CliError::Config(format!("no living ally with id {id} at step {}", args.step)))?;
        source = Some(e.position);
        Ok(())
    })?;
    let source = source.expect("set before the last step");
    let r = dijkstra_bounded(&out.graph, source, k)?;
    let members = r.members(k);
    let dist = members.iter().map(|c| (format!("{},{}", c.x, c.y), r.dist(*c))).collect();
    let mut ascii = String::new();
    for y in 0..out.graph.height() as i32 {
        for x in 0..out.graph.width() as i32 {
            let c = Cell::new(x, y);
            let ch = if c == source {
                'S'
            } else if out.graph.is_obstacle(c) {
                '#'
            } else {
                match r.dist(c).value().filter(|d| *d <= k) {
                    Some(d) if d < 10.0 => char::from_digit(d as u32, 10).expect("single digit"),
                    Some(_) => '+',
                    None => '.',
                }
            };
            ascii.push(ch);
        }
        ascii.push('\n');
    }
    Ok((ReachOutput { source, k, members, dist, expansions: r.expansions }, ascii))
}

#[derive(Debug, Serialize)]
pub struct GroupOutput {
    pub algorithm: Algorithm,
    pub step: u64,
    pub leaders: Vec<EntityId>,
    pub groups: BTreeMap<EntityId, Vec<EntityId>>,
    pub unassigned: Vec<EntityId>,
    pub neighbor_counts: BTreeMap<EntityId, usize>,
    pub expansions: u64,
}

pub fn cmd_group(args: &GroupArgs) -> Result<GroupOutput, CliError> {
    let (scenario, params, seed) = resolve_scenario(&args.scenario)?;
    let out = episode_at(&scenario, params, seed, &args.episode, args.step, |_| Ok(()))?;
    let a = out.assignment;
    Ok(GroupOutput {
        algorithm: a.algorithm,
        step: out.record.step,
        leaders: a.leaders,
        groups: a.groups,
        unassigned: a.unassigned,
        neighbor_counts: a.neighbor_counts,
        expansions: a.expansions_total,
    })
}

pub fn cmd_bench_scale(args: &BenchArgs) -> Result<String, CliError> {
    let (mut scenario, params, seed) = resolve_scenario(&args.scenario)?;
    if args.sizes.is_empty() {
        return Err(CliError::Config("--sizes is empty".into()));
    }
    scenario.params = params;
    Ok(scaling_bench(&scenario, &args.sizes, seed)?.to_csv())
}

/// Returns the trained net and an `epoch,mean_loss` CSV.
pub fn cmd_train_intent(args: &TrainArgs) -> Result<(IntentNet, String), CliError> {
    let mut rng = rng::substream(args.seed, rng::TRAINING);
    let data = match &args.data {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            read_samples_csv(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => synthetic_straight_line(args.synthetic.unwrap_or(1000), &mut rng),
    };
    if let Some(path) = &args.save_data {
        write_file(path, &write_samples_csv(&data))?;
    }
    let mut net = match &args.init {
        Some(_) => load_net(args.init.as_deref(), args.seed)?,
        None => default_intent_net(args.seed),
    };
    if !(args.lr.is_finite() && args.lr > 0.0) {
        return Err(CliError::Config(format!("--lr must be positive, got {}", args.lr)));
    }
    if args.batch_size == 0 {
        return Err(CliError::Config("--batch-size must be at least 1".into()));
    }
    let cfg = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        batch_size: args.batch_size,
        ..TrainConfig::default()
    };
    let log = train_intent(&mut net, &data, &cfg, &mut rng)?;
    let mut csv = String::from("epoch,mean_loss\n");
    for e in &log {
        writeln!(csv, "{},{}", e.epoch, e.mean_loss).expect("writing to a String");
    }
    if let Some(path) = &args.out {
        write_file(path, &(net.to_json() + "\n"))?;
    }
    Ok((net, csv))
}

/// Structure reports of both algorithms plus a `metric,<a>,<b>,delta` table.
pub fn cmd_compare(args: &CompareArgs) -> Result<(Vec<StructureReport>, String), CliError> {
    let [a, b] = args.algos[..] else {
        return Err(CliError::Config(format!("--algos needs exactly two algorithms, got {}", args.algos.len())));
    };
    if args.steps == 0 {
        return Err(CliError::Config("--steps must be at least 1".into()));
    }
    let (scenario, params, seed) = resolve_scenario(&args.scenario)?;
    let mut reports = Vec::with_capacity(2);
    for algorithm in [a, b] {
        let config = EpisodeConfig {
            algorithm,
            params: params.clone(),
            steps: args.steps,
            seed,
            interference_enabled: args.episode.interference_enabled,
            full_rebuild: args.episode.full_rebuild,
            direction: args.episode.direction,
            ..EpisodeConfig::default()
        };
        let net = load_net(args.episode.intent_net.as_deref(), seed)?;
        reports.push(Episode::new(scenario.world.clone(), net, config).run()?.summary.structure);
    }
    if let Some(dir) = &args.out {
        write_file(&dir.join("structure.csv"), &StructureReport::to_csv(&reports))?;
    }
    let (ra, rb) = (&reports[0], &reports[1]);
    let mut diff = format!("metric,{a},{b},delta\n");
    for (name, x, y) in [
        ("iso_rate", ra.iso_rate, rb.iso_rate),
        ("lambda2_mean", ra.lambda2_mean, rb.lambda2_mean),
        ("lambda2_var", ra.lambda2_var, rb.lambda2_var),
    ] {
        writeln!(diff, "{name},{x},{y},{}", x - y).expect("writing to a String");
    }
    Ok((reports, diff))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let (config, scenario) = RunConfig::from_args(&args)?;
            for log in cmd_run(&config, &scenario)? {
                print!("{}", StructureReport::to_csv(std::slice::from_ref(&log.summary.structure)));
            }
        }
        Command::Reach(args) => {
            let (out, ascii) = cmd_reach(&args)?;
            emit(args.output.as_deref(), &to_json(&out))?;
            if args.ascii {
                print!("{ascii}");
            }
        }
        Command::Group(args) => {
            let out = cmd_group(&args)?;
            emit(args.output.as_deref(), &to_json(&out))?;
        }
        Command::BenchScale(args) => {
            let csv = cmd_bench_scale(&args)?;
            emit(args.output.as_deref(), &csv)?;
        }
        Command::TrainIntent(args) => {
            let (_, csv) = cmd_train_intent(&args)?;
            print!("{csv}");
        }
        Command::Compare(args) => {
            let (_, diff) = cmd_compare(&args)?;
            print!("{diff}");
        }
    }
    Ok(())
}
