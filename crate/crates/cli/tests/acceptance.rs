//! Acceptance suite: every primary criterion at its stated tolerance and time
//! budget, one `PASS`/`FAIL` line each. Exits non-zero if any criterion fails.

use iakrc_cli::{cmd_group, cmd_run, CliError, EpisodeArgs, GroupArgs, RunArgs, RunConfig, ScenarioArgs};
use iakrc_core::grid::{Cell, CellKind, GridMap};
use iakrc_core::grouping::{Affiliation, Algorithm};
use iakrc_core::interference::{
    base_influence, effective_distance, synthetic_straight_line, threat_level, train_intent, EnemyField, IntentNet,
    IntentSample, ThreatParams, INPUT_DIM,
};
use iakrc_core::maplayers::{
    aggregate_graph, AggregatedGraph, ConfidenceStats, GeometricLayer, InterferenceLayer, RegulationLayer,
};
use iakrc_core::metrics::{lambda2, symmetric_eigen};
use iakrc_core::pipeline::{default_intent_net, Episode, EpisodeConfig};
use iakrc_core::reachability::{
    brute_force_d_st, cooperation_cost, d_ia, dijkstra_reach, reachable_set, MAX_ORACLE_STEPS,
};
use iakrc_core::rng::substream;
use iakrc_core::world::{EntityId, EntityState, Scenario, Team, WorldState};
use iakrc_core::{bench::scaling_bench, Cost};
use rand::Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn load(name: &str) -> Scenario {
    Scenario::load(scenario_path(name)).expect("shipped scenario parses")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_map(w: usize, h: usize, density: f64, rng: &mut impl Rng) -> GridMap {
    let mut map = GridMap::new(w, h).expect("positive size");
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            if rng.gen_bool(density) {
                map.set(Cell::new(x, y), CellKind::Obstacle).expect("in bounds");
            }
        }
    }
    map
}

fn free_cells(map: &GridMap) -> Vec<Cell> {
    map.cells().filter(|c| !map.is_obstacle(*c)).collect()
}

fn random_influence(w: usize, h: usize, rng: &mut impl Rng) -> InterferenceLayer {
    let mut il = InterferenceLayer::new(w, h);
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            il.set(Cell::new(x, y), rng.gen_range(0.0..2.0));
        }
    }
    il
}

fn weighted(map: &GridMap, il: &InterferenceLayer) -> AggregatedGraph {
    let geo = GeometricLayer::fully_observed(map);
    aggregate_graph(&geo, &RegulationLayer::new(), &ConfidenceStats::default(), Some(il), 1.5, 0).expect("sizes match")
}

fn rng(label: &str) -> impl Rng {
    substream(2024, label)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = rng("oracle");
    let mut pairs = 0;
    for _ in 0..200 {
        let map = random_map(16, 16, 0.25, &mut rng);
        let free = free_cells(&map);
        let g = AggregatedGraph::from_map(&map);
        let world = WorldState::new(map.clone(), BTreeMap::new(), vec![], 0);
        for _ in 0..50 {
            let a = free[rng.gen_range(0..free.len())];
            let b = free[rng.gen_range(0..free.len())];
            let d = d_ia(&g, a, b).map_err(|e| e.to_string())?;
            let expected =
                brute_force_d_st(&world, a, b, MAX_ORACLE_STEPS).map_or(Cost::Infinite, |t| Cost::Finite(f64::from(t)));
            ensure(d == expected, || format!("{a} -> {b}: d_IA {d}, oracle {expected}"))?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} pairs on 200 maps agree exactly"))
}

fn decomposition_identity() -> Outcome {
    let mut rng = rng("decomposition");
    let mut worst: f64 = 0.0;
    let mut paths = 0;
    for _ in 0..50 {
        let map = random_map(16, 16, 0.2, &mut rng);
        let g = weighted(&map, &random_influence(16, 16, &mut rng));
        let free = free_cells(&map);
        let source = free[rng.gen_range(0..free.len())];
        let r = dijkstra_reach(&g, source).map_err(|e| e.to_string())?;
        for (b, d) in r.finite_distances() {
            let path = r.path_to(b).ok_or("settled cell without a path")?;
            let t = (path.len() - 1) as f64;
            let c = cooperation_cost(&g, &path).map_err(|e| e.to_string())?;
            let tc = if t == 0.0 { 0.0 } else { t * c.value().ok_or("infinite cost on a finite path")? };
            worst = worst.max((d - tc).abs());
            paths += 1;
        }
    }
    ensure(worst <= 1e-9, || format!("max |d - t*C| = {worst:e}"))?;
    Ok(format!("{paths} paths, max |d - t*C| = {worst:.1e}"))
}

fn free_space_base_weight() -> Outcome {
    let s = load("maze32.txt");
    let config = EpisodeConfig {
        params: s.params.clone(),
        steps: 60,
        seed: 7,
        interference_enabled: false,
        ..Default::default()
    };
    let mut ep = Episode::new(s.world.clone(), default_intent_net(7), config);
    let (mut unit, mut inf) = (0usize, 0usize);
    while !ep.done() {
        let out = ep.step().map_err(|e| e.to_string())?;
        for (u, v, w) in out.graph.edges() {
            match w {
                Cost::Finite(x) => {
                    ensure(x == 1.0, || format!("{u}->{v} weighs {x}"))?;
                    unit += 1;
                }
                Cost::Infinite => inf += 1,
            }
            if out.graph.is_obstacle(v) {
                ensure(w == Cost::Infinite, || format!("{u}->{v} enters an obstacle at weight {w}"))?;
            }
        }
    }
    Ok(format!("{unit} finite edges all exactly 1, {inf} infinite"))
}

fn directional_field() -> Outcome {
    let p = ThreatParams { influence_range: 100.0, ..ThreatParams::default() };
    ensure(p.angle_factor == 0.5 && p.decay == 0.3, || "defaults changed".into())?;
    for d in [1, 2, 4] {
        let x = Cell::new(d, 0);
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let theta = PI * f64::from(i) / 99.0;
            let field = EnemyField { origin: Cell::new(0, 0), base: 1.0, intent: [theta.cos(), theta.sin()] };
            let v = field.value_at(x, &p);
            ensure(v < prev, || format!("d={d}: not strictly decreasing at theta={theta}"))?;
            prev = v;
        }
    }
    let spots = [(4.0, 0.0, 4.0), (4.0, PI, 8.0), (2.0, PI / 2.0, 3.0)];
    for (d, theta, want) in spots {
        let got = effective_distance(d, theta, 0.5);
        ensure(got == want, || format!("d_eff({d}, {theta}) = {got}, want {want}"))?;
    }
    Ok("strictly decreasing over 100 angles at d=1,2,4; d_eff spots exact".into())
}

fn threat_arithmetic() -> Outcome {
    let mut busy = EntityState::new(EntityId(0), Team::Enemy, Cell::new(147, 0));
    for i in 0..50 {
        busy.push_position(Cell::new(3 * i, 0));
    }
    busy.attack_log.extend([1, 2, 3, 4, 5]);
    let fresh = EntityState::new(EntityId(1), Team::Enemy, Cell::new(0, 0));
    let p = ThreatParams::default();
    ensure(threat_level(&busy) == 0.875, || format!("busy T_e = {}", threat_level(&busy)))?;
    ensure(threat_level(&fresh) == 0.25, || format!("fresh T_e = {}", threat_level(&fresh)))?;
    ensure(p.base_influence == 2.0, || "I_config default changed".into())?;
    ensure(base_influence(&busy, &p) == 1.75, || format!("I_base = {}", base_influence(&busy, &p)))?;
    ensure(base_influence(&fresh, &p) == 0.5, || format!("I_base = {}", base_influence(&fresh, &p)))?;
    Ok("T_e 0.875 and 0.25 exact; I_base 1.75 and 0.5".into())
}

#[allow(clippy::needless_range_loop)]
fn lambda2_analytics() -> Outcome {
    let adj = |n: usize, edges: &[(usize, usize)]| {
        let mut a = vec![vec![0.0; n]; n];
        for &(i, j) in edges {
            a[i][j] = 1.0;
            a[j][i] = 1.0;
        }
        a
    };
    let cases = [
        ("K3", adj(3, &[(0, 1), (1, 2), (0, 2)]), 3.0),
        ("P2", adj(2, &[(0, 1)]), 2.0),
        ("P4", adj(4, &[(0, 1), (1, 2), (2, 3)]), 2.0 * (1.0 - (PI / 4.0).cos())),
        ("2K2", adj(4, &[(0, 1), (2, 3)]), 0.0),
    ];
    for (name, a, want) in &cases {
        let got = lambda2(a);
        ensure((got - want).abs() <= 1e-9, || format!("{name}: {got} vs {want}"))?;
    }
    let mut rng = rng("eigen");
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..13);
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = rng.gen_range(-4.0..4.0);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        let (values, vectors) = symmetric_eigen(&m);
        for (c, lam) in values.iter().enumerate() {
            for r in 0..n {
                let av: f64 = (0..n).map(|k| m[r][k] * vectors[k][c]).sum();
                worst = worst.max((av - lam * vectors[r][c]).abs());
            }
        }
    }
    ensure(worst <= 1e-8, || format!("eigen residual {worst:e}"))?;
    Ok(format!("K3, P2, P4, disconnected within 1e-9; max residual {worst:.1e}"))
}

fn structure_ordering() -> Outcome {
    let s = load("maze32.txt");
    let allies = s.world.alive_count(Team::Ally);
    let enemies = s.world.alive_count(Team::Enemy);
    ensure((s.world.map.width(), s.world.map.height(), allies, enemies) == (32, 32, 12, 12), || {
        "not a 32x32 12v12 maze".into()
    })?;
    let mut reports = BTreeMap::new();
    for algorithm in Algorithm::ALL {
        let config = EpisodeConfig {
            algorithm,
            params: s.params.clone(),
            steps: 500,
            seed: s.world.rng_seed,
            ..Default::default()
        };
        let log =
            Episode::new(s.world.clone(), default_intent_net(config.seed), config).run().map_err(|e| e.to_string())?;
        let r = log.summary.structure;
        ensure(r.snapshots >= 500, || format!("{algorithm}: only {} snapshots", r.snapshots))?;
        reports.insert(algorithm.to_string(), r);
    }
    let (ia, eu, vi) = (&reports["iakrc"], &reports["euclid"], &reports["vision"]);
    let line = format!(
        "iso {:.3}/{:.3}/{:.3}, lambda2 {:.3}/{:.3}/{:.3} (iakrc/vision/euclid)",
        ia.iso_rate, vi.iso_rate, eu.iso_rate, ia.lambda2_mean, vi.lambda2_mean, eu.lambda2_mean
    );
    ensure(ia.iso_rate < vi.iso_rate && ia.iso_rate < eu.iso_rate, || format!("iso ordering fails: {line}"))?;
    ensure(ia.lambda2_mean > vi.lambda2_mean && ia.lambda2_mean > eu.lambda2_mean, || {
        format!("lambda2 ordering fails: {line}")
    })?;
    Ok(line)
}

fn group_args(algorithm: Algorithm, k: Option<f64>) -> GroupArgs {
    GroupArgs {
        scenario: ScenarioArgs {
            scenario: scenario_path("wall.txt"),
            overrides: vec![],
            horizon: k,
            leaders: None,
            seed: None,
        },
        episode: EpisodeArgs {
            algorithm,
            interference_enabled: true,
            full_rebuild: false,
            direction: Affiliation::LeaderSourced,
            intent_net: None,
        },
        step: 0,
        output: None,
    }
}

fn wall_fixture() -> Outcome {
    let paired = |algorithm, k| -> Result<bool, String> {
        let g = cmd_group(&group_args(algorithm, k)).map_err(|e| e.to_string())?;
        Ok(g.groups.values().any(|m| m.len() == 2))
    };
    ensure(paired(Algorithm::Euclid, None)?, || "euclid did not group the cross-wall pair".into())?;
    ensure(!paired(Algorithm::Iakrc, None)?, || "iakrc grouped through the wall at K=9".into())?;
    ensure(!paired(Algorithm::Iakrc, Some(21.0))?, || "iakrc grouped below the detour length".into())?;
    ensure(paired(Algorithm::Iakrc, Some(22.0))?, || "iakrc missed the pair once K covers the 22-step detour".into())?;
    Ok("euclid pairs across the wall; iakrc pairs only once K >= 22 (the detour)".into())
}

fn scaling_trend() -> Outcome {
    let s = load("field64.txt");
    ensure(s.world.map.width() == 64 && s.world.alive_count(Team::Enemy) > 0, || {
        "not a 64x64 map with enemies".into()
    })?;
    let report = scaling_bench(&s, &[4, 8, 16, 32, 64], 1).map_err(|e| e.to_string())?;
    let totals: Vec<u64> = report.rows.iter().map(|r| r.total).collect();
    ensure(totals.windows(2).all(|w| w[0] < w[1]), || format!("totals not increasing: {totals:?}"))?;
    let spread = report.per_agent_spread();
    ensure(spread < 2.0, || format!("per-agent max/min = {spread}"))?;
    Ok(format!("totals {totals:?}, per-agent max/min {spread:.3}"))
}

fn intent_net() -> Outcome {
    let mut rng = rng("intent");
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut net = IntentNet::random(&[INPUT_DIM, 8, 4, 2], &mut rng);
        for layer in &mut net.layers {
            layer.biases.iter_mut().for_each(|b| *b = rng.gen_range(0.1..0.5));
        }
        let batch: Vec<IntentSample> = (0..6)
            .map(|_| {
                let mut input = [0.0; INPUT_DIM];
                input.iter_mut().for_each(|v| *v = rng.gen_range(-3.0..3.0));
                IntentSample { input, target: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)] }
            })
            .collect();
        let (_, grad) = net.loss_and_gradient(&batch);
        for l in 0..net.layers.len() {
            let nw = net.layers[l].weights.len();
            for k in 0..nw + net.layers[l].biases.len() {
                let probe = |delta: f64| {
                    let mut m = net.clone();
                    if k < nw {
                        m.layers[l].weights[k] += delta;
                    } else {
                        m.layers[l].biases[k - nw] += delta;
                    }
                    m.mean_loss(&batch)
                };
                let numeric = (probe(h) - probe(-h)) / (2.0 * h);
                let analytic = if k < nw { grad.layers[l].weights[k] } else { grad.layers[l].biases[k - nw] };
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-3);
                worst = worst.max(rel);
            }
        }
    }
    ensure(worst <= 1e-4, || format!("gradient relative error {worst:e}"))?;

    let data = synthetic_straight_line(1000, &mut rng);
    let mut net = IntentNet::standard(&mut rng);
    let cfg = iakrc_core::interference::TrainConfig {
        epochs: 200,
        learning_rate: 5e-4,
        batch_size: 32,
        ..Default::default()
    };
    let log = train_intent(&mut net, &data, &cfg, &mut rng).map_err(|e| e.to_string())?;
    let first_below = log.iter().find(|e| e.mean_loss < 0.1).map(|e| e.epoch);
    let final_loss = net.mean_loss(&data);
    ensure(final_loss < 0.1, || format!("final loss {final_loss}"))?;
    Ok(format!(
        "gradient rel err {worst:.1e}; loss < 0.1 from epoch {}, final {final_loss:.2e}",
        first_below.map_or("-".into(), |e| e.to_string())
    ))
}

fn horizon_monotonicity() -> Outcome {
    let mut rng = rng("horizon");
    for _ in 0..50 {
        let map = random_map(16, 16, 0.25, &mut rng);
        let g = weighted(&map, &random_influence(16, 16, &mut rng));
        let free = free_cells(&map);
        let source = free[rng.gen_range(0..free.len())];
        let mut prev: Vec<Cell> = Vec::new();
        for k in [3.0, 6.0, 9.0, 12.0] {
            let set = reachable_set(&g, source, k).map_err(|e| e.to_string())?.members;
            ensure(prev.iter().all(|c| set.contains(c)), || format!("S(K={k}) misses a cell of the smaller horizon"))?;
            prev = set;
        }
    }
    Ok("50 maps, S(3) ⊆ S(6) ⊆ S(9) ⊆ S(12)".into())
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("output dir exists") {
            let p = entry.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(root).expect("under root").to_path_buf(),
                    std::fs::read(&p).expect("readable"),
                );
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for name in ["first", "second"] {
        let args = RunArgs {
            scenario: ScenarioArgs {
                scenario: scenario_path("maze32.txt"),
                overrides: vec![],
                horizon: None,
                leaders: None,
                seed: Some(7),
            },
            episode: EpisodeArgs {
                algorithm: Algorithm::Iakrc,
                interference_enabled: true,
                full_rebuild: false,
                direction: Affiliation::LeaderSourced,
                intent_net: None,
            },
            steps: 500,
            out: tmp.path().join(name),
            emit_heatmaps: true,
            parallel_episodes: 1,
        };
        let (config, scenario): (RunConfig, Scenario) =
            RunConfig::from_args(&args).map_err(|e: CliError| e.to_string())?;
        cmd_run(&config, &scenario).map_err(|e| e.to_string())?;
        trees.push(tree(&tmp.path().join(name)));
    }
    ensure(trees[0] == trees[1], || "output trees differ".into())?;
    let bytes: usize = trees[0].values().map(Vec::len).sum();
    Ok(format!("{} files, {bytes} bytes identical", trees[0].len()))
}

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { name: "oracle equivalence", budget: secs(10), run: oracle_equivalence },
        Criterion { name: "decomposition identity", budget: None, run: decomposition_identity },
        Criterion { name: "free-space base weight", budget: None, run: free_space_base_weight },
        Criterion { name: "directional field", budget: None, run: directional_field },
        Criterion { name: "threat arithmetic", budget: None, run: threat_arithmetic },
        Criterion { name: "lambda2 analytics", budget: None, run: lambda2_analytics },
        Criterion { name: "structure ordering", budget: secs(60), run: structure_ordering },
        Criterion { name: "wall fixture", budget: None, run: wall_fixture },
        Criterion { name: "scaling trend", budget: secs(30), run: scaling_trend },
        Criterion { name: "intent net", budget: secs(60), run: intent_net },
        Criterion { name: "horizon monotonicity", budget: None, run: horizon_monotonicity },
        Criterion { name: "determinism", budget: None, run: determinism },
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let result = match (result, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:02} {}: {detail} ({elapsed:.2?})", i + 1, c.name);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
