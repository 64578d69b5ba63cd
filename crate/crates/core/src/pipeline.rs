//! The per-step loop: layer updates, aggregation, per-agent reachability,
//! grouping, metric sampling, then one world step.

use crate::grouping::{
    build_comm_graph, group_euclid, group_iakrc, group_vision, Affiliation, Agent, Algorithm, CommGraph, DistanceTable,
    GroupAssignment,
};
use crate::interference::{featurize, train_intent, IntentError, IntentNet, IntentSample, TrainConfig, EPS};
use crate::maplayers::{heatmap_csv, AggregatedGraph, LayerDump, LayerError, LayeredMap};
use crate::metrics::{mean_and_variance, snapshot_lambda2, structure_report, MetricsError, StructureReport};
use crate::params::Params;
use crate::reachability::{ReachCache, ReachError, ReachResult};
use crate::rng;
use crate::world::{EntityId, Team, TeamPolicies, Transition, WorldState};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("intent fine-tuning failed: {0}")]
    Intent(#[from] IntentError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Observe,
    LogTransitions,
    RefreshConfidence,
    UpdateInterference,
    Aggregate,
    Reachability,
    Election,
    Assignment,
    Metrics,
    WorldStep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeConfig {
    pub algorithm: Algorithm,
    pub params: Params,
    pub steps: u64,
    pub seed: u64,
    pub interference_enabled: bool,
    /// Recompute every agent's reachability each step instead of reusing cached results.
    pub full_rebuild: bool,
    pub direction: Affiliation,
    pub policies: TeamPolicies,
    /// Collect enemy `(features, displacement)` samples after every world step.
    pub collect_intent_samples: bool,
    /// Fine-tune the intent net on collected samples every this many steps.
    pub finetune_every: Option<u64>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Iakrc,
            params: Params::default(),
            steps: 500,
            seed: 0,
            interference_enabled: true,
            full_rebuild: false,
            direction: Affiliation::LeaderSourced,
            policies: TeamPolicies::default(),
            collect_intent_samples: false,
            finetune_every: None,
        }
    }
}

/// Epochs per periodic fine-tuning round.
pub const FINETUNE_EPOCHS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: u64,
    pub allies_alive: usize,
    pub enemies_alive: usize,
    pub leaders: Vec<EntityId>,
    pub group_sizes: Vec<usize>,
    pub unassigned: usize,
    pub digest: String,
    pub isolated: usize,
    pub lambda2_mean: f64,
    /// Dijkstra pops performed this step (cache misses only).
    pub expansions: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub steps: u64,
    pub allies_alive: usize,
    pub enemies_alive: usize,
    pub structure: StructureReport,
    pub expansions_performed: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub intent_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub interference_enabled: bool,
    pub records: Vec<StepRecord>,
    pub summary: EpisodeSummary,
}

/// What one pipeline step produced, before the world advanced.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub record: StepRecord,
    pub assignment: GroupAssignment,
    pub comm: CommGraph,
    pub graph: AggregatedGraph,
}

pub struct Episode {
    pub world: WorldState,
    pub layers: LayeredMap,
    pub net: IntentNet,
    pub config: EpisodeConfig,
    cache: ReachCache,
    prev_graph: Option<AggregatedGraph>,
    pending: Vec<Transition>,
    vision_rng: ChaCha8Rng,
    train_rng: ChaCha8Rng,
    samples: Vec<IntentSample>,
    trace: Vec<CommGraph>,
    records: Vec<StepRecord>,
    phases: Vec<Phase>,
    expansions_performed: u64,
}

impl Episode {
    pub fn new(world: WorldState, net: IntentNet, config: EpisodeConfig) -> Self {
        let (w, h) = (world.map.width(), world.map.height());
        Self {
            layers: LayeredMap::new(w, h),
            cache: ReachCache::new(),
            prev_graph: None,
            pending: Vec::new(),
            vision_rng: rng::substream(config.seed, rng::VISION_LEADERS),
            train_rng: rng::substream(config.seed, rng::TRAINING),
            samples: Vec::new(),
            trace: Vec::new(),
            records: Vec::new(),
            phases: Vec::new(),
            expansions_performed: 0,
            world,
            net,
            config,
        }
    }

    /// Phases executed by the most recent step, in order.
    pub fn phase_trace(&self) -> &[Phase] {
        &self.phases
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn trace(&self) -> &[CommGraph] {
        &self.trace
    }

    pub fn intent_samples(&self) -> &[IntentSample] {
        &self.samples
    }

    pub fn last_graph(&self) -> Option<&AggregatedGraph> {
        self.prev_graph.as_ref()
    }

    pub fn done(&self) -> bool {
        self.records.len() as u64 >= self.config.steps || self.world.alive_count(Team::Ally) == 0
    }

    /// Heatmap of the current traversal costs.
    pub fn heatmap(&self) -> String {
        let il = self.config.interference_enabled.then_some(&self.layers.interference);
        heatmap_csv(&self.layers.geometric, il, self.config.params.threat.cost_multiplier)
    }

    pub fn layer_dump(&self) -> Option<LayerDump> {
        self.prev_graph.as_ref().map(|g| self.layers.dump(self.world.step, g))
    }

    /// One full pipeline pass followed by a world step.
    pub fn step(&mut self) -> Result<StepOutput, PipelineError> {
        self.phases.clear();
        let p = self.config.params.clone();
        let now = self.world.step;
        let allies: Vec<Agent> = self.world.alive(Team::Ally).map(|e| Agent { id: e.id, pos: e.position }).collect();

        enter(&mut self.phases, now, Phase::Observe);
        for a in &allies {
            self.layers.observe(&self.world.map, a.pos, p.sight_range)?;
        }
        self.layers.geometric.take_dirty();

        enter(&mut self.phases, now, Phase::LogTransitions);
        let pending = std::mem::take(&mut self.pending);
        self.layers.log_transitions(pending);

        enter(&mut self.phases, now, Phase::RefreshConfidence);
        self.layers.refresh_confidence(now, &p.confidence);

        if self.config.interference_enabled {
            enter(&mut self.phases, now, Phase::UpdateInterference);
            self.layers.update_interference(&self.world.entities, &self.net, &p.threat, now);
        }

        enter(&mut self.phases, now, Phase::Aggregate);
        let graph = self.layers.aggregate(p.threat.cost_multiplier, self.config.interference_enabled, now)?;

        enter(&mut self.phases, now, Phase::Reachability);
        if self.config.full_rebuild {
            self.cache.clear();
        } else if let Some(prev) = &self.prev_graph {
            self.cache.invalidate(&graph.changed_tails(prev));
        }
        let mut expansions = 0;
        for a in &allies {
            expansions += self.cache.ensure(&graph, a.pos, p.horizon)?;
        }
        self.expansions_performed += expansions;
        let reach: Vec<&ReachResult> = allies.iter().map(|a| self.cache.get(a.pos).expect("ensured above")).collect();

        // Election and assignment run inside each grouper; both phases are recorded here.
        enter(&mut self.phases, now, Phase::Election);
        enter(&mut self.phases, now, Phase::Assignment);
        let assignment = match self.config.algorithm {
            Algorithm::Iakrc => group_iakrc(&allies, &reach, p.leaders, p.horizon, self.config.direction),
            Algorithm::Euclid => group_euclid(&allies, p.leaders, p.euclid_radius),
            Algorithm::Vision => {
                group_vision(&allies, &self.world.map, p.leaders, p.vision_range, &mut self.vision_rng)
            }
        };

        enter(&mut self.phases, now, Phase::Metrics);
        let table = DistanceTable::from_reach(&allies, &reach);
        let comm = build_comm_graph(&assignment, &table, p.horizon);
        let isolated = comm.nodes.iter().filter(|&&n| comm.degree(n) == 0).count();
        let (lambda2_mean, _) = mean_and_variance(&snapshot_lambda2(&comm));
        self.trace.push(comm.clone());
        let record = StepRecord {
            step: now,
            allies_alive: allies.len(),
            enemies_alive: self.world.alive_count(Team::Enemy),
            leaders: assignment.leaders.clone(),
            group_sizes: assignment.groups.values().map(Vec::len).collect(),
            unassigned: assignment.unassigned.len(),
            digest: assignment.digest(),
            isolated,
            lambda2_mean,
            expansions,
        };
        self.records.push(record.clone());

        enter(&mut self.phases, now, Phase::WorldStep);
        let features: BTreeMap<EntityId, [f64; 21]> = if self.config.collect_intent_samples {
            self.world.alive(Team::Enemy).map(|e| (e.id, featurize(e))).collect()
        } else {
            BTreeMap::new()
        };
        let report = self.world.step_world(&self.config.policies);
        self.pending = report.transitions;
        for (id, (dx, dy)) in report.enemy_moves {
            if let Some(input) = features.get(&id) {
                let target = [f64::from(dx), f64::from(dy)];
                if target[0].hypot(target[1]) >= EPS {
                    self.samples.push(IntentSample { input: *input, target });
                }
            }
        }
        if let Some(every) = self.config.finetune_every {
            if every > 0 && self.world.step.is_multiple_of(every) && !self.samples.is_empty() {
                let cfg = TrainConfig {
                    epochs: FINETUNE_EPOCHS,
                    learning_rate: p.learning_rate,
                    batch_size: p.batch_size,
                    ..TrainConfig::default()
                };
                train_intent(&mut self.net, &self.samples, &cfg, &mut self.train_rng)?;
            }
        }

        self.prev_graph = Some(graph.clone());
        Ok(StepOutput { record, assignment, comm, graph })
    }

    pub fn summary(&self, algo: &str) -> Result<EpisodeSummary, PipelineError> {
        Ok(EpisodeSummary {
            steps: self.records.len() as u64,
            allies_alive: self.world.alive_count(Team::Ally),
            enemies_alive: self.world.alive_count(Team::Enemy),
            structure: structure_report(algo, &self.trace)?,
            expansions_performed: self.expansions_performed,
            cache_hits: self.cache.hits,
            cache_misses: self.cache.misses,
            intent_samples: self.samples.len(),
        })
    }

    pub fn into_log(self) -> Result<EpisodeLog, PipelineError> {
        let summary = self.summary(&self.config.algorithm.to_string())?;
        Ok(EpisodeLog {
            algorithm: self.config.algorithm,
            seed: self.config.seed,
            interference_enabled: self.config.interference_enabled,
            records: self.records,
            summary,
        })
    }

    /// Run to completion and return the log.
    pub fn run(mut self) -> Result<EpisodeLog, PipelineError> {
        while !self.done() {
            self.step()?;
        }
        self.into_log()
    }
}

fn enter(phases: &mut Vec<Phase>, step: u64, phase: Phase) {
    log::debug!("step {step}: {phase:?}");
    phases.push(phase);
}

/// Intent net used when no trained weights are supplied: standard shape, seeded init.
pub fn default_intent_net(seed: u64) -> IntentNet {
    IntentNet::standard(&mut rng::substream(seed, rng::NET_INIT))
}
