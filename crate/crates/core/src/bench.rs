//! Computation-count scaling over team sizes.

use crate::grid::CellKind;
use crate::metrics::{ScalingReport, ScalingRow};
use crate::pipeline::{default_intent_net, Episode, EpisodeConfig, PipelineError};
use crate::rng;
use crate::world::{EntityId, EntityState, Policy, Scenario, Team, WorldState};
use rand::seq::SliceRandom;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no team sizes given")]
    NoSizes,
    #[error("scenario has {free} free cells, cannot place {n} allies")]
    TooSmall { n: usize, free: usize },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Template world with its allies replaced by `n` allies on random free cells.
///
/// Placement draws one permutation per seed, so the first `n` cells are a
/// prefix of the placement for any larger `n`.
pub fn place_allies(template: &WorldState, n: usize, seed: u64) -> Result<WorldState, BenchError> {
    let enemies: Vec<EntityState> = template.entities.iter().filter(|e| e.team == Team::Enemy).cloned().collect();
    let map = &template.map;
    let mut free: Vec<_> = map
        .cells()
        .filter(|c| map.kind(*c) == Some(CellKind::Free) && !enemies.iter().any(|e| e.position == *c))
        .collect();
    if free.len() < n {
        return Err(BenchError::TooSmall { n, free: free.len() });
    }
    free.shuffle(&mut rng::substream(seed, rng::PLACEMENT));
    let first_id = enemies.iter().map(|e| e.id.0 + 1).max().unwrap_or(0);
    let mut entities = enemies;
    for (i, c) in free.into_iter().take(n).enumerate() {
        let mut e = EntityState::new(EntityId(first_id + i as u32), Team::Ally, c);
        e.policy = Policy::Hold;
        entities.push(e);
    }
    Ok(WorldState::new(map.clone(), template.door_rules.clone(), entities, template.rng_seed))
}

/// One interference-aware grouping pass per team size, counting Dijkstra pops.
pub fn scaling_bench(template: &Scenario, sizes: &[usize], seed: u64) -> Result<ScalingReport, BenchError> {
    if sizes.is_empty() {
        return Err(BenchError::NoSizes);
    }
    let mut report = ScalingReport::default();
    for &n in sizes {
        let world = place_allies(&template.world, n, seed)?;
        let config =
            EpisodeConfig { params: template.params.clone(), steps: 1, seed, full_rebuild: true, ..Default::default() };
        let mut ep = Episode::new(world, default_intent_net(seed), config);
        let out = ep.step()?;
        log::info!("bench n={n}: {} expansions", out.assignment.expansions_total);
        report.rows.push(ScalingRow::new(n, out.assignment.expansions_total));
    }
    Ok(report)
}
