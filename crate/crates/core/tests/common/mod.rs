#![allow(dead_code)]

use iakrc_core::grid::{Cell, CellKind, GridMap};
use iakrc_core::maplayers::{
    aggregate_graph, AggregatedGraph, ConfidenceStats, GeometricLayer, InterferenceLayer, RegulationLayer,
};
use rand::Rng;
use std::collections::VecDeque;

pub fn random_map(w: usize, h: usize, density: f64, rng: &mut impl Rng) -> GridMap {
    let mut map = GridMap::new(w, h).unwrap();
    for c in map.clone().cells() {
        if rng.gen_bool(density) {
            map.set(c, CellKind::Obstacle).unwrap();
        }
    }
    map
}

pub fn random_free_cell(map: &GridMap, rng: &mut impl Rng) -> Option<Cell> {
    let free: Vec<Cell> = map.cells().filter(|c| !map.is_obstacle(*c)).collect();
    (!free.is_empty()).then(|| free[rng.gen_range(0..free.len())])
}

/// Plain 4-connected BFS over non-obstacle cells, written against the raw map only.
pub fn bfs_steps(map: &GridMap, a: Cell, b: Cell) -> Option<u32> {
    let w = map.width() as i32;
    let h = map.height() as i32;
    let idx = |c: Cell| (c.y * w + c.x) as usize;
    let mut dist = vec![u32::MAX; map.len()];
    dist[idx(a)] = 0;
    let mut q = VecDeque::from([a]);
    while let Some(c) = q.pop_front() {
        if c == b {
            return Some(dist[idx(c)]);
        }
        for (dx, dy) in [(0, -1), (0, 1), (-1, 0), (1, 0)] {
            let n = Cell::new(c.x + dx, c.y + dy);
            if n.x < 0 || n.y < 0 || n.x >= w || n.y >= h || map.is_obstacle(n) || dist[idx(n)] != u32::MAX {
                continue;
            }
            dist[idx(n)] = dist[idx(c)] + 1;
            q.push_back(n);
        }
    }
    None
}

pub fn random_influence(w: usize, h: usize, max: f64, rng: &mut impl Rng) -> InterferenceLayer {
    let mut il = InterferenceLayer::new(w, h);
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            if rng.gen_bool(0.5) {
                il.set(Cell::new(x, y), rng.gen_range(0.0..max));
            }
        }
    }
    il
}

pub fn weighted_graph(map: &GridMap, il: &InterferenceLayer, cost_multiplier: f64) -> AggregatedGraph {
    let geo = GeometricLayer::fully_observed(map);
    aggregate_graph(&geo, &RegulationLayer::new(), &ConfidenceStats::default(), Some(il), cost_multiplier, 0).unwrap()
}
