//! Shortest transition distance, interference-aware distance `d_IA`,
//! cooperation cost, and K-step reachable regions.

use crate::cost::Cost;
use crate::grid::Cell;
use crate::maplayers::AggregatedGraph;
use crate::world::WorldState;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use thiserror::Error;

/// Upper bound on the time horizon of [`brute_force_d_st`].
pub const MAX_ORACLE_STEPS: u32 = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReachError {
    #[error("cell {0} is outside the graph")]
    OutOfBounds(Cell),
    #[error("source {0} is a known obstacle")]
    SourceOnObstacle(Cell),
    #[error("path is not edge-connected after position {0}")]
    InvalidPath(usize),
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    dist: f64,
    idx: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap, we pop the smallest (dist, idx).
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Single-source result on one graph snapshot.
///
/// Only settled cells carry a finite distance. A horizon-bounded run leaves
/// every cell farther than the horizon at `Infinite`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReachResult {
    pub source: Cell,
    width: usize,
    dist: Vec<Cost>,
    parent: Vec<Option<usize>>,
    /// Priority-queue pops that settled a cell.
    pub expansions: u64,
    pub epoch: u64,
    /// `Some(K)` when the search stopped at the horizon.
    pub horizon: Option<f64>,
}

impl ReachResult {
    fn index(&self, c: Cell) -> Option<usize> {
        let h = self.dist.len() / self.width;
        (c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < h)
            .then(|| c.y as usize * self.width + c.x as usize)
    }

    fn cell_at(&self, i: usize) -> Cell {
        Cell::new((i % self.width) as i32, (i / self.width) as i32)
    }

    pub fn dist(&self, c: Cell) -> Cost {
        self.index(c).map_or(Cost::Infinite, |i| self.dist[i])
    }

    pub fn dist_by_index(&self, i: usize) -> Cost {
        self.dist[i]
    }

    pub fn is_settled(&self, i: usize) -> bool {
        self.dist[i].is_finite()
    }

    pub fn parent(&self, c: Cell) -> Option<Cell> {
        self.index(c).and_then(|i| self.parent[i]).map(|p| self.cell_at(p))
    }

    /// Parent chain from the source to `target`, both inclusive.
    pub fn path_to(&self, target: Cell) -> Option<Vec<Cell>> {
        let mut i = self.index(target)?;
        if !self.dist[i].is_finite() {
            return None;
        }
        let mut path = vec![self.cell_at(i)];
        while let Some(p) = self.parent[i] {
            path.push(self.cell_at(p));
            i = p;
        }
        path.reverse();
        Some(path)
    }

    /// Settled cells with `d_IA <= k`, in ascending cell index order.
    pub fn members(&self, k: f64) -> Vec<Cell> {
        (0..self.dist.len()).filter(|&i| self.dist[i].within(k)).map(|i| self.cell_at(i)).collect()
    }

    /// `(cell, distance)` for every settled cell, ascending cell index.
    pub fn finite_distances(&self) -> impl Iterator<Item = (Cell, f64)> + '_ {
        (0..self.dist.len()).filter_map(move |i| self.dist[i].value().map(|d| (self.cell_at(i), d)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReachableSet {
    pub source: Cell,
    pub k: f64,
    pub members: Vec<Cell>,
    pub expansions: u64,
}

impl ReachableSet {
    pub fn contains(&self, c: Cell) -> bool {
        self.members.contains(&c)
    }
}

fn run_dijkstra(g: &AggregatedGraph, source: Cell, horizon: Option<f64>) -> Result<ReachResult, ReachError> {
    let s = g.index(source).ok_or(ReachError::OutOfBounds(source))?;
    if g.is_obstacle(source) {
        return Err(ReachError::SourceOnObstacle(source));
    }
    let n = g.len();
    let mut tentative = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut expansions = 0;
    tentative[s] = 0.0;
    heap.push(Entry { dist: 0.0, idx: s });
    while let Some(Entry { dist, idx }) = heap.pop() {
        if settled[idx] || dist > tentative[idx] {
            continue;
        }
        if horizon.is_some_and(|k| dist > k) {
            break;
        }
        settled[idx] = true;
        expansions += 1;
        for (j, w) in g.out_edges(idx) {
            let nd = dist + w;
            if !settled[j] && nd < tentative[j] {
                tentative[j] = nd;
                parent[j] = Some(idx);
                heap.push(Entry { dist: nd, idx: j });
            }
        }
    }
    let dist = (0..n).map(|i| if settled[i] { Cost::Finite(tentative[i]) } else { Cost::Infinite }).collect();
    for (i, p) in parent.iter_mut().enumerate() {
        if !settled[i] {
            *p = None;
        }
    }
    Ok(ReachResult { source, width: g.width(), dist, parent, expansions, epoch: g.epoch(), horizon })
}

/// Exact single-source shortest distances under the aggregated weights.
///
/// Ties in the queue pop the lower cell index first; a parent is replaced only
/// on strict improvement.
pub fn dijkstra_reach(g: &AggregatedGraph, source: Cell) -> Result<ReachResult, ReachError> {
    run_dijkstra(g, source, None)
}

/// Dijkstra that stops as soon as the smallest queued distance exceeds `k`.
pub fn dijkstra_bounded(g: &AggregatedGraph, source: Cell, k: f64) -> Result<ReachResult, ReachError> {
    run_dijkstra(g, source, Some(k))
}

pub fn reachable_set(g: &AggregatedGraph, source: Cell, k: f64) -> Result<ReachableSet, ReachError> {
    let r = dijkstra_bounded(g, source, k)?;
    Ok(ReachableSet { source, k, members: r.members(k), expansions: r.expansions })
}

pub fn d_ia(g: &AggregatedGraph, a: Cell, b: Cell) -> Result<Cost, ReachError> {
    if !g.in_bounds(b) {
        return Err(ReachError::OutOfBounds(b));
    }
    if a == b {
        return Ok(Cost::ZERO);
    }
    match dijkstra_reach(g, a) {
        Ok(r) => Ok(r.dist(b)),
        Err(ReachError::SourceOnObstacle(_)) => Ok(Cost::Infinite),
        Err(e) => Err(e),
    }
}

/// Hop count under unit weights: every finite-weight edge counts as one step.
pub fn shortest_transition_distance(g: &AggregatedGraph, a: Cell, b: Cell) -> Result<Option<u32>, ReachError> {
    let s = g.index(a).ok_or(ReachError::OutOfBounds(a))?;
    let t = g.index(b).ok_or(ReachError::OutOfBounds(b))?;
    let mut hops = vec![u32::MAX; g.len()];
    hops[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        if u == t {
            return Ok(Some(hops[u]));
        }
        for (v, _) in g.out_edges(u) {
            if hops[v] == u32::MAX {
                hops[v] = hops[u] + 1;
                queue.push_back(v);
            }
        }
    }
    Ok(None)
}

/// Mean per-step cost `(1/t) * sum of w(x_{i-1}, x_i)`; zero for a path of one cell.
pub fn cooperation_cost(g: &AggregatedGraph, path: &[Cell]) -> Result<Cost, ReachError> {
    if path.len() < 2 {
        return Ok(Cost::ZERO);
    }
    let mut total = Cost::ZERO;
    for (i, w) in path.windows(2).enumerate() {
        let step = g.edge_weight(w[0], w[1]).ok_or(ReachError::InvalidPath(i))?;
        if !g.in_bounds(w[0]) || !g.in_bounds(w[1]) {
            return Err(ReachError::InvalidPath(i));
        }
        total = total + step;
    }
    let t = (path.len() - 1) as f64;
    Ok(match total {
        Cost::Finite(v) => Cost::Finite(v / t),
        Cost::Infinite => Cost::Infinite,
    })
}

/// Minimum first-hitting time from `a` to `b` under the true world dynamics,
/// starting at `world.step`. Doors are checked at the step the move is made.
/// Other entities are ignored. `None` when `b` is not reached within `max_t`.
pub fn brute_force_d_st(world: &WorldState, a: Cell, b: Cell, max_t: u32) -> Option<u32> {
    let map = &world.map;
    let (ai, bi) = (map.index(a)?, map.index(b)?);
    let max_t = max_t.min(MAX_ORACLE_STEPS);
    let mut occupied = vec![false; map.len()];
    occupied[ai] = true;
    let mut frontier = vec![ai];
    for t in 0..=max_t {
        if occupied[bi] {
            return Some(t);
        }
        if t == max_t {
            break;
        }
        let now = world.step + u64::from(t);
        let mut next = Vec::new();
        for &u in &frontier {
            for (_, v) in map.neighbors4(map.cell_at(u)) {
                let vi = map.index(v).expect("neighbors are in bounds");
                if !occupied[vi] && world.enterable(v, now).is_ok() {
                    occupied[vi] = true;
                    next.push(vi);
                }
            }
        }
        // Waiting is always allowed, so reached cells stay reached.
        frontier.extend(next);
    }
    None
}

/// Horizon-bounded results keyed by source cell, reused across graph epochs
/// until an edge they depend on changes.
#[derive(Clone, Debug, Default)]
pub struct ReachCache {
    entries: BTreeMap<Cell, ReachResult>,
    pub hits: u64,
    pub misses: u64,
}

impl ReachCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Drop every entry that settled the tail of a changed edge.
    ///
    /// Paths within the horizon only use edges leaving settled cells, so
    /// entries that never settled any changed tail stay exact.
    pub fn invalidate(&mut self, changed_tails: &[usize]) {
        if changed_tails.is_empty() {
            return;
        }
        self.entries.retain(|_, r| !changed_tails.iter().any(|&i| r.is_settled(i)));
    }

    pub fn get(&self, source: Cell) -> Option<&ReachResult> {
        self.entries.get(&source)
    }

    /// Make sure a horizon-`k` entry exists for `source`; returns the
    /// expansions spent, zero on a hit.
    pub fn ensure(&mut self, g: &AggregatedGraph, source: Cell, k: f64) -> Result<u64, ReachError> {
        let (r, hit) = self.get_or_compute(g, source, k)?;
        Ok(if hit { 0 } else { r.expansions })
    }

    /// Cached result, or a fresh bounded run. The bool is true on a cache hit.
    pub fn get_or_compute(
        &mut self,
        g: &AggregatedGraph,
        source: Cell,
        k: f64,
    ) -> Result<(&ReachResult, bool), ReachError> {
        let hit = self.entries.get(&source).is_some_and(|r| r.horizon == Some(k));
        if hit {
            self.hits += 1;
        } else {
            self.misses += 1;
            let r = dijkstra_bounded(g, source, k)?;
            self.entries.insert(source, r);
        }
        Ok((&self.entries[&source], hit))
    }
}
