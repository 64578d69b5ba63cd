use crate::grid::{line_of_sight, Cell, CellKind, GridError, GridMap};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Knowledge {
    Unknown,
    Free,
    Obstacle,
}

/// Team knowledge of static structure, built from line-of-sight observations.
///
/// Door cells are recorded as `Free` plus a rule-cell flag; whether they can
/// be entered is decided by the regulation layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeometricLayer {
    width: usize,
    height: usize,
    known: Vec<Knowledge>,
    rule_cells: Vec<bool>,
    dirty: BTreeSet<Cell>,
}

impl GeometricLayer {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            known: vec![Knowledge::Unknown; width * height],
            rule_cells: vec![false; width * height],
            dirty: BTreeSet::new(),
        }
    }

    /// Everything observed, as if the agents had seen the whole map.
    pub fn fully_observed(map: &GridMap) -> Self {
        let mut g = Self::new(map.width(), map.height());
        for c in map.cells() {
            g.observe(map, c);
        }
        g.dirty.clear();
        g
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn index(&self, c: Cell) -> Option<usize> {
        (c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height)
            .then(|| c.y as usize * self.width + c.x as usize)
    }

    pub fn knowledge(&self, c: Cell) -> Knowledge {
        self.index(c).map_or(Knowledge::Unknown, |i| self.known[i])
    }

    pub fn is_known_obstacle(&self, c: Cell) -> bool {
        self.knowledge(c) == Knowledge::Obstacle
    }

    pub fn is_rule_cell(&self, c: Cell) -> bool {
        self.index(c).is_some_and(|i| self.rule_cells[i])
    }

    pub fn dirty(&self) -> &BTreeSet<Cell> {
        &self.dirty
    }

    pub fn take_dirty(&mut self) -> BTreeSet<Cell> {
        std::mem::take(&mut self.dirty)
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|k| **k != Knowledge::Unknown).count()
    }

    /// Record the true state of one cell; returns whether the graph-relevant state changed.
    fn observe(&mut self, map: &GridMap, c: Cell) -> bool {
        let Some(i) = self.index(c) else { return false };
        let (kind, rule) = match map.kind(c) {
            Some(CellKind::Obstacle) => (Knowledge::Obstacle, false),
            Some(CellKind::Door(_)) => (Knowledge::Free, true),
            _ => (Knowledge::Free, false),
        };
        let before = (self.known[i], self.rule_cells[i]);
        self.known[i] = kind;
        self.rule_cells[i] = rule;
        // Unknown traverses like Free, so Unknown -> Free is not a graph change.
        let changed = match (before.0, kind) {
            (Knowledge::Obstacle, Knowledge::Obstacle) => false,
            (_, Knowledge::Obstacle) | (Knowledge::Obstacle, _) => true,
            _ => before.1 != rule,
        };
        if changed {
            self.dirty.insert(c);
        }
        changed
    }

    /// Mark every cell within Euclidean `sight_range` of `agent_pos` that is in
    /// line of sight. Returns the number of cells whose graph-relevant state changed.
    pub fn update_from_sight(&mut self, map: &GridMap, agent_pos: Cell, sight_range: f64) -> Result<usize, GridError> {
        if !map.in_bounds(agent_pos) {
            return Err(GridError::OutOfBounds(agent_pos));
        }
        let r = sight_range.floor() as i32;
        let mut changed = 0;
        for y in (agent_pos.y - r).max(0)..=(agent_pos.y + r).min(self.height as i32 - 1) {
            for x in (agent_pos.x - r).max(0)..=(agent_pos.x + r).min(self.width as i32 - 1) {
                let q = Cell::new(x, y);
                if q.euclidean(agent_pos) <= sight_range && line_of_sight(map, agent_pos, q)? && self.observe(map, q) {
                    changed += 1;
                }
            }
        }
        Ok(changed)
    }
}
