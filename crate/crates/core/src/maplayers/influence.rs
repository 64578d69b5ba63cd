use crate::grid::Cell;
use crate::interference::{EnemyField, IntentNet, ThreatParams};
use crate::world::{EntityState, Team};

/// Summed enemy influence `I(x)` per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct InterferenceLayer {
    width: usize,
    height: usize,
    influence: Vec<f64>,
    last_update_step: u64,
}

impl InterferenceLayer {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, influence: vec![0.0; width * height], last_update_step: 0 }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn last_update_step(&self) -> u64 {
        self.last_update_step
    }

    pub fn values(&self) -> &[f64] {
        &self.influence
    }

    pub fn at(&self, c: Cell) -> f64 {
        if c.x < 0 || c.y < 0 || c.x as usize >= self.width || c.y as usize >= self.height {
            return 0.0;
        }
        self.influence[c.y as usize * self.width + c.x as usize]
    }

    /// Overwrite one cell; for fixtures and external fields.
    pub fn set(&mut self, c: Cell, value: f64) {
        assert!(value >= 0.0 && value.is_finite(), "influence must be finite and non-negative");
        let i = c.y as usize * self.width + c.x as usize;
        self.influence[i] = value;
    }

    /// Recompute the field from scratch over all alive enemies.
    pub fn update(&mut self, enemies: &[EntityState], net: &IntentNet, params: &ThreatParams, step: u64) {
        self.influence.iter_mut().for_each(|v| *v = 0.0);
        let r = params.influence_range.floor() as i32;
        for e in enemies.iter().filter(|e| e.alive && e.team == Team::Enemy) {
            let field = EnemyField::new(e, net, params);
            if field.base == 0.0 {
                continue;
            }
            let o = e.position;
            for y in (o.y - r).max(0)..=(o.y + r).min(self.height as i32 - 1) {
                for x in (o.x - r).max(0)..=(o.x + r).min(self.width as i32 - 1) {
                    let v = field.value_at(Cell::new(x, y), params);
                    self.influence[y as usize * self.width + x as usize] += v;
                }
            }
        }
        self.last_update_step = step;
    }
}
