//! Directional interference potential field and enemy threat levels.
//!
//! Each enemy radiates `I_base * exp(-decay * d_eff)` where the effective
//! distance stretches with the angle between the enemy's predicted attack
//! direction and the direction to the queried cell.

mod intent;

pub use intent::{
    intent_loss, read_samples_csv, synthetic_straight_line, train_intent, write_samples_csv, DenseLayer, EpochLog,
    IntentError, IntentNet, IntentSample, TrainConfig, HIDDEN_DIMS, INPUT_DIM, OUTPUT_DIM,
};

use crate::grid::Cell;
use crate::world::{EntityState, RECENT_POSITIONS, TRAJECTORY_CAP};
use serde::{Deserialize, Serialize};

/// Norm below which a vector counts as degenerate.
pub const EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreatParams {
    /// `I_config`: base influence strength.
    pub base_influence: f64,
    /// `lambda_base`: decay rate per cell.
    pub decay: f64,
    /// `alpha`: angle influence factor.
    pub angle_factor: f64,
    /// Euclidean cutoff, in cells.
    pub influence_range: f64,
    /// Scale from summed influence to traversal cost.
    pub cost_multiplier: f64,
}

impl Default for ThreatParams {
    fn default() -> Self {
        Self { base_influence: 2.0, decay: 0.3, angle_factor: 0.5, influence_range: 5.0, cost_multiplier: 1.5 }
    }
}

/// Mean Euclidean step length over the recent (last 10) trajectory window.
pub fn mean_recent_displacement(e: &EntityState) -> f64 {
    let n = e.trajectory.len().min(RECENT_POSITIONS);
    if n < 2 {
        return 0.0;
    }
    let recent: Vec<Cell> = e.trajectory.iter().skip(e.trajectory.len() - n).copied().collect();
    let total: f64 = recent.windows(2).map(|w| w[0].euclidean(w[1])).sum();
    total / (n - 1) as f64
}

/// `T_e`: mean of the movement, attack, health and mobility components.
pub fn threat_level(e: &EntityState) -> f64 {
    let t_move = (e.trajectory.len() as f64 / TRAJECTORY_CAP as f64).min(1.0);
    let t_attack = (e.recent_attacks() as f64 / 10.0).min(1.0);
    let t_health = e.health.clamp(0.0, 1.0);
    let t_mobility = (mean_recent_displacement(e) / 3.0).min(1.0);
    (t_move + t_attack + t_health + t_mobility) / 4.0
}

pub fn base_influence(e: &EntityState, p: &ThreatParams) -> f64 {
    p.base_influence * threat_level(e)
}

pub fn effective_distance(d_actual: f64, theta: f64, alpha: f64) -> f64 {
    d_actual * (1.0 + alpha * (1.0 - theta.cos()))
}

/// Unsigned angle in `[0, pi]` between two vectors; 0 if either is degenerate.
pub fn unsigned_angle(u: [f64; 2], v: [f64; 2]) -> f64 {
    let nu = u[0].hypot(u[1]);
    let nv = v[0].hypot(v[1]);
    if nu < EPS || nv < EPS {
        return 0.0;
    }
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.abs().atan2(dot)
}

/// Intent-net input: last 10 positions relative to the current one (oldest
/// first, x then y), followed by health.
pub fn featurize(e: &EntityState) -> [f64; INPUT_DIM] {
    let mut out = [0.0; INPUT_DIM];
    for (i, c) in e.last10().iter().enumerate() {
        out[2 * i] = f64::from(c.x - e.position.x);
        out[2 * i + 1] = f64::from(c.y - e.position.y);
    }
    out[INPUT_DIM - 1] = e.health;
    out
}

pub fn predict_intent(net: &IntentNet, e: &EntityState) -> [f64; 2] {
    net.forward(&featurize(e))
}

/// Angle between the predicted attack direction of `e` and the direction from `e` to `x`.
pub fn predict_intent_angle(net: &IntentNet, e: &EntityState, x: Cell) -> f64 {
    let to_x = [f64::from(x.x - e.position.x), f64::from(x.y - e.position.y)];
    unsigned_angle(predict_intent(net, e), to_x)
}

/// One enemy's field with its base strength and intent vector evaluated once.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnemyField {
    pub origin: Cell,
    pub base: f64,
    pub intent: [f64; 2],
}

impl EnemyField {
    pub fn new(e: &EntityState, net: &IntentNet, p: &ThreatParams) -> Self {
        Self { origin: e.position, base: base_influence(e, p), intent: predict_intent(net, e) }
    }

    pub fn value_at(&self, x: Cell, p: &ThreatParams) -> f64 {
        let d = x.euclidean(self.origin);
        if d > p.influence_range {
            return 0.0;
        }
        let to_x = [f64::from(x.x - self.origin.x), f64::from(x.y - self.origin.y)];
        let theta = unsigned_angle(self.intent, to_x);
        self.base * (-p.decay * effective_distance(d, theta, p.angle_factor)).exp()
    }
}

/// `I(x | e)`; zero outside the influence range or for dead enemies.
pub fn influence_at(x: Cell, e: &EntityState, net: &IntentNet, p: &ThreatParams) -> f64 {
    if !e.alive {
        return 0.0;
    }
    EnemyField::new(e, net, p).value_at(x, p)
}
