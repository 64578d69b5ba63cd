//! Run hyperparameters with their defaults and `key=value` overrides.
//!
//! The same key names are accepted in scenario headers and on the command line.

use crate::interference::ThreatParams;
use crate::maplayers::ConfidenceParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("unknown parameter `{0}`")]
    UnknownKey(String),
    #[error("parameter `{key}`: cannot parse `{value}`")]
    Parse { key: String, value: String },
    #[error("parameter `{key}` = {value} out of range: {reason}")]
    OutOfRange { key: String, value: String, reason: &'static str },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Reachability horizon K.
    pub horizon: f64,
    /// Number of leaders M.
    pub leaders: usize,
    /// Perception radius for geometric-layer updates.
    pub sight_range: f64,
    /// Grouping radius of the Euclidean baseline.
    pub euclid_radius: f64,
    /// Visibility radius of the Vision baseline.
    pub vision_range: f64,
    pub threat: ThreatParams,
    pub confidence: ConfidenceParams,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            horizon: 9.0,
            leaders: 3,
            sight_range: 7.0,
            euclid_radius: 9.0,
            vision_range: 7.0,
            threat: ThreatParams::default(),
            confidence: ConfidenceParams::default(),
            learning_rate: 5e-4,
            batch_size: 32,
        }
    }
}

pub const KEYS: &[&str] = &[
    "k",
    "leaders",
    "sight_range",
    "euclid_radius",
    "vision_range",
    "base_influence",
    "interference_decay",
    "angle_influence",
    "influence_range",
    "cost_multiplier",
    "confidence_threshold",
    "update_decay",
    "fifo_capacity",
    "revalidate_interval",
    "learning_rate",
    "batch_size",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ParamError> {
    value.trim().parse().map_err(|_| ParamError::Parse { key: key.into(), value: value.into() })
}

fn check(key: &str, value: &str, ok: bool, reason: &'static str) -> Result<(), ParamError> {
    if ok {
        Ok(())
    } else {
        Err(ParamError::OutOfRange { key: key.into(), value: value.into(), reason })
    }
}

impl Params {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ParamError> {
        let key = key.trim();
        match key {
            "k" => {
                let v: f64 = num(key, value)?;
                check(key, value, v.is_finite() && v >= 0.0, "must be >= 0")?;
                self.horizon = v;
            }
            "leaders" => {
                let v: usize = num(key, value)?;
                check(key, value, v >= 1, "must be >= 1")?;
                self.leaders = v;
            }
            "sight_range" | "euclid_radius" | "vision_range" | "influence_range" => {
                let v: f64 = num(key, value)?;
                check(key, value, v.is_finite() && v > 0.0, "must be > 0")?;
                match key {
                    "sight_range" => self.sight_range = v,
                    "euclid_radius" => self.euclid_radius = v,
                    "vision_range" => self.vision_range = v,
                    _ => self.threat.influence_range = v,
                }
            }
            "base_influence" | "angle_influence" | "cost_multiplier" => {
                let v: f64 = num(key, value)?;
                check(key, value, v.is_finite() && v >= 0.0, "must be >= 0")?;
                match key {
                    "base_influence" => self.threat.base_influence = v,
                    "angle_influence" => self.threat.angle_factor = v,
                    _ => self.threat.cost_multiplier = v,
                }
            }
            "interference_decay" => {
                let v: f64 = num(key, value)?;
                check(key, value, v.is_finite() && v > 0.0, "must be > 0")?;
                self.threat.decay = v;
            }
            "confidence_threshold" => {
                let v: f64 = num(key, value)?;
                check(key, value, v > 0.0 && v < 1.0, "must lie in (0, 1)")?;
                self.confidence.threshold = v;
            }
            "update_decay" => {
                let v: f64 = num(key, value)?;
                check(key, value, v > 0.0 && v <= 1.0, "must lie in (0, 1]")?;
                self.confidence.decay = v;
            }
            "fifo_capacity" => {
                let v: usize = num(key, value)?;
                check(key, value, v >= 1, "must be >= 1")?;
                self.confidence.fifo_capacity = v;
            }
            "revalidate_interval" => {
                let v: u64 = num(key, value)?;
                check(key, value, v >= 1, "must be >= 1")?;
                self.confidence.revalidate_base = v;
            }
            "learning_rate" => {
                let v: f64 = num(key, value)?;
                check(key, value, v.is_finite() && v > 0.0, "must be > 0")?;
                self.learning_rate = v;
            }
            "batch_size" => {
                let v: usize = num(key, value)?;
                check(key, value, v >= 1, "must be >= 1")?;
                self.batch_size = v;
            }
            other => return Err(ParamError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Apply a `key=value` assignment.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<(), ParamError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| ParamError::Parse { key: assignment.into(), value: String::new() })?;
        self.set(k, v)
    }
}
