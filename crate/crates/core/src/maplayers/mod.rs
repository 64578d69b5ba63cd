//! Geometric, regulation and interference layers, confidence-driven edge
//! blocking, and their aggregation into a weighted digraph.

mod aggregate;
mod confidence;
mod export;
mod geometric;
mod influence;
mod regulation;

pub use aggregate::{aggregate_graph, AggregatedGraph};
pub use confidence::{ConfidenceParams, ConfidenceStats, EdgeStats};
pub use export::{heatmap_csv, layer_dump, EdgeStatRecord, LayerDump, WeightHistogram, WeightRecord};
pub use geometric::{GeometricLayer, Knowledge};
pub use influence::InterferenceLayer;
pub use regulation::{Edge, RegulationLayer};

use crate::grid::{Cell, GridError, GridMap};
use crate::interference::{IntentNet, ThreatParams};
use crate::world::{EntityState, Transition};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LayerError {
    #[error("layer dimensions {got:?} do not match grid {expected:?}")]
    DimensionMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// All layers for one team, written by a single owner.
#[derive(Clone, Debug)]
pub struct LayeredMap {
    pub geometric: GeometricLayer,
    pub regulation: RegulationLayer,
    pub confidence: ConfidenceStats,
    pub interference: InterferenceLayer,
}

impl LayeredMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            geometric: GeometricLayer::new(width, height),
            regulation: RegulationLayer::new(),
            confidence: ConfidenceStats::default(),
            interference: InterferenceLayer::new(width, height),
        }
    }

    pub fn observe(&mut self, map: &GridMap, pos: Cell, sight_range: f64) -> Result<usize, LayerError> {
        Ok(self.geometric.update_from_sight(map, pos, sight_range)?)
    }

    pub fn log_transitions(&mut self, records: impl IntoIterator<Item = Transition>) {
        for rec in records {
            self.regulation.log_transition(&mut self.confidence, rec);
        }
    }

    pub fn refresh_confidence(&mut self, now: u64, params: &ConfidenceParams) {
        self.confidence.refresh(now, params);
    }

    pub fn update_interference(&mut self, enemies: &[EntityState], net: &IntentNet, params: &ThreatParams, step: u64) {
        self.interference.update(enemies, net, params, step);
    }

    /// Aggregate; with `interference_enabled == false` the interference layer is ignored.
    pub fn aggregate(
        &self,
        cost_multiplier: f64,
        interference_enabled: bool,
        epoch: u64,
    ) -> Result<AggregatedGraph, LayerError> {
        aggregate_graph(
            &self.geometric,
            &self.regulation,
            &self.confidence,
            interference_enabled.then_some(&self.interference),
            cost_multiplier,
            epoch,
        )
    }

    pub fn dump(&self, step: u64, graph: &AggregatedGraph) -> LayerDump {
        layer_dump(step, &self.geometric, &self.regulation, &self.confidence, &self.interference, graph)
    }
}
