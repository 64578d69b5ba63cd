use super::confidence::ConfidenceStats;
use crate::grid::Cell;
use crate::world::{Outcome, Transition};
use serde::Serialize;
use std::collections::BTreeSet;

pub type Edge = (Cell, Cell);

/// Directed connectivity learned from agents' successful transitions.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RegulationLayer {
    edges: BTreeSet<Edge>,
    transition_log: Vec<Transition>,
}

impl RegulationLayer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn has_edge(&self, from: Cell, to: Cell) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn transition_log(&self) -> &[Transition] {
        &self.transition_log
    }

    /// Append the record; on a successful move add the directed edge and feed
    /// the confidence statistics.
    ///
    /// Stays, attacks and moves rejected only because another entity held the
    /// target cell carry no evidence about the edge and do not touch the stats.
    pub fn log_transition(&mut self, conf: &mut ConfidenceStats, rec: Transition) {
        self.transition_log.push(rec);
        if rec.from == rec.to || rec.outcome == Outcome::Occupied {
            return;
        }
        let edge = (rec.from, rec.to);
        let success = rec.success();
        if success {
            self.edges.insert(edge);
        }
        conf.record(edge, success);
    }
}
