use super::regulation::Edge;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Backoff exponent cap; keeps the revalidation delay finite.
const MAX_BACKOFF_EXP: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceParams {
    /// `tau_c`: reliability below which an edge is blocked.
    pub threshold: f64,
    /// `eta_upd`: each consecutive block stretches the revalidation delay by `1/decay`.
    pub decay: f64,
    pub fifo_capacity: usize,
    /// `R0`: delay before the first revalidation probe, in steps.
    pub revalidate_base: u64,
}

impl Default for ConfidenceParams {
    fn default() -> Self {
        Self { threshold: 0.5, decay: 0.5, fifo_capacity: 256, revalidate_base: 10 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EdgeStats {
    pub succ: u32,
    pub total: u32,
    pub consecutive_blocks: u32,
    /// Reliability recorded when the edge was last blocked.
    pub blocked_reliability: Option<f64>,
}

impl EdgeStats {
    pub fn reliability(&self) -> f64 {
        f64::from(self.succ) / f64::from(self.total.max(1))
    }
}

/// Per-edge success statistics and the FIFO-bounded blocked set.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConfidenceStats {
    stats: BTreeMap<Edge, EdgeStats>,
    blocked: BTreeSet<Edge>,
    fifo: VecDeque<Edge>,
    revalidate_at: BTreeMap<Edge, u64>,
}

impl ConfidenceStats {
    pub fn record(&mut self, edge: Edge, success: bool) {
        let s = self.stats.entry(edge).or_default();
        s.total += 1;
        if success {
            s.succ += 1;
        }
    }

    pub fn counts(&self, edge: Edge) -> Option<(u32, u32)> {
        self.stats.get(&edge).map(|s| (s.succ, s.total))
    }

    pub fn reliability(&self, edge: Edge) -> Option<f64> {
        self.stats.get(&edge).map(EdgeStats::reliability)
    }

    pub fn stats(&self) -> &BTreeMap<Edge, EdgeStats> {
        &self.stats
    }

    pub fn is_blocked(&self, edge: Edge) -> bool {
        self.blocked.contains(&edge)
    }

    pub fn blocked(&self) -> &BTreeSet<Edge> {
        &self.blocked
    }

    pub fn fifo(&self) -> &VecDeque<Edge> {
        &self.fifo
    }

    pub fn revalidate_at(&self, edge: Edge) -> Option<u64> {
        self.revalidate_at.get(&edge).copied()
    }

    fn unblock(&mut self, edge: Edge) {
        if self.blocked.remove(&edge) {
            self.fifo.retain(|e| *e != edge);
        }
    }

    fn block(&mut self, edge: Edge, now: u64, params: &ConfidenceParams) {
        if params.fifo_capacity == 0 {
            return;
        }
        while self.fifo.len() >= params.fifo_capacity {
            if let Some(old) = self.fifo.pop_front() {
                self.blocked.remove(&old);
            }
        }
        let s = self.stats.get_mut(&edge).expect("blocked edges have stats");
        let exp = s.consecutive_blocks.min(MAX_BACKOFF_EXP) as i32;
        let delay = (params.revalidate_base as f64 * (1.0 / params.decay).powi(exp)).round() as u64;
        s.consecutive_blocks = s.consecutive_blocks.saturating_add(1);
        s.blocked_reliability = Some(s.reliability());
        self.blocked.insert(edge);
        self.fifo.push_back(edge);
        self.revalidate_at.insert(edge, now + delay.max(1));
    }

    /// Re-evaluate every edge with evidence.
    ///
    /// Unreliable edges are blocked with exponentially backed-off revalidation;
    /// a blocked edge whose revalidation time has come is released for one
    /// refresh cycle and re-blocked on the next if still unreliable. Reliable
    /// edges are released and their backoff reset.
    pub fn refresh(&mut self, now: u64, params: &ConfidenceParams) {
        let edges: Vec<(Edge, EdgeStats)> = self.stats.iter().map(|(e, s)| (*e, *s)).collect();
        for (edge, s) in edges {
            if s.total == 0 {
                continue;
            }
            if s.reliability() < params.threshold {
                if self.blocked.contains(&edge) {
                    if self.revalidate_at.get(&edge).is_some_and(|&t| t <= now) {
                        self.unblock(edge);
                    }
                } else {
                    self.block(edge, now, params);
                }
            } else {
                self.unblock(edge);
                self.revalidate_at.remove(&edge);
                if let Some(st) = self.stats.get_mut(&edge) {
                    st.consecutive_blocks = 0;
                }
            }
        }
    }
}
