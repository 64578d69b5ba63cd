use super::aggregate::AggregatedGraph;
use super::confidence::ConfidenceStats;
use super::geometric::{GeometricLayer, Knowledge};
use super::influence::InterferenceLayer;
use super::regulation::RegulationLayer;
use crate::cost::Cost;
use crate::grid::Cell;
use serde::Serialize;
use std::fmt::Write;

/// Per-cell traversal cost `1 + cost_multiplier * I(x)`, min-max normalized
/// over finite cells to `[0, 1]`; known obstacles print as `inf`.
///
/// A constant field normalizes to all zeros.
pub fn heatmap_csv(geo: &GeometricLayer, il: Option<&InterferenceLayer>, cost_multiplier: f64) -> String {
    let (w, h) = (geo.width(), geo.height());
    let cost = |c: Cell| -> Cost {
        if geo.is_known_obstacle(c) {
            Cost::Infinite
        } else {
            Cost::Finite(1.0 + cost_multiplier * il.map_or(0.0, |l| l.at(c)))
        }
    };
    let finite: Vec<f64> = (0..h)
        .flat_map(|y| (0..w).map(move |x| Cell::new(x as i32, y as i32)))
        .filter_map(|c| cost(c).value())
        .collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = String::new();
    for y in 0..h {
        for x in 0..w {
            if x > 0 {
                out.push(',');
            }
            match cost(Cell::new(x as i32, y as i32)) {
                Cost::Infinite => out.push_str("inf"),
                Cost::Finite(v) => {
                    let n = if span > 0.0 { (v - lo) / span } else { 0.0 };
                    write!(out, "{n:.6}").unwrap();
                }
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeStatRecord {
    pub from: Cell,
    pub to: Cell,
    pub succ: u32,
    pub total: u32,
    pub blocked: bool,
    pub revalidate_at: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightRecord {
    pub from: Cell,
    pub to: Cell,
    pub weight: Cost,
}

/// Debug snapshot of every layer plus the aggregated weights.
///
/// `geometric` rows use `?` unknown, `.` free, `#` obstacle, `D` rule cell.
/// Only edges whose weight differs from 1 are listed under `weights`.
#[derive(Clone, Debug, Serialize)]
pub struct LayerDump {
    pub step: u64,
    pub width: usize,
    pub height: usize,
    pub geometric: Vec<String>,
    pub regulation_edges: Vec<(Cell, Cell)>,
    pub transitions_logged: usize,
    pub confidence: Vec<EdgeStatRecord>,
    pub influence: Vec<Vec<f64>>,
    pub weight_histogram: WeightHistogram,
    pub weights: Vec<WeightRecord>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct WeightHistogram {
    pub unit: usize,
    pub above_unit: usize,
    pub infinite: usize,
}

pub fn layer_dump(
    step: u64,
    geo: &GeometricLayer,
    reg: &RegulationLayer,
    conf: &ConfidenceStats,
    il: &InterferenceLayer,
    graph: &AggregatedGraph,
) -> LayerDump {
    let (w, h) = (geo.width(), geo.height());
    let geometric = (0..h)
        .map(|y| {
            (0..w)
                .map(|x| {
                    let c = Cell::new(x as i32, y as i32);
                    match geo.knowledge(c) {
                        Knowledge::Unknown => '?',
                        Knowledge::Obstacle => '#',
                        Knowledge::Free if geo.is_rule_cell(c) => 'D',
                        Knowledge::Free => '.',
                    }
                })
                .collect()
        })
        .collect();
    let confidence = conf
        .stats()
        .iter()
        .map(|(&(from, to), s)| EdgeStatRecord {
            from,
            to,
            succ: s.succ,
            total: s.total,
            blocked: conf.is_blocked((from, to)),
            revalidate_at: conf.revalidate_at((from, to)),
        })
        .collect();
    let influence = (0..h).map(|y| il.values()[y * w..(y + 1) * w].to_vec()).collect();
    let mut hist = WeightHistogram::default();
    let mut weights = Vec::new();
    for (from, to, weight) in graph.edges() {
        match weight {
            Cost::Finite(1.0) => hist.unit += 1,
            Cost::Finite(_) => hist.above_unit += 1,
            Cost::Infinite => hist.infinite += 1,
        }
        if weight != Cost::ONE {
            weights.push(WeightRecord { from, to, weight });
        }
    }
    LayerDump {
        step,
        width: w,
        height: h,
        geometric,
        regulation_edges: reg.edges().iter().copied().collect(),
        transitions_logged: reg.transition_log().len(),
        confidence,
        influence,
        weight_histogram: hist,
        weights,
    }
}
