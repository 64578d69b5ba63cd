use super::confidence::ConfidenceStats;
use super::geometric::GeometricLayer;
use super::influence::InterferenceLayer;
use super::regulation::RegulationLayer;
use super::LayerError;
use crate::cost::Cost;
use crate::grid::{Cell, Direction, GridMap};

/// Immutable weighted digraph over grid cells with 4-connected candidate edges.
///
/// Weights live on the destination cell: `w(u, v) = 1 + cost_multiplier * I(v)`
/// unless the edge is untraversable.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatedGraph {
    width: usize,
    height: usize,
    /// Outgoing weights per cell, indexed by `Direction::slot`.
    weights: Vec<[Cost; 4]>,
    obstacle: Vec<bool>,
    epoch: u64,
}

impl AggregatedGraph {
    /// Every in-bounds edge weighs 1.
    pub fn uniform(width: usize, height: usize) -> Self {
        let mut g = Self {
            width,
            height,
            weights: vec![[Cost::Infinite; 4]; width * height],
            obstacle: vec![false; width * height],
            epoch: 0,
        };
        for i in 0..g.len() {
            let u = g.cell_at(i);
            for d in Direction::ALL {
                if g.in_bounds(u.step(d)) {
                    g.weights[i][d.slot()] = Cost::ONE;
                }
            }
        }
        g
    }

    /// Fully observed static map, no regulation evidence, no interference.
    pub fn from_map(map: &GridMap) -> Self {
        let geo = GeometricLayer::fully_observed(map);
        let il = InterferenceLayer::new(map.width(), map.height());
        aggregate_graph(&geo, &RegulationLayer::new(), &ConfidenceStats::default(), Some(&il), 0.0, 0)
            .expect("layers built with matching dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        self.in_bounds(c).then(|| c.y as usize * self.width + c.x as usize)
    }

    pub fn cell_at(&self, i: usize) -> Cell {
        Cell::new((i % self.width) as i32, (i / self.width) as i32)
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        self.index(c).is_some_and(|i| self.obstacle[i])
    }

    pub fn weight(&self, u: Cell, d: Direction) -> Cost {
        self.index(u).map_or(Cost::Infinite, |i| self.weights[i][d.slot()])
    }

    /// Weight of `u -> v`, or `None` when the cells are not orthogonal neighbours.
    pub fn edge_weight(&self, u: Cell, v: Cell) -> Option<Cost> {
        u.direction_to(v).map(|d| self.weight(u, d))
    }

    /// Finite outgoing edges of cell index `i` as `(target index, weight)`, in direction order.
    pub fn out_edges(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let u = self.cell_at(i);
        Direction::ALL.into_iter().filter_map(move |d| match self.weights[i][d.slot()] {
            Cost::Finite(w) => self.index(u.step(d)).map(|j| (j, w)),
            Cost::Infinite => None,
        })
    }

    /// All in-bounds candidate edges `(u, v, weight)` in cell-index then direction order.
    pub fn edges(&self) -> impl Iterator<Item = (Cell, Cell, Cost)> + '_ {
        (0..self.len()).flat_map(move |i| {
            let u = self.cell_at(i);
            Direction::ALL.into_iter().filter_map(move |d| {
                let v = u.step(d);
                self.in_bounds(v).then(|| (u, v, self.weights[i][d.slot()]))
            })
        })
    }

    pub fn set_weight(&mut self, u: Cell, v: Cell, w: Cost) {
        let d = u.direction_to(v).expect("edge endpoints must be adjacent");
        let i = self.index(u).expect("edge tail in bounds");
        assert!(self.in_bounds(v), "edge head in bounds");
        self.weights[i][d.slot()] = w;
    }

    /// Mark `c` as an obstacle and cut every edge into it.
    pub fn set_obstacle(&mut self, c: Cell) {
        let i = self.index(c).expect("cell in bounds");
        self.obstacle[i] = true;
        for d in Direction::ALL {
            let u = c.step(d);
            if self.in_bounds(u) {
                self.set_weight(u, c, Cost::Infinite);
            }
        }
    }

    /// Indices whose outgoing weights differ between the two graphs.
    pub fn changed_tails(&self, other: &AggregatedGraph) -> Vec<usize> {
        if self.width != other.width || self.height != other.height {
            return (0..self.len()).collect();
        }
        (0..self.len())
            .filter(|&i| self.weights[i] != other.weights[i] || self.obstacle[i] != other.obstacle[i])
            .collect()
    }
}

/// Combine the layers into edge weights.
///
/// An edge `u -> v` is infinite when `v` is a known obstacle, when `v` is a
/// rule cell and `u -> v` was never traversed successfully, or when the
/// confidence mechanism blocks it. Otherwise it costs `1 + cost_multiplier * I(v)`,
/// or exactly 1 when `interference` is `None`. Unknown cells count as free.
pub fn aggregate_graph(
    geo: &GeometricLayer,
    reg: &RegulationLayer,
    conf: &ConfidenceStats,
    interference: Option<&InterferenceLayer>,
    cost_multiplier: f64,
    epoch: u64,
) -> Result<AggregatedGraph, LayerError> {
    let (width, height) = (geo.width(), geo.height());
    if let Some(il) = interference {
        if (il.width(), il.height()) != (width, height) {
            return Err(LayerError::DimensionMismatch { expected: (width, height), got: (il.width(), il.height()) });
        }
    }
    let mut g = AggregatedGraph {
        width,
        height,
        weights: vec![[Cost::Infinite; 4]; width * height],
        obstacle: vec![false; width * height],
        epoch,
    };
    for i in 0..g.len() {
        let u = g.cell_at(i);
        g.obstacle[i] = geo.is_known_obstacle(u);
        for d in Direction::ALL {
            let v = u.step(d);
            if !g.in_bounds(v) {
                continue;
            }
            let blocked =
                geo.is_known_obstacle(v) || (geo.is_rule_cell(v) && !reg.has_edge(u, v)) || conf.is_blocked((u, v));
            g.weights[i][d.slot()] = if blocked {
                Cost::Infinite
            } else {
                match interference {
                    Some(il) => Cost::Finite(1.0 + cost_multiplier * il.at(v)),
                    None => Cost::ONE,
                }
            };
        }
    }
    Ok(g)
}
