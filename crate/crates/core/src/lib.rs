//! Interference-aware K-step reachable communication on grid worlds.
//!
//! The pipeline observes the world into layered maps, aggregates them into a
//! weighted digraph, runs bounded Dijkstra per agent, elects leaders by
//! reachable-neighbour count, assigns followers, and measures the resulting
//! communication graphs.

pub mod cost;
pub mod grid;
pub mod interference;
pub mod maplayers;
pub mod params;
pub mod rng;
pub mod world;

pub use cost::Cost;
pub use grid::{Cell, CellKind, Direction, GridMap};
pub mod bench;
pub mod grouping;
pub mod metrics;
pub mod pipeline;
pub mod reachability;
