//! Scripted policies: `advance`, `patrol`, `hold`.

use super::{in_attack_range, Action, Policy, Team, WorldState};
use crate::grid::{Cell, Direction, GridMap};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Walk toward the nearest living opponent; attack when one is in range.
    Advance,
    /// Cycle through the entity's waypoints; attack opportunistically.
    Patrol,
    /// Stay put; attack when an opponent is in range.
    Hold,
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "advance" => Ok(PolicyKind::Advance),
            "patrol" => Ok(PolicyKind::Patrol),
            "hold" | "stay" => Ok(PolicyKind::Hold),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Advance => "advance",
            PolicyKind::Patrol => "patrol",
            PolicyKind::Hold => "hold",
        })
    }
}

/// Per-team policy overrides; `None` keeps each entity's scenario policy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamPolicies {
    pub ally: Option<PolicyKind>,
    pub enemy: Option<PolicyKind>,
}

impl TeamPolicies {
    fn for_team(&self, team: Team) -> Option<PolicyKind> {
        match team {
            Team::Ally => self.ally,
            Team::Enemy => self.enemy,
        }
    }
}

/// Multi-source BFS step counts over non-obstacle cells. Doors count as passable.
pub fn distance_field(map: &GridMap, sources: &[Cell]) -> Vec<Option<u32>> {
    let mut dist = vec![None; map.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if let Some(i) = map.index(s) {
            if dist[i].is_none() && map.is_passable(s) {
                dist[i] = Some(0);
                queue.push_back(s);
            }
        }
    }
    while let Some(c) = queue.pop_front() {
        let d = dist[map.index(c).unwrap()].unwrap();
        for (_, n) in map.neighbors4(c) {
            let ni = map.index(n).unwrap();
            if dist[ni].is_none() && map.is_passable(n) {
                dist[ni] = Some(d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

fn downhill(map: &GridMap, field: &[Option<u32>], pos: Cell, occupied: &[bool]) -> Action {
    let Some(here) = map.index(pos).and_then(|i| field[i]) else {
        return Action::Stay;
    };
    let mut best: Option<(bool, u32, Direction)> = None;
    for (dir, n) in map.neighbors4(pos) {
        let ni = map.index(n).unwrap();
        let Some(v) = field[ni] else { continue };
        if v >= here {
            continue;
        }
        // Prefer free cells, then lower field value, then direction order.
        let key = (occupied[ni], v, dir);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
    }
    best.map_or(Action::Stay, |(_, _, d)| Action::Move(d))
}

/// Choose actions for every alive entity (ascending id) from the current snapshot.
/// Patrol waypoint indices advance here.
pub(super) fn decide_all(world: &mut WorldState, overrides: &TeamPolicies) -> Vec<(usize, Action)> {
    let map = &world.map;
    let mut occupied = vec![false; map.len()];
    for e in world.entities.iter().filter(|e| e.alive) {
        occupied[map.index(e.position).unwrap()] = true;
    }
    let opponents = |team: Team| -> Vec<Cell> {
        world.entities.iter().filter(|e| e.alive && e.team == team.opponent()).map(|e| e.position).collect()
    };
    let mut team_fields: HashMap<Team, Vec<Option<u32>>> = HashMap::new();
    let mut waypoint_fields: HashMap<Cell, Vec<Option<u32>>> = HashMap::new();
    let mut actions = Vec::new();
    let mut patrol_updates = Vec::new();

    for (i, e) in world.entities.iter().enumerate() {
        if !e.alive {
            continue;
        }
        let kind = overrides.for_team(e.team).unwrap_or_else(|| e.policy.kind());

        // Nearest attackable opponent: Chebyshev, then squared Euclidean, then id.
        let target = world
            .entities
            .iter()
            .filter(|o| o.alive && o.team != e.team && in_attack_range(map, e.position, o.position))
            .min_by_key(|o| {
                let dx = o.position.x - e.position.x;
                let dy = o.position.y - e.position.y;
                (e.position.chebyshev(o.position), dx * dx + dy * dy, o.id)
            });
        if let Some(t) = target {
            actions.push((i, Action::Attack(t.id)));
            continue;
        }

        let action = match kind {
            PolicyKind::Hold => Action::Stay,
            PolicyKind::Advance => {
                let field = team_fields.entry(e.team).or_insert_with(|| distance_field(map, &opponents(e.team)));
                downhill(map, field, e.position, &occupied)
            }
            PolicyKind::Patrol => match &e.policy {
                Policy::Patrol { waypoints, next } if !waypoints.is_empty() => {
                    let mut idx = *next % waypoints.len();
                    if waypoints[idx] == e.position {
                        idx = (idx + 1) % waypoints.len();
                    }
                    patrol_updates.push((i, idx));
                    let goal = waypoints[idx];
                    let field = waypoint_fields.entry(goal).or_insert_with(|| distance_field(map, &[goal]));
                    downhill(map, field, e.position, &occupied)
                }
                _ => Action::Stay,
            },
        };
        actions.push((i, action));
    }

    for (i, idx) in patrol_updates {
        if let Policy::Patrol { next, .. } = &mut world.entities[i].policy {
            *next = idx;
        }
    }
    actions
}
