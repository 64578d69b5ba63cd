//! Deterministic grid-world: entities, time-varying doors, scripted policies.

mod policy;
mod scenario;

pub use policy::{distance_field, PolicyKind, TeamPolicies};
pub use scenario::{Scenario, ScenarioError};

use crate::grid::{line_of_sight, Cell, CellKind, Direction, GridMap};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use std::fmt;

/// Maximum retained trajectory length.
pub const TRAJECTORY_CAP: usize = 50;
/// Number of recent positions fed to the intent predictor.
pub const RECENT_POSITIONS: usize = 10;
/// Chebyshev attack range.
pub const ATTACK_RANGE: i32 = 2;
/// Health removed per hit.
pub const ATTACK_DAMAGE: f64 = 0.1;
/// Sliding window (steps) over which attacks count toward `recent_attacks`.
pub const ATTACK_WINDOW: u64 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Ally,
    Enemy,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Ally => Team::Enemy,
            Team::Enemy => Team::Ally,
        }
    }
}

/// Opening schedule of one door id: open at step `t` iff `t mod period` lies in `[open_start, open_end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoorRule {
    pub door_id: char,
    pub period: u64,
    pub open_start: u64,
    pub open_end: u64,
}

impl DoorRule {
    pub fn is_open(&self, step: u64) -> bool {
        let phase = step % self.period;
        phase >= self.open_start && phase < self.open_end
    }
}

/// Per-entity scripted behaviour plus its mutable policy state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    Advance,
    Patrol { waypoints: Vec<Cell>, next: usize },
    Hold,
}

impl Policy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Advance => PolicyKind::Advance,
            Policy::Patrol { .. } => PolicyKind::Patrol,
            Policy::Hold => PolicyKind::Hold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntityState {
    pub id: EntityId,
    pub team: Team,
    pub position: Cell,
    pub health: f64,
    pub alive: bool,
    pub policy: Policy,
    /// Positions after each executed step, newest last, at most `TRAJECTORY_CAP`.
    pub trajectory: VecDeque<Cell>,
    /// Steps at which this entity landed an attack, pruned to the last `ATTACK_WINDOW` steps.
    pub attack_log: VecDeque<u64>,
}

impl EntityState {
    pub fn new(id: EntityId, team: Team, position: Cell) -> Self {
        Self {
            id,
            team,
            position,
            health: 1.0,
            alive: true,
            policy: Policy::Advance,
            trajectory: VecDeque::new(),
            attack_log: VecDeque::new(),
        }
    }

    pub fn recent_attacks(&self) -> usize {
        self.attack_log.len()
    }

    pub fn push_position(&mut self, c: Cell) {
        if self.trajectory.len() == TRAJECTORY_CAP {
            self.trajectory.pop_front();
        }
        self.trajectory.push_back(c);
    }

    /// The 10 most recent positions, oldest first, front-padded with the
    /// current position when the history is shorter.
    pub fn last10(&self) -> [Cell; RECENT_POSITIONS] {
        let mut out = [self.position; RECENT_POSITIONS];
        let n = self.trajectory.len().min(RECENT_POSITIONS);
        let skip = self.trajectory.len() - n;
        for (slot, c) in out[RECENT_POSITIONS - n..].iter_mut().zip(self.trajectory.iter().skip(skip)) {
            *slot = *c;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Move(Direction),
    Stay,
    Attack(EntityId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Moved,
    Stayed,
    /// Target cell is out of bounds or an obstacle.
    Blocked,
    ClosedDoor,
    /// Target cell held by another entity at resolution time.
    Occupied,
}

impl Outcome {
    pub fn success(self) -> bool {
        matches!(self, Outcome::Moved | Outcome::Stayed)
    }
}

/// One `(agent, t, s_t, a_t, s_{t+1}, success)` record.
///
/// `to` is the cell the action aimed at; for failed moves the agent
/// actually remains at `from`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub agent: EntityId,
    pub step: u64,
    pub from: Cell,
    pub action: Action,
    pub to: Cell,
    pub outcome: Outcome,
}

impl Transition {
    pub fn success(&self) -> bool {
        self.outcome.success()
    }

    pub fn next_state(&self) -> Cell {
        if self.outcome == Outcome::Moved {
            self.to
        } else {
            self.from
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    /// Ally transitions, in id order.
    pub transitions: Vec<Transition>,
    /// `(entity, displacement)` for every enemy alive before the step.
    pub enemy_moves: Vec<(EntityId, (i32, i32))>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub map: GridMap,
    pub door_rules: BTreeMap<char, DoorRule>,
    /// Sorted by id.
    pub entities: Vec<EntityState>,
    pub step: u64,
    pub rng_seed: u64,
}

impl WorldState {
    pub fn new(
        map: GridMap,
        door_rules: BTreeMap<char, DoorRule>,
        mut entities: Vec<EntityState>,
        rng_seed: u64,
    ) -> Self {
        entities.sort_by_key(|e| e.id);
        Self { map, door_rules, entities, step: 0, rng_seed }
    }

    pub fn entity(&self, id: EntityId) -> Option<&EntityState> {
        self.entities.binary_search_by_key(&id, |e| e.id).ok().map(|i| &self.entities[i])
    }

    pub fn alive(&self, team: Team) -> impl Iterator<Item = &EntityState> + '_ {
        self.entities.iter().filter(move |e| e.alive && e.team == team)
    }

    pub fn alive_count(&self, team: Team) -> usize {
        self.alive(team).count()
    }

    /// Door cells without a rule are always open.
    pub fn door_open(&self, door_id: char, step: u64) -> bool {
        self.door_rules.get(&door_id).is_none_or(|r| r.is_open(step))
    }

    /// Whether an entity may enter `c` at `step`, ignoring occupancy.
    pub fn enterable(&self, c: Cell, step: u64) -> Result<(), Outcome> {
        match self.map.kind(c) {
            None | Some(CellKind::Obstacle) => Err(Outcome::Blocked),
            Some(CellKind::Door(id)) if !self.door_open(id, step) => Err(Outcome::ClosedDoor),
            _ => Ok(()),
        }
    }

    /// Advance one timestep. Actions are chosen from the pre-step snapshot and
    /// resolved sequentially in ascending id order.
    pub fn step_world(&mut self, policies: &TeamPolicies) -> StepReport {
        let t = self.step;
        let actions = policy::decide_all(self, policies);

        let mut occupancy: Vec<Option<usize>> = vec![None; self.map.len()];
        for (i, e) in self.entities.iter().enumerate() {
            if e.alive {
                if let Some(idx) = self.map.index(e.position) {
                    occupancy[idx] = Some(i);
                }
            }
        }
        let pre_positions: Vec<Cell> = self.entities.iter().map(|e| e.position).collect();
        let was_alive: Vec<bool> = self.entities.iter().map(|e| e.alive).collect();

        let mut report = StepReport::default();
        for (i, action) in actions {
            if !self.entities[i].alive {
                continue;
            }
            let from = self.entities[i].position;
            let (to, outcome) = match action {
                Action::Stay => (from, Outcome::Stayed),
                Action::Move(dir) => {
                    let target = from.step(dir);
                    let outcome = match self.enterable(target, t) {
                        Err(o) => o,
                        Ok(()) => {
                            let ti = self.map.index(target).expect("enterable cells are in bounds");
                            if occupancy[ti].is_some() {
                                Outcome::Occupied
                            } else {
                                let fi = self.map.index(from).expect("entities stay in bounds");
                                occupancy[fi] = None;
                                occupancy[ti] = Some(i);
                                self.entities[i].position = target;
                                Outcome::Moved
                            }
                        }
                    };
                    (target, outcome)
                }
                Action::Attack(target_id) => {
                    self.resolve_attack(i, target_id, t, &mut occupancy);
                    (from, Outcome::Stayed)
                }
            };
            if self.entities[i].team == Team::Ally {
                report.transitions.push(Transition { agent: self.entities[i].id, step: t, from, action, to, outcome });
            }
        }

        for (i, e) in self.entities.iter_mut().enumerate() {
            if e.team == Team::Enemy && was_alive[i] {
                let p = pre_positions[i];
                report.enemy_moves.push((e.id, (e.position.x - p.x, e.position.y - p.y)));
            }
            if e.alive {
                e.push_position(e.position);
            }
            while e.attack_log.front().is_some_and(|&s| s + ATTACK_WINDOW <= t + 1) {
                e.attack_log.pop_front();
            }
        }
        self.step += 1;
        report
    }

    fn resolve_attack(&mut self, attacker: usize, target_id: EntityId, t: u64, occupancy: &mut [Option<usize>]) {
        let Ok(ti) = self.entities.binary_search_by_key(&target_id, |e| e.id) else {
            return;
        };
        let a = &self.entities[attacker];
        let target = &self.entities[ti];
        if !target.alive || target.team == a.team || !in_attack_range(&self.map, a.position, target.position) {
            return;
        }
        let target = &mut self.entities[ti];
        target.health = (target.health - ATTACK_DAMAGE).max(0.0);
        if target.health <= 1e-9 {
            target.health = 0.0;
            target.alive = false;
            if let Some(idx) = self.map.index(target.position) {
                occupancy[idx] = None;
            }
        }
        self.entities[attacker].attack_log.push_back(t);
    }
}

pub(crate) fn in_attack_range(map: &GridMap, a: Cell, b: Cell) -> bool {
    a.chebyshev(b) <= ATTACK_RANGE && line_of_sight(map, a, b).unwrap_or(false)
}
