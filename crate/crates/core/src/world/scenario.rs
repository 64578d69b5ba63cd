//! Scenario file reader.
//!
//! ```text
//! ; comment
//! k=9
//! leaders=3
//! seed=7
//! door A period=4 open=2..4
//! ally 1,1 advance
//! enemy 8,1 patrol 8,1 8,6
//! cost_multiplier=1.5
//! ..........
//! ...#A#....
//! ```
//!
//! Header lines come first; the map block starts at the first line made only
//! of `.`, `#` and `A`-`Z`.

use super::{DoorRule, EntityId, EntityState, Policy, PolicyKind, Team, WorldState};
use crate::grid::{Cell, CellKind, GridMap};
use crate::params::{ParamError, Params};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Param { line: usize, source: ParamError },
    #[error("scenario has no map block")]
    MissingMap,
    #[error("line {line}: map row has width {got}, expected {expected}")]
    RaggedMap { line: usize, got: usize, expected: usize },
    #[error("line {line}: entity {id} at {cell} is out of bounds")]
    OutOfBounds { line: usize, id: EntityId, cell: Cell },
    #[error("line {line}: entity {id} placed on obstacle cell {cell}")]
    EntityOnObstacle { line: usize, id: EntityId, cell: Cell },
    #[error("line {line}: duplicate entity id {id}")]
    DuplicateId { line: usize, id: EntityId },
    #[error("line {line}: cell {cell} already holds entity {other}")]
    CellOccupied { line: usize, cell: Cell, other: EntityId },
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub world: WorldState,
    pub params: Params,
}

struct PendingEntity {
    line: usize,
    id: EntityId,
    team: Team,
    position: Cell,
    policy: Policy,
}

fn is_map_row(line: &str) -> bool {
    !line.is_empty() && line.chars().all(|c| c == '.' || c == '#' || c.is_ascii_uppercase())
}

fn parse_cell(tok: &str, line: usize) -> Result<Cell, ScenarioError> {
    let err = || ScenarioError::Parse { line, message: format!("expected `x,y`, got `{tok}`") };
    let (x, y) = tok.split_once(',').ok_or_else(err)?;
    Ok(Cell::new(x.trim().parse().map_err(|_| err())?, y.trim().parse().map_err(|_| err())?))
}

fn parse_door(rest: &[&str], line: usize) -> Result<DoorRule, ScenarioError> {
    let perr = |message: String| ScenarioError::Parse { line, message };
    let mut id_chars = rest.first().ok_or_else(|| perr("door needs an id".into()))?.chars();
    let door_id = match (id_chars.next(), id_chars.next()) {
        (Some(c), None) if c.is_ascii_uppercase() => c,
        _ => return Err(perr(format!("door id must be one letter A-Z, got `{}`", rest[0]))),
    };
    let mut period = None;
    let mut open = None;
    for tok in &rest[1..] {
        match tok.split_once('=') {
            Some(("period", v)) => {
                period = Some(v.parse::<u64>().map_err(|_| perr(format!("bad period `{v}`")))?);
            }
            Some(("open", v)) => {
                let (a, b) = v.split_once("..").ok_or_else(|| perr(format!("open must be `a..b`, got `{v}`")))?;
                let a = a.parse::<u64>().map_err(|_| perr(format!("bad open start `{a}`")))?;
                let b = b.parse::<u64>().map_err(|_| perr(format!("bad open end `{b}`")))?;
                open = Some((a, b));
            }
            _ => return Err(perr(format!("unexpected door field `{tok}`"))),
        }
    }
    let period = period.ok_or_else(|| perr("door needs period=<p>".into()))?;
    let (open_start, open_end) = open.ok_or_else(|| perr("door needs open=<a>..<b>".into()))?;
    if period == 0 || open_start >= open_end || open_end > period {
        return Err(perr(format!("door {door_id}: need period >= 1 and 0 <= a < b <= period")));
    }
    Ok(DoorRule { door_id, period, open_start, open_end })
}

fn parse_entity(team: Team, rest: &[&str], line: usize, default_id: u32) -> Result<PendingEntity, ScenarioError> {
    let perr = |message: String| ScenarioError::Parse { line, message };
    let position = parse_cell(rest.first().ok_or_else(|| perr("entity needs a position `x,y`".into()))?, line)?;
    let mut id = EntityId(default_id);
    let mut kind = PolicyKind::Advance;
    let mut waypoints = Vec::new();
    for tok in &rest[1..] {
        if let Some(v) = tok.strip_prefix("id=") {
            id = EntityId(v.parse().map_err(|_| perr(format!("bad id `{v}`")))?);
        } else if tok.contains(',') {
            waypoints.push(parse_cell(tok, line)?);
        } else {
            kind = tok.parse().map_err(perr)?;
        }
    }
    let policy = match kind {
        PolicyKind::Advance => Policy::Advance,
        PolicyKind::Hold => Policy::Hold,
        PolicyKind::Patrol => Policy::Patrol { waypoints, next: 0 },
    };
    Ok(PendingEntity { line, id, team, position, policy })
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut params = Params::default();
        let mut seed = 0u64;
        let mut doors = BTreeMap::new();
        let mut pending: Vec<PendingEntity> = Vec::new();
        let mut rows: Vec<(usize, &str)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if !rows.is_empty() {
                if trimmed.is_empty() {
                    continue;
                }
                if !is_map_row(trimmed) {
                    return Err(ScenarioError::Parse { line, message: "header line after map block".into() });
                }
                rows.push((line, trimmed));
                continue;
            }
            if trimmed.is_empty() || trimmed.starts_with(';') || trimmed.starts_with("//") {
                continue;
            }
            if is_map_row(trimmed) {
                rows.push((line, trimmed));
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            match tokens[0] {
                "door" => {
                    let rule = parse_door(&tokens[1..], line)?;
                    doors.insert(rule.door_id, rule);
                }
                "ally" | "enemy" => {
                    let team = if tokens[0] == "ally" { Team::Ally } else { Team::Enemy };
                    pending.push(parse_entity(team, &tokens[1..], line, pending.len() as u32)?);
                }
                _ => {
                    let (k, v) = trimmed.split_once('=').ok_or_else(|| ScenarioError::Parse {
                        line,
                        message: format!("unrecognized header line `{trimmed}`"),
                    })?;
                    if k.trim() == "seed" {
                        seed = v
                            .trim()
                            .parse()
                            .map_err(|_| ScenarioError::Parse { line, message: format!("bad seed `{}`", v.trim()) })?;
                    } else {
                        params.set(k, v).map_err(|source| ScenarioError::Param { line, source })?;
                    }
                }
            }
        }

        let Some(&(_, first)) = rows.first() else {
            return Err(ScenarioError::MissingMap);
        };
        let width = first.chars().count();
        for &(line, row) in &rows {
            if row.chars().count() != width {
                return Err(ScenarioError::RaggedMap { line, got: row.chars().count(), expected: width });
            }
        }
        let row_strs: Vec<&str> = rows.iter().map(|(_, r)| *r).collect();
        let map = GridMap::from_ascii(&row_strs).expect("rows validated above");

        let mut ids = BTreeSet::new();
        let mut cells: BTreeMap<Cell, EntityId> = BTreeMap::new();
        let mut entities = Vec::with_capacity(pending.len());
        for p in pending {
            if !ids.insert(p.id) {
                return Err(ScenarioError::DuplicateId { line: p.line, id: p.id });
            }
            match map.kind(p.position) {
                None => return Err(ScenarioError::OutOfBounds { line: p.line, id: p.id, cell: p.position }),
                Some(CellKind::Obstacle) => {
                    return Err(ScenarioError::EntityOnObstacle { line: p.line, id: p.id, cell: p.position })
                }
                _ => {}
            }
            if let Policy::Patrol { waypoints, .. } = &p.policy {
                if let Some(w) = waypoints.iter().find(|w| !map.in_bounds(**w)) {
                    return Err(ScenarioError::Parse { line: p.line, message: format!("waypoint {w} out of bounds") });
                }
            }
            if let Some(&other) = cells.get(&p.position) {
                return Err(ScenarioError::CellOccupied { line: p.line, cell: p.position, other });
            }
            cells.insert(p.position, p.id);
            let mut e = EntityState::new(p.id, p.team, p.position);
            e.policy = p.policy;
            entities.push(e);
        }

        Ok(Scenario { world: WorldState::new(map, doors, entities, seed), params })
    }
}
