//! Leader election by reachable-neighbour count, load-balanced follower
//! assignment, and the Euclidean and visibility baseline groupers.

use crate::cost::Cost;
use crate::grid::{line_of_sight, Cell, GridMap};
use crate::reachability::ReachResult;
use crate::world::EntityId;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Iakrc,
    Euclid,
    Vision,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Iakrc, Algorithm::Euclid, Algorithm::Vision];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Iakrc => "iakrc",
            Algorithm::Euclid => "euclid",
            Algorithm::Vision => "vision",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "iakrc" | "ia-krc" => Ok(Algorithm::Iakrc),
            "euclid" => Ok(Algorithm::Euclid),
            "vision" => Ok(Algorithm::Vision),
            other => Err(format!("unknown algorithm `{other}` (expected iakrc, euclid or vision)")),
        }
    }
}

/// Which end of the leader-follower pair sources the reachability query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Affiliation {
    /// Follower must lie in the leader's reachable set.
    #[default]
    LeaderSourced,
    /// Leader must lie in the follower's reachable set.
    FollowerSourced,
}

impl FromStr for Affiliation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "leader" | "leader-sourced" => Ok(Affiliation::LeaderSourced),
            "follower" | "follower-sourced" => Ok(Affiliation::FollowerSourced),
            other => Err(format!("unknown direction `{other}` (expected leader or follower)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Agent {
    pub id: EntityId,
    pub pos: Cell,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupAssignment {
    pub algorithm: Algorithm,
    pub leaders: Vec<EntityId>,
    /// Leader id to members, leader first, then followers in join order.
    pub groups: BTreeMap<EntityId, Vec<EntityId>>,
    pub unassigned: Vec<EntityId>,
    pub neighbor_counts: BTreeMap<EntityId, usize>,
    pub expansions_total: u64,
    pub expansions_per_agent: f64,
}

impl GroupAssignment {
    pub fn group_of(&self, id: EntityId) -> Option<EntityId> {
        self.groups.iter().find(|(_, m)| m.contains(&id)).map(|(l, _)| *l)
    }

    /// Hex SHA-256 over leaders, groups and unassigned.
    pub fn digest(&self) -> String {
        let canon = serde_json::to_vec(&(&self.leaders, &self.groups, &self.unassigned)).expect("ids serialize");
        hex::encode(Sha256::digest(&canon))
    }

    fn empty(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            leaders: Vec::new(),
            groups: BTreeMap::new(),
            unassigned: Vec::new(),
            neighbor_counts: BTreeMap::new(),
            expansions_total: 0,
            expansions_per_agent: 0.0,
        }
    }
}

/// `N_i = |{j != i : related(i, j)}|` for every agent.
pub fn neighbor_counts(n: usize, related: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    (0..n).map(|i| (0..n).filter(|&j| j != i && related(i, j)).count()).collect()
}

/// Reachable-neighbour counts from one bounded result per agent, `reach[i]` sourced at `agents[i]`.
pub fn neighbor_count<R: Borrow<ReachResult>>(reach: &[R], agents: &[Agent], k: f64) -> Vec<usize> {
    neighbor_counts(agents.len(), |i, j| reach[i].borrow().dist(agents[j].pos).within(k))
}

/// Top-`m` by count, ties broken by ascending id. Returned in rank order.
pub fn elect_leaders(counts: &[(EntityId, usize)], m: usize) -> Vec<EntityId> {
    let mut ranked = counts.to_vec();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(m).map(|(id, _)| id).collect()
}

/// Sequential greedy assignment. Followers are taken in ascending id order and
/// join the smallest candidate group (ties to the lowest leader id); leaders
/// count toward their own group size. `affiliated(l, f)` indexes `agents`.
pub fn assign_followers(
    agents: &[Agent],
    leaders: &[EntityId],
    affiliated: impl Fn(usize, usize) -> bool,
) -> (BTreeMap<EntityId, Vec<EntityId>>, Vec<EntityId>) {
    let index_of: BTreeMap<EntityId, usize> = agents.iter().enumerate().map(|(i, a)| (a.id, i)).collect();
    let mut groups: BTreeMap<EntityId, Vec<EntityId>> = leaders.iter().map(|&l| (l, vec![l])).collect();
    let mut followers: Vec<usize> = (0..agents.len()).filter(|&i| !groups.contains_key(&agents[i].id)).collect();
    followers.sort_by_key(|&i| agents[i].id);
    let mut unassigned = Vec::new();
    for f in followers {
        let best = groups
            .iter()
            .filter(|(l, _)| affiliated(index_of[*l], f))
            .min_by(|a, b| a.1.len().cmp(&b.1.len()).then(a.0.cmp(b.0)))
            .map(|(l, _)| *l);
        match best {
            Some(l) => groups.get_mut(&l).expect("candidate is a leader").push(agents[f].id),
            None => unassigned.push(agents[f].id),
        }
    }
    (groups, unassigned)
}

fn finish(
    algorithm: Algorithm,
    agents: &[Agent],
    counts: Vec<usize>,
    leaders: Vec<EntityId>,
    affiliated: impl Fn(usize, usize) -> bool,
    expansions_total: u64,
) -> GroupAssignment {
    if agents.is_empty() {
        return GroupAssignment::empty(algorithm);
    }
    let (groups, unassigned) = assign_followers(agents, &leaders, affiliated);
    GroupAssignment {
        algorithm,
        leaders,
        groups,
        unassigned,
        neighbor_counts: agents.iter().map(|a| a.id).zip(counts).collect(),
        expansions_total,
        expansions_per_agent: expansions_total as f64 / agents.len() as f64,
    }
}

/// Interference-aware grouping; `reach[i]` is the horizon-`k` result sourced at `agents[i]`.
pub fn group_iakrc<R: Borrow<ReachResult>>(
    agents: &[Agent],
    reach: &[R],
    m: usize,
    k: f64,
    direction: Affiliation,
) -> GroupAssignment {
    assert_eq!(agents.len(), reach.len(), "one reach result per agent");
    let within = |i: usize, j: usize| reach[i].borrow().dist(agents[j].pos).within(k);
    let counts = neighbor_count(reach, agents, k);
    let pairs: Vec<(EntityId, usize)> = agents.iter().map(|a| a.id).zip(counts.iter().copied()).collect();
    let leaders = elect_leaders(&pairs, m);
    let expansions = reach.iter().map(|r| r.borrow().expansions).sum();
    match direction {
        Affiliation::LeaderSourced => finish(Algorithm::Iakrc, agents, counts, leaders, within, expansions),
        Affiliation::FollowerSourced => {
            finish(Algorithm::Iakrc, agents, counts, leaders, |l, f| within(f, l), expansions)
        }
    }
}

/// Same election and assignment with Euclidean distance `<= radius` as the relation.
pub fn group_euclid(agents: &[Agent], m: usize, radius: f64) -> GroupAssignment {
    let near = |i: usize, j: usize| agents[i].pos.euclidean(agents[j].pos) <= radius;
    let counts = neighbor_counts(agents.len(), near);
    let pairs: Vec<(EntityId, usize)> = agents.iter().map(|a| a.id).zip(counts.iter().copied()).collect();
    let leaders = elect_leaders(&pairs, m);
    finish(Algorithm::Euclid, agents, counts, leaders, near, 0)
}

/// Mutual line of sight within `sight_range`; leaders drawn uniformly at random.
pub fn group_vision(
    agents: &[Agent],
    map: &GridMap,
    m: usize,
    sight_range: f64,
    rng: &mut impl Rng,
) -> GroupAssignment {
    let n = agents.len();
    let mut visible = vec![false; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (agents[i].pos, agents[j].pos);
            let v = a.euclidean(b) <= sight_range && line_of_sight(map, a, b).unwrap_or(false);
            visible[i * n + j] = v;
            visible[j * n + i] = v;
        }
    }
    let sees = |i: usize, j: usize| visible[i * n + j];
    let counts = neighbor_counts(n, sees);
    let mut ids: Vec<EntityId> = agents.iter().map(|a| a.id).collect();
    ids.sort();
    let leaders: Vec<EntityId> = ids.choose_multiple(rng, m.min(n)).copied().collect();
    finish(Algorithm::Vision, agents, counts, leaders, sees, 0)
}

/// Pairwise `d_IA` between agents, truncated: entries beyond the horizon of
/// the underlying bounded searches read `Infinite`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceTable {
    pub ids: Vec<EntityId>,
    d: Vec<Vec<Cost>>,
}

impl DistanceTable {
    pub fn from_reach<R: Borrow<ReachResult>>(agents: &[Agent], reach: &[R]) -> Self {
        let d = reach.iter().map(|r| agents.iter().map(|a| r.borrow().dist(a.pos)).collect()).collect();
        Self { ids: agents.iter().map(|a| a.id).collect(), d }
    }

    pub fn from_fn(ids: Vec<EntityId>, f: impl Fn(usize, usize) -> Cost) -> Self {
        let n = ids.len();
        let d = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        Self { ids, d }
    }

    fn index(&self, id: EntityId) -> Option<usize> {
        self.ids.iter().position(|x| *x == id)
    }

    pub fn get(&self, a: EntityId, b: EntityId) -> Cost {
        match (self.index(a), self.index(b)) {
            (Some(i), Some(j)) => self.d[i][j],
            _ => Cost::Infinite,
        }
    }
}

/// Undirected intra-group communication graph over alive allies.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CommGraph {
    pub nodes: Vec<EntityId>,
    /// Sorted `(a, b)` pairs with `a < b`.
    pub edges: Vec<(EntityId, EntityId)>,
    /// Member lists per group, leader first.
    pub groups: Vec<Vec<EntityId>>,
}

impl CommGraph {
    pub fn degree(&self, id: EntityId) -> usize {
        self.edges.iter().filter(|(a, b)| *a == id || *b == id).count()
    }

    pub fn has_edge(&self, a: EntityId, b: EntityId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&key).is_ok()
    }

    /// Dense 0/1 adjacency restricted to `members`, in the given order.
    pub fn adjacency(&self, members: &[EntityId]) -> Vec<Vec<f64>> {
        members
            .iter()
            .map(|&a| members.iter().map(|&b| if a != b && self.has_edge(a, b) { 1.0 } else { 0.0 }).collect())
            .collect()
    }
}

/// Edge `(i, j)` iff both sit in the same group and `min(d(i,j), d(j,i)) <= k`.
/// Unassigned agents become isolated nodes.
pub fn build_comm_graph(assignment: &GroupAssignment, table: &DistanceTable, k: f64) -> CommGraph {
    let mut nodes: Vec<EntityId> = assignment.groups.values().flatten().copied().collect();
    nodes.extend(assignment.unassigned.iter().copied());
    nodes.sort();
    let mut edges = Vec::new();
    for members in assignment.groups.values() {
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                let d = if table.get(a, b) < table.get(b, a) { table.get(a, b) } else { table.get(b, a) };
                if d.within(k) {
                    edges.push(if a < b { (a, b) } else { (b, a) });
                }
            }
        }
    }
    edges.sort();
    CommGraph { nodes, edges, groups: assignment.groups.values().cloned().collect() }
}
