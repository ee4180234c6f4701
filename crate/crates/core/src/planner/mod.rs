//! Best-first search over implicit tiled graphs with collision checking,
//! accessibility from arbitrary starts and departability to arbitrary goals.

pub mod grid;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

pub use grid::{MapError, MapMeta, OccupancyGrid};

use crate::graph::PrimitiveGraph;
use crate::state::State;
use crate::systems::{sample_trajectory, SteerError, SystemKind, Trajectory};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("start position is in collision")]
    StartInCollision,
    #[error("goal position is in collision")]
    GoalInCollision,
    #[error("plan did not succeed: {0:?}")]
    PlanFailed(PlanStatus),
    #[error(transparent)]
    Steer(#[from] SteerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PlanStatus {
    Success,
    NoPath,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Heuristic {
    Zero,
    /// Free-space steering cost to the goal; a lower bound on any
    /// obstacle-respecting completion, hence admissible.
    FreeSpaceSteer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Departability {
    /// Steer every expanded node to the goal and terminate when the hop is
    /// cheap enough and collision-free.
    SteerCheck,
    /// Screen nodes with a cheap certified upper bound on the two-way
    /// steering cost before running the real steer.
    ReachableSetBound,
}

#[derive(Debug, Clone)]
pub struct PlanQuery {
    pub start: State,
    pub goal: State,
    /// Departability radius; a node terminates the search when the hop to
    /// the goal costs no more than this.
    pub goal_cost_tolerance: f64,
    /// Cost spacing of collision-check samples along a trajectory.
    pub collision_resolution: f64,
    pub max_collision_checks: usize,
    pub heuristic: Heuristic,
    pub departability: Departability,
    /// Keep the world states of expanded nodes in the result (for plots).
    pub record_expansions: bool,
}

impl PlanQuery {
    /// Defaults from the graph's dispersion: tolerance `d`, collision
    /// resolution `d/10`, budget 100k checks, zero heuristic.
    pub fn new(start: State, goal: State, dispersion: f64) -> Self {
        Self {
            start,
            goal,
            goal_cost_tolerance: dispersion,
            collision_resolution: dispersion / 10.0,
            max_collision_checks: 100_000,
            heuristic: Heuristic::Zero,
            departability: Departability::SteerCheck,
            record_expansions: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    /// World states along the result: start, intermediate nodes, goal.
    pub node_sequence: Vec<State>,
    /// One trajectory per hop; consecutive endpoints chain exactly.
    pub stitched: Vec<Trajectory>,
    pub total_cost: Option<f64>,
    pub collision_checks: usize,
    pub expansions: usize,
    pub open_list_peak: usize,
    /// World states of expanded nodes, recorded only on request.
    pub expanded_states: Vec<State>,
}

/// Free-space test of a whole trajectory: true iff every sampled position
/// lies in a free cell. One call means one collision check.
pub fn collision_check(trajectory: &Trajectory, grid: &OccupancyGrid, resolution: f64) -> bool {
    sample_trajectory(trajectory, resolution)
        .iter()
        .all(|s| !grid.occupied_at(s.get(0), s.get(1)))
}

/// A candidate hop into the search space: successor key, its world state,
/// the hop cost and the connecting world-frame trajectory.
#[derive(Debug, Clone)]
pub struct Candidate<K> {
    pub key: K,
    pub state: State,
    pub cost: f64,
    pub trajectory: Trajectory,
}

/// The search-facing view of a motion primitive structure. The planner is
/// generic over this, so primitive graphs and the input-sampling baseline
/// run through identical code.
pub trait ImplicitSpace {
    type Key: Clone + Eq + Hash + Ord + std::fmt::Debug;

    fn system(&self) -> &SystemKind;

    /// Hops connecting an arbitrary start state into the space.
    fn entry_candidates(&self, start: &State) -> Result<Vec<Candidate<Self::Key>>, SteerError>;

    /// Successor hops of an interior node.
    fn successors(&self, key: &Self::Key, state: &State) -> Result<Vec<Candidate<Self::Key>>, SteerError>;
}

/// Node identity during search: the synthetic start node or a space key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum SearchKey<K> {
    Start,
    Node(K),
}

struct OpenEntry<K> {
    f: f64,
    g: f64,
    key: SearchKey<K>,
}

impl<K: Ord> PartialEq for OpenEntry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<K: Ord> Eq for OpenEntry<K> {}

impl<K: Ord> PartialOrd for OpenEntry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K: Ord> Ord for OpenEntry<K> {
    // BinaryHeap is a max-heap; reverse so the smallest (f, g, key) pops
    // first. Ties: lower cost-so-far, then the key ordering.
    fn cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| self.key.cmp(&other.key))
            .reverse()
    }
}

struct CheckBudget {
    used: usize,
    cap: usize,
}

impl CheckBudget {
    /// One collision check against the budget; `None` once the cap is hit.
    fn try_check(&mut self, t: &Trajectory, grid: &OccupancyGrid, resolution: f64) -> Option<bool> {
        if self.used >= self.cap {
            return None;
        }
        self.used += 1;
        Some(collision_check(t, grid, resolution))
    }
}

/// Best-first search from `query.start` to within `goal_cost_tolerance` of
/// `query.goal` over the implicit space, checking every hop against the map.
pub fn plan<S: ImplicitSpace>(
    space: &S,
    grid: &OccupancyGrid,
    query: &PlanQuery,
) -> Result<PlanResult, PlanError> {
    let system = space.system();
    if grid.occupied_at(query.start.get(0), query.start.get(1)) {
        return Err(PlanError::StartInCollision);
    }
    if grid.occupied_at(query.goal.get(0), query.goal.get(1)) {
        return Err(PlanError::GoalInCollision);
    }

    let mut budget = CheckBudget { used: 0, cap: query.max_collision_checks };
    let mut expansions = 0usize;
    let mut peak = 0usize;
    let mut open: BinaryHeap<OpenEntry<S::Key>> = BinaryHeap::new();
    let mut g_best: HashMap<SearchKey<S::Key>, f64> = HashMap::new();
    let mut states: HashMap<SearchKey<S::Key>, State> = HashMap::new();
    let mut parents: HashMap<SearchKey<S::Key>, (SearchKey<S::Key>, Trajectory)> = HashMap::new();
    let mut closed: HashSet<SearchKey<S::Key>> = HashSet::new();
    let mut h_cache: HashMap<SearchKey<S::Key>, f64> = HashMap::new();

    let heuristic = |state: &State, cache: &mut HashMap<SearchKey<S::Key>, f64>, key: &SearchKey<S::Key>| -> Result<f64, SteerError> {
        match query.heuristic {
            Heuristic::Zero => Ok(0.0),
            Heuristic::FreeSpaceSteer => {
                if let Some(&h) = cache.get(key) {
                    return Ok(h);
                }
                let h = system.steer_cost(state, &query.goal)?;
                cache.insert(key.clone(), h);
                Ok(h)
            }
        }
    };

    let h0 = heuristic(&query.start, &mut h_cache, &SearchKey::Start)?;
    g_best.insert(SearchKey::Start, 0.0);
    states.insert(SearchKey::Start, query.start);
    open.push(OpenEntry { f: h0, g: 0.0, key: SearchKey::Start });
    peak = peak.max(open.len());

    let mut expanded_states: Vec<State> = Vec::new();
    let failure = |status: PlanStatus,
                   budget: &CheckBudget,
                   expansions: usize,
                   peak: usize,
                   expanded: Vec<State>| PlanResult {
        status,
        node_sequence: Vec::new(),
        stitched: Vec::new(),
        total_cost: None,
        collision_checks: budget.used,
        expansions,
        open_list_peak: peak,
        expanded_states: expanded,
    };

    while let Some(entry) = open.pop() {
        if closed.contains(&entry.key) {
            continue;
        }
        if g_best.get(&entry.key).map_or(true, |&g| entry.g > g) {
            continue; // stale entry superseded by a cheaper one
        }
        closed.insert(entry.key.clone());
        expansions += 1;
        let state = states[&entry.key];
        if query.record_expansions {
            expanded_states.push(state);
        }

        // Departability: can this node finish the query?
        let hop = match query.departability {
            Departability::SteerCheck => {
                let hop = system.steer(&state, &query.goal)?;
                (hop.cost <= query.goal_cost_tolerance).then_some(hop)
            }
            Departability::ReachableSetBound => {
                let fwd = system.cost_upper_bound(&state, &query.goal)?;
                let bwd = system.cost_upper_bound(&query.goal, &state)?;
                if fwd.max(bwd) <= query.goal_cost_tolerance {
                    let hop = system.steer(&state, &query.goal)?;
                    (hop.cost <= query.goal_cost_tolerance).then_some(hop)
                } else {
                    None
                }
            }
        };
        if let Some(hop) = hop {
            match budget.try_check(&hop, grid, query.collision_resolution) {
                None => {
                    return Ok(failure(PlanStatus::BudgetExhausted, &budget, expansions, peak, expanded_states))
                }
                Some(true) => {
                    return Ok(reconstruct(
                        entry.key,
                        hop,
                        &parents,
                        &query.start,
                        budget.used,
                        expansions,
                        peak,
                        expanded_states,
                    ));
                }
                Some(false) => {}
            }
        }

        let candidates = match &entry.key {
            SearchKey::Start => space.entry_candidates(&query.start)?,
            SearchKey::Node(k) => space.successors(k, &state)?,
        };
        for cand in candidates {
            let ckey = SearchKey::Node(cand.key.clone());
            if closed.contains(&ckey) {
                continue;
            }
            let tentative = entry.g + cand.cost;
            if g_best.get(&ckey).map_or(false, |&old| tentative >= old) {
                continue;
            }
            match budget.try_check(&cand.trajectory, grid, query.collision_resolution) {
                None => {
                    return Ok(failure(PlanStatus::BudgetExhausted, &budget, expansions, peak, expanded_states))
                }
                Some(false) => continue,
                Some(true) => {}
            }
            let h = heuristic(&cand.state, &mut h_cache, &ckey)?;
            g_best.insert(ckey.clone(), tentative);
            states.insert(ckey.clone(), cand.state);
            parents.insert(ckey.clone(), (entry.key.clone(), cand.trajectory));
            open.push(OpenEntry { f: tentative + h, g: tentative, key: ckey });
            peak = peak.max(open.len());
        }
    }
    Ok(failure(PlanStatus::NoPath, &budget, expansions, peak, expanded_states))
}

#[allow(clippy::too_many_arguments)]
fn reconstruct<K: Clone + Eq + Hash + Ord + std::fmt::Debug>(
    terminal: SearchKey<K>,
    hop: Trajectory,
    parents: &HashMap<SearchKey<K>, (SearchKey<K>, Trajectory)>,
    start: &State,
    collision_checks: usize,
    expansions: usize,
    open_list_peak: usize,
    expanded_states: Vec<State>,
) -> PlanResult {
    let mut chain = vec![hop];
    let mut key = terminal;
    while let SearchKey::Node(_) = key {
        let (parent, trajectory) = parents[&key].clone();
        chain.push(trajectory);
        key = parent;
    }
    chain.reverse();
    let mut node_sequence = vec![*start];
    for t in &chain {
        node_sequence.push(t.end);
    }
    let total_cost = chain.iter().map(|t| t.cost).sum();
    PlanResult {
        status: PlanStatus::Success,
        node_sequence,
        stitched: chain,
        total_cost: Some(total_cost),
        collision_checks,
        expansions,
        open_list_peak,
        expanded_states,
    }
}

/// Ratio of the planned cost to the free-space steering cost of the query;
/// 1 by convention when start and goal coincide.
pub fn plan_cost_optimality_gap<S: ImplicitSpace>(
    space: &S,
    grid: &OccupancyGrid,
    query: &PlanQuery,
) -> Result<f64, PlanError> {
    let result = plan(space, grid, query)?;
    if result.status != PlanStatus::Success {
        return Err(PlanError::PlanFailed(result.status));
    }
    let denom = space.system().steer_cost(&query.start, &query.goal)?;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok(result.total_cost.expect("success carries a cost") / denom)
}

/// Planner view of a primitive graph: nodes are `(vertex, tile)` pairs,
/// accessibility steers the start into the 3^k tiles around it.
pub struct TiledGraphSpace<'a> {
    graph: &'a PrimitiveGraph,
    adjacency: Vec<Vec<u32>>,
}

impl<'a> TiledGraphSpace<'a> {
    pub fn new(graph: &'a PrimitiveGraph) -> Self {
        assert!(graph.tiling.spatial_dims.len() <= 2, "at most two tiled axes");
        Self { graph, adjacency: graph.adjacency() }
    }

    pub fn graph(&self) -> &PrimitiveGraph {
        self.graph
    }

    fn base_tile(&self, state: &State) -> [i64; 2] {
        let mut tile = [0i64; 2];
        for (slot, (&d, &e)) in self
            .graph
            .tiling
            .spatial_dims
            .iter()
            .zip(&self.graph.tiling.tile_extent)
            .enumerate()
        {
            tile[slot] = (state.get(d) / e).floor() as i64;
        }
        tile
    }
}

impl ImplicitSpace for TiledGraphSpace<'_> {
    type Key = (u32, [i64; 2]);

    fn system(&self) -> &SystemKind {
        &self.graph.system
    }

    fn entry_candidates(&self, start: &State) -> Result<Vec<Candidate<Self::Key>>, SteerError> {
        let k = self.graph.tiling.spatial_dims.len();
        let base = self.base_tile(start);
        let threshold = 2.0 * self.graph.dispersion;
        let mut out = Vec::new();
        let mut neighborhood: Vec<[i64; 2]> = Vec::new();
        if k == 0 {
            neighborhood.push([0, 0]);
        } else {
            for dx in -1..=1i64 {
                if k == 1 {
                    neighborhood.push([base[0] + dx, 0]);
                } else {
                    for dy in -1..=1i64 {
                        neighborhood.push([base[0] + dx, base[1] + dy]);
                    }
                }
            }
        }
        for tile in neighborhood {
            for v in 0..self.graph.vertices.len() as u32 {
                let target = self
                    .graph
                    .node_state(v, &tile[..k])
                    .expect("vertex index in range");
                let trajectory = self.graph.system.steer(start, &target)?;
                if trajectory.cost < threshold {
                    out.push(Candidate {
                        key: (v, tile),
                        state: target,
                        cost: trajectory.cost,
                        trajectory,
                    });
                }
            }
        }
        Ok(out)
    }

    fn successors(&self, key: &Self::Key, _state: &State) -> Result<Vec<Candidate<Self::Key>>, SteerError> {
        let (vertex, tile) = key;
        let k = self.graph.tiling.spatial_dims.len();
        let translation = self.graph.tiling.translation(&tile[..k]);
        let mut out = Vec::with_capacity(self.adjacency[*vertex as usize].len());
        for &ei in &self.adjacency[*vertex as usize] {
            let edge = &self.graph.edges[ei as usize];
            let exp = self.graph.expansion_of(edge, &tile[..k], &translation);
            // Canonical node states at both ends keep stitched
            // trajectories bit-exactly chained across hops.
            let from_state = self.graph.node_state(edge.from, &tile[..k]).expect("in range");
            let to_state = self.graph.node_state(exp.vertex, &exp.tile).expect("in range");
            let mut tile2 = [0i64; 2];
            tile2[..k].copy_from_slice(&exp.tile);
            let trajectory = exp.trajectory.with_endpoints(from_state, to_state);
            out.push(Candidate { key: (exp.vertex, tile2), state: to_state, cost: exp.cost, trajectory });
        }
        Ok(out)
    }
}
