//! Map generation, experiment sweeps and the completeness property.
//!
//! Certified-clearance maps are built constructively: free exactly the
//! cells touched by cost-limited trajectories to and from a dense sampling
//! of a reference motion, occupy everything else. A plan query along that
//! motion then exercises the completeness guarantee: with clearance at
//! least twice the graph dispersion (plus a discretization margin) the
//! search must succeed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::baseline::{BaselineSpace, UniformInputSpec};
use crate::graph::PrimitiveGraph;
use crate::planner::{
    collision_check, plan, Heuristic, OccupancyGrid, PlanError, PlanQuery, PlanStatus,
    TiledGraphSpace,
};
use crate::state::State;
use crate::systems::{sample_trajectory, SteerError, SystemKind, Trajectory};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("waypoint steering infeasible: {0}")]
    WaypointSteering(#[from] SteerError),
    #[error("certified-clearance maps need the primitive graph")]
    MissingGraph,
    #[error("bad map spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, Serialize)]
pub enum MapStyle {
    /// Seeded rectangles with at least one carved corridor of the given
    /// width between the map corners.
    RandomCorridors { corridor_width: f64, obstacle_density: f64 },
    /// Free exactly the certified neighborhood of the waypoint motion.
    CertifiedClearance { delta: f64, waypoints: Vec<State> },
}

#[derive(Debug, Clone, Serialize)]
pub struct MapSpec {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub style: MapStyle,
}

/// Build the occupancy map described by `spec`. Certified-clearance maps
/// steer through the system and free around the graph's tiled vertices, so
/// they need both; corridor maps ignore them.
pub fn generate_map(
    spec: &MapSpec,
    system: &SystemKind,
    graph: Option<&PrimitiveGraph>,
) -> Result<OccupancyGrid, BenchError> {
    match &spec.style {
        MapStyle::RandomCorridors { corridor_width, obstacle_density } => {
            if *corridor_width <= 0.0 {
                return Err(BenchError::BadSpec("corridor width must be positive".into()));
            }
            Ok(random_corridor_map(spec, *corridor_width, *obstacle_density))
        }
        MapStyle::CertifiedClearance { delta, waypoints } => {
            if *delta <= 0.0 {
                return Err(BenchError::BadSpec("clearance delta must be positive".into()));
            }
            let graph = graph.ok_or(BenchError::MissingGraph)?;
            certified_clearance_map(spec, system, graph, *delta, waypoints)
        }
    }
}

fn random_corridor_map(spec: &MapSpec, corridor_width: f64, obstacle_density: f64) -> OccupancyGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let mut grid = OccupancyGrid::all_free(w, h, spec.resolution, [0.0, 0.0]);
    let target = (obstacle_density * (w * h) as f64) as usize;
    let mut placed = 0usize;
    let mut iterations = 0;
    while placed < target && iterations < 10_000 {
        iterations += 1;
        let rw = rng.gen_range(w / 20 + 1..w / 4 + 2);
        let rh = rng.gen_range(h / 20 + 1..h / 4 + 2);
        let rx = rng.gen_range(0..w);
        let ry = rng.gen_range(0..h);
        for ix in rx..(rx + rw).min(w) {
            for iy in ry..(ry + rh).min(h) {
                grid.set_cell(ix, iy, true);
            }
        }
        placed += rw * rh;
    }
    // Carve a corridor between the corners through interior waypoints so a
    // path always exists.
    let world_w = w as f64 * spec.resolution;
    let world_h = h as f64 * spec.resolution;
    let margin = corridor_width.max(0.08 * world_w.min(world_h));
    let mut polyline = vec![[margin, margin]];
    for _ in 0..2 {
        polyline.push([
            rng.gen_range(margin..world_w - margin),
            rng.gen_range(margin..world_h - margin),
        ]);
    }
    polyline.push([world_w - margin, world_h - margin]);
    let half = corridor_width / 2.0;
    for iy in 0..h {
        for ix in 0..w {
            let cx = (ix as f64 + 0.5) * spec.resolution;
            let cy = (iy as f64 + 0.5) * spec.resolution;
            let near_corridor = polyline
                .windows(2)
                .any(|seg| segment_distance(seg[0], seg[1], [cx, cy]) <= half)
                || dist([cx, cy], polyline[0]) <= corridor_width
                || dist([cx, cy], *polyline.last().expect("non-empty")) <= corridor_width;
            if near_corridor {
                grid.set_cell(ix, iy, false);
            }
        }
    }
    grid
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(a, p);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Spatial radius a trajectory of cost `c` can reach: unit speed for the
/// car, speed-limit times available time for the double integrator.
fn spatial_reach(system: &SystemKind, cost: f64) -> f64 {
    match *system {
        SystemKind::ReedsShepp { .. } => cost,
        SystemKind::DoubleIntegrator2D { rho, v_max, .. } => v_max * cost / rho,
    }
}

/// Cost spacing of paint samples that keeps consecutive samples within one
/// map cell spatially.
fn paint_spacing(system: &SystemKind, resolution: f64) -> f64 {
    match *system {
        SystemKind::ReedsShepp { .. } => resolution,
        SystemKind::DoubleIntegrator2D { rho, v_max, .. } => resolution * rho / v_max,
    }
}

struct PaintBuffer {
    width: usize,
    height: usize,
    bits: Vec<u64>,
}

impl PaintBuffer {
    fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![0; (width * height + 63) / 64] }
    }

    fn mark(&mut self, ix: i64, iy: i64) {
        if ix < 0 || iy < 0 || ix as usize >= self.width || iy as usize >= self.height {
            return;
        }
        let idx = iy as usize * self.width + ix as usize;
        self.bits[idx / 64] |= 1 << (idx % 64);
    }

    fn or_into(&self, other: &mut PaintBuffer) {
        for (a, b) in other.bits.iter_mut().zip(&self.bits) {
            *a |= b;
        }
    }

    fn is_marked(&self, idx: usize) -> bool {
        self.bits[idx / 64] & (1 << (idx % 64)) != 0
    }
}

/// Free every cell within one cell of each trajectory sample between the
/// given accumulated-cost bounds.
fn paint_trajectory(
    buf: &mut PaintBuffer,
    grid_origin: [f64; 2],
    resolution: f64,
    spacing: f64,
    t: &Trajectory,
    cost_from: f64,
    cost_to: f64,
) {
    let samples = sample_trajectory(t, spacing);
    let n = samples.len();
    let per = if n > 1 { t.cost / (n - 1) as f64 } else { 0.0 };
    for (k, s) in samples.iter().enumerate() {
        let c = per * k as f64;
        if c < cost_from - 1e-12 || c > cost_to + 1e-12 {
            continue;
        }
        let ix = ((s.get(0) - grid_origin[0]) / resolution).floor() as i64;
        let iy = ((s.get(1) - grid_origin[1]) / resolution).floor() as i64;
        for dx in -1..=1 {
            for dy in -1..=1 {
                buf.mark(ix + dx, iy + dy);
            }
        }
    }
}

/// The reference motion: consecutive waypoints steered in free space.
fn waypoint_legs(system: &SystemKind, waypoints: &[State]) -> Result<Vec<Trajectory>, BenchError> {
    if waypoints.len() < 2 {
        return Err(BenchError::BadSpec("need at least two waypoints".into()));
    }
    waypoints
        .windows(2)
        .map(|w| system.steer(&w[0], &w[1]).map_err(BenchError::from))
        .collect()
}

/// States along the legs spaced at most `spacing` apart in cost.
fn sigma_samples(legs: &[Trajectory], spacing: f64) -> Vec<State> {
    let mut out = Vec::new();
    for (i, leg) in legs.iter().enumerate() {
        let mut samples = sample_trajectory(leg, spacing);
        if i > 0 && !samples.is_empty() {
            samples.remove(0);
        }
        out.append(&mut samples);
    }
    out
}

fn certified_clearance_map(
    spec: &MapSpec,
    system: &SystemKind,
    graph: &PrimitiveGraph,
    delta: f64,
    waypoints: &[State],
) -> Result<OccupancyGrid, BenchError> {
    let legs = waypoint_legs(system, waypoints)?;
    let samples = sigma_samples(&legs, delta / 16.0);
    let reach = spatial_reach(system, delta);
    // Grid extents: cover the motion plus the full reachable band, and at
    // least the requested cell counts.
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for s in &samples {
        for d in 0..2 {
            lo[d] = lo[d].min(s.get(d));
            hi[d] = hi[d].max(s.get(d));
        }
    }
    let pad = reach + 2.0 * spec.resolution;
    let mut origin = [lo[0] - pad, lo[1] - pad];
    let mut width = (((hi[0] + pad) - origin[0]) / spec.resolution).ceil() as usize + 1;
    let mut height = (((hi[1] + pad) - origin[1]) / spec.resolution).ceil() as usize + 1;
    if width < spec.width {
        origin[0] -= (spec.width - width) as f64 * spec.resolution / 2.0;
        width = spec.width;
    }
    if height < spec.height {
        origin[1] -= (spec.height - height) as f64 * spec.resolution / 2.0;
        height = spec.height;
    }

    let spacing = paint_spacing(system, spec.resolution).min(delta / 8.0);
    let in_adjacency = {
        let mut adj = vec![Vec::new(); graph.vertices.len()];
        for (i, e) in graph.edges.iter().enumerate() {
            adj[e.to as usize].push(i as u32);
        }
        adj
    };
    let out_adjacency = graph.adjacency();
    let spatial = &graph.tiling.spatial_dims;
    let k = spatial.len();

    let buffers: Result<Vec<PaintBuffer>, BenchError> = samples
        .par_iter()
        .map(|x| {
            let mut buf = PaintBuffer::new(width, height);
            probe_from_sample(
                x, system, graph, delta, reach, spacing, origin, spec.resolution, &out_adjacency,
                &in_adjacency, k, &mut buf,
            )?;
            Ok(buf)
        })
        .collect();
    let mut painted = PaintBuffer::new(width, height);
    for b in buffers? {
        b.or_into(&mut painted);
    }
    for leg in &legs {
        paint_trajectory(&mut painted, origin, spec.resolution, spacing, leg, 0.0, f64::INFINITY);
    }

    let mut grid = OccupancyGrid::all_occupied(width, height, spec.resolution, origin);
    for iy in 0..height {
        for ix in 0..width {
            if painted.is_marked(iy * width + ix) {
                grid.set_cell(ix, iy, false);
            }
        }
    }
    Ok(grid)
}

/// Tile window whose vertices could lie within `reach` of the state.
fn tile_window(graph: &PrimitiveGraph, x: &State, reach: f64, k: usize) -> Vec<Vec<i64>> {
    let mut ranges = Vec::with_capacity(k);
    for (slot, &d) in graph.tiling.spatial_dims.iter().enumerate() {
        let extent = graph.tiling.tile_extent[slot];
        let lo = ((x.get(d) - reach) / extent).floor() as i64;
        let hi = ((x.get(d) + reach) / extent).floor() as i64;
        ranges.push((lo, hi));
    }
    let mut tiles = vec![Vec::new()];
    for &(lo, hi) in &ranges {
        let mut next = Vec::new();
        for t in &tiles {
            for c in lo..=hi {
                let mut t2 = t.clone();
                t2.push(c);
                next.push(t2);
            }
        }
        tiles = next;
    }
    tiles
}

#[allow(clippy::too_many_arguments)]
fn probe_from_sample(
    x: &State,
    system: &SystemKind,
    graph: &PrimitiveGraph,
    delta: f64,
    reach: f64,
    spacing: f64,
    origin: [f64; 2],
    resolution: f64,
    out_adjacency: &[Vec<u32>],
    in_adjacency: &[Vec<u32>],
    k: usize,
    buf: &mut PaintBuffer,
) -> Result<(), BenchError> {
    // Tiled-vertex probes plus the graph edges hanging off each reachable
    // vertex, truncated so the composite stays within cost delta of x.
    for tile in tile_window(graph, x, reach, k) {
        for v in 0..graph.vertices.len() as u32 {
            let u_world = graph.node_state(v, &tile).expect("vertex in range");
            let jf = system.steer_cost(x, &u_world)?;
            if jf <= delta {
                let t = system.steer(x, &u_world)?;
                paint_trajectory(buf, origin, resolution, spacing, &t, 0.0, f64::INFINITY);
                let budget = delta - jf;
                let translation = graph.tiling.translation(&tile);
                for &ei in &out_adjacency[v as usize] {
                    let edge = &graph.edges[ei as usize];
                    let world = edge.trajectory.translated(&graph.tiling.spatial_dims, &translation);
                    paint_trajectory(buf, origin, resolution, spacing, &world, 0.0, budget);
                }
            }
            let jb = system.steer_cost(&u_world, x)?;
            if jb <= delta {
                let t = system.steer(&u_world, x)?;
                paint_trajectory(buf, origin, resolution, spacing, &t, 0.0, f64::INFINITY);
                let budget = delta - jb;
                for &ei in &in_adjacency[v as usize] {
                    let edge = &graph.edges[ei as usize];
                    // The edge instance ending at (v, tile) starts at tile - offset.
                    let from_tile: Vec<i64> =
                        tile.iter().zip(&edge.offset).map(|(&t, &o)| t - o).collect();
                    let translation = graph.tiling.translation(&from_tile);
                    let world = edge.trajectory.translated(&graph.tiling.spatial_dims, &translation);
                    paint_trajectory(
                        buf,
                        origin,
                        resolution,
                        spacing,
                        &world,
                        (world.cost - budget).max(0.0),
                        f64::INFINITY,
                    );
                }
            }
        }
    }
    // Direction probes pad the freed region around the motion itself.
    for (phi, level) in direction_probe_grid() {
        let c = delta * level;
        let target = probe_target(system, x, phi, c, reach);
        if let Some(target) = target {
            if let Ok(jf) = system.steer_cost(x, &target) {
                if jf <= delta {
                    let t = system.steer(x, &target)?;
                    paint_trajectory(buf, origin, resolution, spacing, &t, 0.0, f64::INFINITY);
                }
            }
            if let Ok(jb) = system.steer_cost(&target, x) {
                if jb <= delta {
                    let t = system.steer(&target, x)?;
                    paint_trajectory(buf, origin, resolution, spacing, &t, 0.0, f64::INFINITY);
                }
            }
        }
    }
    Ok(())
}

const PROBE_DIRECTIONS: usize = 64;
const PROBE_LEVELS: usize = 8;

fn direction_probe_grid() -> impl Iterator<Item = (f64, f64)> {
    (0..PROBE_DIRECTIONS).flat_map(|i| {
        let phi = 2.0 * std::f64::consts::PI * i as f64 / PROBE_DIRECTIONS as f64;
        (1..=PROBE_LEVELS).map(move |j| (phi, j as f64 / PROBE_LEVELS as f64))
    })
}

fn probe_target(system: &SystemKind, x: &State, phi: f64, cost: f64, reach: f64) -> Option<State> {
    let scale = spatial_reach(system, cost).min(reach);
    let (px, py) = (x.get(0) + 0.6 * scale * phi.cos(), x.get(1) + 0.6 * scale * phi.sin());
    match system {
        SystemKind::ReedsShepp { .. } => Some(State::se2(px, py, phi)),
        SystemKind::DoubleIntegrator2D { .. } => Some(State::pos_vel(px, py, 0.0, 0.0)),
    }
}

/// Re-verification pass: every direct probe trajectory of cost <= delta
/// from every sample on the motion must lie entirely in free cells.
pub fn verify_certified_clearance(
    grid: &OccupancyGrid,
    system: &SystemKind,
    graph: &PrimitiveGraph,
    delta: f64,
    waypoints: &[State],
    check_resolution: f64,
) -> Result<bool, BenchError> {
    let legs = waypoint_legs(system, waypoints)?;
    let samples = sigma_samples(&legs, delta / 16.0);
    let reach = spatial_reach(system, delta);
    let k = graph.tiling.spatial_dims.len();
    for leg in &legs {
        if !collision_check(leg, grid, check_resolution) {
            return Ok(false);
        }
    }
    for x in &samples {
        for tile in tile_window(graph, x, reach, k) {
            for v in 0..graph.vertices.len() as u32 {
                let u_world = graph.node_state(v, &tile).expect("vertex in range");
                if system.steer_cost(x, &u_world)? <= delta {
                    let t = system.steer(x, &u_world)?;
                    if !collision_check(&t, grid, check_resolution) {
                        return Ok(false);
                    }
                }
                if system.steer_cost(&u_world, x)? <= delta {
                    let t = system.steer(&u_world, x)?;
                    if !collision_check(&t, grid, check_resolution) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Outcome of one (method, map) run.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub map_id: String,
    pub method_id: String,
    pub status: PlanStatus,
    pub total_cost: Option<f64>,
    pub collision_checks: usize,
    pub expansions: usize,
    pub wall_time_s: f64,
}

/// Query template shared by every method in a sweep: start and goal at
/// opposite map corners at rest, identical tolerances and budget.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTemplate {
    pub goal_cost_tolerance: f64,
    pub collision_resolution: f64,
    pub max_collision_checks: usize,
    pub corner_margin_frac: f64,
    pub heuristic: Heuristic,
}

fn corner_query(spec: &MapSpec, system: &SystemKind, template: &SweepTemplate) -> PlanQuery {
    let world_w = spec.width as f64 * spec.resolution;
    let world_h = spec.height as f64 * spec.resolution;
    let m = template.corner_margin_frac;
    let (sx, sy) = (m * world_w, m * world_h);
    let (gx, gy) = ((1.0 - m) * world_w, (1.0 - m) * world_h);
    let (start, goal) = match system {
        SystemKind::ReedsShepp { .. } => (State::se2(sx, sy, 0.0), State::se2(gx, gy, 0.0)),
        SystemKind::DoubleIntegrator2D { .. } => {
            (State::pos_vel(sx, sy, 0.0, 0.0), State::pos_vel(gx, gy, 0.0, 0.0))
        }
    };
    PlanQuery {
        start,
        goal,
        goal_cost_tolerance: template.goal_cost_tolerance,
        collision_resolution: template.collision_resolution,
        max_collision_checks: template.max_collision_checks,
        heuristic: template.heuristic,
        departability: crate::planner::Departability::SteerCheck,
        record_expansions: false,
    }
}

/// Run every (method, map) pair under the shared query template.
pub fn run_sweep(
    graphs: &[(String, &PrimitiveGraph)],
    baselines: &[(String, UniformInputSpec)],
    maps: &[MapSpec],
    template: &SweepTemplate,
) -> Result<Vec<ExperimentRecord>, BenchError> {
    let mut jobs: Vec<(String, MethodRef)> = Vec::new();
    for (id, g) in graphs {
        jobs.push((id.clone(), MethodRef::Graph(g)));
    }
    for (id, b) in baselines {
        jobs.push((id.clone(), MethodRef::Baseline(b.clone())));
    }
    let mut records: Vec<ExperimentRecord> = maps
        .par_iter()
        .map(|spec| -> Result<Vec<ExperimentRecord>, BenchError> {
            let map_id = format!("map{}", spec.seed);
            let mut out = Vec::new();
            for (method_id, method) in &jobs {
                let system = method.system();
                let grid = generate_map(spec, &system, method.graph())?;
                let query = corner_query(spec, &system, template);
                let started = Instant::now();
                let result = match method {
                    MethodRef::Graph(g) => plan(&TiledGraphSpace::new(g), &grid, &query)?,
                    MethodRef::Baseline(b) => plan(&BaselineSpace::new(b.clone()), &grid, &query)?,
                };
                out.push(ExperimentRecord {
                    map_id: map_id.clone(),
                    method_id: method_id.clone(),
                    status: result.status,
                    total_cost: result.total_cost,
                    collision_checks: result.collision_checks,
                    expansions: result.expansions,
                    wall_time_s: started.elapsed().as_secs_f64(),
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    records.sort_by(|a, b| (&a.map_id, &a.method_id).cmp(&(&b.map_id, &b.method_id)));
    Ok(records)
}

enum MethodRef<'a> {
    Graph(&'a PrimitiveGraph),
    Baseline(UniformInputSpec),
}

impl MethodRef<'_> {
    fn system(&self) -> SystemKind {
        match self {
            MethodRef::Graph(g) => g.system,
            MethodRef::Baseline(b) => b.system,
        }
    }

    fn graph(&self) -> Option<&PrimitiveGraph> {
        match self {
            MethodRef::Graph(g) => Some(g),
            MethodRef::Baseline(_) => None,
        }
    }
}

/// Per-method aggregate in method-definition order. Mean cost is reported
/// only when the method solved every map.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub method_id: String,
    pub runs: usize,
    pub successes: usize,
    pub mean_collision_checks: f64,
    pub mean_cost: Option<f64>,
}

pub fn aggregate(records: &[ExperimentRecord]) -> Vec<AggregateRow> {
    let mut order: Vec<String> = Vec::new();
    for r in records {
        if !order.contains(&r.method_id) {
            order.push(r.method_id.clone());
        }
    }
    order
        .into_iter()
        .map(|method_id| {
            let rows: Vec<&ExperimentRecord> =
                records.iter().filter(|r| r.method_id == method_id).collect();
            let runs = rows.len();
            let successes = rows.iter().filter(|r| r.status == PlanStatus::Success).count();
            let mean_collision_checks =
                rows.iter().map(|r| r.collision_checks as f64).sum::<f64>() / runs.max(1) as f64;
            let mean_cost = if successes == runs && runs > 0 {
                Some(rows.iter().filter_map(|r| r.total_cost).sum::<f64>() / runs as f64)
            } else {
                None
            };
            AggregateRow { method_id, runs, successes, mean_collision_checks, mean_cost }
        })
        .collect()
}

fn status_str(s: PlanStatus) -> &'static str {
    match s {
        PlanStatus::Success => "success",
        PlanStatus::NoPath => "no_path",
        PlanStatus::BudgetExhausted => "budget_exhausted",
    }
}

pub fn write_records_csv(
    out: &mut impl std::io::Write,
    records: &[ExperimentRecord],
    header_notes: &[String],
) -> std::io::Result<()> {
    for note in header_notes {
        writeln!(out, "# {note}")?;
    }
    writeln!(out, "map_id,method_id,status,total_cost,collision_checks,expansions,wall_time_s")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.6}",
            r.map_id,
            r.method_id,
            status_str(r.status),
            r.total_cost.map_or(String::new(), |c| format!("{c:.9}")),
            r.collision_checks,
            r.expansions,
            r.wall_time_s
        )?;
    }
    Ok(())
}

pub fn write_aggregate_csv(
    out: &mut impl std::io::Write,
    rows: &[AggregateRow],
    header_notes: &[String],
) -> std::io::Result<()> {
    for note in header_notes {
        writeln!(out, "# {note}")?;
    }
    writeln!(out, "method_id,runs,successes,mean_collision_checks,mean_cost")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.3},{}",
            r.method_id,
            r.runs,
            r.successes,
            r.mean_collision_checks,
            r.mean_cost.map_or("N/A".to_string(), |c| format!("{c:.3}"))
        )?;
    }
    Ok(())
}

/// Configuration of one completeness trial batch.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub map_resolution: f64,
    /// Half-extent of the box random waypoints are drawn from.
    pub waypoint_extent: f64,
    pub waypoints_per_trial: usize,
    pub collision_resolution: f64,
    pub max_collision_checks: usize,
}

impl TrialConfig {
    pub fn for_graph(graph: &PrimitiveGraph, delta: f64) -> Self {
        Self {
            map_resolution: delta / 16.0,
            waypoint_extent: 1.5 * graph.tiling.tile_extent.iter().cloned().fold(1.0, f64::max),
            waypoints_per_trial: 3,
            collision_resolution: graph.dispersion / 10.0,
            max_collision_checks: 100_000,
        }
    }
}

/// Plan across `trials` clearance-certified maps built around random
/// waypoint motions; returns the success fraction and per-trial outcomes.
pub fn completeness_trial(
    graph: &PrimitiveGraph,
    delta: f64,
    trials: usize,
    seed: u64,
    config: &TrialConfig,
) -> Result<(f64, Vec<bool>), BenchError> {
    let system = graph.system;
    let outcomes: Result<Vec<bool>, BenchError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
            let waypoints = random_waypoints(&mut rng, &system, config);
            let spec = MapSpec {
                seed: seed.wrapping_add(trial as u64),
                width: 8,
                height: 8,
                resolution: config.map_resolution,
                style: MapStyle::CertifiedClearance { delta, waypoints: waypoints.clone() },
            };
            let grid = generate_map(&spec, &system, Some(graph))?;
            let query = PlanQuery {
                start: waypoints[0],
                goal: *waypoints.last().expect("non-empty"),
                goal_cost_tolerance: graph.dispersion,
                collision_resolution: config.collision_resolution,
                max_collision_checks: config.max_collision_checks,
                heuristic: Heuristic::Zero,
                departability: crate::planner::Departability::SteerCheck,
                record_expansions: false,
            };
            let result = plan(&TiledGraphSpace::new(graph), &grid, &query)?;
            Ok(result.status == PlanStatus::Success)
        })
        .collect();
    let outcomes = outcomes?;
    let fraction = outcomes.iter().filter(|&&s| s).count() as f64 / trials.max(1) as f64;
    Ok((fraction, outcomes))
}

fn random_waypoints(rng: &mut ChaCha8Rng, system: &SystemKind, config: &TrialConfig) -> Vec<State> {
    let e = config.waypoint_extent;
    (0..config.waypoints_per_trial.max(2))
        .map(|_| match system {
            SystemKind::ReedsShepp { .. } => State::se2(
                rng.gen_range(-e..e),
                rng.gen_range(-e..e),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            ),
            SystemKind::DoubleIntegrator2D { v_max, .. } => State::pos_vel(
                rng.gen_range(-e..e),
                rng.gen_range(-e..e),
                rng.gen_range(-0.4 * v_max..0.4 * v_max),
                rng.gen_range(-0.4 * v_max..0.4 * v_max),
            ),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{min_dispersion_vertices, TilingSpec};
    use crate::graph::build_edges;
    use crate::sampling::{generate_dense, SequenceKind};
    use crate::state::StateBox;

    fn corridor_spec(seed: u64, density: f64) -> MapSpec {
        MapSpec {
            seed,
            width: 80,
            height: 80,
            resolution: 0.25,
            style: MapStyle::RandomCorridors { corridor_width: 2.0, obstacle_density: density },
        }
    }

    #[test]
    fn zero_density_map_is_all_free() {
        let system = SystemKind::reeds_shepp(1.0);
        let grid = generate_map(&corridor_spec(3, 0.0), &system, None).unwrap();
        assert_eq!(grid.occupied_count(), 0);
    }

    #[test]
    fn same_seed_gives_identical_maps() {
        let system = SystemKind::reeds_shepp(1.0);
        let a = generate_map(&corridor_spec(7, 0.3), &system, None).unwrap();
        let b = generate_map(&corridor_spec(7, 0.3), &system, None).unwrap();
        assert_eq!(a, b);
        let c = generate_map(&corridor_spec(8, 0.3), &system, None).unwrap();
        assert_ne!(a, c);
    }

    fn small_rs_graph() -> PrimitiveGraph {
        let side = 3.0;
        let box_ = StateBox::new(
            vec![-side / 2.0, -side / 2.0, -std::f64::consts::PI],
            vec![side / 2.0, side / 2.0, std::f64::consts::PI],
            vec![0, 1],
        )
        .unwrap();
        let dense = generate_dense(&box_, 220, SequenceKind::Sobol).unwrap();
        let system = SystemKind::reeds_shepp(1.0);
        let tiling = TilingSpec::new(vec![0, 1], vec![side, side], 1);
        let run = min_dispersion_vertices(1.4, &dense, &system, &tiling, 128).unwrap();
        build_edges(&run, &system).unwrap()
    }

    #[test]
    fn certified_map_passes_reverification() {
        let graph = small_rs_graph();
        let system = graph.system;
        let delta = 2.0 * graph.dispersion + 0.2;
        let waypoints = vec![State::se2(0.0, 0.0, 0.0), State::se2(3.5, 1.5, 0.8)];
        let spec = MapSpec {
            seed: 1,
            width: 8,
            height: 8,
            resolution: delta / 16.0,
            style: MapStyle::CertifiedClearance { delta, waypoints: waypoints.clone() },
        };
        let grid = generate_map(&spec, &system, Some(&graph)).unwrap();
        assert!(grid.occupied_count() > 0, "certified maps keep obstacles");
        let ok = verify_certified_clearance(
            &grid,
            &system,
            &graph,
            delta,
            &waypoints,
            graph.dispersion / 10.0,
        )
        .unwrap();
        assert!(ok, "painted clearance region must verify free");
    }

    #[test]
    fn certified_map_requires_graph() {
        let system = SystemKind::reeds_shepp(1.0);
        let spec = MapSpec {
            seed: 1,
            width: 8,
            height: 8,
            resolution: 0.1,
            style: MapStyle::CertifiedClearance {
                delta: 1.0,
                waypoints: vec![State::se2(0.0, 0.0, 0.0), State::se2(1.0, 0.0, 0.0)],
            },
        };
        assert!(matches!(generate_map(&spec, &system, None), Err(BenchError::MissingGraph)));
    }

    #[test]
    fn completeness_holds_at_generous_clearance() {
        let graph = small_rs_graph();
        let delta = 2.0 * graph.dispersion + graph.dispersion / 10.0 + 0.05;
        let config = TrialConfig::for_graph(&graph, delta);
        let (fraction, outcomes) = completeness_trial(&graph, delta, 6, 11, &config).unwrap();
        assert_eq!(fraction, 1.0, "outcomes {outcomes:?}");
    }

    #[test]
    fn sweep_on_free_maps_succeeds_and_aggregates() {
        let graph = small_rs_graph();
        let maps: Vec<MapSpec> = (0..3).map(|s| corridor_spec(s, 0.0)).collect();
        let template = SweepTemplate {
            goal_cost_tolerance: graph.dispersion,
            collision_resolution: graph.dispersion / 10.0,
            max_collision_checks: 100_000,
            corner_margin_frac: 0.15,
            heuristic: Heuristic::Zero,
        };
        let records =
            run_sweep(&[("g".to_string(), &graph)], &[], &maps, &template).unwrap();
        assert_eq!(records.len(), 3);
        for r in &records {
            assert_eq!(r.status, PlanStatus::Success);
            // Accessibility and departability bound the detour.
            let q = corner_query(&maps[0], &graph.system, &template);
            let free = graph.system.steer_cost(&q.start, &q.goal).unwrap();
            let cost = r.total_cost.unwrap();
            assert!(cost <= free + 2.0 * 2.0 * graph.dispersion, "cost {cost} vs free {free}");
        }
        let rows = aggregate(&records);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].successes, 3);
        assert!(rows[0].mean_cost.is_some());
        let manual: f64 =
            records.iter().map(|r| r.total_cost.unwrap()).sum::<f64>() / records.len() as f64;
        assert!((rows[0].mean_cost.unwrap() - manual).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_reproducible() {
        let graph = small_rs_graph();
        let maps: Vec<MapSpec> = (0..2).map(|s| corridor_spec(s, 0.25)).collect();
        let template = SweepTemplate {
            goal_cost_tolerance: graph.dispersion,
            collision_resolution: graph.dispersion / 10.0,
            max_collision_checks: 50_000,
            corner_margin_frac: 0.15,
            heuristic: Heuristic::Zero,
        };
        let a = run_sweep(&[("g".to_string(), &graph)], &[], &maps, &template).unwrap();
        let b = run_sweep(&[("g".to_string(), &graph)], &[], &maps, &template).unwrap();
        let key = |rs: &[ExperimentRecord]| -> Vec<(String, String, usize, Option<f64>)> {
            rs.iter()
                .map(|r| (r.map_id.clone(), r.method_id.clone(), r.collision_checks, r.total_cost))
                .collect()
        };
        assert_eq!(key(&a), key(&b));
    }

    #[test]
    fn csv_round_trip_shapes() {
        let records = vec![ExperimentRecord {
            map_id: "map1".into(),
            method_id: "g".into(),
            status: PlanStatus::Success,
            total_cost: Some(12.5),
            collision_checks: 42,
            expansions: 17,
            wall_time_s: 0.01,
        }];
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records, &["seed=1".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed=1\n"));
        assert_eq!(text.lines().count(), 3);
        let mut buf2 = Vec::new();
        write_aggregate_csv(&mut buf2, &aggregate(&records), &[]).unwrap();
        let text2 = String::from_utf8(buf2).unwrap();
        assert!(text2.contains("g,1,1,42.000,12.500"));
    }
}
