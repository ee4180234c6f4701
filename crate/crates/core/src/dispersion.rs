//! Greedy minimum-dispersion vertex selection under the tiled quasimetric.
//!
//! The selection loop seeds the vertex set with the zero state, keeps a
//! running minimum `J_min[x]` of the symmetrized steering cost from every
//! dense sample to the tiled vertex set, and repeatedly promotes the dense
//! sample with the largest `J_min` until the estimate drops to the target.
//! Because `J_min` is a running minimum and the vertex set only grows, each
//! iteration folds in just the newest vertex's tiles; the result is
//! identical to re-scanning the whole tiled set every round.

use dashmap::DashMap;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::sampling::DenseSampleSet;
use crate::state::State;
use crate::systems::{quasimetric, SteerError, SystemKind};

#[derive(Debug, Error)]
pub enum DispersionError {
    #[error("target dispersion must be positive, got {0}")]
    BadTarget(f64),
    #[error("dense sample set is empty")]
    EmptyDense,
    #[error("the zero state lies outside the dense sampling box")]
    ZeroStateOutsideBox,
    #[error("tiling spatial dims or extents do not match the dense box")]
    TilingMismatch,
    #[error("vertex cap {cap} reached with dispersion {dispersion} above target {target}")]
    CapReached { cap: usize, dispersion: f64, target: f64, run: Box<DispersionRun> },
    #[error(transparent)]
    Steer(#[from] SteerError),
}

/// Translation lattice for replicating the vertex set along the workspace
/// axes: every offset in `{-r..r}^k` times one tile extent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TilingSpec {
    pub spatial_dims: Vec<usize>,
    pub tile_extent: Vec<f64>,
    pub neighbor_radius: usize,
}

impl TilingSpec {
    pub fn new(spatial_dims: Vec<usize>, tile_extent: Vec<f64>, neighbor_radius: usize) -> Self {
        assert_eq!(spatial_dims.len(), tile_extent.len());
        assert!(tile_extent.iter().all(|&e| e > 0.0), "tile extent must be positive");
        Self { spatial_dims, tile_extent, neighbor_radius }
    }

    /// All integer offset vectors of the neighbor lattice, zero included,
    /// in lexicographic order.
    pub fn offsets(&self) -> Vec<Vec<i64>> {
        let k = self.spatial_dims.len();
        let r = self.neighbor_radius as i64;
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::with_capacity(((2 * r + 1) as usize).pow(k as u32));
        let mut cur = vec![-r; k];
        loop {
            out.push(cur.clone());
            let mut axis = k;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur[axis] < r {
                    cur[axis] += 1;
                    for c in cur.iter_mut().skip(axis + 1) {
                        *c = -r;
                    }
                    break;
                }
            }
        }
    }

    /// World translation for an integer tile offset.
    pub fn translation(&self, offset: &[i64]) -> Vec<f64> {
        offset
            .iter()
            .zip(&self.tile_extent)
            .map(|(&o, &e)| o as f64 * e)
            .collect()
    }

    pub(crate) fn matches_box(&self, box_: &crate::state::StateBox) -> bool {
        self.spatial_dims == box_.spatial_dims
            && self
                .spatial_dims
                .iter()
                .zip(&self.tile_extent)
                .all(|(&d, &e)| (box_.width(d) - e).abs() <= 1e-9)
    }
}

/// A vertex copy produced by tiling, tagged with its source and offset.
#[derive(Debug, Clone, PartialEq)]
pub struct TiledState {
    pub state: State,
    pub source: usize,
    pub offset: Vec<i64>,
}

/// Translate every vertex by every offset of the neighbor lattice.
pub fn tile_points(vertices: &[State], tiling: &TilingSpec) -> Vec<TiledState> {
    let offsets = tiling.offsets();
    let mut out = Vec::with_capacity(vertices.len() * offsets.len());
    for (source, v) in vertices.iter().enumerate() {
        for offset in &offsets {
            let state = v.translated(&tiling.spatial_dims, &tiling.translation(offset));
            out.push(TiledState { state, source, offset: offset.clone() });
        }
    }
    out
}

/// Record of one vertex-selection run.
#[derive(Debug, Clone, Serialize)]
pub struct DispersionRun {
    /// Selected vertices in insertion order; index 0 is the zero state.
    pub vertices: Vec<State>,
    /// Dispersion estimate after each insertion (non-increasing).
    pub dispersion_history: Vec<f64>,
    pub final_dispersion: f64,
    pub dense: DenseSampleSet,
    pub tiling: TilingSpec,
    /// Final per-dense-sample running minimum of the quasimetric.
    pub jmin: Vec<f64>,
}

/// Memo of directed steering costs keyed by the translation-invariant
/// relative state, shared across tiled evaluations.
struct SteerCache {
    map: DashMap<[u64; 7], (f64, f64)>,
}

impl SteerCache {
    fn new() -> Self {
        Self { map: DashMap::new() }
    }

    fn key(a: &State, b: &State, spatial: &[usize]) -> [u64; 7] {
        let mut key = [0u64; 7];
        let mut slot = 0;
        for &d in spatial {
            key[slot] = (b.get(d) - a.get(d)).to_bits();
            slot += 1;
        }
        for s in [a, b] {
            for d in 0..s.dim() {
                if !spatial.contains(&d) {
                    key[slot] = s.get(d).to_bits();
                    slot += 1;
                }
            }
        }
        key
    }

    /// Symmetrized cost, cached under the canonical pair orientation.
    fn jbar(&self, a: &State, b: &State, system: &SystemKind, spatial: &[usize]) -> Result<f64, SteerError> {
        let fwd_key = Self::key(a, b, spatial);
        let bwd_key = Self::key(b, a, spatial);
        let key = fwd_key.min(bwd_key);
        if let Some(entry) = self.map.get(&key) {
            let (f, b) = *entry;
            return Ok(f.max(b));
        }
        let pair = quasimetric(a, b, system)?;
        let value = if fwd_key <= bwd_key {
            (pair.forward, pair.backward)
        } else {
            (pair.backward, pair.forward)
        };
        self.map.insert(key, value);
        Ok(pair.max)
    }
}

fn validate(dense: &DenseSampleSet, system: &SystemKind, tiling: &TilingSpec) -> Result<(), DispersionError> {
    if dense.points.is_empty() {
        return Err(DispersionError::EmptyDense);
    }
    if !tiling.matches_box(&dense.box_) {
        return Err(DispersionError::TilingMismatch);
    }
    if !dense.box_.contains(&system.zero_state()) {
        return Err(DispersionError::ZeroStateOutsideBox);
    }
    Ok(())
}

/// Fold the tiles of one new vertex into the running minima; returns the
/// updated (max, argmax) with ties resolved to the lowest dense index.
fn fold_vertex(
    jmin: &mut [f64],
    dense: &DenseSampleSet,
    new_vertex: &State,
    system: &SystemKind,
    tiling: &TilingSpec,
    cache: &SteerCache,
) -> Result<(f64, usize), DispersionError> {
    let tiles = tile_points(std::slice::from_ref(new_vertex), tiling);
    let spatial = &tiling.spatial_dims;
    let updated: Result<Vec<f64>, SteerError> = dense
        .points
        .par_iter()
        .zip(jmin.par_iter())
        .map(|(sample, &current)| {
            let mut best = current;
            for tile in &tiles {
                if best <= 0.0 {
                    break;
                }
                let j = cache.jbar(sample, &tile.state, system, spatial)?;
                if j < best {
                    best = j;
                }
            }
            Ok(best)
        })
        .collect();
    let updated = updated?;
    jmin.copy_from_slice(&updated);
    let (arg, max) = jmin
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |(ai, am), (i, &v)| if v > am { (i, v) } else { (ai, am) });
    Ok((max, arg))
}

/// Greedy vertex selection until the dispersion estimate reaches `target`
/// or the vertex cap is hit (a partial-result error carrying the run).
pub fn min_dispersion_vertices(
    target: f64,
    dense: &DenseSampleSet,
    system: &SystemKind,
    tiling: &TilingSpec,
    vertex_cap: usize,
) -> Result<DispersionRun, DispersionError> {
    if target.is_nan() || target <= 0.0 {
        return Err(DispersionError::BadTarget(target));
    }
    validate(dense, system, tiling)?;
    let cache = SteerCache::new();
    let mut vertices = vec![system.zero_state()];
    let mut jmin = vec![f64::INFINITY; dense.points.len()];
    let mut history = Vec::new();
    loop {
        let newest = *vertices.last().expect("vertex set never empty");
        let (d, arg) = fold_vertex(&mut jmin, dense, &newest, system, tiling, &cache)?;
        history.push(d);
        log_iteration(history.len(), vertices.len(), d);
        if d <= target {
            return Ok(DispersionRun {
                vertices,
                final_dispersion: d,
                dispersion_history: history,
                dense: dense.clone(),
                tiling: tiling.clone(),
                jmin,
            });
        }
        if vertices.len() >= vertex_cap {
            let run = DispersionRun {
                vertices,
                final_dispersion: d,
                dispersion_history: history,
                dense: dense.clone(),
                tiling: tiling.clone(),
                jmin,
            };
            return Err(DispersionError::CapReached {
                cap: vertex_cap,
                dispersion: d,
                target,
                run: Box::new(run),
            });
        }
        vertices.push(dense.points[arg]);
    }
}

fn log_iteration(iteration: usize, n_vertices: usize, d: f64) {
    if std::env::var_os("PRIMGRAPH_PROGRESS").is_some() {
        eprintln!("dispersion iter {iteration}: |V|={n_vertices} d={d:.6}");
    }
}

/// Dispersion estimate of an arbitrary vertex set: the largest over dense
/// samples of the smallest symmetrized cost to the tiled vertices. A lower
/// bound on the continuous dispersion.
pub fn estimate_dispersion(
    vertices: &[State],
    dense: &DenseSampleSet,
    system: &SystemKind,
    tiling: &TilingSpec,
) -> Result<f64, DispersionError> {
    if vertices.is_empty() {
        return Err(DispersionError::EmptyDense);
    }
    let tiles = tile_points(vertices, tiling);
    let per_sample: Result<Vec<f64>, SteerError> = dense
        .points
        .par_iter()
        .map(|sample| {
            let mut best = f64::INFINITY;
            for tile in &tiles {
                let j = quasimetric(sample, &tile.state, system)?.max;
                if j < best {
                    best = j;
                    if best <= 0.0 {
                        break;
                    }
                }
            }
            Ok(best)
        })
        .collect();
    Ok(per_sample?.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{generate_dense, SequenceKind};
    use crate::state::StateBox;

    fn rs_setup(n: usize) -> (DenseSampleSet, SystemKind, TilingSpec) {
        let side = 3.0;
        let box_ = StateBox::new(
            vec![-side / 2.0, -side / 2.0, -std::f64::consts::PI],
            vec![side / 2.0, side / 2.0, std::f64::consts::PI],
            vec![0, 1],
        )
        .unwrap();
        let dense = generate_dense(&box_, n, SequenceKind::Sobol).unwrap();
        let system = SystemKind::reeds_shepp(1.0);
        let tiling = TilingSpec::new(vec![0, 1], vec![side, side], 1);
        (dense, system, tiling)
    }

    #[test]
    fn tile_count_is_vertices_times_lattice() {
        let tiling = TilingSpec::new(vec![0, 1], vec![2.0, 2.0], 1);
        let one = vec![State::se2(0.0, 0.0, 0.0)];
        assert_eq!(tile_points(&one, &tiling).len(), 9);
        let ten: Vec<State> = (0..10).map(|i| State::se2(i as f64 * 0.1, 0.0, 0.0)).collect();
        assert_eq!(tile_points(&ten, &tiling).len(), 90);
    }

    #[test]
    fn zero_radius_tiling_is_identity() {
        let tiling = TilingSpec::new(vec![0, 1], vec![2.0, 2.0], 0);
        let v = vec![State::se2(0.3, -0.4, 1.0)];
        let tiled = tile_points(&v, &tiling);
        assert_eq!(tiled.len(), 1);
        assert_eq!(tiled[0].state, v[0]);
        assert_eq!(tiled[0].offset, vec![0, 0]);
    }

    #[test]
    fn tiles_keep_non_spatial_coordinates() {
        let tiling = TilingSpec::new(vec![0, 1], vec![5.0, 5.0], 1);
        let v = vec![State::se2(1.0, 2.0, 0.7)];
        for t in tile_points(&v, &tiling) {
            assert_eq!(t.state.get(2), 0.7);
            assert_eq!(t.state.get(0), 1.0 + 5.0 * t.offset[0] as f64);
            assert_eq!(t.state.get(1), 2.0 + 5.0 * t.offset[1] as f64);
        }
    }

    #[test]
    fn dense_of_only_the_zero_state_stops_immediately() {
        let box_ = StateBox::new(
            vec![-1.0, -1.0, -std::f64::consts::PI],
            vec![1.0, 1.0, std::f64::consts::PI],
            vec![0, 1],
        )
        .unwrap();
        let dense = DenseSampleSet {
            points: vec![State::se2(0.0, 0.0, 0.0)],
            box_,
            kind: SequenceKind::Sobol,
        };
        let system = SystemKind::reeds_shepp(1.0);
        let tiling = TilingSpec::new(vec![0, 1], vec![2.0, 2.0], 1);
        let run = min_dispersion_vertices(0.5, &dense, &system, &tiling, 64).unwrap();
        assert_eq!(run.vertices.len(), 1);
        assert_eq!(run.vertices[0], system.zero_state());
        assert_eq!(run.final_dispersion, 0.0);
    }

    #[test]
    fn history_is_non_increasing_and_ends_at_final() {
        let (dense, system, tiling) = rs_setup(150);
        let run = min_dispersion_vertices(1.6, &dense, &system, &tiling, 256).unwrap();
        for w in run.dispersion_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "history increased: {w:?}");
        }
        assert_eq!(*run.dispersion_history.last().unwrap(), run.final_dispersion);
        assert!(run.final_dispersion <= 1.6);
        let max_jmin = run.jmin.iter().cloned().fold(0.0, f64::max);
        assert!((max_jmin - run.final_dispersion).abs() <= 1e-12);
        assert_eq!(run.vertices.len(), run.dispersion_history.len());
    }

    #[test]
    fn greedy_choice_attains_recorded_estimate() {
        let (dense, system, tiling) = rs_setup(80);
        let run = min_dispersion_vertices(1.4, &dense, &system, &tiling, 128).unwrap();
        for k in 0..run.vertices.len() {
            let est = estimate_dispersion(&run.vertices[..=k], &dense, &system, &tiling).unwrap();
            assert!(
                (est - run.dispersion_history[k]).abs() <= 1e-12,
                "prefix {k}: estimate {est} vs history {}",
                run.dispersion_history[k]
            );
        }
    }

    #[test]
    fn cap_reached_carries_partial_run() {
        let (dense, system, tiling) = rs_setup(120);
        match min_dispersion_vertices(1e-6, &dense, &system, &tiling, 5) {
            Err(DispersionError::CapReached { cap, run, .. }) => {
                assert_eq!(cap, 5);
                assert_eq!(run.vertices.len(), 5);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn zero_state_outside_box_is_a_configuration_error() {
        let box_ = StateBox::new(vec![1.0, 1.0, -1.0], vec![2.0, 2.0, 1.0], vec![0, 1]).unwrap();
        let dense = generate_dense(&box_, 16, SequenceKind::Sobol).unwrap();
        let system = SystemKind::reeds_shepp(1.0);
        let tiling = TilingSpec::new(vec![0, 1], vec![1.0, 1.0], 1);
        assert!(matches!(
            min_dispersion_vertices(1.0, &dense, &system, &tiling, 16),
            Err(DispersionError::ZeroStateOutsideBox)
        ));
    }

    #[test]
    fn estimate_zero_when_vertices_cover_dense() {
        let (dense, system, tiling) = rs_setup(40);
        let est = estimate_dispersion(&dense.points, &dense, &system, &tiling).unwrap();
        assert_eq!(est, 0.0);
    }

    #[test]
    fn estimate_single_pair_is_their_quasimetric() {
        let box_ = StateBox::new(
            vec![-4.0, -4.0, -std::f64::consts::PI],
            vec![4.0, 4.0, std::f64::consts::PI],
            vec![0, 1],
        )
        .unwrap();
        let far = State::se2(2.0, 1.0, 1.0);
        let dense = DenseSampleSet { points: vec![far], box_, kind: SequenceKind::Sobol };
        let system = SystemKind::reeds_shepp(1.0);
        let tiling = TilingSpec::new(vec![0, 1], vec![8.0, 8.0], 0);
        let zero = vec![system.zero_state()];
        let est = estimate_dispersion(&zero, &dense, &system, &tiling).unwrap();
        let expect = quasimetric(&far, &system.zero_state(), &system).unwrap().max;
        assert!((est - expect).abs() < 1e-12);
    }

    #[test]
    fn adding_vertices_never_increases_the_estimate() {
        let (dense, system, tiling) = rs_setup(60);
        let mut vertices = vec![system.zero_state()];
        let mut prev = estimate_dispersion(&vertices, &dense, &system, &tiling).unwrap();
        for extra in [5usize, 17, 33, 49] {
            vertices.push(dense.points[extra]);
            let now = estimate_dispersion(&vertices, &dense, &system, &tiling).unwrap();
            assert!(now <= prev + 1e-12);
            prev = now;
        }
    }

    #[test]
    fn tiling_estimate_matches_materialized_block() {
        // Radius-1 tiled estimate against vertices explicitly copied into
        // the 3x3 block of neighboring tiles.
        let (dense, system, tiling) = rs_setup(50);
        let run = min_dispersion_vertices(2.0, &dense, &system, &tiling, 64).unwrap();
        let est_tiled = estimate_dispersion(&run.vertices, &dense, &system, &tiling).unwrap();
        let block: Vec<State> = tile_points(&run.vertices, &tiling)
            .into_iter()
            .map(|t| t.state)
            .collect();
        let no_tiling = TilingSpec::new(vec![0, 1], tiling.tile_extent.clone(), 0);
        let est_block = estimate_dispersion(&block, &dense, &system, &no_tiling).unwrap();
        assert!((est_tiled - est_block).abs() <= 1e-9);
    }

    #[test]
    fn non_symmetric_soundness_both_directions_within_d() {
        use crate::systems::double_integrator;
        let side = 4.0;
        let v_max = 1.5;
        let box_ = StateBox::new(
            vec![-side / 2.0, -side / 2.0, -v_max, -v_max],
            vec![side / 2.0, side / 2.0, v_max, v_max],
            vec![0, 1],
        )
        .unwrap();
        let dense = generate_dense(&box_, 120, SequenceKind::Sobol).unwrap();
        let system = SystemKind::double_integrator(1.0, 6.0, v_max);
        let tiling = TilingSpec::new(vec![0, 1], vec![side, side], 1);
        let run = min_dispersion_vertices(5.0, &dense, &system, &tiling, 130).unwrap();
        let d = run.final_dispersion;
        let tiles = tile_points(&run.vertices, &run.tiling);
        let (rho, u_max) = (1.0, 6.0);
        for sample in &dense.points {
            let ok = tiles.iter().any(|t| {
                let fwd = double_integrator::steer_cost(sample, &t.state, rho, u_max, v_max).unwrap();
                let bwd = double_integrator::steer_cost(&t.state, sample, rho, u_max, v_max).unwrap();
                fwd <= d + 1e-9 && bwd <= d + 1e-9
            });
            assert!(ok, "sample without a two-way d-cost vertex");
        }
    }
}
