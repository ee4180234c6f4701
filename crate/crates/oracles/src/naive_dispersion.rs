//! Literal full-recompute transcription of the greedy vertex selection:
//! every iteration re-tiles the entire vertex set and rebuilds the running
//! minima from scratch with a sequential double loop. Used to prove the
//! incremental implementation equivalent.

use primgraph::dispersion::TilingSpec;
use primgraph::sampling::DenseSampleSet;
use primgraph::systems::quasimetric;
use primgraph::{State, SystemKind};

pub struct NaiveRun {
    pub vertices: Vec<State>,
    pub dispersion_history: Vec<f64>,
    pub final_dispersion: f64,
    pub reached_target: bool,
}

fn tile_all(vertices: &[State], tiling: &TilingSpec) -> Vec<State> {
    let mut out = Vec::new();
    for v in vertices {
        for offset in tiling.offsets() {
            out.push(v.translated(&tiling.spatial_dims, &tiling.translation(&offset)));
        }
    }
    out
}

pub fn naive_min_dispersion(
    target: f64,
    dense: &DenseSampleSet,
    system: &SystemKind,
    tiling: &TilingSpec,
    vertex_cap: usize,
) -> NaiveRun {
    let mut vertices = vec![system.zero_state()];
    let mut history = Vec::new();
    loop {
        let tiles = tile_all(&vertices, tiling);
        let mut jmin = vec![f64::INFINITY; dense.points.len()];
        for (i, sample) in dense.points.iter().enumerate() {
            for tile in &tiles {
                let j = quasimetric(sample, tile, system).expect("steering succeeds").max;
                if j < jmin[i] {
                    jmin[i] = j;
                }
            }
        }
        let (mut arg, mut d) = (0usize, f64::NEG_INFINITY);
        for (i, &v) in jmin.iter().enumerate() {
            if v > d {
                d = v;
                arg = i;
            }
        }
        history.push(d);
        if d <= target {
            return NaiveRun {
                vertices,
                final_dispersion: d,
                dispersion_history: history,
                reached_target: true,
            };
        }
        if vertices.len() >= vertex_cap {
            return NaiveRun {
                vertices,
                final_dispersion: d,
                dispersion_history: history,
                reached_target: false,
            };
        }
        vertices.push(dense.points[arg]);
    }
}
