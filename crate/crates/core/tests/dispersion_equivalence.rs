//! Incremental vertex selection against the literal full-recompute
//! transcription, plus property checks on the run record.

use primgraph::dispersion::{estimate_dispersion, min_dispersion_vertices, TilingSpec};
use primgraph::sampling::{generate_dense, SequenceKind};
use primgraph::state::StateBox;
use primgraph::SystemKind;
use primgraph_oracles::naive_dispersion::naive_min_dispersion;

fn rs_dense(side: f64, n: usize) -> (primgraph::sampling::DenseSampleSet, SystemKind) {
    let box_ = StateBox::new(
        vec![-side / 2.0, -side / 2.0, -std::f64::consts::PI],
        vec![side / 2.0, side / 2.0, std::f64::consts::PI],
        vec![0, 1],
    )
    .unwrap();
    let dense = generate_dense(&box_, n, SequenceKind::Sobol).unwrap();
    (dense, SystemKind::reeds_shepp(1.0))
}

#[test]
fn incremental_matches_naive_without_tiling() {
    let (dense, system) = rs_dense(3.0, 50);
    let tiling = TilingSpec::new(vec![0, 1], vec![3.0, 3.0], 0);
    let run = min_dispersion_vertices(1.2, &dense, &system, &tiling, 64).unwrap();
    let naive = naive_min_dispersion(1.2, &dense, &system, &tiling, 64);
    assert!(naive.reached_target);
    assert_eq!(run.vertices.len(), naive.vertices.len());
    for (a, b) in run.vertices.iter().zip(&naive.vertices) {
        assert_eq!(a, b, "vertex order must be identical");
    }
    assert_eq!(run.dispersion_history.len(), naive.dispersion_history.len());
    for (a, b) in run.dispersion_history.iter().zip(&naive.dispersion_history) {
        assert!((a - b).abs() <= 1e-12, "history {a} vs {b}");
    }
}

#[test]
fn incremental_matches_naive_with_tiling() {
    let (dense, system) = rs_dense(3.0, 40);
    let tiling = TilingSpec::new(vec![0, 1], vec![3.0, 3.0], 1);
    let run = min_dispersion_vertices(1.5, &dense, &system, &tiling, 64).unwrap();
    let naive = naive_min_dispersion(1.5, &dense, &system, &tiling, 64);
    assert_eq!(run.vertices, naive.vertices);
    for (a, b) in run.dispersion_history.iter().zip(&naive.dispersion_history) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn greedy_appended_vertex_attains_the_estimate() {
    let (dense, system) = rs_dense(3.0, 90);
    let tiling = TilingSpec::new(vec![0, 1], vec![3.0, 3.0], 1);
    let run = min_dispersion_vertices(1.3, &dense, &system, &tiling, 128).unwrap();
    // The vertex appended after recording history[k] is the dense sample
    // whose running minimum equaled that estimate.
    for k in 0..run.vertices.len() - 1 {
        let prefix = &run.vertices[..=k];
        let est = estimate_dispersion(prefix, &dense, &system, &tiling).unwrap();
        assert!((est - run.dispersion_history[k]).abs() <= 1e-12);
        let appended = run.vertices[k + 1];
        let tiles = primgraph::dispersion::tile_points(prefix, &tiling);
        let jmin = tiles
            .iter()
            .map(|t| primgraph::systems::quasimetric(&appended, &t.state, &system).unwrap().max)
            .fold(f64::INFINITY, f64::min);
        assert!(
            (jmin - run.dispersion_history[k]).abs() <= 1e-12,
            "appended vertex does not attain the max at step {k}"
        );
    }
}
