//! Double-integrator oracles: a discretized optimal-control transcription
//! for the fixed-duration inner problem and a dense duration grid for the
//! bi-level problem.

use primgraph::systems::double_integrator::inner_effort;
use primgraph::State;

/// Minimum-effort cost of the fixed-endpoint problem, computed as the
/// minimum-norm piecewise-constant control on an `n`-step grid.
///
/// Per axis the two boundary constraints are linear in the control samples,
/// so the optimum is the normal-equation projection `u = A^T (A A^T)^-1 b`.
pub fn discrete_inner_effort(a: &State, b: &State, t: f64, n: usize) -> f64 {
    assert!(t > 0.0 && n >= 2);
    let dt = t / n as f64;
    let mut total = 0.0;
    for (pi, vi) in [(0usize, 2usize), (1, 3)] {
        let dv = b.get(vi) - a.get(vi);
        let dp = b.get(pi) - a.get(pi) - a.get(vi) * t;
        // Constraint rows: velocity row AV, position row AP.
        // Applying u_k over step k adds u_k*dt to the final velocity and
        // u_k*(dt^2/2 + (n-1-k)*dt^2) to the final position.
        let av: Vec<f64> = (0..n).map(|_| dt).collect();
        let ap: Vec<f64> = (0..n)
            .map(|k| 0.5 * dt * dt + (n - 1 - k) as f64 * dt * dt)
            .collect();
        // Gram matrix of the two rows.
        let g11: f64 = av.iter().map(|x| x * x).sum();
        let g12: f64 = av.iter().zip(&ap).map(|(x, y)| x * y).sum();
        let g22: f64 = ap.iter().map(|x| x * x).sum();
        let det = g11 * g22 - g12 * g12;
        let l1 = (g22 * dv - g12 * dp) / det;
        let l2 = (-g12 * dv + g11 * dp) / det;
        let effort: f64 = (0..n)
            .map(|k| {
                let u = l1 * av[k] + l2 * ap[k];
                u * u * dt
            })
            .sum();
        total += effort;
    }
    total
}

/// Bi-level steering cost by dense log-spaced duration grid plus
/// golden-section refinement, using the library's inner solver.
pub fn duration_grid_cost(a: &State, b: &State, rho: f64, grid_points: usize) -> f64 {
    let (t_lo, t_hi) = (1e-4f64, 1e3f64);
    let g = |t: f64| inner_effort(a, b, t).map(|(e, _, _)| e + rho * t).unwrap();
    let ratio = (t_hi / t_lo).ln() / (grid_points - 1) as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..grid_points {
        let t = t_lo * (ratio * i as f64).exp();
        let gi = g(t);
        if gi < best {
            best = gi;
            best_i = i;
        }
    }
    let mut lo = t_lo * (ratio * best_i.saturating_sub(1) as f64).exp();
    let mut hi = t_lo * (ratio * (best_i + 1).min(grid_points - 1) as f64).exp();
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    while hi - lo > 1e-12 * 0.5 * (lo + hi) {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        }
    }
    g(0.5 * (lo + hi))
}
