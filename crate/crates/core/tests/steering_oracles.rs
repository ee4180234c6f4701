//! Steering implementations against independent numerical oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use primgraph::systems::double_integrator;
use primgraph::systems::reeds_shepp;
use primgraph::{State, SystemKind};
use primgraph_oracles::{di, random_di_states, random_se2_states, rs};

#[test]
fn rs_half_turn_matches_word_oracle() {
    let cost = reeds_shepp::cost(
        &State::se2(0.0, 0.0, 0.0),
        &State::se2(0.0, 0.0, std::f64::consts::PI),
        1.0,
    );
    let oracle = rs::oracle_cost(&[0.0, 0.0, 0.0], &[0.0, 0.0, std::f64::consts::PI], 1.0);
    assert!((cost - oracle).abs() <= 1e-9, "impl {cost} vs oracle {oracle}");
}

#[test]
fn rs_cost_matches_word_oracle_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let starts = random_se2_states(&mut rng, 120, 3.0);
    let goals = random_se2_states(&mut rng, 120, 3.0);
    let failures: Vec<String> = starts
        .par_iter()
        .zip(goals.par_iter())
        .filter_map(|(a, b)| {
            let cost = reeds_shepp::cost(a, b, 1.0);
            let oracle =
                rs::oracle_cost(&[a.get(0), a.get(1), a.get(2)], &[b.get(0), b.get(1), b.get(2)], 1.0);
            ((cost - oracle).abs() > 1e-9).then(|| format!("{a:?} -> {b:?}: impl {cost} oracle {oracle}"))
        })
        .collect();
    assert!(failures.is_empty(), "{} mismatches:\n{}", failures.len(), failures.join("\n"));
}

#[test]
fn rs_steer_rollout_reaches_goal_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let system = SystemKind::reeds_shepp(0.8);
    for _ in 0..300 {
        let a = random_se2_states(&mut rng, 1, 4.0)[0];
        let b = random_se2_states(&mut rng, 1, 4.0)[0];
        let t = system.steer(&a, &b).unwrap();
        let end = t.sample_at(t.duration);
        assert!((end.get(0) - b.get(0)).abs() <= 1e-9, "{a:?} {b:?}");
        assert!((end.get(1) - b.get(1)).abs() <= 1e-9);
        assert!(reeds_shepp::wrap_angle(end.get(2) - b.get(2)).abs() <= 1e-9);
        let seg_total: f64 = match &t.repr {
            primgraph::systems::TrajectoryRepr::ReedsShepp { segments, .. } => {
                segments.iter().map(|s| s.length.abs()).sum()
            }
            _ => unreachable!(),
        };
        assert!((seg_total - t.cost).abs() <= 1e-9);
    }
}

#[test]
fn di_inner_effort_matches_discrete_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let a = random_di_states(&mut rng, 1, 3.0, 1.5)[0];
        let b = random_di_states(&mut rng, 1, 3.0, 1.5)[0];
        let t = rng.gen_range(0.4..4.0);
        let (effort, _, _) = double_integrator::inner_effort(&a, &b, t).unwrap();
        let discrete = di::discrete_inner_effort(&a, &b, t, 4000);
        let scale = effort.abs().max(1e-9);
        assert!(
            (effort - discrete).abs() <= 1e-4 * scale,
            "effort {effort} vs discrete {discrete} (T={t})"
        );
    }
}

#[test]
fn di_bilevel_cost_matches_duration_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let (rho, u_max, v_max) = (1.0, 50.0, 50.0);
    for _ in 0..25 {
        let a = random_di_states(&mut rng, 1, 3.0, 1.5)[0];
        let b = random_di_states(&mut rng, 1, 3.0, 1.5)[0];
        let cost = double_integrator::steer_cost(&a, &b, rho, u_max, v_max).unwrap();
        let oracle = di::duration_grid_cost(&a, &b, rho, 10_000);
        assert!(
            (cost - oracle).abs() <= 1e-6 * oracle.abs().max(1e-9),
            "impl {cost} vs oracle {oracle} for {a:?} -> {b:?}"
        );
    }
}

#[test]
fn di_returned_duration_is_locally_optimal_or_constraint_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (rho, u_max, v_max) = (1.0, 2.0, 1.5);
    for _ in 0..40 {
        let a = random_di_states(&mut rng, 1, 2.0, 1.2)[0];
        let b = random_di_states(&mut rng, 1, 2.0, 1.2)[0];
        if a == b {
            continue;
        }
        let traj = double_integrator::steer(&a, &b, rho, u_max, v_max).unwrap();
        let t_star = traj.duration;
        let g = |t: f64| {
            double_integrator::inner_effort(&a, &b, t)
                .map(|(e, _, _)| e + rho * t)
                .unwrap()
        };
        let h = 1e-6 * t_star;
        // Departing to longer durations never helps.
        let right_slope = (g(t_star + h) - g(t_star)) / h;
        assert!(right_slope >= -1e-4, "right slope {right_slope}");
        // Departing to shorter durations either raises the objective or
        // violates an input/speed bound.
        let shorter = t_star - h;
        let (_, kx, ky) = double_integrator::inner_effort(&a, &b, shorter).unwrap();
        let feasible_shorter = [kx, ky].iter().all(|k| {
            let u0 = 2.0 * k[2];
            let u1 = 2.0 * k[2] + 6.0 * k[3] * shorter;
            u0.abs() <= u_max + 1e-7 && u1.abs() <= u_max + 1e-7
        });
        if feasible_shorter {
            let left_slope = (g(shorter) - g(t_star)) / h;
            assert!(left_slope >= -1e-4, "left slope {left_slope}");
        }
    }
}

#[test]
fn di_cost_beats_random_feasible_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(555);
    let (rho, u_max, v_max) = (1.0, 100.0, 100.0);
    for _ in 0..10 {
        let a = random_di_states(&mut rng, 1, 2.0, 1.0)[0];
        let b = random_di_states(&mut rng, 1, 2.0, 1.0)[0];
        if a == b {
            continue;
        }
        let best = double_integrator::steer_cost(&a, &b, rho, u_max, v_max).unwrap();
        for _ in 0..100 {
            // Random duration, then a quintic wiggle that keeps both
            // boundary conditions: p(t) + w * t^2 (T - t)^2 per axis.
            let t_total = rng.gen_range(0.2..8.0);
            let (effort_base, kx, ky) = double_integrator::inner_effort(&a, &b, t_total).unwrap();
            let _ = effort_base;
            let wx: f64 = rng.gen_range(-0.5..0.5);
            let wy: f64 = rng.gen_range(-0.5..0.5);
            let effort = |k: &[f64; 4], w: f64| {
                // integrand: (p'' + w * q'')^2 with q = t^2 (T-t)^2.
                let n = 4000;
                let dt = t_total / n as f64;
                let mut acc = 0.0;
                for i in 0..n {
                    let t = (i as f64 + 0.5) * dt;
                    let p_dd = 2.0 * k[2] + 6.0 * k[3] * t;
                    let q_dd = 12.0 * t * t - 12.0 * t_total * t + 2.0 * t_total * t_total;
                    let u = p_dd + w * q_dd;
                    acc += u * u * dt;
                }
                acc
            };
            let perturbed = effort(&kx, wx) + effort(&ky, wy) + rho * t_total;
            assert!(
                best <= perturbed + 1e-6 * perturbed.abs().max(1.0),
                "optimal {best} beaten by perturbation {perturbed}"
            );
        }
    }
}
