//! Uniform input-space sampling primitives over fixed time segments: the
//! comparison method, exposed through the same implicit-space interface the
//! primitive-graph planner uses.

use serde::Serialize;

use crate::planner::{Candidate, ImplicitSpace};
use crate::state::State;
use crate::systems::{SteerError, SystemKind, Trajectory, TrajectoryRepr};

/// Constant-input primitive family for the double integrator: the input
/// lattice is `branching_per_dim` evenly spaced values per axis, applied
/// over a fixed duration.
#[derive(Debug, Clone, Serialize)]
pub struct UniformInputSpec {
    pub branching_per_dim: usize,
    pub duration: f64,
    pub u_max: f64,
    pub system: SystemKind,
    /// Duplicate-detection grid: position and velocity snap resolutions.
    /// Baseline states live on no finite vertex set, so search keys are
    /// state-space cells; the resolution is part of every reported result.
    pub snap_pos: f64,
    pub snap_vel: f64,
}

impl UniformInputSpec {
    pub fn new(branching_per_dim: usize, duration: f64, u_max: f64, system: SystemKind) -> Self {
        assert!(branching_per_dim >= 2, "need at least two inputs per dimension");
        assert!(duration > 0.0, "duration must be positive");
        assert!(u_max > 0.0, "u_max must be positive");
        assert!(
            matches!(system, SystemKind::DoubleIntegrator2D { .. }),
            "uniform input sampling is defined for the double integrator"
        );
        let snap_pos = 0.25 * u_max * duration * duration;
        let snap_vel = 0.25 * u_max * duration;
        Self { branching_per_dim, duration, u_max, system, snap_pos, snap_vel }
    }

    fn params(&self) -> (f64, f64, f64) {
        match self.system {
            SystemKind::DoubleIntegrator2D { rho, u_max, v_max } => (rho, u_max, v_max),
            SystemKind::ReedsShepp { .. } => unreachable!("validated at construction"),
        }
    }
}

/// Cartesian product of evenly spaced per-axis input values on
/// `[-u_max, u_max]`; size `branching_per_dim^2`.
pub fn input_lattice(spec: &UniformInputSpec) -> Vec<[f64; 2]> {
    let b = spec.branching_per_dim;
    let axis: Vec<f64> = (0..b)
        .map(|i| -spec.u_max + 2.0 * spec.u_max * i as f64 / (b - 1) as f64)
        .collect();
    let mut out = Vec::with_capacity(b * b);
    for &ux in &axis {
        for &uy in &axis {
            out.push([ux, uy]);
        }
    }
    out
}

/// A constant-input rollout; infeasible when the velocity leaves its box.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub trajectory: Trajectory,
    pub feasible: bool,
}

/// Closed-form constant-input rollout of the double integrator: position
/// quadratic, velocity linear. Cost is `(|u|^2 + rho) * duration`.
pub fn forward_simulate(x: &State, u: [f64; 2], duration: f64, spec: &UniformInputSpec) -> Rollout {
    let (rho, _, v_max) = spec.params();
    let t = duration;
    let end = State::pos_vel(
        x.get(0) + x.get(2) * t + 0.5 * u[0] * t * t,
        x.get(1) + x.get(3) * t + 0.5 * u[1] * t * t,
        x.get(2) + u[0] * t,
        x.get(3) + u[1] * t,
    );
    // Velocity is linear in time, so the endpoints bound the excursion.
    let feasible = end.get(2).abs() <= v_max && end.get(3).abs() <= v_max;
    let cost = (u[0] * u[0] + u[1] * u[1] + rho) * t;
    let trajectory = Trajectory {
        start: *x,
        end,
        cost,
        duration: t,
        repr: TrajectoryRepr::DoubleIntegrator {
            coeffs_x: [x.get(0), x.get(2), 0.5 * u[0], 0.0],
            coeffs_y: [x.get(1), x.get(3), 0.5 * u[1], 0.0],
        },
    };
    Rollout { trajectory, feasible }
}

/// One successor per feasible lattice input.
pub fn baseline_expand(x: &State, spec: &UniformInputSpec) -> Vec<(State, f64, Trajectory)> {
    input_lattice(spec)
        .into_iter()
        .filter_map(|u| {
            let rollout = forward_simulate(x, u, spec.duration, spec);
            rollout
                .feasible
                .then(|| (rollout.trajectory.end, rollout.trajectory.cost, rollout.trajectory))
        })
        .collect()
}

/// Search-space adapter: keys are states snapped to the duplicate-detection
/// grid, the start state is the single entry node.
pub struct BaselineSpace {
    pub spec: UniformInputSpec,
}

impl BaselineSpace {
    pub fn new(spec: UniformInputSpec) -> Self {
        Self { spec }
    }

    fn snap(&self, s: &State) -> [i64; 4] {
        [
            (s.get(0) / self.spec.snap_pos).round() as i64,
            (s.get(1) / self.spec.snap_pos).round() as i64,
            (s.get(2) / self.spec.snap_vel).round() as i64,
            (s.get(3) / self.spec.snap_vel).round() as i64,
        ]
    }
}

impl ImplicitSpace for BaselineSpace {
    type Key = [i64; 4];

    fn system(&self) -> &SystemKind {
        &self.spec.system
    }

    fn entry_candidates(&self, start: &State) -> Result<Vec<Candidate<Self::Key>>, SteerError> {
        let trajectory = Trajectory {
            start: *start,
            end: *start,
            cost: 0.0,
            duration: 0.0,
            repr: TrajectoryRepr::DoubleIntegrator {
                coeffs_x: [start.get(0), start.get(2), 0.0, 0.0],
                coeffs_y: [start.get(1), start.get(3), 0.0, 0.0],
            },
        };
        Ok(vec![Candidate { key: self.snap(start), state: *start, cost: 0.0, trajectory }])
    }

    fn successors(&self, _key: &Self::Key, state: &State) -> Result<Vec<Candidate<Self::Key>>, SteerError> {
        Ok(baseline_expand(state, &self.spec)
            .into_iter()
            .map(|(s, cost, trajectory)| Candidate { key: self.snap(&s), state: s, cost, trajectory })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(branching: usize, duration: f64) -> UniformInputSpec {
        UniformInputSpec::new(branching, duration, 2.0, SystemKind::double_integrator(1.0, 2.0, 3.0))
    }

    #[test]
    fn odd_branching_includes_zero_input() {
        let lattice = input_lattice(&spec(3, 0.5));
        assert_eq!(lattice.len(), 9);
        assert!(lattice.iter().any(|u| u[0] == 0.0 && u[1] == 0.0));
    }

    #[test]
    fn even_branching_has_no_zero_input() {
        let lattice = input_lattice(&spec(2, 0.5));
        assert_eq!(lattice.len(), 4);
        assert!(lattice.iter().all(|u| u[0] != 0.0 || u[1] != 0.0));
    }

    #[test]
    fn branching_five_gives_twenty_five_primitives() {
        assert_eq!(input_lattice(&spec(5, 0.1)).len(), 25);
    }

    #[test]
    fn zero_input_from_rest_stays_put_at_time_cost() {
        let s = spec(3, 0.5);
        let rollout = forward_simulate(&State::pos_vel(0.0, 0.0, 0.0, 0.0), [0.0, 0.0], 0.5, &s);
        assert!(rollout.feasible);
        assert_eq!(rollout.trajectory.end, State::pos_vel(0.0, 0.0, 0.0, 0.0));
        assert!((rollout.trajectory.cost - 0.5).abs() < 1e-12); // rho * T
    }

    #[test]
    fn ballistic_drift_moves_with_velocity() {
        let s = spec(3, 1.0);
        let rollout = forward_simulate(&State::pos_vel(0.0, 0.0, 1.0, 0.0), [0.0, 0.0], 1.0, &s);
        assert!(rollout.trajectory.end.approx_eq(&State::pos_vel(1.0, 0.0, 1.0, 0.0), 1e-12));
    }

    #[test]
    fn rollout_matches_fine_rk4() {
        let s = spec(3, 0.7);
        let x0 = State::pos_vel(0.2, -0.1, 0.5, -0.4);
        let u = [1.3, -0.8];
        let rollout = forward_simulate(&x0, u, 0.7, &s);
        // Independent fixed-step RK4 on the linear dynamics.
        let mut y = [x0.get(0), x0.get(1), x0.get(2), x0.get(3)];
        let f = |y: &[f64; 4]| [y[2], y[3], u[0], u[1]];
        let dt = 1e-4_f64;
        let steps = (0.7 / dt).round() as usize;
        for _ in 0..steps {
            let k1 = f(&y);
            let y2 = std::array::from_fn(|i| y[i] + 0.5 * dt * k1[i]);
            let k2 = f(&y2);
            let y3 = std::array::from_fn(|i| y[i] + 0.5 * dt * k2[i]);
            let k3 = f(&y3);
            let y4 = std::array::from_fn(|i| y[i] + dt * k3[i]);
            let k4 = f(&y4);
            for i in 0..4 {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let end = rollout.trajectory.end;
        for i in 0..4 {
            assert!((end.get(i) - y[i]).abs() < 1e-9, "coord {i}: {} vs {}", end.get(i), y[i]);
        }
    }

    #[test]
    fn velocity_violating_rollouts_are_filtered_not_errors() {
        let s = spec(3, 1.0);
        // At v = 2.9 with v_max = 3, accelerating at +2 for 1 s exceeds.
        let x = State::pos_vel(0.0, 0.0, 2.9, 0.0);
        let out = baseline_expand(&x, &s);
        assert!(out.len() < input_lattice(&s).len());
        assert!(!out.is_empty());
        for (state, _, _) in &out {
            assert!(state.get(2).abs() <= 3.0 && state.get(3).abs() <= 3.0);
        }
    }

    #[test]
    fn expansions_translate_with_the_state() {
        let s = spec(3, 0.5);
        let a = baseline_expand(&State::pos_vel(0.0, 0.0, 0.5, -0.5), &s);
        let b = baseline_expand(&State::pos_vel(10.0, -7.0, 0.5, -0.5), &s);
        assert_eq!(a.len(), b.len());
        for (ea, eb) in a.iter().zip(&b) {
            assert!((eb.0.get(0) - ea.0.get(0) - 10.0).abs() < 1e-12);
            assert!((eb.0.get(1) - ea.0.get(1) + 7.0).abs() < 1e-12);
            assert_eq!(ea.0.get(2), eb.0.get(2));
            assert_eq!(ea.1, eb.1);
        }
    }

    #[test]
    fn depth_two_reachable_set_matches_double_application() {
        let s = spec(3, 0.5);
        let x0 = State::pos_vel(0.0, 0.0, 0.0, 0.0);
        let depth1 = baseline_expand(&x0, &s);
        let mut depth2: Vec<State> = Vec::new();
        for (state, _, _) in &depth1 {
            for (state2, _, _) in baseline_expand(state, &s) {
                depth2.push(state2);
            }
        }
        // Brute-force double application of the input lattice.
        let mut expect: Vec<State> = Vec::new();
        for u1 in input_lattice(&s) {
            let r1 = forward_simulate(&x0, u1, 0.5, &s);
            if !r1.feasible {
                continue;
            }
            for u2 in input_lattice(&s) {
                let r2 = forward_simulate(&r1.trajectory.end, u2, 0.5, &s);
                if r2.feasible {
                    expect.push(r2.trajectory.end);
                }
            }
        }
        assert_eq!(depth2.len(), expect.len());
        for (a, b) in depth2.iter().zip(&expect) {
            assert!(a.approx_eq(b, 1e-12));
        }
    }

    #[test]
    fn multi_step_cost_is_additive() {
        let s = spec(3, 0.5);
        let x0 = State::pos_vel(0.0, 0.0, 0.0, 0.0);
        let u = [1.0, -1.0];
        let r1 = forward_simulate(&x0, u, 0.5, &s);
        let r2 = forward_simulate(&r1.trajectory.end, u, 0.5, &s);
        let two_step = r1.trajectory.cost + r2.trajectory.cost;
        let one_double = forward_simulate(&x0, u, 1.0, &s);
        assert!((two_step - one_double.trajectory.cost).abs() < 1e-12);
    }
}
