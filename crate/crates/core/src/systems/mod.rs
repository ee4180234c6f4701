//! Dynamical systems, cost functionals and optimal steering.
//!
//! Two systems are provided: the Reeds-Shepp car (cost = path length) and
//! the planar double integrator with running cost `|u|^2 + rho`. Both expose
//! an exact free-space steering function; the symmetrized cost
//! `max(J(a,b), J(b,a))` is the quasimetric everything downstream runs on.

pub mod double_integrator;
pub mod reeds_shepp;

use serde::Serialize;
use thiserror::Error;

use crate::state::State;

#[derive(Debug, Error)]
pub enum SteerError {
    #[error("state dimension {found} does not match system dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("boundary velocity {0} exceeds v_max {1}")]
    VelocityBound(f64, f64),
    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("no feasible duration below the cap of {cap} s")]
    Unreachable { cap: f64 },
}

/// System selector plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SystemKind {
    ReedsShepp {
        turning_radius: f64,
    },
    DoubleIntegrator2D {
        /// Weight of elapsed time in the running cost.
        rho: f64,
        /// Per-axis acceleration bound.
        u_max: f64,
        /// Per-axis speed bound.
        v_max: f64,
    },
}

impl SystemKind {
    pub fn reeds_shepp(turning_radius: f64) -> Self {
        assert!(turning_radius > 0.0, "turning_radius must be positive");
        SystemKind::ReedsShepp { turning_radius }
    }

    pub fn double_integrator(rho: f64, u_max: f64, v_max: f64) -> Self {
        assert!(rho > 0.0 && u_max > 0.0 && v_max > 0.0, "DI parameters must be positive");
        SystemKind::DoubleIntegrator2D { rho, u_max, v_max }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            SystemKind::ReedsShepp { .. } => 3,
            SystemKind::DoubleIntegrator2D { .. } => 4,
        }
    }

    /// Workspace-position coordinate indices (the tiled axes).
    pub fn spatial_dims(&self) -> &'static [usize] {
        &[0, 1]
    }

    pub fn zero_state(&self) -> State {
        State::zero(self.state_dim())
    }

    fn check_dims(&self, a: &State, b: &State) -> Result<(), SteerError> {
        let expected = self.state_dim();
        for s in [a, b] {
            if s.dim() != expected {
                return Err(SteerError::Dimension { expected, found: s.dim() });
            }
        }
        Ok(())
    }

    /// Minimum-cost free-space trajectory from `a` to `b`.
    pub fn steer(&self, a: &State, b: &State) -> Result<Trajectory, SteerError> {
        self.check_dims(a, b)?;
        match *self {
            SystemKind::ReedsShepp { turning_radius } => {
                Ok(reeds_shepp::steer(a, b, turning_radius))
            }
            SystemKind::DoubleIntegrator2D { rho, u_max, v_max } => {
                double_integrator::steer(a, b, rho, u_max, v_max)
            }
        }
    }

    /// Steering cost only; avoids building the trajectory representation.
    pub fn steer_cost(&self, a: &State, b: &State) -> Result<f64, SteerError> {
        self.check_dims(a, b)?;
        match *self {
            SystemKind::ReedsShepp { turning_radius } => {
                Ok(reeds_shepp::cost(a, b, turning_radius))
            }
            SystemKind::DoubleIntegrator2D { rho, u_max, v_max } => {
                double_integrator::steer_cost(a, b, rho, u_max, v_max)
            }
        }
    }

    /// Cheap certified upper bound on the steering cost, used by the
    /// reachable-set departability variant to filter nodes without running
    /// the full steering solve.
    pub fn cost_upper_bound(&self, a: &State, b: &State) -> Result<f64, SteerError> {
        self.check_dims(a, b)?;
        match *self {
            SystemKind::ReedsShepp { turning_radius } => {
                Ok(reeds_shepp::cost_upper_bound(a, b, turning_radius))
            }
            SystemKind::DoubleIntegrator2D { rho, u_max, v_max } => {
                double_integrator::cost_upper_bound(a, b, rho, u_max, v_max)
            }
        }
    }
}

/// Steering costs in both directions plus their maximum, the symmetrized
/// quasimetric the dispersion is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostPair {
    pub forward: f64,
    pub backward: f64,
    pub max: f64,
}

/// Evaluate the steering cost in both directions.
pub fn quasimetric(a: &State, b: &State, system: &SystemKind) -> Result<CostPair, SteerError> {
    let forward = system.steer_cost(a, b)?;
    let backward = system.steer_cost(b, a)?;
    Ok(CostPair { forward, backward, max: forward.max(backward) })
}

/// Reeds-Shepp segment type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SegmentKind {
    Left,
    Straight,
    Right,
}

/// One Reeds-Shepp segment; negative length means reverse gear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub length: f64,
}

/// System-specific trajectory representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TrajectoryRepr {
    /// Segment word rolled out from the start pose at the given radius.
    ReedsShepp { radius: f64, segments: Vec<Segment> },
    /// Per-axis cubic position polynomials `p(t) = k0 + k1 t + k2 t^2 + k3 t^3`.
    DoubleIntegrator { coeffs_x: [f64; 4], coeffs_y: [f64; 4] },
}

/// A feasible motion between two states with its optimal cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub start: State,
    pub end: State,
    /// Optimal cost J of the motion.
    pub cost: f64,
    /// Duration in seconds (arc length for the unit-speed car).
    pub duration: f64,
    pub repr: TrajectoryRepr,
}

impl Trajectory {
    /// State at elapsed time (car: arc length) `t` in `[0, duration]`.
    pub fn sample_at(&self, t: f64) -> State {
        match &self.repr {
            TrajectoryRepr::ReedsShepp { radius, segments } => {
                reeds_shepp::sample_at(&self.start, segments, *radius, t)
            }
            TrajectoryRepr::DoubleIntegrator { coeffs_x, coeffs_y } => {
                double_integrator::sample_at(coeffs_x, coeffs_y, t)
            }
        }
    }

    /// Accumulated running cost from the start up to time `t`.
    pub fn cost_at(&self, t: f64) -> f64 {
        match &self.repr {
            TrajectoryRepr::ReedsShepp { .. } => t,
            TrajectoryRepr::DoubleIntegrator { coeffs_x, coeffs_y } => {
                let rate = self.cost_rate_rho();
                double_integrator::effort_integral(coeffs_x, t)
                    + double_integrator::effort_integral(coeffs_y, t)
                    + rate * t
            }
        }
    }

    fn cost_rate_rho(&self) -> f64 {
        if self.duration == 0.0 {
            return 0.0;
        }
        // cost = effort(duration) + rho * duration; recover rho from the total.
        match &self.repr {
            TrajectoryRepr::ReedsShepp { .. } => 0.0,
            TrajectoryRepr::DoubleIntegrator { coeffs_x, coeffs_y } => {
                let effort = double_integrator::effort_integral(coeffs_x, self.duration)
                    + double_integrator::effort_integral(coeffs_y, self.duration);
                (self.cost - effort) / self.duration
            }
        }
    }

    /// Copy with the endpoint fields pinned to the given states. Used after
    /// tile translation so consecutive hops of a plan share bit-identical
    /// node states; the interior shape moves by at most rounding error.
    pub fn with_endpoints(mut self, start: State, end: State) -> Trajectory {
        if let TrajectoryRepr::DoubleIntegrator { coeffs_x, coeffs_y } = &mut self.repr {
            coeffs_x[0] = start.get(0);
            coeffs_y[0] = start.get(1);
        }
        self.start = start;
        self.end = end;
        self
    }

    /// Copy translated by `offsets` along the given coordinate dims.
    ///
    /// Valid only for spatial dims; both systems are position-invariant.
    pub fn translated(&self, dims: &[usize], offsets: &[f64]) -> Trajectory {
        let mut out = self.clone();
        out.start = self.start.translated(dims, offsets);
        out.end = self.end.translated(dims, offsets);
        if let TrajectoryRepr::DoubleIntegrator { coeffs_x, coeffs_y } = &mut out.repr {
            for (&d, &o) in dims.iter().zip(offsets) {
                match d {
                    0 => coeffs_x[0] += o,
                    1 => coeffs_y[0] += o,
                    _ => panic!("translation along non-spatial dim {d}"),
                }
            }
        }
        out
    }
}

/// States along a trajectory spaced at most `resolution` apart in
/// accumulated cost, endpoints always included.
pub fn sample_trajectory(t: &Trajectory, resolution: f64) -> Vec<State> {
    assert!(resolution > 0.0, "resolution must be positive");
    if t.cost <= 0.0 {
        return vec![t.start];
    }
    let n = (t.cost / resolution).ceil() as usize;
    let mut out = Vec::with_capacity(n + 1);
    out.push(t.start);
    for k in 1..n {
        let target_cost = t.cost * k as f64 / n as f64;
        let time = invert_cost(t, target_cost);
        out.push(t.sample_at(time));
    }
    out.push(t.end);
    out
}

/// Bisection for the time at which accumulated cost reaches `target`.
/// The running cost is strictly positive, so `cost_at` is increasing.
fn invert_cost(t: &Trajectory, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, t.duration);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if t.cost_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
