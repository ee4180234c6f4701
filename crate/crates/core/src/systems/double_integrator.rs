//! Planar double integrator with running cost `|u|^2 + rho`.
//!
//! The fixed-duration inner problem is solved in closed form: per axis the
//! minimum-effort position trajectory is a cubic polynomial, and the two
//! axes decouple. The outer problem minimizes `effort(T) + rho * T` over the
//! duration with a coarse bracketing scan plus golden-section refinement.
//! Acceleration and speed bounds are enforced by inflating the duration to
//! the feasibility boundary.

use crate::state::State;
use crate::systems::{SteerError, Trajectory, TrajectoryRepr};

const T_LO: f64 = 1e-3;
const T_HI_INIT: f64 = 60.0;
const T_CAP: f64 = 600.0;
const GRID_POINTS: usize = 128;
const REL_TOL: f64 = 1e-8;
const BOUND_TOL: f64 = 1e-9;

/// Position polynomial coefficients for one axis over `[0, T]`.
fn axis_coeffs(p0: f64, v0: f64, p1: f64, v1: f64, t: f64) -> [f64; 4] {
    let dp = p1 - p0 - v0 * t;
    let dv = v1 - v0;
    let k2 = (3.0 * dp - dv * t) / (t * t);
    let k3 = (dv * t - 2.0 * dp) / (t * t * t);
    [p0, v0, k2, k3]
}

/// `int_0^t (p''(s))^2 ds` for a cubic position polynomial.
pub fn effort_integral(k: &[f64; 4], t: f64) -> f64 {
    let (k2, k3) = (k[2], k[3]);
    4.0 * k2 * k2 * t + 12.0 * k2 * k3 * t * t + 12.0 * k3 * k3 * t * t * t
}

pub fn sample_at(kx: &[f64; 4], ky: &[f64; 4], t: f64) -> State {
    let pos = |k: &[f64; 4]| k[0] + t * (k[1] + t * (k[2] + t * k[3]));
    let vel = |k: &[f64; 4]| k[1] + t * (2.0 * k[2] + 3.0 * t * k[3]);
    State::pos_vel(pos(kx), pos(ky), vel(kx), vel(ky))
}

/// Minimum effort `int |u|^2` over trajectories of duration `t` meeting both
/// boundary states, with the optimizing per-axis cubics.
pub fn inner_effort(a: &State, b: &State, t: f64) -> Result<(f64, [f64; 4], [f64; 4]), SteerError> {
    if !(t > 0.0) {
        return Err(SteerError::NonPositiveDuration(t));
    }
    let kx = axis_coeffs(a.get(0), a.get(2), b.get(0), b.get(2), t);
    let ky = axis_coeffs(a.get(1), a.get(3), b.get(1), b.get(3), t);
    Ok((effort_integral(&kx, t) + effort_integral(&ky, t), kx, ky))
}

/// Coefficients of `effort(T) = A/T^3 + B/T^2 + C/T` for the pair.
fn effort_constants(a: &State, b: &State) -> (f64, f64, f64) {
    let mut ca = 0.0;
    let mut cb = 0.0;
    let mut cc = 0.0;
    for (pi, vi) in [(0, 2), (1, 3)] {
        let dp = b.get(pi) - a.get(pi);
        let (v0, v1) = (a.get(vi), b.get(vi));
        ca += 12.0 * dp * dp;
        cb += -12.0 * dp * (v0 + v1);
        cc += 4.0 * (v0 * v0 + v0 * v1 + v1 * v1);
    }
    (ca, cb, cc)
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > REL_TOL * 0.5 * (lo + hi) {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Unconstrained minimizer of `effort(T) + rho T`.
///
/// The objective diverges at both ends of the positive axis but its
/// stationarity condition is a quartic, so two local minima can exist; the
/// log-spaced scan locates the global basin before refinement.
fn optimal_duration(ca: f64, cb: f64, cc: f64, rho: f64) -> Result<f64, SteerError> {
    let g = |t: f64| ((ca / t + cb) / t + cc) / t + rho * t;
    let mut t_hi = T_HI_INIT;
    while g(t_hi) < g(0.5 * t_hi) {
        if t_hi >= T_CAP {
            return Err(SteerError::Unreachable { cap: T_CAP });
        }
        t_hi = (t_hi * 2.0).min(T_CAP);
    }
    let ratio = (t_hi / T_LO).ln() / (GRID_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best_g = f64::INFINITY;
    for i in 0..GRID_POINTS {
        let t = T_LO * (ratio * i as f64).exp();
        let gi = g(t);
        if gi < best_g {
            best_g = gi;
            best_i = i;
        }
    }
    let lo = T_LO * (ratio * best_i.saturating_sub(1) as f64).exp();
    let hi = T_LO * (ratio * (best_i + 1).min(GRID_POINTS - 1) as f64).exp();
    Ok(golden_section(g, lo, hi))
}

/// Peak input and speed magnitudes of the cubic pair over `[0, t]`.
fn peaks(k: &[f64; 4], t: f64) -> (f64, f64) {
    let accel = |s: f64| 2.0 * k[2] + 6.0 * k[3] * s;
    let u_peak = accel(0.0).abs().max(accel(t).abs());
    let vel = |s: f64| k[1] + 2.0 * k[2] * s + 3.0 * k[3] * s * s;
    let mut v_peak = vel(0.0).abs().max(vel(t).abs());
    if k[3] != 0.0 {
        let s_ext = -k[2] / (3.0 * k[3]);
        if s_ext > 0.0 && s_ext < t {
            v_peak = v_peak.max(vel(s_ext).abs());
        }
    }
    (u_peak, v_peak)
}

fn duration_feasible(a: &State, b: &State, t: f64, u_max: f64, v_max: f64) -> bool {
    match inner_effort(a, b, t) {
        Ok((_, kx, ky)) => [kx, ky].iter().all(|k| {
            let (u, v) = peaks(k, t);
            u <= u_max + BOUND_TOL && v <= v_max + BOUND_TOL
        }),
        Err(_) => false,
    }
}

fn check_velocity_bounds(s: &State, v_max: f64) -> Result<(), SteerError> {
    for i in [2, 3] {
        if s.get(i).abs() > v_max {
            return Err(SteerError::VelocityBound(s.get(i), v_max));
        }
    }
    Ok(())
}

/// Bi-level optimal duration with input/speed constraints enforced by
/// inflating the duration to the feasibility boundary.
fn constrained_duration(
    a: &State,
    b: &State,
    rho: f64,
    u_max: f64,
    v_max: f64,
) -> Result<f64, SteerError> {
    let (ca, cb, cc) = effort_constants(a, b);
    let t_star = optimal_duration(ca, cb, cc, rho)?;
    if duration_feasible(a, b, t_star, u_max, v_max) {
        return Ok(t_star);
    }
    let mut lo = t_star;
    let mut hi = t_star;
    loop {
        hi *= 1.05;
        if hi > T_CAP {
            return Err(SteerError::Unreachable { cap: T_CAP });
        }
        if duration_feasible(a, b, hi, u_max, v_max) {
            break;
        }
        lo = hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if duration_feasible(a, b, mid, u_max, v_max) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn steer_cost(a: &State, b: &State, rho: f64, u_max: f64, v_max: f64) -> Result<f64, SteerError> {
    check_velocity_bounds(a, v_max)?;
    check_velocity_bounds(b, v_max)?;
    if a == b {
        return Ok(0.0);
    }
    let t = constrained_duration(a, b, rho, u_max, v_max)?;
    let (ca, cb, cc) = effort_constants(a, b);
    Ok(((ca / t + cb) / t + cc) / t + rho * t)
}

pub fn steer(a: &State, b: &State, rho: f64, u_max: f64, v_max: f64) -> Result<Trajectory, SteerError> {
    check_velocity_bounds(a, v_max)?;
    check_velocity_bounds(b, v_max)?;
    if a == b {
        return Ok(Trajectory {
            start: *a,
            end: *b,
            cost: 0.0,
            duration: 0.0,
            repr: TrajectoryRepr::DoubleIntegrator {
                coeffs_x: [a.get(0), a.get(2), 0.0, 0.0],
                coeffs_y: [a.get(1), a.get(3), 0.0, 0.0],
            },
        });
    }
    let t = constrained_duration(a, b, rho, u_max, v_max)?;
    let (effort, kx, ky) = inner_effort(a, b, t)?;
    Ok(Trajectory {
        start: *a,
        end: *b,
        cost: effort + rho * t,
        duration: t,
        repr: TrajectoryRepr::DoubleIntegrator { coeffs_x: kx, coeffs_y: ky },
    })
}

/// Certified upper bound: the objective at any feasible duration dominates
/// the optimum. Falls back to the exact solve when no probe is feasible.
pub fn cost_upper_bound(a: &State, b: &State, rho: f64, u_max: f64, v_max: f64) -> Result<f64, SteerError> {
    check_velocity_bounds(a, v_max)?;
    check_velocity_bounds(b, v_max)?;
    if a == b {
        return Ok(0.0);
    }
    let (ca, cb, cc) = effort_constants(a, b);
    let mut best = f64::INFINITY;
    for i in 0..8 {
        let t = 0.05 * (120.0_f64 / 0.05).powf(i as f64 / 7.0);
        if duration_feasible(a, b, t, u_max, v_max) {
            best = best.min(((ca / t + cb) / t + cc) / t + rho * t);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        steer_cost(a, b, rho, u_max, v_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_to_rest_same_point_needs_no_input() {
        let s = State::pos_vel(0.0, 0.0, 0.0, 0.0);
        let (effort, kx, ky) = inner_effort(&s, &s, 3.0).unwrap();
        assert_eq!(effort, 0.0);
        assert_eq!(kx[2], 0.0);
        assert_eq!(kx[3], 0.0);
        assert_eq!(ky[2], 0.0);
        assert_eq!(ky[3], 0.0);
    }

    #[test]
    fn non_positive_duration_is_an_error() {
        let s = State::pos_vel(0.0, 0.0, 0.0, 0.0);
        assert!(matches!(inner_effort(&s, &s, 0.0), Err(SteerError::NonPositiveDuration(_))));
        assert!(matches!(inner_effort(&s, &s, -1.0), Err(SteerError::NonPositiveDuration(_))));
    }

    #[test]
    fn effort_is_quadratic_in_the_position_gap() {
        let a = State::pos_vel(0.0, 0.0, 0.0, 0.0);
        let b1 = State::pos_vel(1.0, 0.0, 0.0, 0.0);
        let b2 = State::pos_vel(2.0, 0.0, 0.0, 0.0);
        let (e1, _, _) = inner_effort(&a, &b1, 1.0).unwrap();
        let (e2, _, _) = inner_effort(&a, &b2, 1.0).unwrap();
        assert!((e2 - 4.0 * e1).abs() < 1e-9 * e2.abs());
    }

    #[test]
    fn known_unconstrained_optimum() {
        // dp = 1, rest to rest, rho = 1: T* = 36^(1/4), cost = 12/T*^3 + T*.
        let a = State::pos_vel(0.0, 0.0, 0.0, 0.0);
        let b = State::pos_vel(1.0, 0.0, 0.0, 0.0);
        let cost = steer_cost(&a, &b, 1.0, 100.0, 100.0).unwrap();
        let t_star = 36.0_f64.powf(0.25);
        let expected = 12.0 / t_star.powi(3) + t_star;
        assert!((cost - expected).abs() < 1e-6 * expected, "cost {cost} vs {expected}");
    }

    #[test]
    fn identity_costs_nothing() {
        let s = State::pos_vel(2.0, -1.0, 0.5, 0.0);
        let t = steer(&s, &s, 1.0, 5.0, 2.0).unwrap();
        assert_eq!(t.cost, 0.0);
        assert_eq!(t.duration, 0.0);
        assert_eq!(t.sample_at(0.0), s);
    }

    #[test]
    fn translation_invariance() {
        let c1 = steer_cost(
            &State::pos_vel(0.0, 0.0, 1.0, 0.0),
            &State::pos_vel(5.0, 0.0, 1.0, 0.0),
            1.0,
            5.0,
            2.0,
        )
        .unwrap();
        let c2 = steer_cost(
            &State::pos_vel(10.0, -3.0, 1.0, 0.0),
            &State::pos_vel(15.0, -3.0, 1.0, 0.0),
            1.0,
            5.0,
            2.0,
        )
        .unwrap();
        assert!((c1 - c2).abs() <= 1e-9);
    }

    #[test]
    fn acceleration_bound_is_respected() {
        let a = State::pos_vel(0.0, 0.0, 0.0, 0.0);
        let b = State::pos_vel(1.0, 0.0, 0.0, 0.0);
        let u_max = 0.5;
        let t = steer(&a, &b, 1.0, u_max, 10.0).unwrap();
        if let TrajectoryRepr::DoubleIntegrator { coeffs_x, coeffs_y } = &t.repr {
            for k in [coeffs_x, coeffs_y] {
                let (u, _) = peaks(k, t.duration);
                assert!(u <= u_max + 1e-9, "peak {u} above bound {u_max}");
            }
        }
    }

    #[test]
    fn boundary_velocity_above_bound_rejected() {
        let a = State::pos_vel(0.0, 0.0, 3.0, 0.0);
        let b = State::pos_vel(1.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            steer(&a, &b, 1.0, 5.0, 2.0),
            Err(SteerError::VelocityBound(..))
        ));
    }

    #[test]
    fn endpoints_match_boundary_conditions() {
        let a = State::pos_vel(0.3, -0.7, 0.5, -0.2);
        let b = State::pos_vel(4.0, 2.0, -1.0, 0.8);
        let t = steer(&a, &b, 1.0, 5.0, 2.0).unwrap();
        assert!(t.sample_at(0.0).approx_eq(&a, 1e-9));
        assert!(t.sample_at(t.duration).approx_eq(&b, 1e-9));
    }
}
