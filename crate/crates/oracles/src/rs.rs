//! Exhaustive Reeds-Shepp path-word oracle.
//!
//! Each of the 48 words is treated as a forward-kinematics program with
//! three free segment parameters. For a given goal pose the parameters are
//! found numerically: residuals are evaluated on a coarse grid of seeds and
//! the most promising seeds are refined with damped Gauss-Newton until the
//! endpoint constraint is met to 1e-11. The oracle cost is the minimum total
//! length over every converged, valid solution of every word.

use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Turn {
    L,
    S,
    R,
}

/// One template segment: a turn kind, a parameter slot (0 = t, 1 = u,
/// 2 = v, 3 = fixed quarter arc) and the gear sign applied to it.
#[derive(Debug, Clone, Copy)]
struct TemplateSeg {
    turn: Turn,
    slot: usize,
    sign: f64,
}

#[derive(Debug, Clone)]
struct WordTemplate {
    segs: Vec<TemplateSeg>,
    /// Whether parameter slot 1 (u) is a straight length (unbounded above).
    straight_u: bool,
}

fn seg(turn: Turn, slot: usize, sign: f64) -> TemplateSeg {
    TemplateSeg { turn, slot, sign }
}

/// The twelve base words; slot 3 is the fixed pi/2 arc.
fn base_templates() -> Vec<WordTemplate> {
    use Turn::{L, R, S};
    vec![
        // L+ S+ L+
        WordTemplate { segs: vec![seg(L, 0, 1.0), seg(S, 1, 1.0), seg(L, 2, 1.0)], straight_u: true },
        // L+ S+ R+
        WordTemplate { segs: vec![seg(L, 0, 1.0), seg(S, 1, 1.0), seg(R, 2, 1.0)], straight_u: true },
        // L+ R- L+
        WordTemplate { segs: vec![seg(L, 0, 1.0), seg(R, 1, -1.0), seg(L, 2, 1.0)], straight_u: false },
        // L+ R- L-
        WordTemplate { segs: vec![seg(L, 0, 1.0), seg(R, 1, -1.0), seg(L, 2, -1.0)], straight_u: false },
        // L+ R+ L-
        WordTemplate { segs: vec![seg(L, 0, 1.0), seg(R, 1, 1.0), seg(L, 2, -1.0)], straight_u: false },
        // L+ R+u L-u R-
        WordTemplate {
            segs: vec![seg(L, 0, 1.0), seg(R, 1, 1.0), seg(L, 1, -1.0), seg(R, 2, -1.0)],
            straight_u: false,
        },
        // L+ R-u L-u R+
        WordTemplate {
            segs: vec![seg(L, 0, 1.0), seg(R, 1, -1.0), seg(L, 1, -1.0), seg(R, 2, 1.0)],
            straight_u: false,
        },
        // L+ R-90 S- L-
        WordTemplate {
            segs: vec![seg(L, 0, 1.0), seg(R, 3, -1.0), seg(S, 1, -1.0), seg(L, 2, -1.0)],
            straight_u: true,
        },
        // L+ S+ R+90 L-
        WordTemplate {
            segs: vec![seg(L, 0, 1.0), seg(S, 1, 1.0), seg(R, 3, 1.0), seg(L, 2, -1.0)],
            straight_u: true,
        },
        // L+ R-90 S- R-
        WordTemplate {
            segs: vec![seg(L, 0, 1.0), seg(R, 3, -1.0), seg(S, 1, -1.0), seg(R, 2, -1.0)],
            straight_u: true,
        },
        // L+ S+ L+90 R-
        WordTemplate {
            segs: vec![seg(L, 0, 1.0), seg(S, 1, 1.0), seg(L, 3, 1.0), seg(R, 2, -1.0)],
            straight_u: true,
        },
        // L+ R-90 S- L-90 R+
        WordTemplate {
            segs: vec![
                seg(L, 0, 1.0),
                seg(R, 3, -1.0),
                seg(S, 1, -1.0),
                seg(L, 3, -1.0),
                seg(R, 2, 1.0),
            ],
            straight_u: true,
        },
    ]
}

fn timeflip(w: &WordTemplate) -> WordTemplate {
    WordTemplate {
        segs: w.segs.iter().map(|s| TemplateSeg { sign: -s.sign, ..*s }).collect(),
        straight_u: w.straight_u,
    }
}

fn reflect(w: &WordTemplate) -> WordTemplate {
    WordTemplate {
        segs: w
            .segs
            .iter()
            .map(|s| TemplateSeg {
                turn: match s.turn {
                    Turn::L => Turn::R,
                    Turn::R => Turn::L,
                    Turn::S => Turn::S,
                },
                ..*s
            })
            .collect(),
        straight_u: w.straight_u,
    }
}

/// All 48 word templates.
fn all_templates() -> Vec<WordTemplate> {
    let mut out = Vec::with_capacity(48);
    for base in base_templates() {
        out.push(base.clone());
        out.push(timeflip(&base));
        out.push(reflect(&base));
        out.push(reflect(&timeflip(&base)));
    }
    out
}

fn wrap(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t < -PI {
        t += two_pi;
    } else if t >= PI {
        t -= two_pi;
    }
    t
}

/// Forward kinematics of a template at parameters `p`, radius 1, origin start.
fn endpoint(w: &WordTemplate, p: &[f64; 3]) -> (f64, f64, f64) {
    let (mut x, mut y, mut th) = (0.0_f64, 0.0_f64, 0.0_f64);
    for s in &w.segs {
        let value = if s.slot == 3 { FRAC_PI_2 } else { p[s.slot] };
        let d = s.sign * value;
        match s.turn {
            Turn::S => {
                x += d * th.cos();
                y += d * th.sin();
            }
            Turn::L => {
                x += (th + d).sin() - th.sin();
                y += -(th + d).cos() + th.cos();
                th += d;
            }
            Turn::R => {
                x += -(th - d).sin() + th.sin();
                y += (th - d).cos() - th.cos();
                th -= d;
            }
        }
    }
    (x, y, th)
}

fn total_length(w: &WordTemplate, p: &[f64; 3]) -> f64 {
    w.segs
        .iter()
        .map(|s| if s.slot == 3 { FRAC_PI_2 } else { p[s.slot].abs() })
        .sum()
}

fn residual(w: &WordTemplate, p: &[f64; 3], goal: &(f64, f64, f64)) -> [f64; 3] {
    let (x, y, th) = endpoint(w, p);
    [x - goal.0, y - goal.1, wrap(th - goal.2)]
}

fn norm2(r: &[f64; 3]) -> f64 {
    r[0] * r[0] + r[1] * r[1] + r[2] * r[2]
}

/// Solve the 3x3 system `m * dx = -r` by Gaussian elimination with partial
/// pivoting; `None` when near-singular.
fn solve3(m: &[[f64; 3]; 3], r: &[f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0f64; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = -r[i];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut s = a[i][3];
        for k in i + 1..3 {
            s -= a[i][k] * x[k];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

const CONVERGED: f64 = 1e-22; // squared residual norm

fn gauss_newton(w: &WordTemplate, goal: &(f64, f64, f64), seed: [f64; 3]) -> Option<[f64; 3]> {
    let mut p = seed;
    let h = 1e-7;
    for _ in 0..40 {
        let r = residual(w, &p, goal);
        if norm2(&r) < CONVERGED {
            return Some(p);
        }
        let mut jac = [[0.0f64; 3]; 3];
        for col in 0..3 {
            let mut hi = p;
            let mut lo = p;
            hi[col] += h;
            lo[col] -= h;
            let rh = residual(w, &hi, goal);
            let rl = residual(w, &lo, goal);
            for row in 0..3 {
                jac[row][col] = (rh[row] - rl[row]) / (2.0 * h);
            }
        }
        let step = solve3(&jac, &r)?;
        let scale = step.iter().map(|s| s.abs()).fold(0.0, f64::max);
        let damp = if scale > 1.0 { 1.0 / scale } else { 1.0 };
        for i in 0..3 {
            p[i] += damp * step[i];
        }
    }
    let r = residual(w, &p, goal);
    (norm2(&r) < CONVERGED).then_some(p)
}

/// Parameter validity: non-negative, arcs within one full turn.
fn valid(w: &WordTemplate, p: &[f64; 3], u_hi: f64) -> bool {
    let arc_hi = 2.0 * PI + 1e-9;
    p[0] >= -1e-9
        && p[0] <= arc_hi
        && p[2] >= -1e-9
        && p[2] <= arc_hi
        && p[1] >= -1e-9
        && p[1] <= if w.straight_u { u_hi } else { arc_hi }
}

/// Minimum-length solution of a single word for the normalized goal.
fn solve_word(w: &WordTemplate, goal: &(f64, f64, f64), u_hi: f64) -> Option<f64> {
    const N_SEED: usize = 10;
    let mut seeds = Vec::with_capacity(N_SEED * N_SEED * N_SEED);
    let u_top = if w.straight_u { u_hi } else { 2.0 * PI };
    for i in 0..N_SEED {
        let t = 2.0 * PI * i as f64 / (N_SEED - 1) as f64;
        for j in 0..N_SEED {
            let u = u_top * j as f64 / (N_SEED - 1) as f64;
            for k in 0..N_SEED {
                let v = 2.0 * PI * k as f64 / (N_SEED - 1) as f64;
                let p = [t, u, v];
                seeds.push((norm2(&residual(w, &p, goal)), p));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<f64> = None;
    for (_, seed) in seeds.into_iter().take(40) {
        if let Some(p) = gauss_newton(w, goal, seed) {
            if valid(w, &p, u_hi) {
                let len = total_length(w, &p);
                if best.map_or(true, |b| len < b) {
                    best = Some(len);
                }
            }
        }
    }
    best
}

/// Oracle optimal cost between SE(2) poses at the given turning radius.
pub fn oracle_cost(start: &[f64; 3], goal: &[f64; 3], radius: f64) -> f64 {
    let dx = goal[0] - start[0];
    let dy = goal[1] - start[1];
    let (sin_a, cos_a) = start[2].sin_cos();
    let x = (cos_a * dx + sin_a * dy) / radius;
    let y = (-sin_a * dx + cos_a * dy) / radius;
    let phi = wrap(goal[2] - start[2]);
    let norm_goal = (x, y, phi);
    let u_hi = x.hypot(y) + 4.0 * PI;
    let mut best = f64::INFINITY;
    for w in all_templates() {
        if let Some(len) = solve_word(&w, &norm_goal, u_hi) {
            best = best.min(len);
        }
    }
    best * radius
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_goal() {
        let c = oracle_cost(&[0.0, 0.0, 0.0], &[2.0, 0.0, 0.0], 1.0);
        assert!((c - 2.0).abs() < 1e-9, "cost {c}");
    }

    #[test]
    fn templates_count() {
        assert_eq!(all_templates().len(), 48);
    }
}
