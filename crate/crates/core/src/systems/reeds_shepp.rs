//! Reeds-Shepp car: optimal steering by enumeration of the 48-word family.
//!
//! Costs and segment lengths are computed in curvature-normalized
//! coordinates (turning radius 1) and scaled back by the radius. The cost of
//! a path is its arc length; the car moves at unit speed, so duration and
//! cost coincide.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::state::State;
use crate::systems::{Segment, SegmentKind, Trajectory, TrajectoryRepr};

use SegmentKind::{Left, Right, Straight};

/// Wrap an angle to [-pi, pi).
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t < -PI {
        t += two_pi;
    } else if t >= PI {
        t -= two_pi;
    }
    t
}

/// Wrap to [-pi, pi], inclusive at pi, as the word formulas expect.
fn mod2pi(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t < -PI {
        t += two_pi;
    } else if t > PI {
        t -= two_pi;
    }
    t
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), y.atan2(x))
}

/// A candidate path word: up to five signed segment lengths in normalized
/// units. Negative length means reverse gear.
#[derive(Debug, Clone, Copy)]
struct Word {
    lengths: [f64; 5],
    kinds: [SegmentKind; 5],
    n: usize,
}

impl Word {
    fn total(&self) -> f64 {
        self.lengths[..self.n].iter().map(|l| l.abs()).sum()
    }

    fn reflected(mut self) -> Self {
        for k in self.kinds[..self.n].iter_mut() {
            *k = match *k {
                Left => Right,
                Right => Left,
                Straight => Straight,
            };
        }
        self
    }

    fn timeflipped(mut self) -> Self {
        for l in self.lengths[..self.n].iter_mut() {
            *l = -*l;
        }
        self
    }

    /// Endpoint of the word rolled out from the origin at radius 1.
    fn endpoint(&self) -> (f64, f64, f64) {
        let (mut x, mut y, mut th) = (0.0_f64, 0.0_f64, 0.0_f64);
        for i in 0..self.n {
            let d = self.lengths[i];
            match self.kinds[i] {
                Straight => {
                    x += d * th.cos();
                    y += d * th.sin();
                }
                Left => {
                    x += (th + d).sin() - th.sin();
                    y += -(th + d).cos() + th.cos();
                    th += d;
                }
                Right => {
                    x += -(th - d).sin() + th.sin();
                    y += (th - d).cos() - th.cos();
                    th -= d;
                }
            }
        }
        (x, y, th)
    }

    fn reaches(&self, x: f64, y: f64, phi: f64, tol: f64) -> bool {
        let (ex, ey, eth) = self.endpoint();
        (ex - x).abs() <= tol && (ey - y).abs() <= tol && wrap_angle(eth - phi).abs() <= tol
    }
}

// The twelve base families, each solved for a goal (x, y, phi) in normalized
// coordinates. Timeflip and reflection generate the remaining 36 words.

fn lsl(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u, t) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if (0.0..=PI).contains(&t) {
        let v = mod2pi(phi - t);
        if (0.0..=PI).contains(&v) {
            return Some(Word { lengths: [t, u, v, 0.0, 0.0], kinds: [Left, Straight, Left, Left, Left], n: 3 });
        }
    }
    None
}

fn lsr(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, t1) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    if u1 * u1 >= 4.0 {
        let u = (u1 * u1 - 4.0).sqrt();
        let theta = 2.0_f64.atan2(u);
        let t = mod2pi(t1 + theta);
        let v = mod2pi(t - phi);
        if t >= 0.0 && v >= 0.0 {
            return Some(Word { lengths: [t, u, v, 0.0, 0.0], kinds: [Left, Straight, Right, Left, Left], n: 3 });
        }
    }
    None
}

fn l_xr_xl(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if u1 <= 4.0 {
        let a = (0.25 * u1).acos();
        let t = mod2pi(a + theta + FRAC_PI_2);
        let u = mod2pi(PI - 2.0 * a);
        let v = mod2pi(phi - t - u);
        return Some(Word { lengths: [t, -u, v, 0.0, 0.0], kinds: [Left, Right, Left, Left, Left], n: 3 });
    }
    None
}

fn l_xrl(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if u1 <= 4.0 {
        let a = (0.25 * u1).acos();
        let t = mod2pi(a + theta + FRAC_PI_2);
        let u = mod2pi(PI - 2.0 * a);
        let v = mod2pi(-phi + t + u);
        return Some(Word { lengths: [t, -u, -v, 0.0, 0.0], kinds: [Left, Right, Left, Left, Left], n: 3 });
    }
    None
}

fn lr_xl(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if u1 <= 4.0 {
        let u = (1.0 - u1 * u1 * 0.125).acos();
        let a = (2.0 * u.sin() / u1).asin();
        let t = mod2pi(-a + theta + FRAC_PI_2);
        let v = mod2pi(t - u - phi);
        return Some(Word { lengths: [t, u, -v, 0.0, 0.0], kinds: [Left, Right, Left, Left, Left], n: 3 });
    }
    None
}

fn lr_xlr(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, theta) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    if u1 <= 2.0 {
        let a = ((u1 + 2.0) * 0.25).acos();
        let t = mod2pi(theta + a + FRAC_PI_2);
        let u = mod2pi(a);
        let v = mod2pi(phi - t + 2.0 * u);
        if t >= 0.0 && u >= 0.0 && v >= 0.0 {
            return Some(Word { lengths: [t, u, -u, -v, 0.0], kinds: [Left, Right, Left, Right, Left], n: 4 });
        }
    }
    None
}

fn l_xrl_xr(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, theta) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    let u2 = (20.0 - u1 * u1) / 16.0;
    if (0.0..=1.0).contains(&u2) {
        let u = u2.acos();
        let a = (2.0 * u.sin() / u1).asin();
        let t = mod2pi(theta + a + FRAC_PI_2);
        let v = mod2pi(t - phi);
        if t >= 0.0 && v >= 0.0 {
            return Some(Word { lengths: [t, -u, -u, v, 0.0], kinds: [Left, Right, Left, Right, Left], n: 4 });
        }
    }
    None
}

fn l_xr90sl(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if u1 >= 2.0 {
        let u = (u1 * u1 - 4.0).sqrt() - 2.0;
        let a = 2.0_f64.atan2((u1 * u1 - 4.0).sqrt());
        let t = mod2pi(theta + a + FRAC_PI_2);
        let v = mod2pi(t - phi + FRAC_PI_2);
        if t >= 0.0 && v >= 0.0 {
            return Some(Word {
                lengths: [t, -FRAC_PI_2, -u, -v, 0.0],
                kinds: [Left, Right, Straight, Left, Left],
                n: 4,
            });
        }
    }
    None
}

fn lsr90_xl(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if u1 >= 2.0 {
        let u = (u1 * u1 - 4.0).sqrt() - 2.0;
        let a = (u1 * u1 - 4.0).sqrt().atan2(2.0);
        let t = mod2pi(theta - a + FRAC_PI_2);
        let v = mod2pi(t - phi - FRAC_PI_2);
        if t >= 0.0 && v >= 0.0 {
            return Some(Word {
                lengths: [t, u, FRAC_PI_2, -v, 0.0],
                kinds: [Left, Straight, Right, Left, Left],
                n: 4,
            });
        }
    }
    None
}

fn l_xr90sr(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, theta) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    if u1 >= 2.0 {
        let t = mod2pi(theta + FRAC_PI_2);
        let u = u1 - 2.0;
        let v = mod2pi(phi - t - FRAC_PI_2);
        if t >= 0.0 && v >= 0.0 {
            return Some(Word {
                lengths: [t, -FRAC_PI_2, -u, -v, 0.0],
                kinds: [Left, Right, Straight, Right, Left],
                n: 4,
            });
        }
    }
    None
}

fn lsl90_xr(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, theta) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    if u1 >= 2.0 {
        let t = mod2pi(theta);
        let u = u1 - 2.0;
        let v = mod2pi(phi - t - FRAC_PI_2);
        if t >= 0.0 && v >= 0.0 {
            return Some(Word {
                lengths: [t, u, FRAC_PI_2, -v, 0.0],
                kinds: [Left, Straight, Left, Right, Left],
                n: 4,
            });
        }
    }
    None
}

fn l_xr90sl90_xr(x: f64, y: f64, phi: f64) -> Option<Word> {
    let (u1, theta) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    if u1 >= 4.0 {
        let u = (u1 * u1 - 4.0).sqrt() - 4.0;
        let a = 2.0_f64.atan2((u1 * u1 - 4.0).sqrt());
        let t = mod2pi(theta + a + FRAC_PI_2);
        let v = mod2pi(t - phi);
        if t >= 0.0 && v >= 0.0 {
            return Some(Word {
                lengths: [t, -FRAC_PI_2, -u, -FRAC_PI_2, v],
                kinds: [Left, Right, Straight, Left, Right],
                n: 5,
            });
        }
    }
    None
}

const FAMILIES: [fn(f64, f64, f64) -> Option<Word>; 12] = [
    lsl,
    lsr,
    l_xr_xl,
    l_xrl,
    lr_xl,
    lr_xlr,
    l_xrl_xr,
    l_xr90sl,
    lsr90_xl,
    l_xr90sr,
    lsl90_xr,
    l_xr90sl90_xr,
];

/// Every candidate word for the normalized goal, in a fixed enumeration
/// order (ties between equal-cost words go to the earliest).
fn enumerate_words(x: f64, y: f64, phi: f64, mut visit: impl FnMut(Word)) {
    for family in FAMILIES {
        if let Some(w) = family(x, y, phi) {
            visit(w);
        }
        if let Some(w) = family(-x, y, -phi) {
            visit(w.timeflipped());
        }
        if let Some(w) = family(x, -y, -phi) {
            visit(w.reflected());
        }
        if let Some(w) = family(-x, -y, phi) {
            visit(w.timeflipped().reflected());
        }
    }
}

// Some word formulas produce parameter combinations outside their implicit
// validity range; candidates must land on the goal before they may win.
const ENDPOINT_TOL: f64 = 1e-8;

fn best_word(x: f64, y: f64, phi: f64) -> Word {
    let mut best: Option<Word> = None;
    let mut best_total = f64::INFINITY;
    enumerate_words(x, y, phi, |w| {
        let total = w.total();
        if total < best_total && w.reaches(x, y, phi, ENDPOINT_TOL) {
            best_total = total;
            best = Some(w);
        }
    });
    best.expect("Reeds-Shepp word set covers every goal")
}

/// Goal pose in the start frame, scaled to radius 1.
fn normalize(a: &State, b: &State, radius: f64) -> (f64, f64, f64) {
    let dx = b.get(0) - a.get(0);
    let dy = b.get(1) - a.get(1);
    let (sin_a, cos_a) = a.get(2).sin_cos();
    let x = (cos_a * dx + sin_a * dy) / radius;
    let y = (-sin_a * dx + cos_a * dy) / radius;
    let phi = wrap_angle(b.get(2) - a.get(2));
    (x, y, phi)
}

/// Minimum path length from `a` to `b` in world units.
pub fn cost(a: &State, b: &State, radius: f64) -> f64 {
    let (x, y, phi) = normalize(a, b, radius);
    best_word(x, y, phi).total() * radius
}

pub fn steer(a: &State, b: &State, radius: f64) -> Trajectory {
    let (x, y, phi) = normalize(a, b, radius);
    let word = best_word(x, y, phi);
    let mut segments = Vec::with_capacity(word.n);
    for i in 0..word.n {
        let length = word.lengths[i] * radius;
        if length.abs() > 1e-12 * radius {
            segments.push(Segment { kind: word.kinds[i], length });
        }
    }
    let cost = word.total() * radius;
    let mut start = *a;
    start.set(2, wrap_angle(a.get(2)));
    let mut end = *b;
    end.set(2, wrap_angle(b.get(2)));
    Trajectory {
        start,
        end,
        cost,
        duration: cost,
        repr: TrajectoryRepr::ReedsShepp { radius, segments },
    }
}

/// Pose after driving `arc` (an absolute arc-length position in
/// `[0, total]`) along the segment word from `start`.
pub fn sample_at(start: &State, segments: &[Segment], radius: f64, arc: f64) -> State {
    let (mut x, mut y, mut th) = (start.get(0), start.get(1), start.get(2));
    let mut remaining = arc.max(0.0);
    for seg in segments {
        let span = seg.length.abs();
        let here = remaining.min(span);
        let d = here * seg.length.signum();
        match seg.kind {
            Straight => {
                x += d * th.cos();
                y += d * th.sin();
            }
            Left => {
                let beta = d / radius;
                x += radius * ((th + beta).sin() - th.sin());
                y += radius * (-(th + beta).cos() + th.cos());
                th += beta;
            }
            Right => {
                let beta = d / radius;
                x += radius * (-(th - beta).sin() + th.sin());
                y += radius * ((th - beta).cos() - th.cos());
                th -= beta;
            }
        }
        remaining -= here;
        if remaining <= 0.0 {
            break;
        }
    }
    State::se2(x, y, wrap_angle(th))
}

/// Certified upper bound on the steering cost: the cheapest of the four
/// forward CSC closed forms when any is valid, the full solve otherwise.
pub fn cost_upper_bound(a: &State, b: &State, radius: f64) -> f64 {
    let (x, y, phi) = normalize(a, b, radius);
    let mut best = f64::INFINITY;
    for family in [lsl, lsr] {
        for (gx, gy, gphi, reflect) in [(x, y, phi, false), (x, -y, -phi, true)] {
            if let Some(w) = family(gx, gy, gphi) {
                let w = if reflect { w.reflected() } else { w };
                if w.reaches(x, y, phi, ENDPOINT_TOL) {
                    best = best.min(w.total());
                }
            }
        }
    }
    if best.is_finite() {
        best * radius
    } else {
        cost(a, b, radius)
    }
}
