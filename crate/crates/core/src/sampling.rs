//! Dense low-discrepancy sampling of a bounded state-space box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::state::{State, StateBox};

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("sequence supports at most {max} dimensions, box has {found}")]
    Dimension { max: usize, found: usize },
    #[error("at least one sample is required")]
    EmptyRequest,
    #[error("dispersion estimate needs a non-empty point set")]
    EmptyPointSet,
}

/// Which deterministic (or seeded) sequence fills the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SequenceKind {
    Sobol,
    Halton,
    UniformRandom { seed: u64 },
}

/// The dense sample set `X_dense` the vertex selection draws from.
#[derive(Debug, Clone, Serialize)]
pub struct DenseSampleSet {
    pub points: Vec<State>,
    pub box_: StateBox,
    pub kind: SequenceKind,
}

// Direction-number seeds (a, m) from the standard Joe-Kuo table
// (new-joe-kuo-6.21201); dimension 0 is the base-2 radical inverse.
const SOBOL_MAX_DIM: usize = 6;
const SOBOL_BITS: usize = 32;
const SOBOL_A: [u32; SOBOL_MAX_DIM - 1] = [0, 1, 1, 2, 1];
const SOBOL_M: [&[u32]; SOBOL_MAX_DIM - 1] = [&[1], &[1, 3], &[1, 3, 1], &[1, 1, 1], &[1, 1, 3, 3]];

/// Direction vectors for one Sobol dimension, most significant bit first.
fn sobol_directions(dim: usize) -> [u32; SOBOL_BITS] {
    let mut v = [0u32; SOBOL_BITS];
    if dim == 0 {
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = 1 << (31 - j);
        }
        return v;
    }
    let a = SOBOL_A[dim - 1];
    let m = SOBOL_M[dim - 1];
    let s = m.len();
    for (j, &mj) in m.iter().enumerate() {
        v[j] = mj << (31 - j);
    }
    for j in s..SOBOL_BITS {
        v[j] = v[j - s] ^ (v[j - s] >> s);
        for k in 0..s - 1 {
            if (a >> k) & 1 != 0 {
                v[j] ^= v[j - 1 - k];
            }
        }
    }
    v
}

/// `index`-th Sobol point in natural order: dimension 0 is exactly the
/// van der Corput sequence.
fn sobol_point(index: u64, dim: usize, out: &mut [f64]) {
    for (d, slot) in out.iter_mut().enumerate().take(dim) {
        let v = sobol_directions(d);
        let mut x = 0u32;
        let mut bits = index;
        let mut j = 0;
        while bits != 0 {
            if bits & 1 != 0 {
                x ^= v[j];
            }
            bits >>= 1;
            j += 1;
        }
        *slot = x as f64 / (1u64 << 32) as f64;
    }
}

const HALTON_BASES: [u64; 6] = [2, 3, 5, 7, 11, 13];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut denom = 1.0;
    while index > 0 {
        denom *= base as f64;
        inv += (index % base) as f64 / denom;
        index /= base;
    }
    inv
}

/// First `n` points of the chosen sequence, affinely mapped into the box.
pub fn generate_dense(box_: &StateBox, n: usize, kind: SequenceKind) -> Result<DenseSampleSet, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptyRequest);
    }
    let dim = box_.dim();
    if dim > SOBOL_MAX_DIM {
        return Err(SamplingError::Dimension { max: SOBOL_MAX_DIM, found: dim });
    }
    let mut points = Vec::with_capacity(n);
    let mut unit = [0.0f64; 6];
    match kind {
        SequenceKind::Sobol => {
            for i in 0..n {
                sobol_point(i as u64, dim, &mut unit[..dim]);
                points.push(box_.lerp(&unit[..dim]));
            }
        }
        SequenceKind::Halton => {
            for i in 0..n {
                for d in 0..dim {
                    unit[d] = radical_inverse(i as u64 + 1, HALTON_BASES[d]);
                }
                points.push(box_.lerp(&unit[..dim]));
            }
        }
        SequenceKind::UniformRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..n {
                for slot in unit.iter_mut().take(dim) {
                    *slot = rng.gen::<f64>();
                }
                points.push(box_.lerp(&unit[..dim]));
            }
        }
    }
    Ok(DenseSampleSet { points, box_: box_.clone(), kind })
}

/// Monte-Carlo estimate of the largest Euclidean nearest-neighbor distance
/// from the box to the point set. Probes come from a Halton sequence so the
/// estimate is deterministic.
pub fn euclidean_dispersion_estimate(
    points: &[State],
    box_: &StateBox,
    probe_count: usize,
) -> Result<f64, SamplingError> {
    if points.is_empty() {
        return Err(SamplingError::EmptyPointSet);
    }
    if probe_count == 0 {
        return Err(SamplingError::EmptyRequest);
    }
    let dim = box_.dim();
    if dim > SOBOL_MAX_DIM {
        return Err(SamplingError::Dimension { max: SOBOL_MAX_DIM, found: dim });
    }
    let mut worst = 0.0f64;
    let mut unit = [0.0f64; 6];
    for i in 0..probe_count {
        for d in 0..dim {
            unit[d] = radical_inverse(i as u64 + 1, HALTON_BASES[d]);
        }
        let probe = box_.lerp(&unit[..dim]);
        let nearest = points
            .iter()
            .map(|p| {
                probe
                    .coords()
                    .iter()
                    .zip(p.coords())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(dim: usize) -> StateBox {
        StateBox::new(vec![0.0; dim], vec![1.0; dim], vec![0, 1][..dim.min(2)].to_vec()).unwrap()
    }

    #[test]
    fn single_sobol_point_is_inside_the_box() {
        let b = unit_box(3);
        let set = generate_dense(&b, 1, SequenceKind::Sobol).unwrap();
        assert_eq!(set.points.len(), 1);
        assert!(b.contains(&set.points[0]));
    }

    #[test]
    fn all_points_inside_half_open_box() {
        let b = StateBox::new(vec![-2.0, -2.0, -1.0], vec![2.0, 2.0, 1.0], vec![0, 1]).unwrap();
        for kind in [SequenceKind::Sobol, SequenceKind::Halton, SequenceKind::UniformRandom { seed: 7 }] {
            let set = generate_dense(&b, 512, kind).unwrap();
            assert!(set.points.iter().all(|p| b.contains(p)), "{kind:?} escaped the box");
        }
    }

    #[test]
    fn sobol_dim_one_is_van_der_corput() {
        // Independent oracle: reflect the binary digits of the index about
        // the radix point.
        fn vdc(mut i: u64) -> f64 {
            let mut value = 0.0;
            let mut scale = 0.5;
            while i > 0 {
                if i & 1 != 0 {
                    value += scale;
                }
                scale *= 0.5;
                i >>= 1;
            }
            value
        }
        let b = StateBox::new(vec![0.0], vec![1.0], vec![]).unwrap();
        let set = generate_dense(&b, 16, SequenceKind::Sobol).unwrap();
        for (i, p) in set.points.iter().enumerate().take(4) {
            assert_eq!(p.get(0), vdc(i as u64), "index {i}");
        }
        for (i, p) in set.points.iter().enumerate() {
            assert!((p.get(0) - vdc(i as u64)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_kinds_are_bit_identical() {
        let b = unit_box(4);
        for kind in [SequenceKind::Sobol, SequenceKind::Halton, SequenceKind::UniformRandom { seed: 42 }] {
            let a = generate_dense(&b, 257, kind).unwrap();
            let c = generate_dense(&b, 257, kind).unwrap();
            assert_eq!(a.points, c.points);
        }
    }

    #[test]
    fn dimension_above_six_rejected() {
        assert!(StateBox::new(vec![0.0; 7], vec![1.0; 7], vec![]).is_err());
    }

    #[test]
    fn corner_points_dispersion_near_half_diagonal() {
        let b = unit_box(2);
        let corners = vec![
            State::new(&[0.0, 0.0]),
            State::new(&[1.0, 0.0]),
            State::new(&[0.0, 1.0]),
            State::new(&[1.0, 1.0]),
        ];
        let est = euclidean_dispersion_estimate(&corners, &b, 20_000).unwrap();
        let expected = 0.5 * 2.0f64.sqrt();
        assert!((est - expected).abs() < 0.05 * expected, "estimate {est}");
    }

    #[test]
    fn single_point_estimate_below_diameter() {
        let b = unit_box(2);
        let est = euclidean_dispersion_estimate(&[State::new(&[0.5, 0.5])], &b, 1000).unwrap();
        assert!(est <= 2.0f64.sqrt());
    }

    #[test]
    fn sobol_beats_uniform_random_on_euclidean_dispersion() {
        let b = unit_box(2);
        let sobol = generate_dense(&b, 256, SequenceKind::Sobol).unwrap();
        let sobol_est = euclidean_dispersion_estimate(&sobol.points, &b, 4096).unwrap();
        let mut uniform_ests: Vec<f64> = (0..20)
            .map(|seed| {
                let set = generate_dense(&b, 256, SequenceKind::UniformRandom { seed }).unwrap();
                euclidean_dispersion_estimate(&set.points, &b, 4096).unwrap()
            })
            .collect();
        uniform_ests.sort_by(f64::total_cmp);
        let median = uniform_ests[10];
        assert!(sobol_est < median, "sobol {sobol_est} vs uniform median {median}");
    }

    /// Balance property of the first `2^k` points: for dimension `s` the
    /// sequence is a base-2 net with quality parameter `t(s)`, so every
    /// elementary interval of volume `2^(t-k)` holds exactly `2^t` points.
    /// For s <= 2 this degenerates to one point per box of volume `2^-k`.
    #[test]
    fn sobol_elementary_interval_balance() {
        const T_PARAM: [u32; 4] = [0, 0, 1, 3];
        for dim in 1..=4usize {
            let t = T_PARAM[dim - 1];
            for k in 1..=8u32 {
                if k < t {
                    continue;
                }
                let m = k - t;
                let n = 1usize << k;
                let b = StateBox::new(vec![0.0; dim], vec![1.0; dim], vec![]).unwrap();
                let set = generate_dense(&b, n, SequenceKind::Sobol).unwrap();
                for shape in interval_shapes(dim, m) {
                    let mut counts = vec![0u32; 1 << m];
                    for p in &set.points {
                        let mut idx = 0usize;
                        for d in 0..dim {
                            let cells = 1u32 << shape[d];
                            let cell = (p.get(d) * cells as f64).floor() as usize;
                            idx = (idx << shape[d]) | cell;
                        }
                        counts[idx] += 1;
                    }
                    assert!(
                        counts.iter().all(|&c| c == 1 << t),
                        "dim {dim} k {k} shape {shape:?} unbalanced"
                    );
                }
            }
        }
    }

    /// All ways of splitting `m` halvings across `dim` axes.
    fn interval_shapes(dim: usize, m: u32) -> Vec<Vec<u32>> {
        fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if dim == 1 {
                prefix.push(left);
                out.push(prefix.clone());
                prefix.pop();
                return;
            }
            for j in 0..=left {
                prefix.push(j);
                rec(dim - 1, left - j, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(dim, m, &mut Vec::new(), &mut out);
        out
    }
}
