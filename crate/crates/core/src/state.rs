//! States and axis-aligned state-space boxes.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

pub(crate) const MAX_DIM: usize = 6;

/// A point in a system state space, at most [`MAX_DIM`] coordinates.
///
/// The meaning of each coordinate is fixed by the system: `(x, y, theta)`
/// for the car, `(x, y, vx, vy)` for the planar double integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl State {
    pub fn new(coords: &[f64]) -> Self {
        assert!(coords.len() <= MAX_DIM, "state dimension above {MAX_DIM}");
        let mut buf = [0.0; MAX_DIM];
        buf[..coords.len()].copy_from_slice(coords);
        Self { coords: buf, dim: coords.len() }
    }

    pub fn se2(x: f64, y: f64, theta: f64) -> Self {
        Self::new(&[x, y, theta])
    }

    pub fn pos_vel(x: f64, y: f64, vx: f64, vy: f64) -> Self {
        Self::new(&[x, y, vx, vy])
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim <= MAX_DIM);
        Self { coords: [0.0; MAX_DIM], dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn get(&self, i: usize) -> f64 {
        assert!(i < self.dim);
        self.coords[i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        assert!(i < self.dim);
        self.coords[i] = value;
    }

    /// Copy with `offsets[k]` added to coordinate `dims[k]`.
    pub fn translated(&self, dims: &[usize], offsets: &[f64]) -> Self {
        debug_assert_eq!(dims.len(), offsets.len());
        let mut out = *self;
        for (&d, &o) in dims.iter().zip(offsets) {
            out.coords[d] += o;
        }
        out
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim
            && self
                .coords()
                .iter()
                .zip(other.coords())
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim))?;
        for c in self.coords() {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

#[derive(Debug, Error)]
pub enum BoxError {
    #[error("box bounds must satisfy lower < upper on every axis (axis {0})")]
    EmptyAxis(usize),
    #[error("spatial dimension index {0} out of range or repeated")]
    BadSpatialDim(usize),
    #[error("box dimension {0} unsupported (max {MAX_DIM})")]
    Dimension(usize),
}

/// Axis-aligned box in the state space, half-open on the upper face.
///
/// `spatial_dims` marks which coordinates are workspace position; those are
/// the axes the tiling translates along.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub spatial_dims: Vec<usize>,
}

impl StateBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, spatial_dims: Vec<usize>) -> Result<Self, BoxError> {
        if lower.len() != upper.len() || lower.len() > MAX_DIM {
            return Err(BoxError::Dimension(lower.len().max(upper.len())));
        }
        for i in 0..lower.len() {
            if !(lower[i] < upper[i]) {
                return Err(BoxError::EmptyAxis(i));
            }
        }
        for (k, &d) in spatial_dims.iter().enumerate() {
            if d >= lower.len() || spatial_dims[..k].contains(&d) {
                return Err(BoxError::BadSpatialDim(d));
            }
        }
        Ok(Self { lower, upper, spatial_dims })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Containment, half-open on the upper face.
    pub fn contains(&self, s: &State) -> bool {
        s.dim() == self.dim()
            && s.coords()
                .iter()
                .enumerate()
                .all(|(i, &c)| self.lower[i] <= c && c < self.upper[i])
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Map a unit-cube point into the box.
    pub fn lerp(&self, unit: &[f64]) -> State {
        debug_assert_eq!(unit.len(), self.dim());
        let mut coords = [0.0; MAX_DIM];
        for i in 0..self.dim() {
            coords[i] = self.lower[i] + unit[i] * self.width(i);
        }
        State { coords, dim: self.dim() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_touches_only_named_dims() {
        let s = State::pos_vel(1.0, 2.0, 3.0, 4.0);
        let t = s.translated(&[0, 1], &[10.0, -10.0]);
        assert_eq!(t.coords(), &[11.0, -8.0, 3.0, 4.0]);
    }

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(StateBox::new(vec![0.0, 1.0], vec![1.0, 1.0], vec![0]).is_err());
        assert!(StateBox::new(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(StateBox::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![0, 0]).is_err());
    }

    #[test]
    fn box_is_half_open() {
        let b = StateBox::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![0, 1]).unwrap();
        assert!(b.contains(&State::new(&[0.0, 0.0])));
        assert!(!b.contains(&State::new(&[1.0, 0.5])));
        assert!(b.contains(&State::new(&[0.999999, 0.5])));
    }
}
