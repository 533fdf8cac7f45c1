//! Spherical Fibonacci grids and direction arithmetic.
//!
//! Points use the offset lattice `z_k = 1 - (2k+1)/n` with golden-ratio
//! azimuth increments, which keeps every point off the poles and gives
//! near-equal-area Voronoi cells for any `n`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Golden ratio.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// A direction on the unit sphere. Zenith is measured from +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    azimuth: f64,
    zenith: f64,
}

impl Direction {
    /// Builds a direction, wrapping azimuth into `[0, 2π)` and clamping
    /// zenith into `[0, π]`.
    pub fn new(azimuth: f64, zenith: f64) -> Self {
        let mut az = azimuth.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if az >= TAU {
            az = 0.0;
        }
        Self {
            azimuth: az,
            zenith: zenith.clamp(0.0, PI),
        }
    }

    /// Direction of a non-zero vector.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("direction vector must be finite and non-zero"));
        }
        let zenith = (v[2] / norm).clamp(-1.0, 1.0).acos();
        let azimuth = v[1].atan2(v[0]);
        Ok(Self::new(azimuth, zenith))
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn zenith(&self) -> f64 {
        self.zenith
    }

    /// Elevation above the xy-plane, `π/2 - zenith`.
    pub fn elevation(&self) -> f64 {
        PI / 2.0 - self.zenith
    }

    /// `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.zenith.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Great-circle angle to another direction, in radians.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        // atan2 of |a x b| and a.b is accurate for tiny and near-π angles
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let s = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        s.atan2(dot(&a, &b))
    }
}

/// Free-function form of [`Direction::unit_vector`].
pub fn unit_vector(d: &Direction) -> [f64; 3] {
    d.unit_vector()
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// An ordered Fibonacci grid of `n_fib` directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PointList", into = "PointList")]
pub struct DirectionSet {
    points: Vec<Direction>,
    unit: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct PointList {
    points: Vec<Direction>,
}

impl From<PointList> for DirectionSet {
    fn from(p: PointList) -> Self {
        DirectionSet::from_points(p.points)
    }
}

impl From<DirectionSet> for PointList {
    fn from(s: DirectionSet) -> Self {
        PointList { points: s.points }
    }
}

impl DirectionSet {
    fn from_points(points: Vec<Direction>) -> Self {
        let unit = points.iter().map(Direction::unit_vector).collect();
        Self { points, unit }
    }

    pub fn n_fib(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Direction] {
        &self.points
    }

    pub fn get(&self, k: usize) -> Option<&Direction> {
        self.points.get(k)
    }

    /// Cached unit vectors, one per point.
    pub fn unit_vectors(&self) -> &[[f64; 3]] {
        &self.unit
    }

    /// Index of the grid point closest to `d` (largest dot product),
    /// lowest index on ties.
    pub fn nearest_index(&self, d: &Direction) -> usize {
        self.nearest_to_vector(&d.unit_vector())
    }

    pub(crate) fn nearest_to_vector(&self, u: &[f64; 3]) -> usize {
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (k, p) in self.unit.iter().enumerate() {
            let d = dot(p, u);
            if d > best_dot {
                best_dot = d;
                best = k;
            }
        }
        best
    }
}

/// Builds the Fibonacci grid with `n_fib` points.
pub fn fibonacci_grid(n_fib: usize) -> Result<DirectionSet> {
    if n_fib == 0 {
        return Err(Error::invalid("n_fib must be at least 1"));
    }
    let n = n_fib as f64;
    let points = (0..n_fib)
        .map(|k| {
            let kf = k as f64;
            let z = 1.0 - (2.0 * kf + 1.0) / n;
            let zenith = z.clamp(-1.0, 1.0).acos();
            let azimuth = TAU * kf / GOLDEN_RATIO;
            Direction::new(azimuth, zenith)
        })
        .collect();
    Ok(DirectionSet::from_points(points))
}

/// Free-function form of [`DirectionSet::nearest_index`].
pub fn nearest_index(set: &DirectionSet, d: &Direction) -> usize {
    set.nearest_index(d)
}
