//! Rotations, poses, and GCS/LCS conversion.

use serde::{Deserialize, Serialize};

use crate::sphgrid::Direction;
use crate::{Error, Result};

/// A 3×3 rotation stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Rotation {
    pub const IDENTITY: Rotation = Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// `R·v`: local to global.
    pub fn apply(&self, v: &[f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// `Rᵀ·v`: global to local.
    pub fn apply_inverse(&self, v: &[f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        let a = &self.0;
        let b = &other.0;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        Rotation(out)
    }

    pub fn transpose(&self) -> Rotation {
        let m = &self.0;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = m[j][i];
            }
        }
        Rotation(out)
    }

    /// Angles `(α, β, γ)` with `self = R_z(α)·R_y(β)·R_x(γ)`.
    pub fn to_zyx_angles(&self) -> [f64; 3] {
        let r = &self.0;
        let beta = (-r[2][0]).clamp(-1.0, 1.0).asin();
        if r[2][0].abs() < 1.0 - 1e-12 {
            [r[1][0].atan2(r[0][0]), beta, r[2][1].atan2(r[2][2])]
        } else {
            // gimbal lock: fold everything into α
            [(-r[0][1]).atan2(r[1][1]), beta, 0.0]
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// `R = R_z(α)·R_y(β)·R_x(γ)`.
pub fn rotation_matrix(alpha: f64, beta: f64, gamma: f64) -> Rotation {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    Rotation([
        [ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg],
        [sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg],
        [-sb, cb * sg, cb * cg],
    ])
}

/// Position (meters) and orientation `(α, β, γ)` (radians) of a node in the GCS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 3],
    pub orientation: [f64; 3],
}

impl Pose {
    pub fn new(position: [f64; 3], orientation: [f64; 3]) -> Self {
        Self { position, orientation }
    }

    pub fn rotation(&self) -> Rotation {
        let [a, b, g] = self.orientation;
        rotation_matrix(a, b, g)
    }
}

/// Expresses a GCS direction vector in the pose's LCS.
pub fn gcs_to_lcs(direction: &[f64; 3], pose: &Pose) -> Result<Direction> {
    if direction.iter().all(|c| *c == 0.0) {
        return Err(Error::invalid("zero direction vector"));
    }
    Direction::from_vector(pose.rotation().apply_inverse(direction))
}

/// Unit vector in the GCS for a direction given in the pose's LCS.
pub fn lcs_to_gcs(direction: &Direction, pose: &Pose) -> [f64; 3] {
    pose.rotation().apply(&direction.unit_vector())
}
