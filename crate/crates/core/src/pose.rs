//! Head pose angles and their (yaw, pitch) plane embedding.
//!
//! All angles are in degrees. Rotations follow the intrinsic yaw-pitch-roll
//! convention: yaw about the camera y axis, then pitch about the rotated x
//! axis, then roll about the rotated z axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerPose {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerPose {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Result<Self> {
        let pose = Self { yaw, pitch, roll };
        pose.validate()?;
        Ok(pose)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.yaw, self.pitch, self.roll]
            .iter()
            .all(|a| a.is_finite())
        {
            Ok(())
        } else {
            Err(Error::invalid(format!("non-finite pose {self:?}")))
        }
    }

    /// Wraps every angle into `[-180, 180)`.
    pub fn canonical(&self) -> Self {
        Self {
            yaw: wrap_degrees(self.yaw),
            pitch: wrap_degrees(self.pitch),
            roll: wrap_degrees(self.roll),
        }
    }

    /// Row-major 3×3 rotation matrix.
    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let (sy, cy) = self.yaw.to_radians().sin_cos();
        let (sp, cp) = self.pitch.to_radians().sin_cos();
        let (sr, cr) = self.roll.to_radians().sin_cos();
        let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
        let rx = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
        let rz = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
        mat_mul(&mat_mul(&ry, &rx), &rz)
    }
}

/// A point in the (yaw, pitch) plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub yaw: f64,
    pub pitch: f64,
}

impl PlanePoint {
    pub const fn new(yaw: f64, pitch: f64) -> Self {
        Self { yaw, pitch }
    }

    pub fn is_finite(&self) -> bool {
        self.yaw.is_finite() && self.pitch.is_finite()
    }
}

/// Drops the roll angle.
pub fn pose_to_plane(pose: &EulerPose) -> PlanePoint {
    PlanePoint {
        yaw: pose.yaw,
        pitch: pose.pitch,
    }
}

/// Euclidean distance in the (yaw, pitch) plane.
pub fn angular_distance(a: PlanePoint, b: PlanePoint) -> f64 {
    (a.yaw - b.yaw).hypot(a.pitch - b.pitch)
}

/// Euclidean distance over all three Euler angles.
pub fn pose_distance(a: &EulerPose, b: &EulerPose) -> f64 {
    let (dy, dp, dr) = (a.yaw - b.yaw, a.pitch - b.pitch, a.roll - b.roll);
    (dy * dy + dp * dp + dr * dr).sqrt()
}

pub fn wrap_degrees(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

pub(crate) fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub(crate) fn transpose(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub(crate) fn mat_vec(a: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}
