//! Rigid pose represented as a unit quaternion plus a translation.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Coefficient table mapping the flattened outer product `vec(qᵀq)` (row-major,
/// with `q = (w, x, y, z)`) to the row-major entries of the rotation matrix.
/// Every entry of a rotation matrix is a quadratic form in the quaternion, so
/// the whole conversion is a single constant 9x16 linear map. Symmetric
/// products such as `xy` and `yx` each carry half of their combined
/// coefficient spread across both slots (here: 1.0 on each), which keeps the
/// map symmetric in the outer product.
#[rustfmt::skip]
pub const QUAT_OUTER_TO_ROT: [[f64; 16]; 9] = [
    // index into vec(qᵀq):
    //  0:ww  1:wx  2:wy  3:wz  4:xw  5:xx  6:xy  7:xz
    //  8:yw  9:yx 10:yy 11:yz 12:zw 13:zx 14:zy 15:zz
    // r00 = ww + xx - yy - zz
    [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0],
    // r01 = 2(xy - wz)
    [0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
    // r02 = 2(xz + wy)
    [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    // r10 = 2(xy + wz)
    [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
    // r11 = ww - xx + yy - zz
    [1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0],
    // r12 = 2(yz - wx)
    [0.0, -1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
    // r20 = 2(xz - wy)
    [0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    // r21 = 2(yz + wx)
    [0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
    // r22 = ww - xx - yy + zz
    [1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
];

/// Rotation matrix entries (row-major) from a quaternion `(w, x, y, z)`,
/// computed through [`QUAT_OUTER_TO_ROT`]. The same arithmetic is replayed on
/// the autodiff tape by the network's pose head, so the two agree exactly.
pub fn quat_to_matrix_entries(q: [f64; 4]) -> [f64; 9] {
    let mut outer = [0.0_f64; 16];
    for i in 0..4 {
        for j in 0..4 {
            outer[i * 4 + j] = q[i] * q[j];
        }
    }
    let mut out = [0.0_f64; 9];
    for (slot, row) in out.iter_mut().zip(QUAT_OUTER_TO_ROT.iter()) {
        let mut acc = 0.0;
        for (c, v) in row.iter().zip(outer.iter()) {
            acc += c * v;
        }
        *slot = acc;
    }
    out
}

/// A rigid motion `p ↦ R(q)·p + t` predicted by the network for one part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    /// Unit quaternion in `(w, x, y, z)` order.
    pub quat: [f64; 4],
    /// Translation applied after the rotation.
    pub translation: [f64; 3],
}

impl Pose {
    /// The identity motion.
    pub fn identity() -> Self {
        Pose {
            quat: [1.0, 0.0, 0.0, 0.0],
            translation: [0.0, 0.0, 0.0],
        }
    }

    /// Pose rotating by `angle` radians about the given axis, then translating.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64, translation: [f64; 3]) -> Self {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        assert!(norm > 0.0, "rotation axis must be non-zero");
        let half = 0.5 * angle;
        let s = half.sin() / norm;
        Pose {
            quat: [half.cos(), axis[0] * s, axis[1] * s, axis[2] * s],
            translation,
        }
    }

    /// Euclidean norm of the quaternion (1 for a valid pose).
    pub fn quat_norm(&self) -> f64 {
        self.quat.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Rotation matrix of this pose.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let m = quat_to_matrix_entries(self.quat);
        Matrix3::new(m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8])
    }

    /// Translation as a vector.
    pub fn translation_vector(&self) -> Vector3<f64> {
        Vector3::new(
            self.translation[0],
            self.translation[1],
            self.translation[2],
        )
    }

    /// Applies the motion to a single point.
    pub fn apply(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix() * p + self.translation_vector()
    }
}
