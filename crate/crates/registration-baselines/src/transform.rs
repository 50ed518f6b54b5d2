use nalgebra::{Matrix3, Point3, Vector3};

/// A proper rigid motion: rotation (orthonormal, det +1) plus translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_all(&self, points: &[Point3<f64>]) -> Vec<Point3<f64>> {
        points.iter().map(|p| self.apply(p)).collect()
    }

    /// `self` after `other`: (self ∘ other)(p) = self(other(p)).
    pub fn compose(&self, other: &Self) -> Self {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        RigidTransform { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Geodesic angle of the rotation part, in radians.
    pub fn rotation_angle(&self) -> f64 {
        let cos = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        cos.acos()
    }

    /// Geodesic distance between the rotation parts of two transforms.
    pub fn rotation_distance(&self, other: &Self) -> f64 {
        RigidTransform {
            rotation: self.rotation.transpose() * other.rotation,
            translation: Vector3::zeros(),
        }
        .rotation_angle()
    }

    /// Checks orthonormality and determinant within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let gram = self.rotation.transpose() * self.rotation;
        let ortho = (gram - Matrix3::identity()).norm();
        ortho <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
            && self.translation.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;

    fn sample() -> RigidTransform {
        RigidTransform {
            rotation: Rotation3::from_scaled_axis(Vector3::new(0.3, -0.2, 0.9)).into_inner(),
            translation: Vector3::new(1.0, -2.0, 0.5),
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let t = sample();
        let round = t.compose(&t.inverse());
        assert_relative_eq!(round.rotation, Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(round.translation, Vector3::zeros(), epsilon = 1e-12);
        assert!(t.is_valid(1e-12));
    }

    #[test]
    fn compose_applies_right_transform_first() {
        let a = sample();
        let b = RigidTransform {
            rotation: Rotation3::from_scaled_axis(Vector3::new(0.0, 0.4, 0.0)).into_inner(),
            translation: Vector3::new(0.0, 0.0, 2.0),
        };
        let p = Point3::new(0.1, 0.2, 0.3);
        let composed = a.compose(&b).apply(&p);
        let sequential = a.apply(&b.apply(&p));
        assert_relative_eq!(composed, sequential, epsilon = 1e-12);
    }

    #[test]
    fn rotation_angle_matches_construction() {
        let axis = Vector3::new(0.0, 0.0, 1.0);
        let t = RigidTransform {
            rotation: Rotation3::from_scaled_axis(axis * 0.7).into_inner(),
            translation: Vector3::zeros(),
        };
        assert!((t.rotation_angle() - 0.7).abs() < 1e-12);
        assert_eq!(RigidTransform::identity().rotation_angle(), 0.0);
    }
}
