use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

/// Uniform rotation on SO(3): a 4D standard Gaussian, normalized, read as a
/// unit quaternion.
pub fn uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> UnitQuaternion<f64> {
    loop {
        let w: f64 = rng.sample(StandardNormal);
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        let q = Quaternion::new(w, x, y, z);
        if q.norm() > 1e-6 {
            return UnitQuaternion::from_quaternion(q);
        }
    }
}

/// Independent random poses for the two parts of a pair: uniform rotations,
/// zero translations (translation supervision comes from the stored
/// centroids, not from augmentation).
pub fn random_pose_pair<R: Rng + ?Sized>(
    rng: &mut R,
) -> [(UnitQuaternion<f64>, Vector3<f64>); 2] {
    [
        (uniform_rotation(rng), Vector3::zeros()),
        (uniform_rotation(rng), Vector3::zeros()),
    ]
}
