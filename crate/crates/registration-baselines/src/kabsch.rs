use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::RegistrationError;
use crate::transform::RigidTransform;

/// Relative size of the second singular value below which the point
/// configuration cannot pin down a rotation (collinear or coincident).
const RANK_TOL: f64 = 1e-12;

/// Weighted Procrustes alignment: the rigid transform minimizing
/// Σ wᵢ ‖R srcᵢ + t − dstᵢ‖². Solved in closed form through the SVD of the
/// weighted cross-covariance; a reflection in the reconstruction is
/// corrected by flipping the sign of the smallest singular direction.
pub fn kabsch(
    src: &[Point3<f64>],
    dst: &[Point3<f64>],
    weights: &[f64],
) -> Result<RigidTransform, RegistrationError> {
    if src.is_empty() || dst.is_empty() {
        return Err(RegistrationError::EmptyInput);
    }
    if src.len() != dst.len() {
        return Err(RegistrationError::LengthMismatch { src: src.len(), dst: dst.len() });
    }
    if weights.len() != src.len() {
        return Err(RegistrationError::WeightMismatch {
            points: src.len(),
            expected: src.len(),
        });
    }
    if src.len() < 3 {
        return Err(RegistrationError::TooFewPoints { n: src.len(), minimum: 3 });
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || total <= 0.0 {
        return Err(RegistrationError::BadWeights);
    }

    let src_centroid: Vector3<f64> =
        src.iter().zip(weights).map(|(p, w)| p.coords * *w).sum::<Vector3<f64>>() / total;
    let dst_centroid: Vector3<f64> =
        dst.iter().zip(weights).map(|(p, w)| p.coords * *w).sum::<Vector3<f64>>() / total;

    let mut cross = Matrix3::zeros();
    for ((s, d), w) in src.iter().zip(dst).zip(weights) {
        cross += *w * (s.coords - src_centroid) * (d.coords - dst_centroid).transpose();
    }

    let svd = cross.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").transpose();
    let sigma = svd.singular_values;
    if sigma[1] <= RANK_TOL * sigma[0].max(f64::MIN_POSITIVE) {
        return Err(RegistrationError::Degenerate {
            detail: format!(
                "cross-covariance singular values {:?} leave the rotation underdetermined",
                [sigma[0], sigma[1], sigma[2]]
            ),
        });
    }

    let mut d = Matrix3::identity();
    d[(2, 2)] = (v * u.transpose()).determinant().signum();
    let rotation = v * d * u.transpose();
    let translation = dst_centroid - rotation * src_centroid;
    Ok(RigidTransform { rotation, translation })
}

/// [`kabsch`] with unit weights.
pub fn kabsch_unweighted(
    src: &[Point3<f64>],
    dst: &[Point3<f64>],
) -> Result<RigidTransform, RegistrationError> {
    kabsch(src, dst, &vec![1.0; src.len().max(dst.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud<R: Rng>(n: usize, rng: &mut R) -> Vec<Point3<f64>> {
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect()
    }

    fn random_transform<R: Rng>(rng: &mut R) -> RigidTransform {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        RigidTransform {
            rotation: Rotation3::from_scaled_axis(axis).into_inner(),
            translation: Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ),
        }
    }

    #[test]
    fn identity_for_identical_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cloud = random_cloud(10, &mut rng);
        let t = kabsch_unweighted(&cloud, &cloud).unwrap();
        // Frobenius comparison: the angle metric loses half the digits near
        // zero (acos conditioning), the matrix entries do not.
        assert!((t.rotation - Matrix3::identity()).norm() < 1e-12);
        assert!(t.translation.norm() < 1e-12);
    }

    #[test]
    fn recovers_quarter_turn_with_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = random_cloud(25, &mut rng);
        let truth = RigidTransform {
            rotation: Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2)
                .into_inner(),
            translation: Vector3::new(1.0, 2.0, 3.0),
        };
        let dst = truth.apply_all(&src);
        let t = kabsch_unweighted(&src, &dst).unwrap();
        assert!((t.rotation - truth.rotation).norm() < 1e-12);
        assert!((t.translation - truth.translation).norm() < 1e-12);
    }

    #[test]
    fn noiseless_random_instances_recover_exactly() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let src = random_cloud(50, &mut rng);
            let truth = random_transform(&mut rng);
            let dst = truth.apply_all(&src);
            let t = kabsch_unweighted(&src, &dst).unwrap();
            assert!(t.is_valid(1e-9));
            assert!(t.rotation_distance(&truth) < 1e-7, "seed {seed}");
            assert!((t.translation - truth.translation).norm() < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn weight_doubling_equals_point_repetition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let src = random_cloud(8, &mut rng);
        let truth = random_transform(&mut rng);
        let mut dst = truth.apply_all(&src);
        // Perturb so weights actually matter.
        dst[0].x += 0.3;
        dst[5].z -= 0.2;

        let mut weights = vec![1.0; 8];
        weights[2] = 2.0;
        let weighted = kabsch(&src, &dst, &weights).unwrap();

        let mut src_rep = src.clone();
        let mut dst_rep = dst.clone();
        src_rep.push(src[2]);
        dst_rep.push(dst[2]);
        let repeated = kabsch_unweighted(&src_rep, &dst_rep).unwrap();

        assert!((weighted.rotation - repeated.rotation).norm() < 1e-12);
        assert!((weighted.translation - repeated.translation).norm() < 1e-12);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let src: Vec<Point3<f64>> =
            (0..6).map(|i| Point3::new(i as f64 * 0.2, 0.0, 0.0)).collect();
        let dst = src.clone();
        let err = kabsch_unweighted(&src, &dst).unwrap_err();
        assert!(matches!(err, RegistrationError::Degenerate { .. }), "got {err}");
    }

    #[test]
    fn result_is_global_optimum_among_perturbations() {
        // The closed form minimizes the weighted squared residual; random
        // perturbed transforms at several scales must never do better.
        let objective = |t: &RigidTransform, src: &[Point3<f64>], dst: &[Point3<f64>]| {
            src.iter()
                .zip(dst)
                .map(|(s, d)| (t.apply(s) - d).norm_squared())
                .sum::<f64>()
        };
        for seed in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let src = random_cloud(10, &mut rng);
            let truth = random_transform(&mut rng);
            let mut dst = truth.apply_all(&src);
            // Add noise so the optimum is interior and nontrivial.
            for d in &mut dst {
                d.x += rng.random_range(-0.05..0.05);
                d.y += rng.random_range(-0.05..0.05);
                d.z += rng.random_range(-0.05..0.05);
            }
            let best = kabsch_unweighted(&src, &dst).unwrap();
            let base = objective(&best, &src, &dst);
            for k in 0..10_000 {
                let scale = match k % 4 {
                    0 => 1e-4,
                    1 => 1e-2,
                    2 => 0.3,
                    _ => 2.0,
                };
                let axis = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ) * scale;
                let shift = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ) * scale;
                let perturbed = RigidTransform {
                    rotation: Rotation3::from_scaled_axis(axis).into_inner() * best.rotation,
                    translation: best.translation + shift,
                };
                assert!(
                    objective(&perturbed, &src, &dst) >= base - 1e-12,
                    "perturbation beat the closed form (seed {seed}, k {k})"
                );
            }
        }
    }
}
