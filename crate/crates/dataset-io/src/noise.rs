use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

/// Adds independent isotropic Gaussian noise to every point. Count and
/// ordering are preserved; `sigma = 0` returns the cloud unchanged without
/// consuming any randomness.
pub fn add_noise<R: Rng + ?Sized>(
    cloud: &[Point3<f64>],
    sigma: f64,
    rng: &mut R,
) -> Vec<Point3<f64>> {
    assert!(sigma >= 0.0, "noise sigma must be nonnegative");
    if sigma == 0.0 {
        return cloud.to_vec();
    }
    cloud
        .iter()
        .map(|p| {
            let d = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            p + d * sigma
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_sigma_is_identity_and_draws_nothing() {
        let cloud: Vec<Point3<f64>> =
            (0..50).map(|i| Point3::new(i as f64, -0.5 * i as f64, 0.25)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = add_noise(&cloud, 0.0, &mut rng);
        assert_eq!(out, cloud);
        // The rng was not consumed: it produces the same draw as a fresh one.
        let mut fresh = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(rng.random::<u64>(), fresh.random::<u64>());
    }

    #[test]
    fn sample_std_matches_sigma() {
        let n = 1_000_000usize;
        let cloud = vec![Point3::origin(); n];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = add_noise(&cloud, 0.05, &mut rng);
        assert_eq!(out.len(), n);

        for axis in 0..3 {
            let mean: f64 = out.iter().map(|p| p.coords[axis]).sum::<f64>() / n as f64;
            let var: f64 =
                out.iter().map(|p| (p.coords[axis] - mean).powi(2)).sum::<f64>() / n as f64;
            let std = var.sqrt();
            assert!((std - 0.05).abs() < 0.001, "axis {axis} std {std}");
            // Unbiasedness: the mean sits within three standard errors.
            assert!(mean.abs() < 3.0 * 0.05 / (n as f64).sqrt(), "axis {axis} mean {mean}");
        }
    }

    #[test]
    fn ordering_is_preserved() {
        let cloud: Vec<Point3<f64>> =
            (0..1000).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sigma = 0.05;
        let out = add_noise(&cloud, sigma, &mut rng);
        assert_eq!(out.len(), cloud.len());
        for (a, b) in cloud.iter().zip(&out) {
            assert!((a - b).norm() < 8.0 * sigma, "displacement too large to be noise");
        }
    }
}
