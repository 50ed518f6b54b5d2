//! Converting stored dataset pairs into training samples and evaluation
//! inputs.

use autodiff_tensor::Tensor;
use dataset_io::{add_noise, LoadedPair, LoadedPart};
use nalgebra::Point3;
use rand_chacha::ChaCha8Rng;
use trainer::PairSample;

/// `count` evenly spaced indices into `0..n` (all of them when `count >= n`).
pub fn evenly_spaced(n: usize, count: usize) -> Vec<usize> {
    assert!(n > 0, "cannot subsample an empty list");
    if count >= n {
        (0..n).collect()
    } else {
        (0..count).map(|i| i * n / count).collect()
    }
}

fn part_points(part: &LoadedPart, count: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let idx = evenly_spaced(part.points.len(), count);
    let picked: Vec<Point3<f64>> = idx.iter().map(|&i| part.points[i]).collect();
    let noisy = add_noise(&picked, sigma, rng);
    let mut data = Vec::with_capacity(noisy.len() * 3);
    for p in &noisy {
        data.extend_from_slice(&[p.x, p.y, p.z]);
    }
    Tensor::from_vec(noisy.len(), 3, data)
}

fn part_sdf(part: &LoadedPart, count: usize) -> Tensor {
    let idx = evenly_spaced(part.sdf_points.len(), count);
    let mut data = Vec::with_capacity(idx.len() * 4);
    for &i in &idx {
        let p = part.sdf_points[i];
        data.extend_from_slice(&[p.x, p.y, p.z, part.sdf_values[i]]);
    }
    Tensor::from_vec(idx.len(), 4, data)
}

/// Builds a training sample from a stored pair: clouds subsampled evenly to
/// `points_per_part` (plus isotropic Gaussian noise when `noise_sigma > 0`),
/// signed-distance supervision subsampled to `sdf_per_part`. Stored pairs
/// keep identity rotations with the original centroid as translation; the
/// trainer applies its own orientation augmentation.
pub fn to_pair_sample(
    pair: &LoadedPair,
    points_per_part: usize,
    sdf_per_part: usize,
    noise_sigma: f64,
    rng: &mut ChaCha8Rng,
) -> PairSample {
    for part in &pair.parts {
        assert!(
            part.rotation.angle() < 1e-12,
            "stored pairs must carry identity rotations (pair {})",
            pair.meta.id
        );
    }
    let [a, b] = &pair.parts;
    PairSample::new(
        pair.meta.id.clone(),
        part_points(a, points_per_part, noise_sigma, rng),
        part_points(b, points_per_part, noise_sigma, rng),
        [a.translation.x, a.translation.y, a.translation.z],
        [b.translation.x, b.translation.y, b.translation.z],
        part_sdf(a, sdf_per_part),
        part_sdf(b, sdf_per_part),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_subsampling_is_deterministic_and_in_range() {
        let idx = evenly_spaced(100, 10);
        assert_eq!(idx, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90]);
        assert_eq!(evenly_spaced(3, 10), vec![0, 1, 2]);
        let idx = evenly_spaced(7, 3);
        assert!(idx.iter().all(|&i| i < 7));
        assert_eq!(idx.len(), 3);
    }
}
