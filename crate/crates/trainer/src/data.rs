//! Training samples and input-pose augmentation.

use autodiff_tensor::Tensor;
use nsm_model::{PairGroundTruth, Pose};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{PoseMode, TrainConfig};
use crate::TrainError;

/// One training pair: zero-centred part clouds, their original centroids, and
/// per-part signed-distance samples `(x, y, z, d)` in the part frame.
#[derive(Debug, Clone)]
pub struct PairSample {
    pub id: String,
    pub points_a: Tensor,
    pub points_b: Tensor,
    pub centroid_a: [f64; 3],
    pub centroid_b: [f64; 3],
    pub sdf_a: Tensor,
    pub sdf_b: Tensor,
    /// Fixed input orientations, set when the run uses
    /// [`PoseMode::FrozenPerPair`].
    pub frozen_quat_a: Option<[f64; 4]>,
    pub frozen_quat_b: Option<[f64; 4]>,
}

impl PairSample {
    pub fn new(
        id: impl Into<String>,
        points_a: Tensor,
        points_b: Tensor,
        centroid_a: [f64; 3],
        centroid_b: [f64; 3],
        sdf_a: Tensor,
        sdf_b: Tensor,
    ) -> Self {
        assert_eq!(points_a.cols(), 3, "part clouds must be N x 3");
        assert_eq!(points_b.cols(), 3, "part clouds must be N x 3");
        assert_eq!(sdf_a.cols(), 4, "sdf samples must be S x 4");
        assert_eq!(sdf_b.cols(), 4, "sdf samples must be S x 4");
        PairSample {
            id: id.into(),
            points_a,
            points_b,
            centroid_a,
            centroid_b,
            sdf_a,
            sdf_b,
            frozen_quat_a: None,
            frozen_quat_b: None,
        }
    }

    /// Ground-truth assembly of this pair: both clouds moved back to the
    /// source frame and stacked, part A first.
    pub fn real_assembly(&self) -> Tensor {
        let na = self.points_a.rows();
        let nb = self.points_b.rows();
        let mut data = Vec::with_capacity((na + nb) * 3);
        for i in 0..na {
            for c in 0..3 {
                data.push(self.points_a.get(i, c) + self.centroid_a[c]);
            }
        }
        for i in 0..nb {
            for c in 0..3 {
                data.push(self.points_b.get(i, c) + self.centroid_b[c]);
            }
        }
        Tensor::from_vec(na + nb, 3, data)
    }
}

/// The training set after preparation.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub samples: Vec<PairSample>,
}

impl TrainData {
    /// Wraps raw samples, optionally assigning each part a fixed random
    /// orientation (drawn from `seed`, independent of the step RNG) when the
    /// run freezes its input poses.
    pub fn new(
        mut samples: Vec<PairSample>,
        pose_mode: PoseMode,
        seed: u64,
    ) -> Result<Self, TrainError> {
        if samples.is_empty() {
            return Err(TrainError::BadSetup("training set is empty".into()));
        }
        if pose_mode == PoseMode::FrozenPerPair {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f00d_u64);
            for s in &mut samples {
                s.frozen_quat_a = Some(sample_uniform_quat(&mut rng));
                s.frozen_quat_b = Some(sample_uniform_quat(&mut rng));
            }
        }
        Ok(TrainData { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Uniformly random unit quaternion (`(w, x, y, z)` order).
pub fn sample_uniform_quat(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let q: [f64; 4] = [
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ];
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return [q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm];
        }
    }
}

/// Rotates every row of an `N x 3` tensor by the quaternion.
pub fn rotate_rows(points: &Tensor, quat: [f64; 4]) -> Tensor {
    let r = Pose { quat, translation: [0.0; 3] }.rotation_matrix();
    let n = points.rows();
    let mut data = Vec::with_capacity(n * 3);
    for i in 0..n {
        let p = nalgebra_free_mul(&r, [points.get(i, 0), points.get(i, 1), points.get(i, 2)]);
        data.extend_from_slice(&p);
    }
    Tensor::from_vec(n, 3, data)
}

fn nalgebra_free_mul(r: &nalgebra::Matrix3<f64>, p: [f64; 3]) -> [f64; 3] {
    [
        r[(0, 0)] * p[0] + r[(0, 1)] * p[1] + r[(0, 2)] * p[2],
        r[(1, 0)] * p[0] + r[(1, 1)] * p[1] + r[(1, 2)] * p[2],
        r[(2, 0)] * p[0] + r[(2, 1)] * p[1] + r[(2, 2)] * p[2],
    ]
}

/// One pair instantiated for a single step: rotated inputs, matching ground
/// truth, and a subsampled set of signed-distance queries per part.
pub struct PreparedPair {
    pub input_a: Tensor,
    pub input_b: Tensor,
    pub gt: PairGroundTruth,
    pub queries_a: Tensor,
    pub sdf_gt_a: Tensor,
    pub queries_b: Tensor,
    pub sdf_gt_b: Tensor,
}

/// Draws the input orientations for one pair (fixed ones when frozen), builds
/// the rotated clouds and queries, and the ground-truth motions that undo the
/// rotation and restore the original centroid.
///
/// RNG consumption order is fixed: orientation A, orientation B (skipped in
/// frozen mode), query rows for A, query rows for B.
pub fn prepare_pair(sample: &PairSample, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> PreparedPair {
    let quat_a = sample.frozen_quat_a.unwrap_or_else(|| sample_uniform_quat(rng));
    let quat_b = sample.frozen_quat_b.unwrap_or_else(|| sample_uniform_quat(rng));
    let input_a = rotate_rows(&sample.points_a, quat_a);
    let input_b = rotate_rows(&sample.points_b, quat_b);
    let gt = PairGroundTruth {
        rot_a: inverse_rotation_tensor(quat_a),
        trans_a: Tensor::from_vec(1, 3, sample.centroid_a.to_vec()),
        rot_b: inverse_rotation_tensor(quat_b),
        trans_b: Tensor::from_vec(1, 3, sample.centroid_b.to_vec()),
    };
    let (queries_a, sdf_gt_a) = draw_queries(&sample.sdf_a, quat_a, cfg.sdf_queries, rng);
    let (queries_b, sdf_gt_b) = draw_queries(&sample.sdf_b, quat_b, cfg.sdf_queries, rng);
    PreparedPair {
        input_a,
        input_b,
        gt,
        queries_a,
        sdf_gt_a,
        queries_b,
        sdf_gt_b,
    }
}

/// Transpose (= inverse) of the rotation encoded by `quat`, as a 3x3 tensor.
/// Rotating the stored cloud by R leaves the ground-truth motion Rᵀ (back to
/// the canonical orientation) followed by the original centroid.
pub fn inverse_rotation_tensor(quat: [f64; 4]) -> Tensor {
    let r = Pose { quat, translation: [0.0; 3] }.rotation_matrix();
    let mut data = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            data.push(r[(j, i)]);
        }
    }
    Tensor::from_vec(3, 3, data)
}

/// Subsamples `count` signed-distance rows (with replacement) and rotates the
/// query coordinates into the part's input frame; distances are invariant.
fn draw_queries(
    sdf: &Tensor,
    quat: [f64; 4],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> (Tensor, Tensor) {
    let total = sdf.rows();
    assert!(total > 0, "part has no signed-distance samples");
    let r = Pose { quat, translation: [0.0; 3] }.rotation_matrix();
    let mut coords = Vec::with_capacity(count * 3);
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let row = rng.random_range(0..total);
        let p = nalgebra_free_mul(&r, [sdf.get(row, 0), sdf.get(row, 1), sdf.get(row, 2)]);
        coords.extend_from_slice(&p);
        values.push(sdf.get(row, 3));
    }
    (
        Tensor::from_vec(count, 3, coords),
        Tensor::from_vec(count, 1, values),
    )
}

/// `count` row indices drawn with replacement from `0..n`.
pub fn sample_indices(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<usize> {
    (0..count).map(|_| rng.random_range(0..n)).collect()
}
