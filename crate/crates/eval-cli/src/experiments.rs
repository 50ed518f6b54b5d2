//! Experiment drivers: instantiate test pairs with seeded orientations (and
//! optional noise), run a method on every pair, and pool the metrics.

use autodiff_tensor::{Tape, Tensor};
use dataset_io::{add_noise, DatasetManifest, LoadedPair, Split, SplitMode};
use nalgebra::{Matrix3, Point3, Rotation3};
use nsm_model::{forward_mating, Mode, ModelParams, Pose, TapeModel};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use registration_baselines::{icp, sparse_icp, IcpParams, RigidTransform};
use trainer::sample_uniform_quat;

use crate::error::EvalError;
use crate::metrics::{compute_metrics, EvalPair, MetricsRecord, PoseEstimate};
use crate::samples::evenly_spaced;

/// Default exponent of the sparse registration baseline.
pub const SPARSE_ICP_P: f64 = 0.4;

/// Noise level of the noisy experiment (standard deviation per coordinate).
pub const NOISY_SIGMA: f64 = 0.05;

/// The four reported experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Standard,
    UnseenCategory,
    UnseenCut,
    Noisy,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Standard,
        ExperimentKind::UnseenCategory,
        ExperimentKind::UnseenCut,
        ExperimentKind::Noisy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Standard => "standard",
            ExperimentKind::UnseenCategory => "unseen-category",
            ExperimentKind::UnseenCut => "unseen-cut",
            ExperimentKind::Noisy => "noisy",
        }
    }

    pub fn parse(s: &str) -> Option<ExperimentKind> {
        ExperimentKind::ALL.iter().copied().find(|k| k.name() == s)
    }

    /// Noise applied to test clouds (the noisy experiment only).
    pub fn test_noise_sigma(&self) -> f64 {
        match self {
            ExperimentKind::Noisy => NOISY_SIGMA,
            _ => 0.0,
        }
    }

    /// The split mode this experiment expects the dataset to be divided by.
    pub fn split_mode(&self, test_categories: Vec<String>, test_family: String) -> SplitMode {
        match self {
            ExperimentKind::Standard | ExperimentKind::Noisy => SplitMode::Standard,
            ExperimentKind::UnseenCategory => SplitMode::UnseenCategory { test_categories },
            ExperimentKind::UnseenCut => SplitMode::UnseenCut { test_family },
        }
    }
}

/// A method under evaluation.
pub enum MethodSpec {
    /// Predicts the identity relative transform (sanity floor).
    Identity,
    /// Point-to-point iterative closest point from an identity initial guess.
    Icp,
    /// Sparse variant with the ℓp objective.
    SparseIcp { p: f64 },
    /// The trained pose-prediction network.
    Learned(Box<ModelParams>),
}

impl MethodSpec {
    pub fn name(&self) -> String {
        match self {
            MethodSpec::Identity => "identity".into(),
            MethodSpec::Icp => "icp".into(),
            MethodSpec::SparseIcp { .. } => "sparse-icp".into(),
            MethodSpec::Learned(_) => "learned".into(),
        }
    }
}

/// Evaluation options shared by every method.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Mixed into every per-pair RNG.
    pub seed: u64,
    /// Noise added to the instantiated test clouds.
    pub noise_sigma: f64,
    /// Input resolution of the learned model.
    pub learned_points: usize,
    /// Draw a random input orientation per part. Disabled only by sanity
    /// tests that evaluate on clouds already posed in the assembly frame.
    pub augment: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { seed: 0, noise_sigma: 0.0, learned_points: 256, augment: true }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Principal square root of a rotation: same axis, half the angle.
pub fn rotation_sqrt(r: &Matrix3<f64>) -> Matrix3<f64> {
    let rot = Rotation3::from_matrix_unchecked(*r);
    *Rotation3::new(rot.scaled_axis() * 0.5).matrix()
}

/// Converts a single relative transform into the two-pose convention:
/// part A moves by (√R, t/2), part B by the inverse half (√R⁻¹, −t/2).
/// Applied identically to predictions and references so single-transform
/// methods are scored on the same footing as two-pose methods.
pub fn split_relative(t: &RigidTransform) -> [PoseEstimate; 2] {
    let half = rotation_sqrt(&t.rotation);
    [
        PoseEstimate { rotation: half, translation: t.translation * 0.5 },
        PoseEstimate { rotation: half.transpose(), translation: -t.translation * 0.5 },
    ]
}

/// One test pair instantiated for evaluation.
struct Instance {
    input_a: Vec<Point3<f64>>,
    input_b: Vec<Point3<f64>>,
    /// Two-pose ground truth (input frame -> assembly frame).
    gt: [PoseEstimate; 2],
}

/// Deterministically instantiates a pair: seeded per-part orientations (from
/// the pair id, so the result is independent of evaluation order), optional
/// noise, and the matching ground-truth motions.
fn instantiate(pair: &LoadedPair, opts: &EvalOptions) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(pair.meta.id.as_bytes()) ^ opts.seed);
    let identity = [1.0, 0.0, 0.0, 0.0];
    let (quat_a, quat_b) = if opts.augment {
        (sample_uniform_quat(&mut rng), sample_uniform_quat(&mut rng))
    } else {
        (identity, identity)
    };
    let rot_a = Pose { quat: quat_a, translation: [0.0; 3] }.rotation_matrix();
    let rot_b = Pose { quat: quat_b, translation: [0.0; 3] }.rotation_matrix();
    let rotate = |points: &[Point3<f64>], r: &Matrix3<f64>| -> Vec<Point3<f64>> {
        points.iter().map(|p| Point3::from(r * p.coords)).collect()
    };
    let mut input_a = rotate(&pair.parts[0].points, &rot_a);
    let mut input_b = rotate(&pair.parts[1].points, &rot_b);
    if opts.noise_sigma > 0.0 {
        input_a = add_noise(&input_a, opts.noise_sigma, &mut rng);
        input_b = add_noise(&input_b, opts.noise_sigma, &mut rng);
    }
    let gt = [
        PoseEstimate { rotation: rot_a.transpose(), translation: pair.parts[0].translation },
        PoseEstimate { rotation: rot_b.transpose(), translation: pair.parts[1].translation },
    ];
    Instance { input_a, input_b, gt }
}

fn points_tensor(points: &[Point3<f64>], max_points: usize) -> Tensor {
    let idx = evenly_spaced(points.len(), max_points);
    let mut data = Vec::with_capacity(idx.len() * 3);
    for &i in &idx {
        data.extend_from_slice(&[points[i].x, points[i].y, points[i].z]);
    }
    Tensor::from_vec(idx.len(), 3, data)
}

/// Runs the trained network on one instantiated pair (running statistics,
/// no updates).
pub fn learned_poses(
    params: &ModelParams,
    input_a: &[Point3<f64>],
    input_b: &[Point3<f64>],
    max_points: usize,
) -> (PoseEstimate, PoseEstimate) {
    let ta = points_tensor(input_a, max_points);
    let tb = points_tensor(input_b, max_points);
    let tape = Tape::new();
    let model = TapeModel::new(&tape, params);
    let mut updates = Vec::new();
    let out = forward_mating(&tape, &model, &ta, &tb, Mode::Eval, &mut updates);
    let pa = out.pose_a.to_pose();
    let pb = out.pose_b.to_pose();
    (
        PoseEstimate { rotation: pa.rotation_matrix(), translation: pa.translation_vector() },
        PoseEstimate { rotation: pb.rotation_matrix(), translation: pb.translation_vector() },
    )
}

fn as_rigid(p: &PoseEstimate) -> RigidTransform {
    RigidTransform { rotation: p.rotation, translation: p.translation }
}

/// Evaluates one method on the given test pairs. Pairs are sorted by id
/// first, so the record is independent of input order; running twice yields
/// identical output.
pub fn evaluate_pairs(
    method: &MethodSpec,
    pairs: &[LoadedPair],
    experiment: &str,
    opts: &EvalOptions,
) -> Result<MetricsRecord, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::MissingSplit("test"));
    }
    let mut order: Vec<&LoadedPair> = pairs.iter().collect();
    order.sort_by(|a, b| a.meta.id.cmp(&b.meta.id));

    let mut eval_pairs = Vec::with_capacity(order.len());
    for pair in order {
        let inst = instantiate(pair, opts);
        let eval_pair = match method {
            MethodSpec::Learned(params) => {
                let (pa, pb) = learned_poses(params, &inst.input_a, &inst.input_b, opts.learned_points);
                EvalPair { pred: [pa, pb], gt: inst.gt }
            }
            relative => {
                // Single-transform baselines mate part A onto part B's input
                // frame; the reference relative motion is T_b⁻¹ ∘ T_a.
                let gt_rel = as_rigid(&inst.gt[1]).inverse().compose(&as_rigid(&inst.gt[0]));
                let pred_rel = match relative {
                    MethodSpec::Identity => RigidTransform::identity(),
                    MethodSpec::Icp => {
                        icp(&inst.input_a, &inst.input_b, None, &IcpParams::default())?.transform
                    }
                    MethodSpec::SparseIcp { p } => {
                        sparse_icp(&inst.input_a, &inst.input_b, None, *p, &IcpParams::default())?
                            .transform
                    }
                    MethodSpec::Learned(_) => unreachable!("handled above"),
                };
                EvalPair { pred: split_relative(&pred_rel), gt: split_relative(&gt_rel) }
            }
        };
        eval_pairs.push(eval_pair);
    }
    Ok(compute_metrics(&method.name(), experiment, &eval_pairs))
}

/// Loads every pair of one split fold from a dataset directory.
pub fn load_fold(root: &std::path::Path, fold: Split) -> Result<Vec<LoadedPair>, EvalError> {
    let manifest = DatasetManifest::load(root)?;
    let ids = manifest.ids_in(fold);
    if ids.is_empty() {
        return Err(EvalError::MissingSplit(fold.name()));
    }
    let mut out = Vec::with_capacity(ids.len());
    for id in &ids {
        out.push(dataset_io::read_pair(root, id)?);
    }
    Ok(out)
}
