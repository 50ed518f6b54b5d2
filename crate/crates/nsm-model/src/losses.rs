//! Training objectives.

use autodiff_tensor::{Tape, Tensor, Var};

use crate::model::PosePrediction;

/// Ground-truth rigid motions for the two parts of a pair. Rotations are
/// `3 x 3` row-major matrices, translations `1 x 3` rows.
#[derive(Debug, Clone)]
pub struct PairGroundTruth {
    pub rot_a: Tensor,
    pub trans_a: Tensor,
    pub rot_b: Tensor,
    pub trans_b: Tensor,
}

impl PairGroundTruth {
    pub fn validate(&self) {
        assert_eq!(self.rot_a.shape(), (3, 3));
        assert_eq!(self.rot_b.shape(), (3, 3));
        assert_eq!(self.trans_a.shape(), (1, 3));
        assert_eq!(self.trans_b.shape(), (1, 3));
    }
}

/// Supervised pose term for a single part:
/// `‖R_predᵀ · R_gt − I‖_F + ‖t_pred − t_gt‖₂`.
pub fn pose_loss_single<'t>(
    tape: &'t Tape,
    pred: &PosePrediction<'t>,
    gt_rot: &Tensor,
    gt_trans: &Tensor,
) -> Var<'t> {
    assert_eq!(gt_rot.shape(), (3, 3), "ground-truth rotation must be 3x3");
    assert_eq!(gt_trans.shape(), (1, 3), "ground-truth translation must be 1x3");
    let rg = tape.leaf(gt_rot.clone());
    let tg = tape.leaf(gt_trans.clone());
    let eye = tape.leaf(Tensor::from_vec(
        3,
        3,
        vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    ));
    let rot_term = pred.rot.transpose().matmul(rg).sub(eye).norm_l2();
    let trans_term = pred.trans.sub(tg).norm_l2();
    rot_term.add(trans_term)
}

/// Supervised pose term summed over both parts of a pair.
pub fn pose_loss<'t>(
    tape: &'t Tape,
    pose_a: &PosePrediction<'t>,
    pose_b: &PosePrediction<'t>,
    gt: &PairGroundTruth,
) -> Var<'t> {
    gt.validate();
    pose_loss_single(tape, pose_a, &gt.rot_a, &gt.trans_a)
        .add(pose_loss_single(tape, pose_b, &gt.rot_b, &gt.trans_b))
}

/// Adversarial term seen by the pose predictor: mean `|D(assembly) − 1|` over
/// the given scores (an `n x 1` column).
pub fn generator_loss(scores: Var<'_>) -> Var<'_> {
    let (n, c) = scores.shape();
    assert_eq!(c, 1, "scores must form a column vector");
    scores.add_scalar(-1.0).norm_l1().scale(1.0 / n as f64)
}

/// Adversarial term seen by the shape classifier:
/// mean `|D(predicted)|` plus mean `|D(ground truth) − 1|`.
pub fn discriminator_loss<'t>(pred_scores: Var<'t>, real_scores: Var<'t>) -> Var<'t> {
    let (np, cp) = pred_scores.shape();
    let (nr, cr) = real_scores.shape();
    assert_eq!(cp, 1, "scores must form a column vector");
    assert_eq!(cr, 1, "scores must form a column vector");
    let fake_term = pred_scores.norm_l1().scale(1.0 / np as f64);
    let real_term = real_scores.add_scalar(-1.0).norm_l1().scale(1.0 / nr as f64);
    fake_term.add(real_term)
}

/// Implicit-surface term for one part: mean absolute error between predicted
/// and reference signed distances (both `Q x 1`).
pub fn sdf_loss_single<'t>(tape: &'t Tape, pred: Var<'t>, gt: &Tensor) -> Var<'t> {
    assert_eq!(pred.shape(), gt.shape(), "prediction and reference must agree");
    assert_eq!(pred.shape().1, 1, "signed distances must form a column");
    let n = gt.rows();
    let target = tape.leaf(gt.clone());
    pred.sub(target).norm_l1().scale(1.0 / n as f64)
}

/// Implicit-surface term summed over both parts.
pub fn sdf_loss<'t>(
    tape: &'t Tape,
    pred_a: Var<'t>,
    gt_a: &Tensor,
    pred_b: Var<'t>,
    gt_b: &Tensor,
) -> Var<'t> {
    sdf_loss_single(tape, pred_a, gt_a).add(sdf_loss_single(tape, pred_b, gt_b))
}
