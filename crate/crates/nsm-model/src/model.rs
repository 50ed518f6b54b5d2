//! Forward passes of the mating network.

use autodiff_tensor::{Tape, Tensor, Var};

use crate::knn::{edge_centre_indices, knn_graph};
use crate::params::BnUpdate;
use crate::pose::{Pose, QUAT_OUTER_TO_ROT};
use crate::tape_params::{TapeBn, TapeDgcnn, TapeDiscriminator, TapeModel, TapeRegressor, TapeSdfLayer, TapeTransformer};

/// Whether batch statistics are computed from the current batch (training) or
/// read from frozen running estimates (evaluation).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Negative slope of the leaky ReLU used throughout the graph encoder and the
/// pose regressor.
pub const LEAKY_SLOPE: f64 = 0.2;

fn batch_norm<'t>(
    x: Var<'t>,
    bn: &TapeBn<'t>,
    mode: Mode,
    path: &str,
    updates: &mut Vec<BnUpdate>,
) -> Var<'t> {
    match mode {
        Mode::Train => {
            let (y, stats) = x.batch_norm_train(bn.gamma, bn.beta);
            updates.push(BnUpdate {
                path: path.to_string(),
                stats,
            });
            y
        }
        Mode::Eval => x.batch_norm_eval(bn.gamma, bn.beta, &bn.running_mean, &bn.running_var),
    }
}

/// Max pool over all rows, producing a `1 x c` global feature.
fn global_max_pool(x: Var<'_>) -> Var<'_> {
    let rows = x.shape().0;
    x.max_pool_rows(rows)
}

/// Dynamic-graph edge-convolution encoder.
///
/// `points` is `N x 3`, `graph` the flat `N x k` neighbour table built from
/// the input coordinates (the same graph is reused by every layer). Each layer
/// forms edge features `concat(x_i, x_j - x_i)`, applies a shared linear map,
/// batch norm and a leaky ReLU, then max-pools over the `k` neighbours.
/// Returns `N x d` per-point features.
pub fn dgcnn_encode<'t>(
    _tape: &'t Tape,
    points: Var<'t>,
    graph: &[usize],
    net: &TapeDgcnn<'t>,
    mode: Mode,
    path_prefix: &str,
    updates: &mut Vec<BnUpdate>,
) -> Var<'t> {
    let n = points.shape().0;
    assert!(n > 0 && graph.len() % n == 0, "graph does not cover the cloud");
    let k = graph.len() / n;
    let centre = edge_centre_indices(n, k);
    let mut x = points;
    for (i, layer) in net.layers.iter().enumerate() {
        let xi = x.gather_rows(&centre);
        let xj = x.gather_rows(graph);
        let edge = xi.concat_cols(xj.sub(xi));
        let y = layer.lin.apply(edge);
        let y = batch_norm(y, &layer.bn, mode, &format!("{path_prefix}.layer{i}"), updates);
        x = y.leaky_relu(LEAKY_SLOPE).max_pool_rows(k);
    }
    x
}

/// Scaled dot-product attention. Returns the attended values and the
/// row-stochastic weight matrix.
pub fn attention<'t>(q: Var<'t>, k: Var<'t>, v: Var<'t>) -> (Var<'t>, Var<'t>) {
    let d = q.shape().1;
    let weights = q
        .matmul(k.transpose())
        .scale(1.0 / (d as f64).sqrt())
        .row_softmax();
    (weights.matmul(v), weights)
}

/// Feature correlation between the two parts: per-part self-attention
/// followed by cross-attention, all single-head and without positional
/// encodings. Returns the cross-attended features `(h_a, h_b)`.
pub fn transformer_correlate<'t>(
    f_a: Var<'t>,
    f_b: Var<'t>,
    t: &TapeTransformer<'t>,
) -> (Var<'t>, Var<'t>) {
    let s_a = attention(
        t.self_q.apply(f_a),
        t.self_k.apply(f_a),
        t.self_v.apply(f_a),
    )
    .0;
    let s_b = attention(
        t.self_q.apply(f_b),
        t.self_k.apply(f_b),
        t.self_v.apply(f_b),
    )
    .0;
    let h_a = attention(
        t.cross_q.apply(s_a),
        t.cross_k.apply(s_b),
        t.cross_v.apply(s_b),
    )
    .0;
    let h_b = attention(
        t.cross_q.apply(s_b),
        t.cross_k.apply(s_a),
        t.cross_v.apply(s_a),
    )
    .0;
    (h_a, h_b)
}

/// Rotation matrix (3x3) from a unit quaternion (1x4, `(w, x, y, z)` order),
/// expressed as a constant linear map applied to the flattened outer product
/// `vec(qᵀq)`. Matches [`crate::pose::quat_to_matrix_entries`] bit for bit.
pub fn quat_to_rot<'t>(tape: &'t Tape, q: Var<'t>) -> Var<'t> {
    assert_eq!(q.shape(), (1, 4), "expected a 1x4 quaternion");
    let outer = q.transpose().matmul(q);
    let coeffs = tape.leaf(Tensor::from_vec(
        9,
        16,
        QUAT_OUTER_TO_ROT.iter().flatten().copied().collect(),
    ));
    coeffs.matmul(outer.reshape(16, 1)).reshape(3, 3)
}

/// One part's predicted rigid motion, still attached to the tape.
#[derive(Clone, Copy)]
pub struct PosePrediction<'t> {
    /// Unit quaternion, `1 x 4`.
    pub quat: Var<'t>,
    /// Translation, `1 x 3`.
    pub trans: Var<'t>,
    /// Rotation matrix of `quat`, `3 x 3`.
    pub rot: Var<'t>,
}

impl<'t> PosePrediction<'t> {
    /// Detached plain-number pose.
    pub fn to_pose(&self) -> Pose {
        let q = self.quat.value();
        let t = self.trans.value();
        Pose {
            quat: [q.get(0, 0), q.get(0, 1), q.get(0, 2), q.get(0, 3)],
            translation: [t.get(0, 0), t.get(0, 1), t.get(0, 2)],
        }
    }
}

/// Regresses the two rigid motions from global encoder features `f_*` and
/// global correlated features `h_*` (each `1 x d`). The two parts share all
/// head weights; batch norm in the hidden layer runs over the two part rows.
pub fn regress_poses<'t>(
    tape: &'t Tape,
    f_a: Var<'t>,
    h_a: Var<'t>,
    f_b: Var<'t>,
    h_b: Var<'t>,
    reg: &TapeRegressor<'t>,
    mode: Mode,
    updates: &mut Vec<BnUpdate>,
) -> (PosePrediction<'t>, PosePrediction<'t>) {
    let row_a = f_a.concat_cols(h_a);
    let row_b = f_b.concat_cols(h_b);
    let x = row_a.concat_rows(row_b);
    let hidden = batch_norm(
        reg.shared.apply(x),
        &reg.shared_bn,
        mode,
        "regressor.shared",
        updates,
    )
    .leaky_relu(LEAKY_SLOPE);
    let quats = reg.quat.apply(hidden).l2_normalize_rows();
    let trans = reg.trans.apply(hidden);
    let build = |row: usize| {
        let q = quats.gather_rows(&[row]);
        let t = trans.gather_rows(&[row]);
        PosePrediction {
            quat: q,
            trans: t,
            rot: quat_to_rot(tape, q),
        }
    };
    (build(0), build(1))
}

/// Applies the predicted motions and stacks the two transformed clouds,
/// part A first: `concat(R_a·P_a + t_a, R_b·P_b + t_b)`.
pub fn assemble<'t>(
    points_a: Var<'t>,
    points_b: Var<'t>,
    pose_a: &PosePrediction<'t>,
    pose_b: &PosePrediction<'t>,
) -> Var<'t> {
    let moved_a = points_a.matmul(pose_a.rot.transpose()).add_row(pose_a.trans);
    let moved_b = points_b.matmul(pose_b.rot.transpose()).add_row(pose_b.trans);
    moved_a.concat_rows(moved_b)
}

/// Shape classifier: graph encoder over the assembled cloud, global max
/// pooling, one linear unit, sigmoid. The score is strictly inside (0, 1).
pub fn discriminate<'t>(
    tape: &'t Tape,
    cloud: Var<'t>,
    disc: &TapeDiscriminator<'t>,
    k: usize,
    mode: Mode,
    updates: &mut Vec<BnUpdate>,
) -> Var<'t> {
    let graph = knn_graph(&cloud.value(), k);
    let feats = dgcnn_encode(tape, cloud, &graph, &disc.dgcnn, mode, "discriminator", updates);
    disc.fc.apply(global_max_pool(feats)).sigmoid()
}

/// Implicit-surface head: predicts one signed distance per query point,
/// conditioned on a part's global feature (`1 x d`). Queries are `Q x 3` in
/// the part's local frame. Layer 5 re-reads the original input alongside the
/// previous activation; the final layer is linear.
pub fn sdf_head<'t>(
    _tape: &'t Tape,
    feat: Var<'t>,
    queries: Var<'t>,
    layers: &[TapeSdfLayer<'t>],
    mode: Mode,
    updates: &mut Vec<BnUpdate>,
) -> Var<'t> {
    let q_rows = queries.shape().0;
    assert_eq!(feat.shape().0, 1, "expected a single global feature row");
    let rep = feat.gather_rows(&vec![0; q_rows]);
    let x0 = rep.concat_cols(queries);
    let mut h = x0;
    for (i, layer) in layers.iter().enumerate() {
        let input = if i == 4 { h.concat_cols(x0) } else { h };
        let y = layer.lin.apply(input);
        h = match &layer.bn {
            Some(bn) => batch_norm(y, bn, mode, &format!("sdf.layer{i}"), updates).relu(),
            None => y,
        };
    }
    h
}

/// Everything the pose-prediction path produces for one pair.
pub struct MatingOutputs<'t> {
    /// Input clouds as tape leaves (part A then part B).
    pub points_a: Var<'t>,
    pub points_b: Var<'t>,
    /// Predicted rigid motions.
    pub pose_a: PosePrediction<'t>,
    pub pose_b: PosePrediction<'t>,
    /// Global encoder features (`1 x d`), used to condition the
    /// implicit-surface head.
    pub feat_a: Var<'t>,
    pub feat_b: Var<'t>,
    /// Predicted assembly, `(N + M) x 3`, part A rows first.
    pub assembled: Var<'t>,
}

/// Full pose-prediction forward pass for one pair of part clouds.
pub fn forward_mating<'t>(
    tape: &'t Tape,
    model: &TapeModel<'t>,
    points_a: &Tensor,
    points_b: &Tensor,
    mode: Mode,
    updates: &mut Vec<BnUpdate>,
) -> MatingOutputs<'t> {
    let k = model.config.encoder.k;
    let pa = tape.leaf(points_a.clone());
    let pb = tape.leaf(points_b.clone());
    let graph_a = knn_graph(points_a, k);
    let graph_b = knn_graph(points_b, k);
    let f_a = dgcnn_encode(tape, pa, &graph_a, &model.encoder, mode, "encoder", updates);
    let f_b = dgcnn_encode(tape, pb, &graph_b, &model.encoder, mode, "encoder", updates);
    let (h_a, h_b) = transformer_correlate(f_a, f_b, &model.transformer);
    let f_a_g = global_max_pool(f_a);
    let f_b_g = global_max_pool(f_b);
    let h_a_g = global_max_pool(h_a);
    let h_b_g = global_max_pool(h_b);
    let (pose_a, pose_b) = regress_poses(
        tape, f_a_g, h_a_g, f_b_g, h_b_g, &model.regressor, mode, updates,
    );
    let assembled = assemble(pa, pb, &pose_a, &pose_b);
    MatingOutputs {
        points_a: pa,
        points_b: pb,
        pose_a,
        pose_b,
        feat_a: f_a_g,
        feat_b: f_b_g,
        assembled,
    }
}
