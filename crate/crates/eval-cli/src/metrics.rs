//! Pose-error metrics: Euler-angle MSE/RMSE/MAE for rotations, per-component
//! metrics for translations, and a convention-independent geodesic column.
//!
//! Rotations are compared as intrinsic Z-Y-X Euler angles in degrees
//! (`R = Rz(α)·Ry(β)·Rx(γ)`), with per-angle differences wrapped to
//! `(−180°, 180°]`, pooled over all angles, both parts, and all pairs.
//! Translations pool per-component differences the same way.

use nalgebra::{Matrix3, Vector3};

/// Intrinsic Z-Y-X Euler angles `[α(z), β(y), γ(x)]` in degrees such that
/// `R = Rz(α)·Ry(β)·Rx(γ)`. At gimbal lock (`|β| = 90°`) the roll is folded
/// into the yaw and reported as zero (the standard degenerate branch).
pub fn euler_zyx_degrees(r: &Matrix3<f64>) -> [f64; 3] {
    let r20 = r[(2, 0)].clamp(-1.0, 1.0);
    let (alpha, beta, gamma);
    if r20.abs() >= 1.0 - 1e-12 {
        beta = if r20 < 0.0 { std::f64::consts::FRAC_PI_2 } else { -std::f64::consts::FRAC_PI_2 };
        alpha = (-r[(0, 1)]).atan2(r[(1, 1)]);
        gamma = 0.0;
    } else {
        beta = (-r20).asin();
        alpha = r[(1, 0)].atan2(r[(0, 0)]);
        gamma = r[(2, 1)].atan2(r[(2, 2)]);
    }
    [alpha.to_degrees(), beta.to_degrees(), gamma.to_degrees()]
}

/// Rebuilds the rotation from intrinsic Z-Y-X Euler angles in degrees.
pub fn matrix_from_euler_zyx_degrees(angles: [f64; 3]) -> Matrix3<f64> {
    let (a, b, g) = (angles[0].to_radians(), angles[1].to_radians(), angles[2].to_radians());
    let rz = Matrix3::new(a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0);
    let ry = Matrix3::new(b.cos(), 0.0, b.sin(), 0.0, 1.0, 0.0, -b.sin(), 0.0, b.cos());
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, g.cos(), -g.sin(), 0.0, g.sin(), g.cos());
    rz * ry * rx
}

/// Wraps an angle difference in degrees to `(−180°, 180°]`.
pub fn wrap_degrees(d: f64) -> f64 {
    let r = d.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Pooled error statistics over a list of scalar residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
}

/// `MSE`, `RMSE = √MSE`, and `MAE` of the residuals. The transformed values
/// are sorted before reduction so the result does not depend on input order.
pub fn error_stats(residuals: &[f64]) -> ErrorStats {
    assert!(!residuals.is_empty(), "cannot pool zero residuals");
    let mse = sorted_mean(residuals.iter().map(|d| d * d).collect());
    let mae = sorted_mean(residuals.iter().map(|d| d.abs()).collect());
    ErrorStats { mse, rmse: mse.sqrt(), mae }
}

fn sorted_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Rotation part of the metric scheme: per-angle wrapped Euler differences,
/// pooled over all angles and all listed poses.
pub fn rotation_metrics(pred: &[Matrix3<f64>], gt: &[Matrix3<f64>]) -> ErrorStats {
    assert_eq!(pred.len(), gt.len(), "prediction and reference lists must match");
    let mut residuals = Vec::with_capacity(pred.len() * 3);
    for (p, g) in pred.iter().zip(gt.iter()) {
        let pe = euler_zyx_degrees(p);
        let ge = euler_zyx_degrees(g);
        for k in 0..3 {
            residuals.push(wrap_degrees(pe[k] - ge[k]));
        }
    }
    error_stats(&residuals)
}

/// Translation part: per-component differences pooled over all components and
/// all listed poses.
pub fn translation_metrics(pred: &[Vector3<f64>], gt: &[Vector3<f64>]) -> ErrorStats {
    assert_eq!(pred.len(), gt.len(), "prediction and reference lists must match");
    let mut residuals = Vec::with_capacity(pred.len() * 3);
    for (p, g) in pred.iter().zip(gt.iter()) {
        for k in 0..3 {
            residuals.push(p[k] - g[k]);
        }
    }
    error_stats(&residuals)
}

/// Mean geodesic rotation error `arccos((tr(R_predᵀ·R_gt) − 1) / 2)` in
/// degrees; independent of the Euler convention.
pub fn geodesic_mae_degrees(pred: &[Matrix3<f64>], gt: &[Matrix3<f64>]) -> f64 {
    assert_eq!(pred.len(), gt.len(), "prediction and reference lists must match");
    let angles: Vec<f64> = pred
        .iter()
        .zip(gt.iter())
        .map(|(p, g)| {
            let c = ((p.transpose() * g).trace() - 1.0) / 2.0;
            c.clamp(-1.0, 1.0).acos().to_degrees()
        })
        .collect();
    sorted_mean(angles)
}

/// One method's estimated rigid motion for one part.
#[derive(Debug, Clone, Copy)]
pub struct PoseEstimate {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl PoseEstimate {
    pub fn identity() -> Self {
        PoseEstimate { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }
}

/// Predicted and reference motions for both parts of one pair.
#[derive(Debug, Clone, Copy)]
pub struct EvalPair {
    pub pred: [PoseEstimate; 2],
    pub gt: [PoseEstimate; 2],
}

/// One CSV row of the evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub method: String,
    pub experiment: String,
    pub mse_r: f64,
    pub rmse_r: f64,
    pub mae_r: f64,
    pub mse_t: f64,
    pub rmse_t: f64,
    pub mae_t: f64,
    pub geodesic_mae: f64,
    pub n_pairs: usize,
}

impl MetricsRecord {
    pub fn csv_header() -> &'static str {
        "method,experiment,MSE_R,RMSE_R,MAE_R,MSE_T,RMSE_T,MAE_T,geodesic_MAE,n_pairs"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.experiment,
            self.mse_r,
            self.rmse_r,
            self.mae_r,
            self.mse_t,
            self.rmse_t,
            self.mae_t,
            self.geodesic_mae,
            self.n_pairs
        )
    }

    /// `RMSE = √MSE ± 1e-9`, `MAE ≤ RMSE`, everything nonnegative.
    pub fn validate(&self) {
        for (name, v) in [
            ("MSE_R", self.mse_r),
            ("RMSE_R", self.rmse_r),
            ("MAE_R", self.mae_r),
            ("MSE_T", self.mse_t),
            ("RMSE_T", self.rmse_t),
            ("MAE_T", self.mae_t),
            ("geodesic_MAE", self.geodesic_mae),
        ] {
            assert!(v >= 0.0 && v.is_finite(), "{name} must be finite and nonnegative, got {v}");
        }
        assert!((self.rmse_r - self.mse_r.sqrt()).abs() <= 1e-9, "RMSE_R must equal sqrt(MSE_R)");
        assert!((self.rmse_t - self.mse_t.sqrt()).abs() <= 1e-9, "RMSE_T must equal sqrt(MSE_T)");
        assert!(self.mae_r <= self.rmse_r + 1e-12, "MAE_R must not exceed RMSE_R");
        assert!(self.mae_t <= self.rmse_t + 1e-12, "MAE_T must not exceed RMSE_T");
    }
}

/// Pools both parts of every pair into one record.
pub fn compute_metrics(method: &str, experiment: &str, pairs: &[EvalPair]) -> MetricsRecord {
    assert!(!pairs.is_empty(), "cannot compute metrics over zero pairs");
    let mut pred_r = Vec::with_capacity(pairs.len() * 2);
    let mut gt_r = Vec::with_capacity(pairs.len() * 2);
    let mut pred_t = Vec::with_capacity(pairs.len() * 2);
    let mut gt_t = Vec::with_capacity(pairs.len() * 2);
    for pair in pairs {
        for part in 0..2 {
            pred_r.push(pair.pred[part].rotation);
            gt_r.push(pair.gt[part].rotation);
            pred_t.push(pair.pred[part].translation);
            gt_t.push(pair.gt[part].translation);
        }
    }
    let rot = rotation_metrics(&pred_r, &gt_r);
    let trans = translation_metrics(&pred_t, &gt_t);
    let record = MetricsRecord {
        method: method.to_string(),
        experiment: experiment.to_string(),
        mse_r: rot.mse,
        rmse_r: rot.rmse,
        mae_r: rot.mae,
        mse_t: trans.mse,
        rmse_t: trans.rmse,
        mae_t: trans.mae,
        geodesic_mae: geodesic_mae_degrees(&pred_r, &gt_r),
        n_pairs: pairs.len(),
    };
    record.validate();
    record
}

/// Renders records as a CSV document (header plus one row per record).
pub fn render_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(MetricsRecord::csv_header());
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let axis = nalgebra::Unit::new_normalize(Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ));
        let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        *nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix()
    }

    #[test]
    fn identical_poses_score_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rots: Vec<Matrix3<f64>> = (0..10).map(|_| random_rotation(&mut rng)).collect();
        let stats = rotation_metrics(&rots, &rots);
        assert_eq!(stats.mse, 0.0);
        assert_eq!(stats.rmse, 0.0);
        assert_eq!(stats.mae, 0.0);
        // acos(trace) picks up rounding noise from the R^T R product even for
        // identical inputs, so the geodesic only vanishes to ~1e-6 degrees.
        assert!(geodesic_mae_degrees(&rots, &rots) < 1e-6);
    }

    #[test]
    fn a_uniform_two_degree_offset_gives_mae_two_mse_four() {
        // Rotations whose Euler angles all differ by +2 degrees.
        let gt_angles = [[10.0, 20.0, 30.0], [-40.0, 5.0, 60.0], [0.0, 0.0, 0.0]];
        let mut pred = Vec::new();
        let mut gt = Vec::new();
        for a in gt_angles {
            gt.push(matrix_from_euler_zyx_degrees(a));
            pred.push(matrix_from_euler_zyx_degrees([a[0] + 2.0, a[1] + 2.0, a[2] + 2.0]));
        }
        let stats = rotation_metrics(&pred, &gt);
        assert!((stats.mae - 2.0).abs() < 1e-9, "MAE {}", stats.mae);
        assert!((stats.mse - 4.0).abs() < 1e-9, "MSE {}", stats.mse);
        assert!((stats.rmse - 2.0).abs() < 1e-9, "RMSE {}", stats.rmse);
    }

    #[test]
    fn a_constant_x_translation_offset_pools_across_components() {
        let gt: Vec<Vector3<f64>> = (0..4).map(|i| Vector3::new(i as f64, 0.0, 0.5)).collect();
        let pred: Vec<Vector3<f64>> =
            gt.iter().map(|t| t + Vector3::new(0.01, 0.0, 0.0)).collect();
        let stats = translation_metrics(&pred, &gt);
        assert!((stats.mae - 0.01 / 3.0).abs() < 1e-12);
        assert!((stats.mse - 0.0001 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn euler_round_trip_reproduces_the_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let r = random_rotation(&mut rng);
            let rebuilt = matrix_from_euler_zyx_degrees(euler_zyx_degrees(&r));
            let err = (r - rebuilt).norm();
            assert!(err < 1e-9, "round-trip error {err}");
        }
    }

    #[test]
    fn gimbal_lock_uses_the_degenerate_branch() {
        // Pitch exactly -90 degrees: R20 = +1.
        for (yaw, roll) in [(30.0, 40.0), (0.0, 0.0), (-120.0, 75.0)] {
            let r = matrix_from_euler_zyx_degrees([yaw, -90.0, roll]);
            let e = euler_zyx_degrees(&r);
            assert!((e[1] + 90.0).abs() < 1e-9, "pitch must be -90, got {}", e[1]);
            assert_eq!(e[2], 0.0, "roll folds into yaw at gimbal lock");
            let rebuilt = matrix_from_euler_zyx_degrees(e);
            assert!((r - rebuilt).norm() < 1e-9, "gimbal round trip failed");
        }
        // Pitch exactly +90 degrees: R20 = -1.
        let r = matrix_from_euler_zyx_degrees([25.0, 90.0, -10.0]);
        let e = euler_zyx_degrees(&r);
        assert!((e[1] - 90.0).abs() < 1e-9);
        let rebuilt = matrix_from_euler_zyx_degrees(e);
        assert!((r - rebuilt).norm() < 1e-9);
    }

    #[test]
    fn wrapping_maps_into_the_half_open_interval() {
        assert_eq!(wrap_degrees(0.0), 0.0);
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert!((wrap_degrees(190.0) - (-170.0)).abs() < 1e-12);
        assert!((wrap_degrees(-190.0) - 170.0).abs() < 1e-12);
        assert!((wrap_degrees(720.0 + 5.0) - 5.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let d = rng.random_range(-2000.0..2000.0);
            let w = wrap_degrees(d);
            assert!(w > -180.0 && w <= 180.0, "{d} wrapped to {w}");
            // Wrapping preserves the angle modulo 360.
            assert!(((d - w).rem_euclid(360.0)).min((w - d).rem_euclid(360.0)) < 1e-9);
        }
    }

    #[test]
    fn pooled_metrics_ignore_input_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pairs: Vec<EvalPair> = (0..9)
            .map(|_| EvalPair {
                pred: [
                    PoseEstimate {
                        rotation: random_rotation(&mut rng),
                        translation: Vector3::new(
                            rng.random_range(-1.0..1.0),
                            rng.random_range(-1.0..1.0),
                            rng.random_range(-1.0..1.0),
                        ),
                    },
                    PoseEstimate { rotation: random_rotation(&mut rng), translation: Vector3::zeros() },
                ],
                gt: [
                    PoseEstimate { rotation: random_rotation(&mut rng), translation: Vector3::zeros() },
                    PoseEstimate { rotation: random_rotation(&mut rng), translation: Vector3::zeros() },
                ],
            })
            .collect();
        let forward = compute_metrics("m", "e", &pairs);
        let mut reversed = pairs.clone();
        reversed.reverse();
        let backward = compute_metrics("m", "e", &reversed);
        assert_eq!(forward, backward, "metrics must not depend on pair order");
    }

    #[test]
    fn csv_rows_follow_the_documented_schema() {
        let rec = MetricsRecord {
            method: "icp".into(),
            experiment: "standard".into(),
            mse_r: 4.0,
            rmse_r: 2.0,
            mae_r: 1.5,
            mse_t: 0.01,
            rmse_t: 0.1,
            mae_t: 0.05,
            geodesic_mae: 3.0,
            n_pairs: 10,
        };
        rec.validate();
        assert_eq!(
            MetricsRecord::csv_header(),
            "method,experiment,MSE_R,RMSE_R,MAE_R,MSE_T,RMSE_T,MAE_T,geodesic_MAE,n_pairs"
        );
        assert_eq!(rec.to_csv_row(), "icp,standard,4,2,1.5,0.01,0.1,0.05,3,10");
        let doc = render_csv(&[rec]);
        assert_eq!(doc.lines().count(), 2);
    }

    #[test]
    fn geodesic_angle_matches_the_axis_angle_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let axis = nalgebra::Unit::new_normalize(Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ));
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            let r = *nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix();
            let mae = geodesic_mae_degrees(&[r], &[Matrix3::identity()]);
            assert!((mae - angle.to_degrees()).abs() < 1e-9);
        }
    }
}
