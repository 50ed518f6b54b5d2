use mesh_kernel::PointKdTree;
use nalgebra::{Matrix6, Point3, Rotation3, Vector3, Vector6};

use crate::error::RegistrationError;
use crate::kabsch::kabsch;
use crate::transform::RigidTransform;

/// Residual magnitudes are clamped to this floor before exponentiation so
/// IRLS weights stay finite as inlier residuals approach zero.
pub const SPARSE_EPS: f64 = 1e-6;

/// Correspondence/inner-step flavor of the ICP loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcpVariant {
    /// Minimize Σ w‖T·s − d‖² with a closed-form solve per iteration.
    PointToPoint,
    /// Minimize Σ w((T·s − d)·n)² with a linearized 6-DoF solve per iteration.
    PointToPlane,
}

#[derive(Debug, Clone, Copy)]
pub struct IcpParams {
    pub variant: IcpVariant,
    pub max_iters: usize,
    /// Stop once the pose change between iterations (rotation geodesic plus
    /// translation norm) drops below this.
    pub tol: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams { variant: IcpVariant::PointToPoint, max_iters: 200, tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct IcpResult {
    pub transform: RigidTransform,
    /// Number of inner solves performed.
    pub iterations: usize,
    /// Mean per-point residual magnitude raised to the objective exponent
    /// (2 for plain ICP, p for sparse ICP), measured under the pose held at
    /// the start of each iteration.
    pub objective_trace: Vec<f64>,
    /// True when the pose delta fell below `tol` before `max_iters`.
    pub converged: bool,
}

/// Iterative closest point: repeatedly match each source point to its nearest
/// destination point, then re-solve for the best rigid transform.
///
/// The point-to-point inner step re-solves the *original* source against the
/// current correspondences in closed form, so each iteration minimizes the
/// full objective over poses given correspondences and over correspondences
/// given the pose; the recorded objective is therefore non-increasing.
pub fn icp(
    src: &[Point3<f64>],
    dst: &[Point3<f64>],
    dst_normals: Option<&[Vector3<f64>]>,
    params: &IcpParams,
) -> Result<IcpResult, RegistrationError> {
    run(src, dst, dst_normals, 2.0, false, params)
}

/// ICP with iteratively reweighted least squares approximating the ℓp norm
/// of residuals, `0 < p ≤ 1`, which tolerates gross outliers by
/// downweighting large residuals. `p = 2` is also accepted and reduces
/// exactly to [`icp`] (every weight becomes 1).
pub fn sparse_icp(
    src: &[Point3<f64>],
    dst: &[Point3<f64>],
    dst_normals: Option<&[Vector3<f64>]>,
    p: f64,
    params: &IcpParams,
) -> Result<IcpResult, RegistrationError> {
    if !((p > 0.0 && p <= 1.0) || p == 2.0) {
        return Err(RegistrationError::BadExponent { p });
    }
    run(src, dst, dst_normals, p, true, params)
}

/// IRLS weight of one residual under the ℓp objective:
/// w = max(|r|, ε)^(p−2), ε = [`SPARSE_EPS`].
///
/// Non-increasing in |r| for p ≤ 2; constant 1 at p = 2.
pub fn sparse_weight(residual: f64, p: f64) -> f64 {
    residual.abs().max(SPARSE_EPS).powf(p - 2.0)
}

fn run(
    src: &[Point3<f64>],
    dst: &[Point3<f64>],
    dst_normals: Option<&[Vector3<f64>]>,
    p: f64,
    sparse: bool,
    params: &IcpParams,
) -> Result<IcpResult, RegistrationError> {
    if src.is_empty() || dst.is_empty() {
        return Err(RegistrationError::EmptyInput);
    }
    let minimum = match params.variant {
        IcpVariant::PointToPoint => 3,
        IcpVariant::PointToPlane => 6,
    };
    if src.len() < minimum {
        return Err(RegistrationError::TooFewPoints { n: src.len(), minimum });
    }
    if params.variant == IcpVariant::PointToPlane {
        let normals = dst_normals.ok_or(RegistrationError::MissingNormals)?;
        if normals.len() != dst.len() {
            return Err(RegistrationError::NormalsMismatch {
                normals: normals.len(),
                points: dst.len(),
            });
        }
    }

    let tree = PointKdTree::new(dst);
    let mut pose = RigidTransform::identity();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..params.max_iters {
        let moved = pose.apply_all(src);
        // (destination index, residual magnitude) per source point.
        let matches: Vec<(usize, f64)> = moved
            .iter()
            .map(|m| {
                let (j, d2) = tree.nearest(m);
                let j = j as usize;
                let r = match params.variant {
                    IcpVariant::PointToPoint => d2.sqrt(),
                    IcpVariant::PointToPlane => {
                        (m - dst[j]).dot(&dst_normals.expect("validated above")[j]).abs()
                    }
                };
                (j, r)
            })
            .collect();
        let weights: Vec<f64> = if sparse {
            matches.iter().map(|(_, r)| sparse_weight(*r, p)).collect()
        } else {
            vec![1.0; src.len()]
        };
        trace.push(matches.iter().map(|(_, r)| r.powf(p)).sum::<f64>() / src.len() as f64);

        let next = match params.variant {
            IcpVariant::PointToPoint => {
                let targets: Vec<Point3<f64>> = matches.iter().map(|&(j, _)| dst[j]).collect();
                kabsch(src, &targets, &weights)?
            }
            IcpVariant::PointToPlane => {
                plane_step(&moved, dst, dst_normals.expect("validated above"), &matches, &weights)?
                    .compose(&pose)
            }
        };
        iterations += 1;
        let step = next.rotation_distance(&pose) + (next.translation - pose.translation).norm();
        pose = next;
        if step < params.tol {
            converged = true;
            break;
        }
    }

    Ok(IcpResult { transform: pose, iterations, objective_trace: trace, converged })
}

/// One linearized point-to-plane solve: for small (ω, u), the residual of a
/// matched pair is ≈ (x − d)·n + ω·(x × n) + u·n, so the best correction is a
/// 6-DoF weighted least-squares problem with rows [x × n; n].
fn plane_step(
    moved: &[Point3<f64>],
    dst: &[Point3<f64>],
    normals: &[Vector3<f64>],
    matches: &[(usize, f64)],
    weights: &[f64],
) -> Result<RigidTransform, RegistrationError> {
    let mut lhs = Matrix6::<f64>::zeros();
    let mut rhs = Vector6::<f64>::zeros();
    for (i, &(j, _)) in matches.iter().enumerate() {
        let x = moved[i].coords;
        let n = normals[j];
        let c = x.cross(&n);
        let row = Vector6::new(c.x, c.y, c.z, n.x, n.y, n.z);
        let offset = (moved[i] - dst[j]).dot(&n);
        lhs += weights[i] * row * row.transpose();
        rhs -= weights[i] * offset * row;
    }
    let solution = lhs
        .cholesky()
        .ok_or_else(|| RegistrationError::Degenerate {
            detail: "point-to-plane normal equations are singular (slippable or deficient \
                     geometry)"
                .into(),
        })?
        .solve(&rhs);
    let omega = Vector3::new(solution[0], solution[1], solution[2]);
    let shift = Vector3::new(solution[3], solution[4], solution[5]);
    Ok(RigidTransform {
        rotation: Rotation3::from_scaled_axis(omega).into_inner(),
        translation: shift,
    })
}
