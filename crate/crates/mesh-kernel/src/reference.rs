//! Brute-force reference implementations.
//!
//! These exist to validate the accelerated queries in [`crate::bvh`] and are
//! intentionally simple: the inside test casts rays and counts crossings
//! (no winding numbers involved), the distance scan visits every face with
//! no pruning. Test suites compare the fast paths against these.

use nalgebra::{Point3, Vector3};
use rand::Rng;

use crate::bvh::closest_point_on_triangle;
use crate::mesh::TriMesh;

/// Unsigned distance by scanning every face.
pub fn distance_scan(mesh: &TriMesh, p: &Point3<f64>) -> f64 {
    (0..mesh.faces().len())
        .map(|f| {
            let [a, b, c] = mesh.face_vertices(f);
            (p - closest_point_on_triangle(p, &a, &b, &c)).norm_squared()
        })
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Inside test by ray-crossing parity.
///
/// Casts a ray in a random direction and counts triangle crossings; odd
/// means inside. Rays that graze an edge, vertex or triangle plane are
/// rejected and re-cast in a fresh direction. Returns `None` if no clean
/// direction is found (the query point is effectively on the surface).
pub fn inside_ray_parity<R: Rng + ?Sized>(
    mesh: &TriMesh,
    p: &Point3<f64>,
    rng: &mut R,
) -> Option<bool> {
    const ATTEMPTS: usize = 32;
    const MARGIN: f64 = 1e-9;
    'attempt: for _ in 0..ATTEMPTS {
        let dir = random_unit(rng);
        let mut crossings = 0usize;
        for f in 0..mesh.faces().len() {
            let [a, b, c] = mesh.face_vertices(f);
            match ray_triangle(p, &dir, &a, &b, &c) {
                Hit::Miss => {}
                Hit::Cross(t) => {
                    if t > MARGIN {
                        crossings += 1;
                    } else if t > -MARGIN {
                        continue 'attempt;
                    }
                }
                Hit::Marginal => continue 'attempt,
            }
        }
        return Some(crossings % 2 == 1);
    }
    None
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

enum Hit {
    Miss,
    /// Clean crossing at ray parameter t.
    Cross(f64),
    /// Too close to an edge or parallel to the plane to trust.
    Marginal,
}

/// Moller-Trumbore with conservative rejection of grazing hits.
fn ray_triangle(
    orig: &Point3<f64>,
    dir: &Vector3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Hit {
    const EDGE_MARGIN: f64 = 1e-9;
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= 1e-12 * scale {
        // Nearly parallel: either a miss or a graze; only a graze matters,
        // and those are caught by the barycentric margins below when det is
        // merely small. Treat as marginal only if the ray touches the plane
        // near the triangle.
        let q = closest_point_on_triangle(orig, a, b, c) - orig;
        let along = q.dot(dir);
        if along > 0.0 && (q - dir * along).norm() <= EDGE_MARGIN * scale.sqrt() {
            return Hit::Marginal;
        }
        return Hit::Miss;
    }
    let inv_det = 1.0 / det;
    let tvec = orig - a;
    let u = tvec.dot(&pvec) * inv_det;
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    let w = 1.0 - u - v;
    let inside = u > EDGE_MARGIN && v > EDGE_MARGIN && w > EDGE_MARGIN;
    let outside = u < -EDGE_MARGIN || v < -EDGE_MARGIN || w < -EDGE_MARGIN;
    if outside {
        return Hit::Miss;
    }
    if !inside {
        return Hit::Marginal;
    }
    let t = e2.dot(&qvec) * inv_det;
    if t > 0.0 {
        Hit::Cross(t)
    } else {
        Hit::Miss
    }
}
