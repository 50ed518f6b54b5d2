use nalgebra::{Point3, Vector3};
use rand::Rng;

use crate::mesh::TriMesh;

/// A point drawn from a mesh surface.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceSample {
    pub position: Point3<f64>,
    /// Unit outward normal of the face the sample lies on.
    pub normal: Vector3<f64>,
    pub face: u32,
}

/// Reusable area-proportional sampler over a mesh surface.
///
/// Faces are chosen with probability proportional to their area and points
/// are placed uniformly inside the chosen face (square-root barycentric
/// trick), so the draw is uniform over the surface.
pub struct SurfaceSampler<'a> {
    mesh: &'a TriMesh,
    cumulative_area: Vec<f64>,
    total_area: f64,
}

impl<'a> SurfaceSampler<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let mut cumulative_area = Vec::with_capacity(mesh.faces().len());
        let mut acc = 0.0;
        for f in 0..mesh.faces().len() {
            acc += mesh.face_area(f);
            cumulative_area.push(acc);
        }
        SurfaceSampler {
            mesh,
            cumulative_area,
            total_area: acc,
        }
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SurfaceSample {
        let target = rng.random::<f64>() * self.total_area;
        let face = self.cumulative_area.partition_point(|&c| c <= target);
        let face = face.min(self.mesh.faces().len() - 1);
        let [a, b, c] = self.mesh.face_vertices(face);
        let su = rng.random::<f64>().sqrt();
        let v = rng.random::<f64>();
        let w0 = 1.0 - su;
        let w1 = su * (1.0 - v);
        let w2 = su * v;
        SurfaceSample {
            position: Point3::from(a.coords * w0 + b.coords * w1 + c.coords * w2),
            normal: self.mesh.face_normal(face),
            face: face as u32,
        }
    }
}

/// Draws `n` independent uniform surface samples.
pub fn sample_surface<R: Rng + ?Sized>(
    mesh: &TriMesh,
    n: usize,
    rng: &mut R,
) -> Vec<SurfaceSample> {
    let sampler = SurfaceSampler::new(mesh);
    (0..n).map(|_| sampler.sample(rng)).collect()
}
