use mesh_kernel::{Bvh, TriMesh};
use nalgebra::Point3;
use rand::Rng;

use crate::cut::{CutSpec, Side};
use crate::error::CutError;
use crate::SHELL_THICKNESS;

/// Monte Carlo estimate of how a cut splits a region's volume.
#[derive(Debug, Clone, Copy)]
pub struct VolumeEstimate {
    /// Fraction of the region's volume on side A.
    pub fraction_a: f64,
    /// Fraction on side B, counted separately. Because every region point is
    /// classified to exactly one side, `fraction_a + fraction_b` recovers 1
    /// up to the two rounding divisions; a surplus or deficit would mean the
    /// side predicate dropped or double-counted points.
    pub fraction_b: f64,
    /// Points that landed in the region (interior, or shell band).
    pub region_hits: usize,
    /// Total points drawn (in the mesh bounding box).
    pub samples: usize,
    /// Absolute volume of the region implied by the hit rate.
    pub region_volume: f64,
}

impl VolumeEstimate {
    /// Binomial standard error of `fraction_a`.
    pub fn standard_error(&self) -> f64 {
        let p = self.fraction_a;
        (p * (1.0 - p) / self.region_hits as f64).sqrt()
    }
}

fn mc_fraction<R: Rng + ?Sized>(
    mesh: &TriMesh,
    spec: &CutSpec,
    n_mc: usize,
    rng: &mut R,
    mut in_region: impl FnMut(&Point3<f64>) -> bool,
) -> Result<VolumeEstimate, CutError> {
    assert!(n_mc >= 10_000, "volume estimates need at least 10,000 samples");
    let (min, max) = mesh.aabb();
    let extent = max - min;
    let bbox_volume = extent.x * extent.y * extent.z;
    let mut hits = 0usize;
    let mut hits_a = 0usize;
    let mut hits_b = 0usize;
    for _ in 0..n_mc {
        let p = Point3::new(
            min.x + rng.random::<f64>() * extent.x,
            min.y + rng.random::<f64>() * extent.y,
            min.z + rng.random::<f64>() * extent.z,
        );
        if in_region(&p) {
            hits += 1;
            match spec.side(&p) {
                Side::A => hits_a += 1,
                Side::B => hits_b += 1,
            }
        }
    }
    if hits == 0 {
        return Err(CutError::EmptyInterior { samples: n_mc });
    }
    Ok(VolumeEstimate {
        fraction_a: hits_a as f64 / hits as f64,
        fraction_b: hits_b as f64 / hits as f64,
        region_hits: hits,
        samples: n_mc,
        region_volume: bbox_volume * hits as f64 / n_mc as f64,
    })
}

/// Fraction of the mesh's interior volume on side A of the cut.
pub fn volume_ratio<R: Rng + ?Sized>(
    mesh: &TriMesh,
    bvh: &Bvh,
    spec: &CutSpec,
    n_mc: usize,
    rng: &mut R,
) -> Result<VolumeEstimate, CutError> {
    mc_fraction(mesh, spec, n_mc, rng, |p| bvh.is_inside(p))
}

/// Fraction of the shell band (signed distance in [-0.05, 0]) on side A.
pub fn shell_volume_ratio<R: Rng + ?Sized>(
    mesh: &TriMesh,
    bvh: &Bvh,
    spec: &CutSpec,
    n_mc: usize,
    rng: &mut R,
) -> Result<VolumeEstimate, CutError> {
    mc_fraction(mesh, spec, n_mc, rng, |p| {
        let sd = bvh.signed_distance(p);
        (-SHELL_THICKNESS..=0.0).contains(&sd)
    })
}
