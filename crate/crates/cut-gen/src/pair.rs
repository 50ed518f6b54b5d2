use mesh_kernel::{Bvh, PointKdTree, SurfaceSampler, TriMesh};
use nalgebra::{Point3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cut::{sample_cut_spec, CutSpec, Side};
use crate::error::CutError;
use crate::volume::{shell_volume_ratio, volume_ratio};
use crate::{MAX_CUT_ATTEMPTS, MAX_VOLUME_RATIO, MIN_VOLUME_RATIO, SHELL_THICKNESS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeType {
    Solid,
    Shell,
}

impl ShapeType {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeType::Solid => "solid",
            ShapeType::Shell => "shell",
        }
    }

    pub fn parse(s: &str) -> Option<ShapeType> {
        match s {
            "solid" => Some(ShapeType::Solid),
            "shell" => Some(ShapeType::Shell),
            _ => None,
        }
    }
}

/// Knobs for pair generation. The defaults are the dataset contract; tests
/// shrink them for speed only where record-shape invariants do not apply.
#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub points_per_part: usize,
    pub sdf_samples_per_part: usize,
    pub dense_boundary_points: usize,
    pub volume_mc_samples: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            points_per_part: 1024,
            sdf_samples_per_part: 40_000,
            dense_boundary_points: 50_000,
            volume_mc_samples: 16_384,
        }
    }
}

/// One signed-distance supervision sample, in the part's centered frame.
#[derive(Debug, Clone, Copy)]
pub struct SdfSample {
    pub point: Point3<f64>,
    pub sd: f64,
}

/// One part of a mating pair: a zero-centered point cloud with normals and
/// SDF supervision, plus the pose that re-assembles it.
#[derive(Debug, Clone)]
pub struct PartRecord {
    pub side: Side,
    pub points: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub sdf: Vec<SdfSample>,
    /// Applying (rotation, translation) to `points` reproduces the part's
    /// position in the assembled object frame.
    pub gt_rotation: UnitQuaternion<f64>,
    pub gt_translation: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct ShapePairRecord {
    /// Identifier of the source mesh; assigned by the caller.
    pub source_mesh: String,
    /// Seed the caller used for this pair's rng; assigned by the caller.
    pub pair_seed: u64,
    pub shape_type: ShapeType,
    pub cut: CutSpec,
    /// Accepted Monte Carlo volume fraction of side A.
    pub volume_fraction_a: f64,
    pub parts: [PartRecord; 2],
}

/// The implicit region a part occupies, for membership tests.
pub struct PartDomain<'a> {
    bvh: &'a Bvh,
    spec: CutSpec,
    side: Side,
    shape: ShapeType,
}

impl<'a> PartDomain<'a> {
    pub fn new(bvh: &'a Bvh, spec: CutSpec, side: Side, shape: ShapeType) -> Self {
        PartDomain { bvh, spec, side, shape }
    }

    /// Signed violation of the closed membership predicate in the assembled
    /// object frame; values <= tol mean the point belongs to the part.
    ///
    /// Combines the region constraint (inside the mesh for solids, inside
    /// the offset band for shells) with the cut-side constraint. Both terms
    /// are bounded below by a true distance, so small values really are
    /// near-membership.
    pub fn membership_residual(&self, p: &Point3<f64>) -> f64 {
        let sd = self.bvh.signed_distance(p);
        let g = self.spec.margin(p);
        let side_term = match self.side {
            Side::A => -g,
            Side::B => g,
        };
        let region_term = match self.shape {
            ShapeType::Solid => sd,
            ShapeType::Shell => sd.max(-(sd + SHELL_THICKNESS)),
        };
        region_term.max(side_term)
    }

    pub fn contains(&self, p: &Point3<f64>, tol: f64) -> bool {
        self.membership_residual(p) <= tol
    }

    /// Strict interior test (used for SDF sign assignment).
    pub fn is_inside(&self, p: &Point3<f64>) -> bool {
        if self.spec.side(p) != self.side {
            return false;
        }
        match self.shape {
            ShapeType::Solid => self.bvh.is_inside(p),
            ShapeType::Shell => {
                let sd = self.bvh.signed_distance(p);
                sd > -SHELL_THICKNESS && sd < 0.0
            }
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn shape(&self) -> ShapeType {
        self.shape
    }
}

/// Samples a part's boundary area-proportionally across its strata:
/// original surface on the part's side, cut interface, and (for shells)
/// the inward offset surface.
struct BoundarySampler<'a> {
    bvh: &'a Bvh,
    spec: CutSpec,
    side: Side,
    shape: ShapeType,
    surface: &'a SurfaceSampler<'a>,
    /// Estimated areas: [side surface, interface, inner offset].
    areas: [f64; 3],
    footprint: (f64, f64, f64, f64),
    z_range: (f64, f64),
}

const AREA_PROBES: usize = 4096;
const TRACE_TOL: f64 = 1e-7;

impl<'a> BoundarySampler<'a> {
    fn new<R: Rng + ?Sized>(
        mesh: &TriMesh,
        bvh: &'a Bvh,
        surface: &'a SurfaceSampler<'a>,
        spec: CutSpec,
        side: Side,
        shape: ShapeType,
        rng: &mut R,
    ) -> Self {
        let (min, max) = mesh.aabb();
        let footprint = (min.x, max.x, min.y, max.y);
        let z_range = (min.z, max.z);

        // Side-restricted surface area: total area times the side fraction,
        // with shells additionally requiring the outer surface (signed
        // distance ~ 0, always true for surface samples).
        let mut side_hits = 0usize;
        for _ in 0..AREA_PROBES {
            let s = surface.sample(rng);
            if spec.side(&s.position) == side {
                side_hits += 1;
            }
        }
        let side_area = surface.total_area() * side_hits as f64 / AREA_PROBES as f64;

        // Interface area: Monte Carlo over the footprint of the graph's
        // area element, restricted to the part's region.
        let mut slope_sum = 0.0;
        for _ in 0..AREA_PROBES {
            let x = footprint.0 + rng.random::<f64>() * (footprint.1 - footprint.0);
            let y = footprint.2 + rng.random::<f64>() * (footprint.3 - footprint.2);
            let z = spec.value(x, y);
            if z < z_range.0 || z > z_range.1 {
                continue;
            }
            let p = Point3::new(x, y, z);
            if Self::interface_region_ok(bvh, shape, &p) {
                slope_sum += spec.slope_factor(x, y);
            }
        }
        let footprint_area = (footprint.1 - footprint.0) * (footprint.3 - footprint.2);
        let interface_area = footprint_area * slope_sum / AREA_PROBES as f64;

        // The inner offset surface shrinks with curvature; approximating its
        // area by the outer side area keeps the allocation simple and close.
        let inner_area = match shape {
            ShapeType::Solid => 0.0,
            ShapeType::Shell => side_area,
        };

        BoundarySampler {
            bvh,
            spec,
            side,
            shape,
            surface,
            areas: [side_area, interface_area, inner_area],
            footprint,
            z_range,
        }
    }

    fn interface_region_ok(bvh: &Bvh, shape: ShapeType, p: &Point3<f64>) -> bool {
        match shape {
            ShapeType::Solid => bvh.is_inside(p),
            ShapeType::Shell => {
                let sd = bvh.signed_distance(p);
                sd < 0.0 && sd >= -SHELL_THICKNESS
            }
        }
    }

    fn sample_n<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<(Vec<Point3<f64>>, Vec<Vector3<f64>>), CutError> {
        let [n_surface, n_interface, n_inner] = allocate_proportional(&self.areas, n);
        let mut points = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);

        // Stratum 1: original surface restricted to the part's side.
        let budget = 1000 * n_surface + 100_000;
        let mut got = 0usize;
        for _ in 0..budget {
            if got == n_surface {
                break;
            }
            let s = self.surface.sample(rng);
            if self.spec.side(&s.position) == self.side {
                points.push(s.position);
                normals.push(s.normal);
                got += 1;
            }
        }
        if got < n_surface {
            return Err(CutError::SurfaceSampling { wanted: n_surface, got });
        }

        // Stratum 2: cut interface (the heightfield graph inside the region).
        let bound = self
            .spec
            .slope_bound(self.footprint.0, self.footprint.1, self.footprint.2, self.footprint.3);
        let budget = 1000 * n_interface + 100_000;
        let mut got = 0usize;
        for _ in 0..budget {
            if got == n_interface {
                break;
            }
            let x = self.footprint.0 + rng.random::<f64>() * (self.footprint.1 - self.footprint.0);
            let y = self.footprint.2 + rng.random::<f64>() * (self.footprint.3 - self.footprint.2);
            if rng.random::<f64>() * bound > self.spec.slope_factor(x, y) {
                continue;
            }
            let z = self.spec.value(x, y);
            if z < self.z_range.0 || z > self.z_range.1 {
                continue;
            }
            let p = Point3::new(x, y, z);
            if !Self::interface_region_ok(self.bvh, self.shape, &p) {
                continue;
            }
            let toward_a = self.spec.interface_normal_toward_a(x, y);
            points.push(p);
            normals.push(match self.side {
                Side::A => -toward_a,
                Side::B => toward_a,
            });
            got += 1;
        }
        if got < n_interface {
            return Err(CutError::InterfaceSampling { wanted: n_interface, got });
        }

        // Stratum 3 (shells): inward offset surface, reached by tracing the
        // signed-distance field along the inward surface normal.
        if n_inner > 0 {
            let budget = 1000 * n_inner + 100_000;
            let mut got = 0usize;
            let mut failures = 0usize;
            for _ in 0..budget {
                if got == n_inner {
                    break;
                }
                let s = self.surface.sample(rng);
                if self.spec.side(&s.position) != self.side {
                    continue;
                }
                match self.trace_inner(&s.position, &s.normal) {
                    Some(p) => {
                        points.push(p);
                        normals.push(-s.normal);
                        got += 1;
                    }
                    None => {
                        failures += 1;
                        // A mesh thinner than the shell everywhere never
                        // converges; stop burning the budget.
                        if got == 0 && failures >= 1000 {
                            return Err(CutError::ShellTooThin {
                                failed: failures,
                                attempted: failures,
                                thickness: SHELL_THICKNESS,
                            });
                        }
                    }
                }
            }
            if got < n_inner {
                return Err(CutError::ShellTooThin {
                    failed: failures,
                    attempted: failures + got,
                    thickness: SHELL_THICKNESS,
                });
            }
        }

        Ok((points, normals))
    }

    /// Walks from a surface point along the inward normal until the signed
    /// distance reaches -SHELL_THICKNESS. Rejects seeds that do not converge
    /// or whose offset point crosses the cut.
    fn trace_inner(&self, start: &Point3<f64>, outward: &Vector3<f64>) -> Option<Point3<f64>> {
        let mut x = start - outward * SHELL_THICKNESS;
        for _ in 0..32 {
            let sd = self.bvh.signed_distance(&x);
            let residual = sd + SHELL_THICKNESS;
            if residual.abs() <= TRACE_TOL {
                if self.spec.side(&x) == self.side {
                    return Some(x);
                }
                return None;
            }
            x -= outward * residual;
        }
        None
    }
}

/// Splits `n` into integer counts proportional to `areas` (largest-remainder
/// rounding, ties broken toward the earlier stratum). Zero total area puts
/// everything in the first slot.
fn allocate_proportional(areas: &[f64; 3], n: usize) -> [usize; 3] {
    let total: f64 = areas.iter().sum();
    let mut counts = [0usize; 3];
    if total <= 0.0 {
        counts[0] = n;
        return counts;
    }
    let mut remainders = [(0usize, 0.0f64); 3];
    let mut assigned = 0usize;
    for i in 0..3 {
        let exact = n as f64 * areas[i] / total;
        counts[i] = exact.floor() as usize;
        assigned += counts[i];
        remainders[i] = (i, exact - exact.floor());
    }
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for k in 0..(n - assigned) {
        counts[remainders[k % 3].0] += 1;
    }
    counts
}

/// Signed-distance supervision for one part: dense boundary points are
/// perturbed by Gaussian noise (sigma 0.005 for the first half, 0.05 for the
/// second), the distance magnitude is the nearest-neighbor distance back to
/// the dense set, and the sign comes from the membership predicate.
///
/// Points are in the assembled object frame; the caller re-centers them.
pub fn sdf_samples_for_part<R: Rng + ?Sized>(
    domain: &PartDomain,
    dense_boundary: &[Point3<f64>],
    n: usize,
    rng: &mut R,
) -> Vec<SdfSample> {
    let tree = PointKdTree::new(dense_boundary);
    let mut out = Vec::with_capacity(n);
    let half = n / 2;
    for i in 0..n {
        let sigma = if i < half { 0.005 } else { 0.05 };
        let anchor = dense_boundary[rng.random_range(0..dense_boundary.len())];
        let offset = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ) * sigma;
        let p = anchor + offset;
        let dist = tree.nearest_distance(&p);
        let sd = if domain.is_inside(&p) { -dist } else { dist };
        out.push(SdfSample { point: p, sd });
    }
    out
}

pub fn generate_solid_pair<R: Rng + ?Sized>(
    mesh: &TriMesh,
    bvh: &Bvh,
    spec: CutSpec,
    rng: &mut R,
) -> Result<ShapePairRecord, CutError> {
    generate_pair_with_params(mesh, bvh, spec, ShapeType::Solid, &GenParams::default(), rng)
}

pub fn generate_shell_pair<R: Rng + ?Sized>(
    mesh: &TriMesh,
    bvh: &Bvh,
    spec: CutSpec,
    rng: &mut R,
) -> Result<ShapePairRecord, CutError> {
    generate_pair_with_params(mesh, bvh, spec, ShapeType::Shell, &GenParams::default(), rng)
}

pub fn generate_pair_with_params<R: Rng + ?Sized>(
    mesh: &TriMesh,
    bvh: &Bvh,
    spec: CutSpec,
    shape: ShapeType,
    params: &GenParams,
    rng: &mut R,
) -> Result<ShapePairRecord, CutError> {
    let (min, max) = mesh.aabb();
    let extent = (max - min).amax();
    let center_norm = nalgebra::center(&min, &max).coords.norm();
    if (extent - 1.0).abs() > 1e-9 || center_norm > 1e-9 {
        return Err(CutError::NotNormalized { extent, center_norm });
    }

    // Accept the first cut whose volume split is balanced enough, resampling
    // the same family on rejection.
    let mut spec = spec;
    let mut last_ratio = f64::NAN;
    let mut accepted = None;
    for _ in 0..MAX_CUT_ATTEMPTS {
        let est = match shape {
            ShapeType::Solid => volume_ratio(mesh, bvh, &spec, params.volume_mc_samples, rng)?,
            ShapeType::Shell => {
                shell_volume_ratio(mesh, bvh, &spec, params.volume_mc_samples, rng)?
            }
        };
        last_ratio = est.fraction_a;
        if (MIN_VOLUME_RATIO..=MAX_VOLUME_RATIO).contains(&est.fraction_a) {
            accepted = Some((spec, est));
            break;
        }
        spec = sample_cut_spec(spec.family(), rng);
    }
    let (spec, est) = accepted.ok_or(CutError::NoValidCut {
        attempts: MAX_CUT_ATTEMPTS,
        last_ratio,
    })?;

    let surface = SurfaceSampler::new(mesh);
    let mut parts = Vec::with_capacity(2);
    for side in [Side::A, Side::B] {
        let sampler = BoundarySampler::new(mesh, bvh, &surface, spec, side, shape, rng);
        let (mut points, normals) = sampler.sample_n(params.points_per_part, rng)?;
        let (dense, _) = sampler.sample_n(params.dense_boundary_points, rng)?;
        let domain = PartDomain::new(bvh, spec, side, shape);
        let mut sdf = sdf_samples_for_part(&domain, &dense, params.sdf_samples_per_part, rng);

        // Zero-center the cloud; the centroid becomes the ground-truth
        // translation (rotation stays identity at generation time).
        let centroid = points.iter().map(|p| p.coords).sum::<Vector3<f64>>()
            / points.len() as f64;
        for p in &mut points {
            *p -= centroid;
        }
        for s in &mut sdf {
            s.point -= centroid;
        }
        parts.push(PartRecord {
            side,
            points,
            normals,
            sdf,
            gt_rotation: UnitQuaternion::identity(),
            gt_translation: centroid,
        });
    }
    let part_b = parts.pop().expect("two parts");
    let part_a = parts.pop().expect("two parts");

    Ok(ShapePairRecord {
        source_mesh: String::new(),
        pair_seed: 0,
        shape_type: shape,
        cut: spec,
        volume_fraction_a: est.fraction_a,
        parts: [part_a, part_b],
    })
}
