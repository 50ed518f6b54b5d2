//! Bounding-volume hierarchy over mesh triangles.
//!
//! One tree serves two queries:
//!
//! * exact closest-point / unsigned distance (branch and bound with box
//!   lower bounds, so the result equals a full face scan),
//! * winding numbers, using exact per-triangle solid angles for nearby
//!   nodes and a first-order dipole approximation for nodes whose
//!   area-weighted center is farther away than `beta` times the node
//!   radius.

use nalgebra::{Point3, Vector3};

use crate::mesh::TriMesh;
use crate::INSIDE_WINDING_THRESHOLD;

/// Default far-field accuracy parameter: a node may use its dipole
/// approximation once the query is more than `beta` node radii away.
pub const DEFAULT_BETA: f64 = 2.0;

const LEAF_SIZE: usize = 8;
const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Point3<f64>,
    max: Point3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow_point(&mut self, p: &Point3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn dist_sq(&self, p: &Point3<f64>) -> f64 {
        let mut d = 0.0;
        for i in 0..3 {
            let v = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

#[derive(Debug, Clone, Copy)]
struct Triangle {
    a: Point3<f64>,
    b: Point3<f64>,
    c: Point3<f64>,
    /// Area-weighted normal (unit normal times face area).
    area_normal: Vector3<f64>,
    centroid: Point3<f64>,
    face: u32,
}

#[derive(Debug, Clone)]
struct Node {
    aabb: Aabb,
    /// Area-weighted centroid of the subtree's triangles.
    dipole_center: Point3<f64>,
    /// Sum of area-weighted normals over the subtree.
    dipole: Vector3<f64>,
    /// Max distance from `dipole_center` to any subtree vertex.
    radius: f64,
    /// Leaf: triangle range [start, start+count). Internal: children.
    start: u32,
    count: u32,
    left: u32,
    right: u32,
}

pub struct Bvh {
    nodes: Vec<Node>,
    tris: Vec<Triangle>,
    beta: f64,
}

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Self {
        Self::build_with_beta(mesh, DEFAULT_BETA)
    }

    pub fn build_with_beta(mesh: &TriMesh, beta: f64) -> Self {
        assert!(beta > 0.0, "beta must be positive");
        let mut tris: Vec<Triangle> = (0..mesh.faces().len())
            .map(|f| {
                let [a, b, c] = mesh.face_vertices(f);
                Triangle {
                    a,
                    b,
                    c,
                    area_normal: (b - a).cross(&(c - a)) * 0.5,
                    centroid: Point3::from((a.coords + b.coords + c.coords) / 3.0),
                    face: f as u32,
                }
            })
            .collect();
        // Canonical geometric order: the tree layout (and with it every
        // query result) is then independent of the input face order.
        tris.sort_by(|x, y| {
            let kx = [x.centroid.x, x.centroid.y, x.centroid.z, x.a.x, x.a.y, x.a.z];
            let ky = [y.centroid.x, y.centroid.y, y.centroid.z, y.a.x, y.a.y, y.a.z];
            kx.iter()
                .zip(&ky)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1),
            tris: Vec::new(),
            beta,
        };
        let n = tris.len();
        bvh.build_node(&mut tris, 0, n);
        bvh.tris = tris;
        bvh
    }

    /// Builds the node covering `tris[start..end]`, returns its index.
    fn build_node(&mut self, tris: &mut [Triangle], start: usize, end: usize) -> u32 {
        let mut aabb = Aabb::empty();
        let mut centroid_box = Aabb::empty();
        let mut dipole = Vector3::zeros();
        let mut weighted = Vector3::zeros();
        let mut total_area = 0.0;
        for t in &tris[start..end] {
            aabb.grow_point(&t.a);
            aabb.grow_point(&t.b);
            aabb.grow_point(&t.c);
            centroid_box.grow_point(&t.centroid);
            let area = t.area_normal.norm();
            dipole += t.area_normal;
            weighted += t.centroid.coords * area;
            total_area += area;
        }
        let dipole_center = Point3::from(weighted / total_area);
        let radius = tris[start..end]
            .iter()
            .flat_map(|t| [t.a, t.b, t.c])
            .map(|v| (v - dipole_center).norm())
            .fold(0.0, f64::max);

        let idx = self.nodes.len() as u32;
        self.nodes.push(Node {
            aabb,
            dipole_center,
            dipole,
            radius,
            start: start as u32,
            count: 0,
            left: 0,
            right: 0,
        });

        let count = end - start;
        if count <= LEAF_SIZE {
            self.nodes[idx as usize].count = count as u32;
            return idx;
        }

        // Midpoint split on the longest centroid axis, median fallback when
        // the midpoint leaves one side empty.
        let extent = centroid_box.max - centroid_box.min;
        let axis = extent.imax();
        let split = 0.5 * (centroid_box.min[axis] + centroid_box.max[axis]);
        let mid = start + partition_in_place(&mut tris[start..end], |t| t.centroid[axis] < split);
        let mid = if mid == start || mid == end {
            let m = start + count / 2;
            tris[start..end].select_nth_unstable_by(count / 2, |x, y| {
                x.centroid[axis].total_cmp(&y.centroid[axis])
            });
            m
        } else {
            mid
        };

        let left = self.build_node(tris, start, mid);
        let right = self.build_node(tris, mid, end);
        self.nodes[idx as usize].left = left;
        self.nodes[idx as usize].right = right;
        idx
    }

    /// Exact squared distance to the mesh surface plus the closest point and
    /// its face id. Equal to a brute-force scan over every face.
    pub fn closest_point(&self, p: &Point3<f64>) -> (f64, Point3<f64>, u32) {
        let mut best = (f64::INFINITY, Point3::origin(), 0u32);
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if node.aabb.dist_sq(p) >= best.0 {
                continue;
            }
            if node.count > 0 {
                for t in &self.tris[node.start as usize..(node.start + node.count) as usize] {
                    let q = closest_point_on_triangle(p, &t.a, &t.b, &t.c);
                    let d = (p - q).norm_squared();
                    if d < best.0 {
                        best = (d, q, t.face);
                    }
                }
            } else {
                let dl = self.nodes[node.left as usize].aabb.dist_sq(p);
                let dr = self.nodes[node.right as usize].aabb.dist_sq(p);
                // Push the farther child first so the nearer one is tried
                // first, tightening the bound early.
                if dl <= dr {
                    stack.push(node.right);
                    stack.push(node.left);
                } else {
                    stack.push(node.left);
                    stack.push(node.right);
                }
            }
        }
        best
    }

    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        self.closest_point(p).0.sqrt()
    }

    /// Generalized winding number of the surface at `p`.
    pub fn winding_number(&self, p: &Point3<f64>) -> f64 {
        self.winding_rec(0, p) / FOUR_PI
    }

    fn winding_rec(&self, i: u32, p: &Point3<f64>) -> f64 {
        let node = &self.nodes[i as usize];
        let r = node.dipole_center - p;
        let dist = r.norm();
        if dist > self.beta * node.radius {
            // First-order (dipole) far-field approximation of the summed
            // solid angles of the subtree.
            return node.dipole.dot(&r) / (dist * dist * dist);
        }
        if node.count > 0 {
            self.tris[node.start as usize..(node.start + node.count) as usize]
                .iter()
                .map(|t| solid_angle(p, &t.a, &t.b, &t.c))
                .sum()
        } else {
            self.winding_rec(node.left, p) + self.winding_rec(node.right, p)
        }
    }

    /// Signed distance with the sign taken from the winding number:
    /// negative inside, positive outside.
    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        let d = self.distance(p);
        if self.winding_number(p) > INSIDE_WINDING_THRESHOLD {
            -d
        } else {
            d
        }
    }

    pub fn is_inside(&self, p: &Point3<f64>) -> bool {
        self.winding_number(p) > INSIDE_WINDING_THRESHOLD
    }
}

/// Stable partition-in-place returning the number of elements satisfying
/// the predicate (they end up in the front half).
fn partition_in_place<T>(slice: &mut [T], mut pred: impl FnMut(&T) -> bool) -> usize {
    let mut i = 0;
    for j in 0..slice.len() {
        if pred(&slice[j]) {
            slice.swap(i, j);
            i += 1;
        }
    }
    i
}

/// Signed solid angle subtended by triangle (a, b, c) seen from `p`
/// (van Oosterom-Strackee).
pub fn solid_angle(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    let va = a - p;
    let vb = b - p;
    let vc = c - p;
    let la = va.norm();
    let lb = vb.norm();
    let lc = vc.norm();
    let numer = va.dot(&vb.cross(&vc));
    let denom = la * lb * lc + va.dot(&vb) * lc + vb.dot(&vc) * la + vc.dot(&va) * lb;
    2.0 * numer.atan2(denom)
}

/// Closest point on triangle (a, b, c) to `p` (Ericson's region test).
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}
