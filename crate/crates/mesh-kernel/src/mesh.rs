use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::error::MeshError;

/// Minimum face area, as a fraction of the squared longest bounding-box
/// extent. Scale-relative so validation is unaffected by normalization.
const DEGENERATE_AREA_FRACTION: f64 = 1e-12;

/// Indexed triangle mesh, validated at construction.
///
/// A `TriMesh` is guaranteed to be a closed, consistently oriented
/// 2-manifold: every directed edge occurs exactly once and its reverse also
/// occurs exactly once. Face indices are in bounds, vertices are finite, the
/// bounding box has positive extent and no face is degenerate.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
}

/// Translation and scale that mapped a mesh into its normalized frame.
#[derive(Debug, Clone, Copy)]
pub struct Normalization {
    /// Bounding-box center of the input mesh (mapped to the origin).
    pub center: Point3<f64>,
    /// Uniform scale applied after centering (1 / longest extent).
    pub scale: f64,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        if vertices.len() < 4 || faces.len() < 4 {
            return Err(MeshError::DegenerateInput(format!(
                "{} vertices, {} faces; a closed triangle mesh needs at least 4 of each",
                vertices.len(),
                faces.len()
            )));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.coords.iter().all(|c| c.is_finite()) {
                return Err(MeshError::DegenerateInput(format!(
                    "vertex {i} has a non-finite coordinate"
                )));
            }
        }
        let nv = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &idx in f {
                if idx as usize >= nv {
                    return Err(MeshError::FaceIndexOutOfBounds {
                        face: fi,
                        index: idx,
                        vertex_count: nv,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::RepeatedVertexInFace { face: fi });
            }
        }

        let mesh = TriMesh { vertices, faces };
        mesh.check_watertight()?;

        let (min, max) = mesh.aabb();
        let extent = (max - min).amax();
        if !(extent > 0.0) {
            return Err(MeshError::DegenerateInput(
                "bounding box has zero extent".into(),
            ));
        }
        let threshold = DEGENERATE_AREA_FRACTION * extent * extent;
        for fi in 0..mesh.faces.len() {
            let area = mesh.face_area(fi);
            if !(area > threshold) {
                return Err(MeshError::DegenerateFace { face: fi, area, threshold });
            }
        }
        Ok(mesh)
    }

    fn check_watertight(&self) -> Result<(), MeshError> {
        let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.faces.len() * 3);
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *directed.entry((a, b)).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count > 1 {
                return Err(MeshError::NotWatertight {
                    detail: format!(
                        "directed edge ({a}, {b}) occurs {count} times; \
                         duplicated or inconsistently oriented faces"
                    ),
                });
            }
            if directed.get(&(b, a)).copied().unwrap_or(0) != 1 {
                return Err(MeshError::NotWatertight {
                    detail: format!("edge ({a}, {b}) has no reverse; surface has a boundary"),
                });
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_vertices(&self, face: usize) -> [Point3<f64>; 3] {
        let f = self.faces[face];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }

    /// Unit outward normal (the mesh is consistently oriented by construction).
    pub fn face_normal(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_vertices(face);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_vertices(face);
        (b - a).cross(&(c - a)).norm() * 0.5
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn aabb(&self) -> (Point3<f64>, Point3<f64>) {
        let mut min = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            min = min.inf(v);
            max = max.sup(v);
        }
        (min, max)
    }

    /// Enclosed volume via the divergence theorem; positive for outward
    /// orientation.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let a = self.vertices[f[0] as usize].coords;
                let b = self.vertices[f[1] as usize].coords;
                let c = self.vertices[f[2] as usize].coords;
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Returns the mesh translated so its bounding-box center is at the
    /// origin and uniformly scaled so the longest bounding-box edge is 1.
    pub fn normalized(&self) -> (TriMesh, Normalization) {
        let (min, max) = self.aabb();
        let center = nalgebra::center(&min, &max);
        let scale = 1.0 / (max - min).amax();
        let vertices = self
            .vertices
            .iter()
            .map(|v| Point3::from((v - center) * scale))
            .collect();
        let mesh = TriMesh {
            vertices,
            faces: self.faces.clone(),
        };
        (mesh, Normalization { center, scale })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    #[test]
    fn cube_permits_construction() {
        let cube = bundled::cube();
        assert_eq!(cube.vertices().len(), 8);
        assert_eq!(cube.faces().len(), 12);
        assert!((cube.signed_volume() - 1.0).abs() < 1e-12);
        assert!((cube.total_area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn missing_face_is_rejected() {
        let cube = bundled::cube();
        let faces = cube.faces()[1..].to_vec();
        let err = TriMesh::new(cube.vertices().to_vec(), faces).unwrap_err();
        assert!(matches!(err, MeshError::NotWatertight { .. }));
    }

    #[test]
    fn flipped_face_is_rejected() {
        let cube = bundled::cube();
        let mut faces = cube.faces().to_vec();
        faces[0].swap(0, 1);
        let err = TriMesh::new(cube.vertices().to_vec(), faces).unwrap_err();
        assert!(matches!(err, MeshError::NotWatertight { .. }));
    }

    #[test]
    fn out_of_bounds_index_is_rejected() {
        let cube = bundled::cube();
        let mut faces = cube.faces().to_vec();
        faces[3][1] = 99;
        let err = TriMesh::new(cube.vertices().to_vec(), faces).unwrap_err();
        assert!(matches!(err, MeshError::FaceIndexOutOfBounds { index: 99, .. }));
    }

    #[test]
    fn degenerate_face_is_rejected() {
        // Split the edge (a, b) on both incident faces, then collapse the new
        // vertex onto a's position. Topology stays manifold, but the faces
        // [a, m, _] and [m, a, _] now have zero area.
        let cube = bundled::cube();
        let mut vertices = cube.vertices().to_vec();
        let mut faces = cube.faces().to_vec();
        let [a, b, c] = faces[0];
        let m = vertices.len() as u32;
        vertices.push(nalgebra::center(&vertices[a as usize], &vertices[b as usize]));
        faces[0] = [a, m, c];
        faces.push([m, b, c]);
        let adj = faces
            .iter()
            .position(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])].contains(&(b, a)))
            .unwrap();
        let apex = *faces[adj].iter().find(|&&v| v != a && v != b).unwrap();
        faces[adj] = [b, m, apex];
        faces.push([m, a, apex]);
        vertices[m as usize] = vertices[a as usize];
        let err = TriMesh::new(vertices, faces).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateFace { .. }));
    }

    #[test]
    fn normalized_centers_and_scales() {
        let cube = bundled::cube();
        let stretched: Vec<_> = cube
            .vertices()
            .iter()
            .map(|v| Point3::new(v.x * 2.0 + 3.0, v.y * 1.0, v.z * 0.5))
            .collect();
        let mesh = TriMesh::new(stretched, cube.faces().to_vec()).unwrap();
        let (norm, info) = mesh.normalized();
        let (min, max) = norm.aabb();
        let extent = max - min;
        assert!((extent.x - 1.0).abs() < 1e-12);
        assert!((extent.y - 0.5).abs() < 1e-12);
        assert!((extent.z - 0.25).abs() < 1e-12);
        let center = nalgebra::center(&min, &max);
        assert!(center.coords.norm() < 1e-12);
        assert!((info.scale - 0.5).abs() < 1e-12);
        assert!((info.center - Point3::new(3.0, 0.0, 0.0)).norm() < 1e-12);

        // Idempotent: normalizing again is the identity up to roundoff.
        let (again, info2) = norm.normalized();
        assert!((info2.scale - 1.0).abs() < 1e-12);
        for (a, b) in norm.vertices().iter().zip(again.vertices()) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
