//! Primitive meshes shipped with the crate, already normalized to a unit
//! bounding box: an axis-aligned cube, a subdivided icosphere of radius 0.5
//! and a torus (major radius 0.35, minor radius 0.15).

use crate::io::read_off_str;
use crate::mesh::TriMesh;

pub fn cube() -> TriMesh {
    read_off_str(include_str!("../meshes/cube.off")).expect("bundled cube is valid")
}

pub fn icosphere() -> TriMesh {
    read_off_str(include_str!("../meshes/icosphere.off")).expect("bundled icosphere is valid")
}

pub fn torus() -> TriMesh {
    read_off_str(include_str!("../meshes/torus.off")).expect("bundled torus is valid")
}

pub fn all() -> Vec<(&'static str, TriMesh)> {
    vec![
        ("cube", cube()),
        ("icosphere", icosphere()),
        ("torus", torus()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_meshes_are_watertight_and_oriented() {
        for (name, mesh) in all() {
            assert!(mesh.signed_volume() > 0.0, "{name} volume");
            let (min, max) = mesh.aabb();
            let extent = max - min;
            assert!((extent.amax() - 1.0).abs() < 1e-9, "{name} extent");
            assert!(nalgebra::center(&min, &max).coords.norm() < 1e-9, "{name} center");
        }
    }
}
