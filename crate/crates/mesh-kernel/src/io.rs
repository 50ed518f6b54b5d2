//! Mesh readers. Both formats run through [`TriMesh::new`], so anything
//! loaded here carries the full watertightness guarantees.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Point3;

use crate::error::MeshError;
use crate::mesh::TriMesh;

pub fn read_off(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    read_off_str(&text)
}

/// Parses ASCII OFF. Comment lines (`#`) and blank lines are ignored;
/// only pure triangle meshes are accepted.
pub fn read_off_str(text: &str) -> Result<TriMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let parse_err = |line: usize, message: &str| MeshError::Parse {
        line,
        message: message.to_string(),
    };

    let (line, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty OFF file"))?;
    if header != "OFF" {
        return Err(parse_err(line, "expected OFF header"));
    }

    let (line, counts) = lines
        .next()
        .ok_or_else(|| parse_err(line, "missing count line"))?;
    let mut it = counts.split_whitespace();
    let mut next_count = |name: &str| -> Result<usize, MeshError> {
        it.next()
            .ok_or_else(|| parse_err(line, &format!("missing {name} count")))?
            .parse::<usize>()
            .map_err(|_| parse_err(line, &format!("invalid {name} count")))
    };
    let nv = next_count("vertex")?;
    let nf = next_count("face")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in vertex list"))?;
        let mut it = text.split_whitespace();
        let mut coord = |name| -> Result<f64, MeshError> {
            it.next()
                .ok_or_else(|| parse_err(line, &format!("missing {name} coordinate")))?
                .parse::<f64>()
                .map_err(|_| parse_err(line, &format!("invalid {name} coordinate")))
        };
        vertices.push(Point3::new(coord("x")?, coord("y")?, coord("z")?));
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in face list"))?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.first() != Some(&"3") {
            return Err(parse_err(line, "only triangle faces are supported"));
        }
        if tokens.len() < 4 {
            return Err(parse_err(line, "face needs three vertex indices"));
        }
        let mut f = [0u32; 3];
        for (slot, tok) in f.iter_mut().zip(&tokens[1..4]) {
            *slot = tok
                .parse::<u32>()
                .map_err(|_| parse_err(line, "invalid vertex index"))?;
        }
        faces.push(f);
    }

    TriMesh::new(vertices, faces)
}

pub fn read_stl_binary(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    let bytes = std::fs::read(path)?;
    read_stl_bytes(&bytes)
}

/// Parses binary STL. The triangle soup is welded into an indexed mesh by
/// exact bit-pattern equality of the f32 coordinates; soups whose shared
/// vertices do not match bitwise fail the watertightness check.
pub fn read_stl_bytes(bytes: &[u8]) -> Result<TriMesh, MeshError> {
    let parse_err = |message: &str| MeshError::Parse {
        line: 0,
        message: message.to_string(),
    };
    if bytes.len() < 84 {
        return Err(parse_err("binary STL shorter than its 84-byte header"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = 84 + count * 50;
    if bytes.len() < expected {
        return Err(parse_err(&format!(
            "binary STL truncated: {} bytes, {expected} required for {count} triangles",
            bytes.len()
        )));
    }

    let mut weld: HashMap<[u32; 3], u32> = HashMap::new();
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces = Vec::with_capacity(count);
    for t in 0..count {
        let rec = &bytes[84 + t * 50..84 + (t + 1) * 50];
        let mut face = [0u32; 3];
        for (v, slot) in face.iter_mut().enumerate() {
            // Skip the 12-byte stored normal; it is recomputed from geometry.
            let off = 12 + v * 12;
            let bits = [
                u32::from_le_bytes(rec[off..off + 4].try_into().unwrap()),
                u32::from_le_bytes(rec[off + 4..off + 8].try_into().unwrap()),
                u32::from_le_bytes(rec[off + 8..off + 12].try_into().unwrap()),
            ];
            *slot = *weld.entry(bits).or_insert_with(|| {
                vertices.push(Point3::new(
                    f32::from_bits(bits[0]) as f64,
                    f32::from_bits(bits[1]) as f64,
                    f32::from_bits(bits[2]) as f64,
                ));
                (vertices.len() - 1) as u32
            });
        }
        faces.push(face);
    }

    TriMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    #[test]
    fn off_round_trip_via_text() {
        let cube = bundled::cube();
        let mut text = String::from("OFF\n# comment\n8 12 0\n");
        for v in cube.vertices() {
            text.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
        }
        for f in cube.faces() {
            text.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
        }
        let mesh = read_off_str(&text).unwrap();
        assert_eq!(mesh.vertices().len(), 8);
        assert_eq!(mesh.faces().len(), 12);
    }

    #[test]
    fn off_rejects_quads() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        assert!(matches!(
            read_off_str(text).unwrap_err(),
            MeshError::Parse { .. }
        ));
    }

    #[test]
    fn off_rejects_bad_header() {
        assert!(matches!(
            read_off_str("PLY\n0 0 0\n").unwrap_err(),
            MeshError::Parse { .. }
        ));
    }

    #[test]
    fn stl_round_trip() {
        // Serialize the cube as binary STL (triangle soup) and weld it back.
        let cube = bundled::cube();
        let mut bytes = vec![0u8; 80];
        bytes.extend((cube.faces().len() as u32).to_le_bytes());
        for fi in 0..cube.faces().len() {
            let n = cube.face_normal(fi);
            for c in [n.x, n.y, n.z] {
                bytes.extend((c as f32).to_le_bytes());
            }
            for v in cube.face_vertices(fi) {
                for c in [v.x, v.y, v.z] {
                    bytes.extend((c as f32).to_le_bytes());
                }
            }
            bytes.extend(0u16.to_le_bytes());
        }
        let mesh = read_stl_bytes(&bytes).unwrap();
        assert_eq!(mesh.vertices().len(), 8);
        assert_eq!(mesh.faces().len(), 12);
        assert!((mesh.signed_volume() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stl_rejects_truncation() {
        let bytes = vec![0u8; 90];
        assert!(read_stl_bytes(&bytes).is_err());
    }
}
