use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use cut_gen::{CutSpec, ShapePairRecord, ShapeType, Side};
use nalgebra::{Point3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::FORMAT_VERSION;

/// A pose as stored in `meta.json`: quaternion in (w, x, y, z) order plus a
/// translation. Plain arrays keep the JSON layout explicit and stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseMeta {
    pub rotation_wxyz: [f64; 4],
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairMeta {
    pub format: String,
    pub id: String,
    pub category: String,
    pub family: String,
    pub shape_type: ShapeType,
    pub seed: u64,
    pub volume_fraction_a: f64,
    pub cut: CutSpec,
    pub points_per_part: usize,
    pub sdf_samples_per_part: usize,
    /// Ground-truth poses for part A then part B.
    pub poses: [PoseMeta; 2],
}

#[derive(Debug, Clone)]
pub struct LoadedPart {
    pub side: Side,
    pub points: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub sdf_points: Vec<Point3<f64>>,
    pub sdf_values: Vec<f64>,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct LoadedPair {
    pub meta: PairMeta,
    pub parts: [LoadedPart; 2],
}

/// Canonical pair id: category, shape type, cut family, and the pair seed.
pub fn pair_id(record: &ShapePairRecord) -> String {
    let category = if record.source_mesh.is_empty() {
        "uncat"
    } else {
        record.source_mesh.as_str()
    };
    format!(
        "{category}-{}-{}-{:08x}",
        record.shape_type.name(),
        record.cut.family().name(),
        record.pair_seed
    )
}

fn write_f32(path: &Path, values: impl Iterator<Item = f64>, what: &str) -> Result<(), DatasetError> {
    let mut bytes = Vec::new();
    for v in values {
        let f = v as f32;
        if !f.is_finite() {
            return Err(DatasetError::NonFinite { what: what.to_string() });
        }
        bytes.extend_from_slice(&f.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn read_f32(path: &Path) -> Result<Vec<f64>, DatasetError> {
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == ErrorKind::NotFound {
            DatasetError::MissingFile { path: path.to_path_buf() }
        } else {
            DatasetError::Io(e)
        }
    })?;
    if bytes.len() % 4 != 0 {
        return Err(DatasetError::MalformedArray {
            path: path.to_path_buf(),
            found: bytes.len(),
            unit: 4,
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

fn pose_meta(rotation: &UnitQuaternion<f64>, translation: &Vector3<f64>) -> PoseMeta {
    let q = rotation.quaternion();
    PoseMeta {
        rotation_wxyz: [q.w, q.i, q.j, q.k],
        translation: [translation.x, translation.y, translation.z],
    }
}

/// Writes one pair under `root/pairs/<id>/` and returns the id.
///
/// Arrays go to raw little-endian f32 files (`points_{a,b}.f32le` and
/// `normals_{a,b}.f32le` with 3 floats per row, `sdf_{a,b}.f32le` with 4:
/// xyz plus signed distance); poses and metadata go to `meta.json`.
pub fn write_pair(record: &ShapePairRecord, root: &Path) -> Result<String, DatasetError> {
    let id = pair_id(record);
    let dir = root.join("pairs").join(&id);
    fs::create_dir_all(&dir)?;

    for (part, suffix) in record.parts.iter().zip(["a", "b"]) {
        write_f32(
            &dir.join(format!("points_{suffix}.f32le")),
            part.points.iter().flat_map(|p| [p.x, p.y, p.z]),
            "points",
        )?;
        write_f32(
            &dir.join(format!("normals_{suffix}.f32le")),
            part.normals.iter().flat_map(|n| [n.x, n.y, n.z]),
            "normals",
        )?;
        write_f32(
            &dir.join(format!("sdf_{suffix}.f32le")),
            part.sdf.iter().flat_map(|s| [s.point.x, s.point.y, s.point.z, s.sd]),
            "sdf samples",
        )?;
        let finite_pose = part.gt_translation.iter().all(|v| v.is_finite())
            && part.gt_rotation.quaternion().coords.iter().all(|v| v.is_finite());
        if !finite_pose {
            return Err(DatasetError::NonFinite { what: "pose".to_string() });
        }
    }

    let meta = PairMeta {
        format: FORMAT_VERSION.to_string(),
        id: id.clone(),
        category: record.source_mesh.clone(),
        family: record.cut.family().name().to_string(),
        shape_type: record.shape_type,
        seed: record.pair_seed,
        volume_fraction_a: record.volume_fraction_a,
        cut: record.cut,
        points_per_part: record.parts[0].points.len(),
        sdf_samples_per_part: record.parts[0].sdf.len(),
        poses: [
            pose_meta(&record.parts[0].gt_rotation, &record.parts[0].gt_translation),
            pose_meta(&record.parts[1].gt_rotation, &record.parts[1].gt_translation),
        ],
    };
    let mut json = serde_json::to_vec_pretty(&meta)?;
    json.push(b'\n');
    fs::write(dir.join("meta.json"), json)?;
    Ok(id)
}

fn to_points(flat: &[f64]) -> Vec<Point3<f64>> {
    flat.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect()
}

/// Reads one pair back. Counts are cross-checked against `meta.json`, and
/// the stored quaternions must be unit within 1e-9 (they are then used
/// without renormalizing, preserving the stored bits).
pub fn read_pair(root: &Path, id: &str) -> Result<LoadedPair, DatasetError> {
    let dir = root.join("pairs").join(id);
    let meta_path = dir.join("meta.json");
    let meta_bytes = fs::read(&meta_path).map_err(|e| {
        if e.kind() == ErrorKind::NotFound {
            DatasetError::MissingFile { path: meta_path.clone() }
        } else {
            DatasetError::Io(e)
        }
    })?;
    let meta: PairMeta = serde_json::from_slice(&meta_bytes)?;
    if meta.format != FORMAT_VERSION {
        return Err(DatasetError::WrongFormat {
            found: meta.format,
            expected: FORMAT_VERSION.to_string(),
        });
    }

    let mut parts = Vec::with_capacity(2);
    for (k, suffix) in ["a", "b"].into_iter().enumerate() {
        let points_path = dir.join(format!("points_{suffix}.f32le"));
        let points = to_points(&read_f32(&points_path)?);
        if points.len() != meta.points_per_part {
            return Err(DatasetError::CountMismatch {
                path: points_path,
                expected: meta.points_per_part,
                found: points.len(),
            });
        }
        let normals_path = dir.join(format!("normals_{suffix}.f32le"));
        let normals: Vec<Vector3<f64>> = read_f32(&normals_path)?
            .chunks_exact(3)
            .map(|c| Vector3::new(c[0], c[1], c[2]))
            .collect();
        if normals.len() != points.len() {
            return Err(DatasetError::CountMismatch {
                path: normals_path,
                expected: points.len(),
                found: normals.len(),
            });
        }
        let sdf_path = dir.join(format!("sdf_{suffix}.f32le"));
        let sdf_flat = read_f32(&sdf_path)?;
        if sdf_flat.len() % 4 != 0 {
            return Err(DatasetError::MalformedArray {
                path: sdf_path,
                found: sdf_flat.len() * 4,
                unit: 16,
            });
        }
        let mut sdf_points = Vec::with_capacity(sdf_flat.len() / 4);
        let mut sdf_values = Vec::with_capacity(sdf_flat.len() / 4);
        for row in sdf_flat.chunks_exact(4) {
            sdf_points.push(Point3::new(row[0], row[1], row[2]));
            sdf_values.push(row[3]);
        }
        if sdf_values.len() != meta.sdf_samples_per_part {
            return Err(DatasetError::CountMismatch {
                path: sdf_path,
                expected: meta.sdf_samples_per_part,
                found: sdf_values.len(),
            });
        }

        let pm = &meta.poses[k];
        let [w, x, y, z] = pm.rotation_wxyz;
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(DatasetError::BadQuaternion { norm });
        }
        parts.push(LoadedPart {
            side: if k == 0 { Side::A } else { Side::B },
            points,
            normals,
            sdf_points,
            sdf_values,
            rotation: UnitQuaternion::new_unchecked(q),
            translation: Vector3::new(pm.translation[0], pm.translation[1], pm.translation[2]),
        });
    }
    let part_b = parts.pop().expect("two parts");
    let part_a = parts.pop().expect("two parts");
    Ok(LoadedPair { meta, parts: [part_a, part_b] })
}

/// Rebuilds a `ShapePairRecord` from a loaded pair, for rewriting.
pub fn to_record(pair: &LoadedPair) -> ShapePairRecord {
    let parts = [&pair.parts[0], &pair.parts[1]].map(|p| cut_gen::PartRecord {
        side: p.side,
        points: p.points.clone(),
        normals: p.normals.clone(),
        sdf: p
            .sdf_points
            .iter()
            .zip(&p.sdf_values)
            .map(|(q, sd)| cut_gen::SdfSample { point: *q, sd: *sd })
            .collect(),
        gt_rotation: p.rotation,
        gt_translation: p.translation,
    });
    ShapePairRecord {
        source_mesh: pair.meta.category.clone(),
        pair_seed: pair.meta.seed,
        shape_type: pair.meta.shape_type,
        cut: pair.meta.cut,
        volume_fraction_a: pair.meta.volume_fraction_a,
        parts,
    }
}
