//! Checkpoint format: a flat name → tensor map stored as `checkpoint.bin`
//! (concatenated f64 little-endian arrays) plus `checkpoint.json` (shape and
//! offset index and a free-form `extra` document). Round trips are bitwise
//! exact because values never pass through decimal text.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::AutodiffError;
use crate::tensor::Tensor;

pub const CHECKPOINT_FORMAT: &str = "adt-ckpt-v1";
const BIN_NAME: &str = "checkpoint.bin";
const INDEX_NAME: &str = "checkpoint.json";

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    name: String,
    rows: usize,
    cols: usize,
    /// Offset into the blob, counted in f64 values.
    offset: usize,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Index {
    format: String,
    tensors: Vec<IndexEntry>,
    extra: serde_json::Value,
}

/// Write all tensors (sorted by name) plus a free-form JSON `extra` document.
pub fn save_checkpoint(
    dir: &Path,
    tensors: &BTreeMap<String, Tensor>,
    extra: &serde_json::Value,
) -> Result<(), AutodiffError> {
    for (name, t) in tensors {
        if !t.is_finite() {
            return Err(AutodiffError::NonFiniteTensor { name: name.clone() });
        }
    }
    fs::create_dir_all(dir)?;
    let mut blob = Vec::new();
    let mut entries = Vec::with_capacity(tensors.len());
    let mut offset = 0usize;
    for (name, t) in tensors {
        for v in t.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        entries.push(IndexEntry {
            name: name.clone(),
            rows: t.rows(),
            cols: t.cols(),
            offset,
            len: t.len(),
        });
        offset += t.len();
    }
    let index = Index { format: CHECKPOINT_FORMAT.to_string(), tensors: entries, extra: extra.clone() };
    fs::write(dir.join(BIN_NAME), blob)?;
    let mut json = serde_json::to_string_pretty(&index)?;
    json.push('\n');
    fs::write(dir.join(INDEX_NAME), json)?;
    Ok(())
}

/// Read a checkpoint directory back into (tensors, extra).
pub fn load_checkpoint(
    dir: &Path,
) -> Result<(BTreeMap<String, Tensor>, serde_json::Value), AutodiffError> {
    let index: Index = serde_json::from_str(&fs::read_to_string(dir.join(INDEX_NAME))?)?;
    if index.format != CHECKPOINT_FORMAT {
        return Err(AutodiffError::WrongFormat {
            found: index.format,
            expected: CHECKPOINT_FORMAT.to_string(),
        });
    }
    let blob = fs::read(dir.join(BIN_NAME))?;
    if blob.len() % 8 != 0 {
        return Err(AutodiffError::BlobSizeMismatch {
            expected: blob.len().div_ceil(8),
            found: blob.len() / 8,
        });
    }
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let described: usize = index.tensors.iter().map(|e| e.len).sum();
    if described != values.len() {
        return Err(AutodiffError::BlobSizeMismatch { expected: described, found: values.len() });
    }
    let mut out = BTreeMap::new();
    for e in &index.tensors {
        if e.rows * e.cols != e.len || e.offset + e.len > values.len() {
            return Err(AutodiffError::BadIndexEntry { name: e.name.clone() });
        }
        let t = Tensor::from_vec(e.rows, e.cols, values[e.offset..e.offset + e.len].to_vec());
        if !t.is_finite() {
            return Err(AutodiffError::NonFiniteTensor { name: e.name.clone() });
        }
        if out.insert(e.name.clone(), t).is_some() {
            return Err(AutodiffError::DuplicateName { name: e.name.clone() });
        }
    }
    Ok((out, index.extra))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_map() -> BTreeMap<String, Tensor> {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut m = BTreeMap::new();
        m.insert("w1".to_string(), Tensor::randn(3, 4, 1.0, &mut rng));
        m.insert("b1".to_string(), Tensor::randn(1, 4, 0.1, &mut rng));
        m.insert("scalar".to_string(), Tensor::scalar(0.1 + 0.2));
        m
    }

    #[test]
    fn round_trip_is_bitwise_exact() {
        let dir = tempfile::tempdir().unwrap();
        let tensors = sample_map();
        let extra = serde_json::json!({"step": 17, "note": "x"});
        save_checkpoint(dir.path(), &tensors, &extra).unwrap();
        let (back, extra_back) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(extra_back, extra);
        assert_eq!(back.len(), tensors.len());
        for (name, t) in &tensors {
            let b = &back[name];
            assert_eq!(b.shape(), t.shape());
            for (x, y) in t.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits(), "{name} drifted");
            }
        }
    }

    #[test]
    fn wrong_format_tag_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &sample_map(), &serde_json::Value::Null).unwrap();
        let path = dir.path().join(INDEX_NAME);
        let text = std::fs::read_to_string(&path).unwrap().replace(CHECKPOINT_FORMAT, "other-v0");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_checkpoint(dir.path()),
            Err(AutodiffError::WrongFormat { .. })
        ));
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &sample_map(), &serde_json::Value::Null).unwrap();
        let path = dir.path().join(BIN_NAME);
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(dir.path()),
            Err(AutodiffError::BlobSizeMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_tensor_is_rejected_on_save() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = BTreeMap::new();
        m.insert("bad".to_string(), Tensor::scalar(f64::INFINITY));
        assert!(matches!(
            save_checkpoint(dir.path(), &m, &serde_json::Value::Null),
            Err(AutodiffError::NonFiniteTensor { .. })
        ));
    }
}
