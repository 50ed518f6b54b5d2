use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use cut_gen::ShapeType;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::format::PairMeta;
use crate::FORMAT_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub category: String,
    pub family: String,
    pub shape_type: ShapeType,
    pub path: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub entries: Vec<ManifestEntry>,
    /// Pair id to split, filled in by [`make_splits`].
    #[serde(default)]
    pub splits: BTreeMap<String, Split>,
}

impl Default for DatasetManifest {
    fn default() -> Self {
        Self::new()
    }
}

impl DatasetManifest {
    pub fn new() -> Self {
        DatasetManifest {
            format: FORMAT_VERSION.to_string(),
            entries: Vec::new(),
            splits: BTreeMap::new(),
        }
    }

    /// Registers a written pair. Ids must be unique.
    pub fn add_entry(&mut self, meta: &PairMeta) -> Result<(), DatasetError> {
        if self.entries.iter().any(|e| e.id == meta.id) {
            return Err(DatasetError::DuplicateId { id: meta.id.clone() });
        }
        self.entries.push(ManifestEntry {
            id: meta.id.clone(),
            category: meta.category.clone(),
            family: meta.family.clone(),
            shape_type: meta.shape_type,
            path: format!("pairs/{}", meta.id),
            seed: meta.seed,
        });
        Ok(())
    }

    pub fn save(&self, root: &Path) -> Result<(), DatasetError> {
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        fs::write(root.join("manifest.json"), json)?;
        Ok(())
    }

    /// Loads and validates a manifest: format tag, id uniqueness and the
    /// existence of every referenced pair directory.
    pub fn load(root: &Path) -> Result<Self, DatasetError> {
        let path = root.join("manifest.json");
        let bytes = fs::read(&path).map_err(|e| {
            if e.kind() == ErrorKind::NotFound {
                DatasetError::MissingFile { path: path.clone() }
            } else {
                DatasetError::Io(e)
            }
        })?;
        let manifest: DatasetManifest = serde_json::from_slice(&bytes)?;
        if manifest.format != FORMAT_VERSION {
            return Err(DatasetError::WrongFormat {
                found: manifest.format,
                expected: FORMAT_VERSION.to_string(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for entry in &manifest.entries {
            if !seen.insert(entry.id.as_str()) {
                return Err(DatasetError::DuplicateId { id: entry.id.clone() });
            }
            let meta = root.join(&entry.path).join("meta.json");
            if !meta.is_file() {
                return Err(DatasetError::MissingFile { path: meta });
            }
        }
        Ok(manifest)
    }

    /// Ids assigned to `split`, in manifest order.
    pub fn ids_in(&self, split: Split) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| self.splits.get(&e.id) == Some(&split))
            .map(|e| e.id.clone())
            .collect()
    }

    pub fn split_counts(&self) -> BTreeMap<Split, usize> {
        let mut counts = BTreeMap::new();
        for split in self.splits.values() {
            *counts.entry(*split).or_insert(0) += 1;
        }
        counts
    }

    /// Pair counts per (category, cut family) stratum.
    pub fn stratum_counts(&self) -> BTreeMap<(String, String), usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry((e.category.clone(), e.family.clone())).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitMode {
    /// Random stratified assignment of every pair.
    Standard,
    /// Entire categories are held out as the test set.
    UnseenCategory { test_categories: Vec<String> },
    /// One cut family is held out as the test set.
    UnseenCut { test_family: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train: 0.8, val: 0.1, test: 0.1, seed: 0, mode: SplitMode::Standard }
    }
}

const MIN_SPLIT_PAIRS: usize = 10;

/// Integer counts proportional to `weights` that sum exactly to `total`
/// (largest-remainder rounding, ties toward the earlier slot).
fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let mut counts = vec![0usize; weights.len()];
    if sum <= 0.0 {
        if let Some(first) = counts.first_mut() {
            *first = total;
        }
        return counts;
    }
    let mut rems: Vec<(usize, f64)> = Vec::with_capacity(weights.len());
    let mut assigned = 0usize;
    for (i, w) in weights.iter().enumerate() {
        let exact = total as f64 * w / sum;
        counts[i] = exact.floor() as usize;
        assigned += counts[i];
        rems.push((i, exact - exact.floor()));
    }
    rems.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for k in 0..(total - assigned) {
        counts[rems[k % rems.len()].0] += 1;
    }
    counts
}

/// Stratified assignment with exact global counts. Every (category, family)
/// stratum is shuffled and handed its proportional floor of each split;
/// the leftover ids are then dealt to the splits that are still short,
/// preferring the stratum's largest fractional remainders.
fn assign_stratified(
    entries: &[&ManifestEntry],
    fractions: &[f64],
    splits: &[Split],
    rng: &mut ChaCha8Rng,
    out: &mut BTreeMap<String, Split>,
) {
    let n = entries.len();
    if n == 0 {
        return;
    }
    let k = fractions.len();
    let targets = largest_remainder(fractions, n);

    let mut strata: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for e in entries {
        strata
            .entry((e.category.clone(), e.family.clone()))
            .or_default()
            .push(e.id.clone());
    }

    let mut assigned = vec![0usize; k];
    let mut leftovers: Vec<(String, Vec<f64>)> = Vec::new();
    for ids in strata.values_mut() {
        ids.shuffle(rng);
        let mut cursor = 0usize;
        let mut rems = vec![0.0f64; k];
        for j in 0..k {
            let exact = ids.len() as f64 * fractions[j];
            let take = exact.floor() as usize;
            rems[j] = exact - exact.floor();
            for id in &ids[cursor..cursor + take] {
                out.insert(id.clone(), splits[j]);
            }
            assigned[j] += take;
            cursor += take;
        }
        for id in &ids[cursor..] {
            leftovers.push((id.clone(), rems.clone()));
        }
    }

    let mut deficits: Vec<usize> =
        targets.iter().zip(&assigned).map(|(t, a)| t.saturating_sub(*a)).collect();
    for (id, rems) in leftovers {
        let mut best: Option<usize> = None;
        for j in 0..k {
            if deficits[j] == 0 {
                continue;
            }
            if best.is_none_or(|b| rems[j] > rems[b]) {
                best = Some(j);
            }
        }
        let j = best.expect("deficits account for every leftover");
        deficits[j] -= 1;
        out.insert(id, splits[j]);
    }
}

/// Assigns every pair to a split, deterministically under the spec's seed.
///
/// Standard mode stratifies by (category, cut family) while keeping the
/// global train/val/test counts exact. The holdout modes force the held-out
/// pairs into the test set and split the remainder between train and val
/// with the test fraction folded back in proportionally.
pub fn make_splits(
    manifest: &mut DatasetManifest,
    spec: &SplitSpec,
) -> Result<(), DatasetError> {
    let sum = spec.train + spec.val + spec.test;
    if (sum - 1.0).abs() > 1e-9 || spec.train < 0.0 || spec.val < 0.0 || spec.test < 0.0 {
        return Err(DatasetError::BadFractions { sum });
    }
    let n = manifest.entries.len();
    if n < MIN_SPLIT_PAIRS {
        return Err(DatasetError::TooFewPairs { n, minimum: MIN_SPLIT_PAIRS });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut splits = BTreeMap::new();
    match &spec.mode {
        SplitMode::Standard => {
            let all: Vec<&ManifestEntry> = manifest.entries.iter().collect();
            assign_stratified(
                &all,
                &[spec.train, spec.val, spec.test],
                &[Split::Train, Split::Val, Split::Test],
                &mut rng,
                &mut splits,
            );
        }
        SplitMode::UnseenCategory { test_categories } => {
            let (held, rest): (Vec<&ManifestEntry>, Vec<&ManifestEntry>) = manifest
                .entries
                .iter()
                .partition(|e| test_categories.contains(&e.category));
            for e in held {
                splits.insert(e.id.clone(), Split::Test);
            }
            split_remainder(&rest, spec, &mut rng, &mut splits);
        }
        SplitMode::UnseenCut { test_family } => {
            let (held, rest): (Vec<&ManifestEntry>, Vec<&ManifestEntry>) = manifest
                .entries
                .iter()
                .partition(|e| &e.family == test_family);
            for e in held {
                splits.insert(e.id.clone(), Split::Test);
            }
            split_remainder(&rest, spec, &mut rng, &mut splits);
        }
    }
    manifest.splits = splits;
    Ok(())
}

fn split_remainder(
    rest: &[&ManifestEntry],
    spec: &SplitSpec,
    rng: &mut ChaCha8Rng,
    splits: &mut BTreeMap<String, Split>,
) {
    let denom = spec.train + spec.val;
    if denom <= 0.0 {
        // Degenerate request (all weight on test): everything held out.
        for e in rest {
            splits.insert(e.id.clone(), Split::Test);
        }
        return;
    }
    assign_stratified(
        rest,
        &[spec.train / denom, spec.val / denom],
        &[Split::Train, Split::Val],
        rng,
        splits,
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize, categories: &[&str], families: &[&str]) -> DatasetManifest {
        let mut m = DatasetManifest::new();
        for i in 0..n {
            m.entries.push(ManifestEntry {
                id: format!("pair-{i:04}"),
                category: categories[i % categories.len()].to_string(),
                family: families[i % families.len()].to_string(),
                shape_type: ShapeType::Solid,
                path: format!("pairs/pair-{i:04}"),
                seed: i as u64,
            });
        }
        m
    }

    #[test]
    fn hundred_pairs_split_eighty_ten_ten() {
        let mut m = synthetic(100, &["cube", "torus"], &["planar", "sine", "parabolic"]);
        make_splits(&mut m, &SplitSpec::default()).unwrap();
        let counts = m.split_counts();
        assert_eq!(counts[&Split::Train], 80);
        assert_eq!(counts[&Split::Val], 10);
        assert_eq!(counts[&Split::Test], 10);
        assert_eq!(m.splits.len(), 100);
    }

    #[test]
    fn global_counts_are_exact_with_awkward_strata() {
        // 37 + 41 + 22 pairs over irregular strata still lands exactly on
        // the largest-remainder targets for the whole manifest.
        let mut m = synthetic(37, &["a"], &["planar"]);
        let more = synthetic(41, &["b"], &["sine", "square"]);
        let tail = synthetic(22, &["c", "d", "e"], &["pulse"]);
        for (i, mut e) in more.entries.into_iter().chain(tail.entries).enumerate() {
            e.id = format!("extra-{i:04}");
            m.entries.push(e);
        }
        make_splits(&mut m, &SplitSpec::default()).unwrap();
        let counts = m.split_counts();
        assert_eq!(counts[&Split::Train], 80);
        assert_eq!(counts[&Split::Val], 10);
        assert_eq!(counts[&Split::Test], 10);
    }

    #[test]
    fn strata_are_respected_up_to_rounding() {
        let mut m = synthetic(200, &["cube", "torus"], &["planar", "sine"]);
        make_splits(&mut m, &SplitSpec::default()).unwrap();
        for ((cat, fam), total) in m.stratum_counts() {
            let train = m
                .entries
                .iter()
                .filter(|e| {
                    e.category == cat
                        && e.family == fam
                        && m.splits[&e.id] == Split::Train
                })
                .count();
            let expected = total as f64 * 0.8;
            assert!(
                (train as f64 - expected).abs() <= 2.0,
                "stratum ({cat}, {fam}): {train} train of {total}"
            );
        }
    }

    #[test]
    fn unseen_category_holds_out_whole_categories() {
        let mut m = synthetic(60, &["cube", "torus", "icosphere"], &["planar", "sine"]);
        let spec = SplitSpec {
            mode: SplitMode::UnseenCategory { test_categories: vec!["torus".to_string()] },
            ..SplitSpec::default()
        };
        make_splits(&mut m, &spec).unwrap();
        for e in &m.entries {
            if e.category == "torus" {
                assert_eq!(m.splits[&e.id], Split::Test);
            } else {
                assert_ne!(m.splits[&e.id], Split::Test);
            }
        }
        // Remainder keeps the train:val proportion of 8:1.
        let counts = m.split_counts();
        assert_eq!(counts[&Split::Test], 20);
        assert_eq!(counts[&Split::Train] + counts[&Split::Val], 40);
        assert!(counts[&Split::Train] >= 34 && counts[&Split::Train] <= 37);
    }

    #[test]
    fn unseen_cut_test_set_is_single_family() {
        let mut m = synthetic(80, &["cube"], &["planar", "sine", "parabolic", "square"]);
        let spec = SplitSpec {
            mode: SplitMode::UnseenCut { test_family: "parabolic".to_string() },
            ..SplitSpec::default()
        };
        make_splits(&mut m, &spec).unwrap();
        for e in &m.entries {
            assert_eq!(m.splits[&e.id] == Split::Test, e.family == "parabolic", "{}", e.id);
        }
    }

    #[test]
    fn assignment_is_deterministic_and_seed_sensitive() {
        let base = synthetic(100, &["cube", "torus"], &["planar", "sine"]);
        let run = |seed| {
            let mut m = base.clone();
            make_splits(&mut m, &SplitSpec { seed, ..SplitSpec::default() }).unwrap();
            m.splits
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn bad_fractions_and_tiny_manifests_are_rejected() {
        let mut m = synthetic(20, &["cube"], &["planar"]);
        let spec = SplitSpec { train: 0.8, val: 0.3, test: 0.1, ..SplitSpec::default() };
        assert!(matches!(
            make_splits(&mut m, &spec).unwrap_err(),
            DatasetError::BadFractions { .. }
        ));

        let mut m = synthetic(9, &["cube"], &["planar"]);
        assert!(matches!(
            make_splits(&mut m, &SplitSpec::default()).unwrap_err(),
            DatasetError::TooFewPairs { .. }
        ));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let mut m = DatasetManifest::new();
        let meta = crate::format::PairMeta {
            format: FORMAT_VERSION.to_string(),
            id: "x".to_string(),
            category: "cube".to_string(),
            family: "planar".to_string(),
            shape_type: ShapeType::Solid,
            seed: 0,
            volume_fraction_a: 0.5,
            cut: cut_gen::CutSpec::Planar { a: 0.0, b: 0.0, c: 0.0 },
            points_per_part: 2,
            sdf_samples_per_part: 1,
            poses: [
                crate::format::PoseMeta {
                    rotation_wxyz: [1.0, 0.0, 0.0, 0.0],
                    translation: [0.0; 3],
                },
                crate::format::PoseMeta {
                    rotation_wxyz: [1.0, 0.0, 0.0, 0.0],
                    translation: [0.0; 3],
                },
            ],
        };
        m.add_entry(&meta).unwrap();
        assert!(matches!(
            m.add_entry(&meta).unwrap_err(),
            DatasetError::DuplicateId { .. }
        ));
    }
}
