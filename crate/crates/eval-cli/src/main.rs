//! `gsm`: generate shape-mating datasets, split them, train the pose
//! network, and report DCP-style evaluation metrics for the learned model
//! and classical registration baselines.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use cut_gen::{sample_cut_spec, CutFamily, GenParams, ShapeType};
use dataset_io::{DatasetManifest, PairMeta, Split, SplitSpec};
use eval_cli::{
    evaluate_pairs, load_fold, render_csv, to_pair_sample, EvalOptions, ExperimentKind,
    MethodSpec, MetricsRecord, RunConfig, SPARSE_ICP_P,
};
use mesh_kernel::{bundled, Bvh, TriMesh};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trainer::{fit, pose_validation_metric, PairSample, TrainData, TrainState};

#[derive(Parser)]
#[command(name = "gsm", about = "Geometric shape mating: data, training, evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Cut bundled meshes into mating pairs and write a dataset.
    Generate {
        /// Dataset directory to create.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated cut families (default: all five).
        #[arg(long, value_delimiter = ',')]
        families: Vec<String>,
        /// solid or shell.
        #[arg(long = "shape-type", default_value = "solid")]
        shape_type: String,
        /// Comma-separated source shapes: cube, sphere, torus.
        #[arg(long, value_delimiter = ',', default_values_t = ["cube".to_string(), "sphere".to_string(), "torus".to_string()])]
        shapes: Vec<String>,
        /// Pairs per (shape, family) combination.
        #[arg(long, default_value_t = 1)]
        pairs: usize,
        #[arg(long = "points-per-part", default_value_t = 1024)]
        points_per_part: usize,
        #[arg(long = "sdf-per-part", default_value_t = 40_000)]
        sdf_per_part: usize,
        #[arg(long = "dense-points", default_value_t = 50_000)]
        dense_points: usize,
        #[arg(long = "mc-samples", default_value_t = 16_384)]
        mc_samples: usize,
    },
    /// Assign train/val/test folds (80/10/10) to a generated dataset.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// standard, unseen-category, or unseen-cut.
        #[arg(long, default_value = "standard")]
        mode: String,
        /// Categories held out entirely (unseen-category mode).
        #[arg(long = "test-category", value_delimiter = ',', default_values_t = ["torus".to_string()])]
        test_categories: Vec<String>,
        /// Cut family held out entirely (unseen-cut mode).
        #[arg(long = "test-family", default_value = "parabolic")]
        test_family: String,
    },
    /// Train the pose network on the train fold.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// JSON run configuration (model + training hyper-parameters).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Gaussian noise added to training and validation clouds.
        #[arg(long = "noise-sigma", default_value_t = 0.0)]
        noise_sigma: f64,
    },
    /// Evaluate a trained checkpoint on the test fold.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// standard, unseen-category, unseen-cut, or noisy.
        #[arg(long, default_value = "standard")]
        experiment: String,
        /// CSV output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the experiment's test-cloud noise level.
        #[arg(long = "noise-sigma")]
        noise_sigma: Option<f64>,
    },
    /// Evaluate classical registration baselines on the test fold.
    Baseline {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated: identity, icp, sparse-icp.
        #[arg(long, value_delimiter = ',', default_values_t = ["icp".to_string(), "sparse-icp".to_string()])]
        methods: Vec<String>,
        #[arg(long, default_value = "standard")]
        experiment: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "noise-sigma")]
        noise_sigma: Option<f64>,
    },
    /// Summarize a dataset and check its stored contracts.
    Stats {
        #[arg(long)]
        data: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().cmd {
        Cmd::Generate {
            out,
            seed,
            families,
            shape_type,
            shapes,
            pairs,
            points_per_part,
            sdf_per_part,
            dense_points,
            mc_samples,
        } => generate(
            &out,
            seed,
            &families,
            &shape_type,
            &shapes,
            pairs,
            GenParams {
                points_per_part,
                sdf_samples_per_part: sdf_per_part,
                dense_boundary_points: dense_points,
                volume_mc_samples: mc_samples,
            },
        ),
        Cmd::Split { data, seed, mode, test_categories, test_family } => {
            split(&data, seed, &mode, test_categories, test_family)
        }
        Cmd::Train { data, config, out, noise_sigma } => train(&data, config.as_deref(), &out, noise_sigma),
        Cmd::Eval { data, checkpoint, experiment, out, seed, noise_sigma } => {
            eval(&data, &checkpoint, &experiment, out.as_deref(), seed, noise_sigma)
        }
        Cmd::Baseline { data, methods, experiment, out, seed, noise_sigma } => {
            baseline(&data, &methods, &experiment, out.as_deref(), seed, noise_sigma)
        }
        Cmd::Stats { data } => stats(&data),
    }
}

fn bundled_shape(name: &str) -> anyhow::Result<TriMesh> {
    match name {
        "cube" => Ok(bundled::cube()),
        "sphere" => Ok(bundled::icosphere()),
        "torus" => Ok(bundled::torus()),
        other => bail!("unknown shape '{other}' (expected cube, sphere, or torus)"),
    }
}

fn parse_families(names: &[String]) -> anyhow::Result<Vec<CutFamily>> {
    if names.is_empty() {
        return Ok(CutFamily::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| CutFamily::parse(n).ok_or_else(|| anyhow::anyhow!("unknown cut family '{n}'")))
        .collect()
}

fn generate(
    out: &Path,
    seed: u64,
    families: &[String],
    shape_type: &str,
    shapes: &[String],
    pairs: usize,
    params: GenParams,
) -> anyhow::Result<()> {
    let shape_type = ShapeType::parse(shape_type)
        .ok_or_else(|| anyhow::anyhow!("shape-type must be 'solid' or 'shell'"))?;
    let families = parse_families(families)?;
    fs::create_dir_all(out)?;

    let mut manifest = DatasetManifest::new();
    let mut counter = 0u64;
    for shape_name in shapes {
        let mesh = bundled_shape(shape_name)?;
        let bvh = Bvh::build(&mesh);
        for &family in &families {
            for _ in 0..pairs {
                let pair_seed = seed.wrapping_add(counter);
                counter += 1;
                let mut rng = ChaCha8Rng::seed_from_u64(pair_seed);
                let spec = sample_cut_spec(family, &mut rng);
                let mut record = cut_gen::generate_pair_with_params(
                    &mesh, &bvh, spec, shape_type, &params, &mut rng,
                )
                .with_context(|| format!("generating {shape_name}/{} pair", family.name()))?;
                record.source_mesh = shape_name.clone();
                record.pair_seed = pair_seed;
                let id = dataset_io::write_pair(&record, out)?;
                let loaded = dataset_io::read_pair(out, &id)?;
                manifest.add_entry(&loaded.meta)?;
                println!("wrote {id}");
            }
        }
    }
    manifest.save(out)?;
    println!("{} pairs in {}", manifest.entries.len(), out.display());
    Ok(())
}

fn split(
    data: &Path,
    seed: u64,
    mode: &str,
    test_categories: Vec<String>,
    test_family: String,
) -> anyhow::Result<()> {
    let kind = ExperimentKind::parse(mode)
        .filter(|k| *k != ExperimentKind::Noisy)
        .or(if mode == "standard" { Some(ExperimentKind::Standard) } else { None })
        .ok_or_else(|| {
            anyhow::anyhow!("mode must be standard, unseen-category, or unseen-cut, got '{mode}'")
        })?;
    let mut manifest = DatasetManifest::load(data)?;
    let spec = SplitSpec {
        seed,
        mode: kind.split_mode(test_categories, test_family),
        ..SplitSpec::default()
    };
    dataset_io::make_splits(&mut manifest, &spec)?;
    manifest.save(data)?;
    for (split, count) in manifest.split_counts() {
        println!("{}: {count}", split.name());
    }
    Ok(())
}

fn load_run_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn load_fold_samples(
    data: &Path,
    fold: Split,
    cfg: &RunConfig,
    noise_sigma: f64,
) -> anyhow::Result<Vec<PairSample>> {
    let pairs = load_fold(data, fold)?;
    let mut samples = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        // Per-pair noise seed, derived from the id so the sample set does not
        // depend on load order.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in pair.meta.id.bytes() {
            h = (h ^ b as u64).wrapping_mul(0x100_0000_01b3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h ^ cfg.train.seed);
        samples.push(to_pair_sample(
            pair,
            cfg.train.points_per_part,
            cfg.sdf_per_part,
            noise_sigma,
            &mut rng,
        ));
    }
    Ok(samples)
}

fn train(data: &Path, config: Option<&Path>, out: &Path, noise_sigma: f64) -> anyhow::Result<()> {
    let cfg = load_run_config(config)?;
    cfg.model.validate();
    let train_samples = load_fold_samples(data, Split::Train, &cfg, noise_sigma)?;
    let val_samples = load_fold_samples(data, Split::Val, &cfg, noise_sigma)?;
    let train_data = TrainData::new(train_samples, cfg.train.pose_mode, cfg.train.seed)?;

    let mut state = TrainState::new(&cfg.model, &cfg.train)?;
    let mut validate =
        |params: &nsm_model::ModelParams| pose_validation_metric(params, &val_samples);
    let report = fit(&mut state, &train_data, &cfg.train, Some(out), Some(&mut validate))?;
    let last = report.trace.last().map(|r| (r.l_pose, r.l_g, r.l_adv, r.l_sdf));
    println!(
        "trained {} steps (best val {:?}, last losses {:?})",
        report.completed_steps, report.best_val, last
    );
    Ok(())
}

fn experiment_options(
    kind: ExperimentKind,
    seed: u64,
    noise_sigma: Option<f64>,
    learned_points: usize,
) -> EvalOptions {
    EvalOptions {
        seed,
        noise_sigma: noise_sigma.unwrap_or_else(|| kind.test_noise_sigma()),
        learned_points,
        augment: true,
    }
}

fn write_report(records: &[MetricsRecord], out: Option<&Path>) -> anyhow::Result<()> {
    let csv = render_csv(records);
    match out {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(p, &csv)?;
            println!("wrote {}", p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn eval(
    data: &Path,
    checkpoint: &Path,
    experiment: &str,
    out: Option<&Path>,
    seed: u64,
    noise_sigma: Option<f64>,
) -> anyhow::Result<()> {
    let kind = ExperimentKind::parse(experiment)
        .ok_or_else(|| anyhow::anyhow!("unknown experiment '{experiment}'"))?;
    let (state, train_cfg) = TrainState::load(checkpoint)?;
    let pairs = load_fold(data, Split::Test)?;
    let opts = experiment_options(kind, seed, noise_sigma, train_cfg.points_per_part);
    let record = evaluate_pairs(
        &MethodSpec::Learned(Box::new(state.params)),
        &pairs,
        kind.name(),
        &opts,
    )?;
    write_report(&[record], out)
}

fn baseline(
    data: &Path,
    methods: &[String],
    experiment: &str,
    out: Option<&Path>,
    seed: u64,
    noise_sigma: Option<f64>,
) -> anyhow::Result<()> {
    let kind = ExperimentKind::parse(experiment)
        .ok_or_else(|| anyhow::anyhow!("unknown experiment '{experiment}'"))?;
    let pairs = load_fold(data, Split::Test)?;
    let opts = experiment_options(kind, seed, noise_sigma, 256);
    let mut records = Vec::new();
    for name in methods {
        let method = match name.as_str() {
            "identity" => MethodSpec::Identity,
            "icp" => MethodSpec::Icp,
            "sparse-icp" => MethodSpec::SparseIcp { p: SPARSE_ICP_P },
            other => bail!("unknown baseline '{other}' (expected identity, icp, sparse-icp)"),
        };
        records.push(evaluate_pairs(&method, &pairs, kind.name(), &opts)?);
    }
    write_report(&records, out)
}

fn stats(data: &Path) -> anyhow::Result<()> {
    let manifest = DatasetManifest::load(data)?;
    println!("format: {}", manifest.format);
    println!("pairs: {}", manifest.entries.len());
    for ((category, family), count) in manifest.stratum_counts() {
        println!("stratum {category}/{family}: {count}");
    }
    for (split, count) in manifest.split_counts() {
        println!("split {}: {count}", split.name());
    }
    // Contract check: every stored pair must load, carry the manifest's id,
    // and sit inside the accepted volume-balance band.
    let mut worst: f64 = 0.5;
    for entry in &manifest.entries {
        let meta_path = data.join(&entry.path).join("meta.json");
        let meta: PairMeta = serde_json::from_str(
            &fs::read_to_string(&meta_path)
                .with_context(|| format!("reading {}", meta_path.display()))?,
        )?;
        if meta.id != entry.id {
            bail!("pair {} stores mismatched id {}", entry.id, meta.id);
        }
        if !(cut_gen::MIN_VOLUME_RATIO..=cut_gen::MAX_VOLUME_RATIO)
            .contains(&meta.volume_fraction_a)
        {
            bail!(
                "pair {} has volume fraction {} outside [{}, {}]",
                entry.id,
                meta.volume_fraction_a,
                cut_gen::MIN_VOLUME_RATIO,
                cut_gen::MAX_VOLUME_RATIO
            );
        }
        worst = worst.max((meta.volume_fraction_a - 0.5).abs() + 0.5);
    }
    println!("most imbalanced volume fraction: {worst}");
    Ok(())
}
