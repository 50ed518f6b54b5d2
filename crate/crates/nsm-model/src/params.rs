//! Learnable parameters and normalization state for the mating network.

use std::collections::BTreeMap;

use autodiff_tensor::{BatchStats, Tensor};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;

/// Exponential-moving-average weight used when folding batch statistics into
/// the running mean/variance of a batch-norm layer.
pub const BN_MOMENTUM: f64 = 0.1;

/// A dense layer `x · w + b` with `w` of shape `in x out` and `b` of `1 x out`.
#[derive(Debug, Clone)]
pub struct LinearParams {
    pub w: Tensor,
    pub b: Tensor,
}

impl LinearParams {
    fn new<R: Rng>(fan_in: usize, fan_out: usize, std: f64, rng: &mut R) -> Self {
        LinearParams {
            w: Tensor::randn(fan_in, fan_out, std, rng),
            b: Tensor::zeros(1, fan_out),
        }
    }

    /// He-style initialization for layers followed by a (leaky) ReLU.
    fn kaiming<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        Self::new(fan_in, fan_out, (2.0 / fan_in as f64).sqrt(), rng)
    }

    /// Symmetric initialization for generic layers.
    fn xavier<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        Self::new(fan_in, fan_out, (2.0 / (fan_in + fan_out) as f64).sqrt(), rng)
    }
}

/// Per-feature scale and shift used by layer normalization.
#[derive(Debug, Clone)]
pub struct NormParams {
    pub gamma: Tensor,
    pub beta: Tensor,
}

impl NormParams {
    fn identity(width: usize) -> Self {
        NormParams {
            gamma: Tensor::ones(1, width),
            beta: Tensor::zeros(1, width),
        }
    }
}

/// Batch normalization: learnable affine plus running statistics used in
/// evaluation mode.
#[derive(Debug, Clone)]
pub struct BnLayer {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BnLayer {
    fn identity(width: usize) -> Self {
        BnLayer {
            gamma: Tensor::ones(1, width),
            beta: Tensor::zeros(1, width),
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
        }
    }

    /// Folds one batch worth of statistics into the running estimates.
    pub fn absorb(&mut self, stats: &BatchStats) {
        assert_eq!(stats.mean.len(), self.running_mean.len());
        for (r, b) in self.running_mean.iter_mut().zip(stats.mean.iter()) {
            *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * b;
        }
        for (r, b) in self.running_var.iter_mut().zip(stats.var.iter()) {
            *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * b;
        }
    }
}

/// One edge-convolution layer: shared linear over edge features, batch norm,
/// leaky ReLU (the activation itself lives in the forward pass).
#[derive(Debug, Clone)]
pub struct EdgeConvLayer {
    pub lin: LinearParams,
    pub bn: BnLayer,
}

/// Stack of edge-convolution layers forming a graph encoder.
#[derive(Debug, Clone)]
pub struct DgcnnParams {
    pub layers: Vec<EdgeConvLayer>,
}

impl DgcnnParams {
    fn init<R: Rng>(channels: &[usize], rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(channels.len());
        let mut input = 3;
        for &out in channels {
            layers.push(EdgeConvLayer {
                lin: LinearParams::kaiming(2 * input, out, rng),
                bn: BnLayer::identity(out),
            });
            input = out;
        }
        DgcnnParams { layers }
    }
}

/// Attention projection: linear, ReLU, layer norm.
#[derive(Debug, Clone)]
pub struct ProjLayer {
    pub lin: LinearParams,
    pub ln: NormParams,
}

impl ProjLayer {
    fn init<R: Rng>(d: usize, rng: &mut R) -> Self {
        ProjLayer {
            lin: LinearParams::xavier(d, d, rng),
            ln: NormParams::identity(d),
        }
    }
}

/// The six projections of the feature-correlation module: three for the
/// self-attention stage and three for the cross-attention stage.
#[derive(Debug, Clone)]
pub struct TransformerParams {
    pub self_q: ProjLayer,
    pub self_k: ProjLayer,
    pub self_v: ProjLayer,
    pub cross_q: ProjLayer,
    pub cross_k: ProjLayer,
    pub cross_v: ProjLayer,
}

impl TransformerParams {
    fn init<R: Rng>(d: usize, rng: &mut R) -> Self {
        TransformerParams {
            self_q: ProjLayer::init(d, rng),
            self_k: ProjLayer::init(d, rng),
            self_v: ProjLayer::init(d, rng),
            cross_q: ProjLayer::init(d, rng),
            cross_k: ProjLayer::init(d, rng),
            cross_v: ProjLayer::init(d, rng),
        }
    }
}

/// Pose head shared by the two parts: one hidden layer, then a quaternion
/// branch (normalized in the forward pass) and a translation branch.
#[derive(Debug, Clone)]
pub struct RegressorParams {
    pub shared: LinearParams,
    pub shared_bn: BnLayer,
    pub quat: LinearParams,
    pub trans: LinearParams,
}

impl RegressorParams {
    fn init<R: Rng>(d: usize, hidden: usize, rng: &mut R) -> Self {
        let mut quat = LinearParams::new(hidden, 4, 0.1 * (1.0 / hidden as f64).sqrt(), rng);
        // Bias the quaternion branch toward the identity rotation so the
        // normalized output starts well away from the zero vector.
        quat.b.set(0, 0, 1.0);
        RegressorParams {
            shared: LinearParams::kaiming(2 * d, hidden, rng),
            shared_bn: BnLayer::identity(hidden),
            quat,
            trans: LinearParams::new(hidden, 3, 0.1 * (1.0 / hidden as f64).sqrt(), rng),
        }
    }
}

/// Shape-classifier head: its own graph encoder, global pooling, and a single
/// linear score unit squashed by a sigmoid in the forward pass.
#[derive(Debug, Clone)]
pub struct DiscriminatorParams {
    pub dgcnn: DgcnnParams,
    pub fc: LinearParams,
}

/// One layer of the implicit-surface head.
#[derive(Debug, Clone)]
pub struct SdfLayer {
    pub lin: LinearParams,
    /// All layers except the final linear one carry batch norm.
    pub bn: Option<BnLayer>,
}

/// Implicit-surface decoder conditioned on a global shape feature.
#[derive(Debug, Clone)]
pub struct SdfParams {
    pub layers: Vec<SdfLayer>,
}

impl SdfParams {
    /// Eight layers; layer 5 (index 4) re-reads the original input alongside
    /// the previous activation, and the final layer is a plain linear map.
    fn init<R: Rng>(d: usize, hidden: usize, rng: &mut R) -> Self {
        let input = d + 3;
        let mut layers = Vec::with_capacity(8);
        for i in 0..8 {
            let fan_in = match i {
                0 => input,
                4 => hidden + input,
                _ => hidden,
            };
            let fan_out = if i == 7 { 1 } else { hidden };
            let bn = if i == 7 { None } else { Some(BnLayer::identity(fan_out)) };
            layers.push(SdfLayer {
                lin: LinearParams::kaiming(fan_in, fan_out, rng),
                bn,
            });
        }
        SdfParams { layers }
    }
}

/// Every learnable tensor and normalization buffer in the network.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub encoder: DgcnnParams,
    pub transformer: TransformerParams,
    pub regressor: RegressorParams,
    pub discriminator: DiscriminatorParams,
    pub sdf: SdfParams,
}

impl ModelParams {
    /// Deterministic initialization from a seed.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        config.validate();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.feature_dim();
        ModelParams {
            config: config.clone(),
            encoder: DgcnnParams::init(&config.encoder.channels, &mut rng),
            transformer: TransformerParams::init(d, &mut rng),
            regressor: RegressorParams::init(d, config.regressor_hidden, &mut rng),
            discriminator: DiscriminatorParams {
                dgcnn: DgcnnParams::init(&config.encoder.channels, &mut rng),
                fc: LinearParams::xavier(d, 1, &mut rng),
            },
            sdf: SdfParams::init(d, config.sdf_hidden, &mut rng),
        }
    }

    /// Visits every learnable tensor in a fixed, documented order.
    pub fn visit_learnable(&self, f: &mut dyn FnMut(&str, &Tensor)) {
        let visit_dgcnn = |prefix: &str, net: &DgcnnParams, f: &mut dyn FnMut(&str, &Tensor)| {
            for (i, layer) in net.layers.iter().enumerate() {
                f(&format!("{prefix}.layer{i}.w"), &layer.lin.w);
                f(&format!("{prefix}.layer{i}.b"), &layer.lin.b);
                f(&format!("{prefix}.layer{i}.bn.gamma"), &layer.bn.gamma);
                f(&format!("{prefix}.layer{i}.bn.beta"), &layer.bn.beta);
            }
        };
        let visit_proj = |prefix: &str, p: &ProjLayer, f: &mut dyn FnMut(&str, &Tensor)| {
            f(&format!("{prefix}.w"), &p.lin.w);
            f(&format!("{prefix}.b"), &p.lin.b);
            f(&format!("{prefix}.ln.gamma"), &p.ln.gamma);
            f(&format!("{prefix}.ln.beta"), &p.ln.beta);
        };
        visit_dgcnn("encoder", &self.encoder, f);
        let t = &self.transformer;
        visit_proj("transformer.self_q", &t.self_q, f);
        visit_proj("transformer.self_k", &t.self_k, f);
        visit_proj("transformer.self_v", &t.self_v, f);
        visit_proj("transformer.cross_q", &t.cross_q, f);
        visit_proj("transformer.cross_k", &t.cross_k, f);
        visit_proj("transformer.cross_v", &t.cross_v, f);
        let r = &self.regressor;
        f("regressor.shared.w", &r.shared.w);
        f("regressor.shared.b", &r.shared.b);
        f("regressor.shared.bn.gamma", &r.shared_bn.gamma);
        f("regressor.shared.bn.beta", &r.shared_bn.beta);
        f("regressor.quat.w", &r.quat.w);
        f("regressor.quat.b", &r.quat.b);
        f("regressor.trans.w", &r.trans.w);
        f("regressor.trans.b", &r.trans.b);
        visit_dgcnn("discriminator", &self.discriminator.dgcnn, f);
        f("discriminator.fc.w", &self.discriminator.fc.w);
        f("discriminator.fc.b", &self.discriminator.fc.b);
        for (i, layer) in self.sdf.layers.iter().enumerate() {
            f(&format!("sdf.layer{i}.w"), &layer.lin.w);
            f(&format!("sdf.layer{i}.b"), &layer.lin.b);
            if let Some(bn) = &layer.bn {
                f(&format!("sdf.layer{i}.bn.gamma"), &bn.gamma);
                f(&format!("sdf.layer{i}.bn.beta"), &bn.beta);
            }
        }
    }

    /// Mutable variant of [`visit_learnable`](Self::visit_learnable); the
    /// traversal order is identical (guarded by a unit test).
    pub fn visit_learnable_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor)) {
        fn visit_dgcnn(prefix: &str, net: &mut DgcnnParams, f: &mut dyn FnMut(&str, &mut Tensor)) {
            for (i, layer) in net.layers.iter_mut().enumerate() {
                f(&format!("{prefix}.layer{i}.w"), &mut layer.lin.w);
                f(&format!("{prefix}.layer{i}.b"), &mut layer.lin.b);
                f(&format!("{prefix}.layer{i}.bn.gamma"), &mut layer.bn.gamma);
                f(&format!("{prefix}.layer{i}.bn.beta"), &mut layer.bn.beta);
            }
        }
        fn visit_proj(prefix: &str, p: &mut ProjLayer, f: &mut dyn FnMut(&str, &mut Tensor)) {
            f(&format!("{prefix}.w"), &mut p.lin.w);
            f(&format!("{prefix}.b"), &mut p.lin.b);
            f(&format!("{prefix}.ln.gamma"), &mut p.ln.gamma);
            f(&format!("{prefix}.ln.beta"), &mut p.ln.beta);
        }
        visit_dgcnn("encoder", &mut self.encoder, f);
        let t = &mut self.transformer;
        visit_proj("transformer.self_q", &mut t.self_q, f);
        visit_proj("transformer.self_k", &mut t.self_k, f);
        visit_proj("transformer.self_v", &mut t.self_v, f);
        visit_proj("transformer.cross_q", &mut t.cross_q, f);
        visit_proj("transformer.cross_k", &mut t.cross_k, f);
        visit_proj("transformer.cross_v", &mut t.cross_v, f);
        let r = &mut self.regressor;
        f("regressor.shared.w", &mut r.shared.w);
        f("regressor.shared.b", &mut r.shared.b);
        f("regressor.shared.bn.gamma", &mut r.shared_bn.gamma);
        f("regressor.shared.bn.beta", &mut r.shared_bn.beta);
        f("regressor.quat.w", &mut r.quat.w);
        f("regressor.quat.b", &mut r.quat.b);
        f("regressor.trans.w", &mut r.trans.w);
        f("regressor.trans.b", &mut r.trans.b);
        visit_dgcnn("discriminator", &mut self.discriminator.dgcnn, f);
        f("discriminator.fc.w", &mut self.discriminator.fc.w);
        f("discriminator.fc.b", &mut self.discriminator.fc.b);
        for (i, layer) in self.sdf.layers.iter_mut().enumerate() {
            f(&format!("sdf.layer{i}.w"), &mut layer.lin.w);
            f(&format!("sdf.layer{i}.b"), &mut layer.lin.b);
            if let Some(bn) = &mut layer.bn {
                f(&format!("sdf.layer{i}.bn.gamma"), &mut bn.gamma);
                f(&format!("sdf.layer{i}.bn.beta"), &mut bn.beta);
            }
        }
    }

    /// Names of the learnable tensors in traversal order.
    pub fn learnable_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.visit_learnable(&mut |name, _| names.push(name.to_string()));
        names
    }

    /// Copies of the learnable tensors in traversal order.
    pub fn collect_learnable(&self) -> Vec<Tensor> {
        let mut out = Vec::new();
        self.visit_learnable(&mut |_, t| out.push(t.clone()));
        out
    }

    /// Writes tensors produced by an optimizer back into the network.
    pub fn assign_learnable(&mut self, values: &[Tensor]) {
        let mut it = values.iter();
        self.visit_learnable_mut(&mut |name, t| {
            let v = it.next().unwrap_or_else(|| panic!("missing value for {name}"));
            assert_eq!(v.shape(), t.shape(), "shape mismatch for {name}");
            *t = v.clone();
        });
        assert!(it.next().is_none(), "more values than learnable tensors");
    }

    /// Total number of learnable scalars.
    pub fn parameter_count(&self) -> usize {
        let mut n = 0;
        self.visit_learnable(&mut |_, t| n += t.len());
        n
    }

    /// Visits every batch-norm layer in a fixed order.
    pub fn visit_bn(&self, f: &mut dyn FnMut(&str, &BnLayer)) {
        for (i, layer) in self.encoder.layers.iter().enumerate() {
            f(&format!("encoder.layer{i}"), &layer.bn);
        }
        f("regressor.shared", &self.regressor.shared_bn);
        for (i, layer) in self.discriminator.dgcnn.layers.iter().enumerate() {
            f(&format!("discriminator.layer{i}"), &layer.bn);
        }
        for (i, layer) in self.sdf.layers.iter().enumerate() {
            if let Some(bn) = &layer.bn {
                f(&format!("sdf.layer{i}"), bn);
            }
        }
    }

    /// Mutable variant of [`visit_bn`](Self::visit_bn), same order.
    pub fn visit_bn_mut(&mut self, f: &mut dyn FnMut(&str, &mut BnLayer)) {
        for (i, layer) in self.encoder.layers.iter_mut().enumerate() {
            f(&format!("encoder.layer{i}"), &mut layer.bn);
        }
        f("regressor.shared", &mut self.regressor.shared_bn);
        for (i, layer) in self.discriminator.dgcnn.layers.iter_mut().enumerate() {
            f(&format!("discriminator.layer{i}"), &mut layer.bn);
        }
        for (i, layer) in self.sdf.layers.iter_mut().enumerate() {
            if let Some(bn) = &mut layer.bn {
                f(&format!("sdf.layer{i}"), bn);
            }
        }
    }

    /// Looks a batch-norm layer up by the path used in [`BnUpdate`].
    pub fn bn_layer_mut(&mut self, path: &str) -> &mut BnLayer {
        if let Some(rest) = path.strip_prefix("encoder.layer") {
            if let Ok(i) = rest.parse::<usize>() {
                if i < self.encoder.layers.len() {
                    return &mut self.encoder.layers[i].bn;
                }
            }
        }
        if path == "regressor.shared" {
            return &mut self.regressor.shared_bn;
        }
        if let Some(rest) = path.strip_prefix("discriminator.layer") {
            if let Ok(i) = rest.parse::<usize>() {
                if i < self.discriminator.dgcnn.layers.len() {
                    return &mut self.discriminator.dgcnn.layers[i].bn;
                }
            }
        }
        if let Some(rest) = path.strip_prefix("sdf.layer") {
            if let Ok(i) = rest.parse::<usize>() {
                if i < self.sdf.layers.len() {
                    if let Some(bn) = self.sdf.layers[i].bn.as_mut() {
                        return bn;
                    }
                }
            }
        }
        panic!("unknown batch-norm layer {path}");
    }

    /// Applies the batch statistics recorded during a training forward pass to
    /// the running estimates, in recording order.
    pub fn apply_bn_updates(&mut self, updates: &[BnUpdate]) {
        for u in updates {
            self.bn_layer_mut(&u.path).absorb(&u.stats);
        }
    }

    /// Serializes everything (learnable tensors plus running statistics) into
    /// a named map, suitable for checkpointing.
    pub fn to_tensor_map(&self) -> BTreeMap<String, Tensor> {
        let mut map = BTreeMap::new();
        self.visit_learnable(&mut |name, t| {
            let prev = map.insert(name.to_string(), t.clone());
            assert!(prev.is_none(), "duplicate tensor name {name}");
        });
        let mut bn_entries: Vec<(String, Tensor)> = Vec::new();
        self.visit_bn(&mut |name, bn| {
            bn_entries.push((
                format!("{name}.bn.running_mean"),
                Tensor::from_vec(1, bn.running_mean.len(), bn.running_mean.clone()),
            ));
            bn_entries.push((
                format!("{name}.bn.running_var"),
                Tensor::from_vec(1, bn.running_var.len(), bn.running_var.clone()),
            ));
        });
        for (name, t) in bn_entries {
            let prev = map.insert(name.clone(), t);
            assert!(prev.is_none(), "duplicate tensor name {name}");
        }
        map
    }

    /// Rebuilds parameters from a serialized map. The map must contain exactly
    /// the tensors produced by [`to_tensor_map`](Self::to_tensor_map) for the
    /// same configuration.
    pub fn from_tensor_map(config: &ModelConfig, map: &BTreeMap<String, Tensor>) -> Self {
        let mut params = ModelParams::init(config, 0);
        let mut used = 0usize;
        params.visit_learnable_mut(&mut |name, t| {
            let v = map
                .get(name)
                .unwrap_or_else(|| panic!("checkpoint is missing tensor {name}"));
            assert_eq!(v.shape(), t.shape(), "shape mismatch for {name}");
            *t = v.clone();
            used += 1;
        });
        params.visit_bn_mut(&mut |name, bn| {
            let mean_name = format!("{name}.bn.running_mean");
            let var_name = format!("{name}.bn.running_var");
            let mean = map
                .get(&mean_name)
                .unwrap_or_else(|| panic!("checkpoint is missing tensor {mean_name}"));
            let var = map
                .get(&var_name)
                .unwrap_or_else(|| panic!("checkpoint is missing tensor {var_name}"));
            assert_eq!(mean.len(), bn.running_mean.len(), "shape mismatch for {mean_name}");
            assert_eq!(var.len(), bn.running_var.len(), "shape mismatch for {var_name}");
            bn.running_mean = mean.data().to_vec();
            bn.running_var = var.data().to_vec();
            used += 2;
        });
        assert_eq!(used, map.len(), "checkpoint contains unexpected tensors");
        params
    }
}

/// Batch statistics observed at one batch-norm site during a training forward
/// pass, tagged with the layer they belong to.
#[derive(Debug, Clone)]
pub struct BnUpdate {
    pub path: String,
    pub stats: BatchStats,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::reduced_config;

    #[test]
    fn initialization_is_deterministic_in_the_seed() {
        let cfg = reduced_config();
        let a = ModelParams::init(&cfg, 42).to_tensor_map();
        let b = ModelParams::init(&cfg, 42).to_tensor_map();
        let c = ModelParams::init(&cfg, 43).to_tensor_map();
        assert_eq!(a.len(), b.len());
        let mut any_diff = false;
        for (name, ta) in &a {
            let tb = &b[name];
            for (x, y) in ta.data().iter().zip(tb.data().iter()) {
                assert_eq!(x.to_bits(), y.to_bits(), "{name}");
            }
            let tc = &c[name];
            if ta.data().iter().zip(tc.data().iter()).any(|(x, y)| x != y) {
                any_diff = true;
            }
        }
        assert!(any_diff, "different seeds must give different weights");
    }

    #[test]
    fn immutable_and_mutable_traversals_agree() {
        let cfg = reduced_config();
        let mut params = ModelParams::init(&cfg, 0);
        let names = params.learnable_names();
        let mut mut_names = Vec::new();
        params.visit_learnable_mut(&mut |name, _| mut_names.push(name.to_string()));
        assert_eq!(names, mut_names);
        let unique: std::collections::BTreeSet<_> = names.iter().collect();
        assert_eq!(unique.len(), names.len(), "names must be unique");
    }

    #[test]
    fn assign_round_trips_collect() {
        let cfg = reduced_config();
        let src = ModelParams::init(&cfg, 7);
        let mut dst = ModelParams::init(&cfg, 8);
        dst.assign_learnable(&src.collect_learnable());
        let a = src.collect_learnable();
        let b = dst.collect_learnable();
        for (x, y) in a.iter().zip(b.iter()) {
            for (u, v) in x.data().iter().zip(y.data().iter()) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
    }

    #[test]
    fn tensor_map_round_trips_including_running_stats() {
        let cfg = reduced_config();
        let mut params = ModelParams::init(&cfg, 3);
        params.apply_bn_updates(&[BnUpdate {
            path: "encoder.layer0".to_string(),
            stats: BatchStats {
                mean: vec![0.5; cfg.encoder.channels[0]],
                var: vec![2.0; cfg.encoder.channels[0]],
            },
        }]);
        let map = params.to_tensor_map();
        let back = ModelParams::from_tensor_map(&cfg, &map);
        let reference = params.to_tensor_map();
        let restored = back.to_tensor_map();
        assert_eq!(reference.len(), restored.len());
        for (name, t) in &reference {
            for (x, y) in t.data().iter().zip(restored[name].data().iter()) {
                assert_eq!(x.to_bits(), y.to_bits(), "{name}");
            }
        }
    }

    #[test]
    fn bn_updates_move_running_statistics() {
        let cfg = reduced_config();
        let mut params = ModelParams::init(&cfg, 0);
        let width = cfg.encoder.channels[0];
        params.apply_bn_updates(&[BnUpdate {
            path: "encoder.layer0".to_string(),
            stats: BatchStats {
                mean: vec![1.0; width],
                var: vec![3.0; width],
            },
        }]);
        let bn = &params.encoder.layers[0].bn;
        // Running estimates start at mean 0, var 1; one update with momentum
        // 0.1 lands at 0.1 and 1.2 respectively.
        assert!((bn.running_mean[0] - 0.1).abs() < 1e-15);
        assert!((bn.running_var[0] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn parameter_count_matches_manual_tally() {
        let cfg = reduced_config();
        let params = ModelParams::init(&cfg, 0);
        let mut total = 0usize;
        params.visit_learnable(&mut |_, t| total += t.len());
        assert_eq!(params.parameter_count(), total);
        assert!(total > 0);
    }

    #[test]
    #[should_panic(expected = "unknown batch-norm layer")]
    fn unknown_bn_path_panics() {
        let cfg = reduced_config();
        let mut params = ModelParams::init(&cfg, 0);
        params.bn_layer_mut("nope");
    }
}
