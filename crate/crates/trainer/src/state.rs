//! Mutable training state: parameters, the two optimizers, and the step RNG.
//! The whole state round-trips through a checkpoint directory bit for bit,
//! which is what makes training resumable.

use std::collections::BTreeMap;
use std::path::Path;

use autodiff_tensor::{load_checkpoint, save_checkpoint, AdamParams, AdamState, Tensor};
use nsm_model::{is_discriminator_param, ModelConfig, ModelParams};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::TrainError;

/// Everything that evolves during training.
pub struct TrainState {
    pub params: ModelParams,
    pub gen_opt: AdamState,
    pub disc_opt: AdamState,
    pub rng: ChaCha8Rng,
    /// Alternation steps completed so far.
    pub completed_steps: usize,
    /// Best validation value seen (lower is better).
    pub best_val: Option<f64>,
    seed: u64,
}

/// Splits the learnable tensors into (generator, discriminator) subsets,
/// preserving traversal order inside each subset.
pub fn split_subsets(names: &[String], tensors: Vec<Tensor>) -> (Vec<Tensor>, Vec<Tensor>) {
    let mut gen = Vec::new();
    let mut disc = Vec::new();
    for (name, t) in names.iter().zip(tensors.into_iter()) {
        if is_discriminator_param(name) {
            disc.push(t);
        } else {
            gen.push(t);
        }
    }
    (gen, disc)
}

impl TrainState {
    /// Fresh state: seeded parameters, zeroed optimizer moments, seeded RNG.
    pub fn new(model_cfg: &ModelConfig, cfg: &TrainConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        let params = ModelParams::init(model_cfg, cfg.seed);
        let hyper = AdamParams {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            ..AdamParams::default()
        };
        let names = params.learnable_names();
        let (gen, disc) = split_subsets(&names, params.collect_learnable());
        Ok(TrainState {
            gen_opt: AdamState::new(&gen, hyper.clone()),
            disc_opt: AdamState::new(&disc, hyper),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            completed_steps: 0,
            best_val: None,
            seed: cfg.seed,
            params,
        })
    }

    /// Writes parameters, optimizer moments, RNG position onto disk.
    pub fn save(&self, dir: &Path, cfg: &TrainConfig) -> Result<(), TrainError> {
        let mut tensors = self.params.to_tensor_map();
        let push_moments = |prefix: &str, opt: &AdamState, map: &mut BTreeMap<String, Tensor>| {
            let (m, v) = opt.moments();
            for (i, t) in m.iter().enumerate() {
                map.insert(format!("opt.{prefix}.m.{i:04}"), t.clone());
            }
            for (i, t) in v.iter().enumerate() {
                map.insert(format!("opt.{prefix}.v.{i:04}"), t.clone());
            }
        };
        push_moments("gen", &self.gen_opt, &mut tensors);
        push_moments("disc", &self.disc_opt, &mut tensors);
        let extra = serde_json::json!({
            "train_config": cfg,
            "model_config": self.params.config,
            "completed_steps": self.completed_steps,
            "best_val": self.best_val,
            "rng_seed": self.seed,
            "rng_word_pos": self.rng.get_word_pos().to_string(),
            "gen_opt_steps": self.gen_opt.step_count(),
            "disc_opt_steps": self.disc_opt.step_count(),
        });
        save_checkpoint(dir, &tensors, &extra)?;
        Ok(())
    }

    /// Restores a state saved by [`save`](Self::save) together with the
    /// training configuration recorded alongside it.
    pub fn load(dir: &Path) -> Result<(Self, TrainConfig), TrainError> {
        let (tensors, extra) = load_checkpoint(dir)?;
        let cfg: TrainConfig = serde_json::from_value(
            extra.get("train_config").ok_or(TrainError::MissingField("train_config"))?.clone(),
        )?;
        let model_cfg: ModelConfig = serde_json::from_value(
            extra.get("model_config").ok_or(TrainError::MissingField("model_config"))?.clone(),
        )?;
        let completed_steps = extra
            .get("completed_steps")
            .and_then(|v| v.as_u64())
            .ok_or(TrainError::MissingField("completed_steps"))? as usize;
        let best_val = match extra.get("best_val") {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(v.as_f64().ok_or(TrainError::MissingField("best_val"))?),
        };
        let seed = extra
            .get("rng_seed")
            .and_then(|v| v.as_u64())
            .ok_or(TrainError::MissingField("rng_seed"))?;
        let word_pos: u128 = extra
            .get("rng_word_pos")
            .and_then(|v| v.as_str())
            .ok_or(TrainError::MissingField("rng_word_pos"))?
            .parse()
            .map_err(|_| TrainError::MissingField("rng_word_pos"))?;
        let gen_steps = extra
            .get("gen_opt_steps")
            .and_then(|v| v.as_u64())
            .ok_or(TrainError::MissingField("gen_opt_steps"))?;
        let disc_steps = extra
            .get("disc_opt_steps")
            .and_then(|v| v.as_u64())
            .ok_or(TrainError::MissingField("disc_opt_steps"))?;

        let model_map: BTreeMap<String, Tensor> = tensors
            .iter()
            .filter(|(name, _)| !name.starts_with("opt."))
            .map(|(name, t)| (name.clone(), t.clone()))
            .collect();
        let params = ModelParams::from_tensor_map(&model_cfg, &model_map);

        let collect_moments = |prefix: &str| -> (Vec<Tensor>, Vec<Tensor>) {
            let mut m = Vec::new();
            let mut v = Vec::new();
            let mut i = 0usize;
            loop {
                let mk = format!("opt.{prefix}.m.{i:04}");
                let vk = format!("opt.{prefix}.v.{i:04}");
                match (tensors.get(&mk), tensors.get(&vk)) {
                    (Some(a), Some(b)) => {
                        m.push(a.clone());
                        v.push(b.clone());
                    }
                    _ => break,
                }
                i += 1;
            }
            (m, v)
        };
        let hyper = AdamParams {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            ..AdamParams::default()
        };
        let (gm, gv) = collect_moments("gen");
        let (dm, dv) = collect_moments("disc");
        let gen_opt = AdamState::from_parts(hyper.clone(), gm, gv, gen_steps);
        let disc_opt = AdamState::from_parts(hyper, dm, dv, disc_steps);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(word_pos);

        Ok((
            TrainState {
                params,
                gen_opt,
                disc_opt,
                rng,
                completed_steps,
                best_val,
                seed,
            },
            cfg,
        ))
    }
}

/// Order-sensitive checksum over the bit patterns of a parameter subset
/// (learnable tensors plus batch-norm running statistics). Used to assert
/// that a training phase left the other phase's parameters untouched.
pub fn subset_checksum(params: &ModelParams, discriminator: bool) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    params.visit_learnable(&mut |name, t| {
        if is_discriminator_param(name) == discriminator {
            name.hash(&mut hasher);
            for v in t.data() {
                v.to_bits().hash(&mut hasher);
            }
        }
    });
    params.visit_bn(&mut |name, bn| {
        if name.starts_with("discriminator") == discriminator {
            name.hash(&mut hasher);
            for v in bn.running_mean.iter().chain(bn.running_var.iter()) {
                v.to_bits().hash(&mut hasher);
            }
        }
    });
    hasher.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nsm_model::{EncoderConfig, ModelConfig};
    use tempfile::tempdir;

    fn tiny_model() -> ModelConfig {
        ModelConfig {
            encoder: EncoderConfig { k: 4, channels: vec![8, 16] },
            regressor_hidden: 16,
            sdf_hidden: 16,
        }
    }

    #[test]
    fn state_round_trips_through_a_checkpoint() {
        let cfg = TrainConfig { seed: 5, ..TrainConfig::default() };
        let mut state = TrainState::new(&tiny_model(), &cfg).unwrap();
        // Advance the RNG and step counters so the round trip is non-trivial.
        use rand::Rng;
        for _ in 0..13 {
            let _: f64 = state.rng.random();
        }
        state.completed_steps = 7;
        state.best_val = Some(0.25);

        let dir = tempdir().unwrap();
        state.save(dir.path(), &cfg).unwrap();
        let (mut restored, cfg_back) = TrainState::load(dir.path()).unwrap();
        assert_eq!(cfg_back, cfg);
        assert_eq!(restored.completed_steps, 7);
        assert_eq!(restored.best_val, Some(0.25));
        assert_eq!(restored.gen_opt.step_count(), state.gen_opt.step_count());

        // Same parameter bits.
        let a = state.params.to_tensor_map();
        let b = restored.params.to_tensor_map();
        assert_eq!(a.len(), b.len());
        for (name, t) in &a {
            for (x, y) in t.data().iter().zip(b[name].data().iter()) {
                assert_eq!(x.to_bits(), y.to_bits(), "{name}");
            }
        }
        // Same RNG continuation.
        let next_a: u64 = state.rng.random();
        let next_b: u64 = restored.rng.random();
        assert_eq!(next_a, next_b);
    }

    #[test]
    fn checksums_distinguish_the_two_subsets() {
        let cfg = TrainConfig::default();
        let state = TrainState::new(&tiny_model(), &cfg).unwrap();
        let gen_sum = subset_checksum(&state.params, false);
        let disc_sum = subset_checksum(&state.params, true);
        assert_ne!(gen_sum, disc_sum);

        let mut mutated = state.params.clone();
        mutated.visit_learnable_mut(&mut |name, t| {
            if name == "discriminator.fc.b" {
                t.set(0, 0, 42.0);
            }
        });
        assert_eq!(subset_checksum(&mutated, false), gen_sum);
        assert_ne!(subset_checksum(&mutated, true), disc_sum);
    }
}
