//! Training-loop configuration.

use serde::{Deserialize, Serialize};

/// How input orientations are chosen during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoseMode {
    /// Draw fresh random rotations for both parts at every step (the default;
    /// the generator never sees the same orientation twice).
    Resample,
    /// Assign each part one fixed random rotation when the dataset is
    /// prepared and keep it for the whole run. Used by small overfitting
    /// experiments where the training instances must stay fixed.
    FrozenPerPair,
}

/// Hyper-parameters of the two-phase training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Passes over the training set; each pass performs
    /// `ceil(n_pairs / batch_size)` alternation steps.
    pub epochs: usize,
    /// Pairs per optimization step.
    pub batch_size: usize,
    /// ADAM learning rate.
    pub lr: f64,
    /// ADAM weight decay.
    pub weight_decay: f64,
    /// Weight of the supervised pose term (1 by default; 0 ablates it).
    pub lambda_pose: f64,
    /// Weight of the adversarial term seen by the pose predictor.
    pub lambda_g: f64,
    /// Weight of the implicit-surface term.
    pub lambda_sdf: f64,
    /// Signed-distance queries sampled per part per step.
    pub sdf_queries: usize,
    /// Seed of the run; the whole loss trace is a pure function of
    /// (dataset, config, seed).
    pub seed: u64,
    /// Generator steps per discriminator step.
    pub gen_steps_per_disc: usize,
    /// Input-orientation policy.
    pub pose_mode: PoseMode,
    /// Points kept per part cloud (subsampled once when samples are built).
    pub points_per_part: usize,
    /// Points subsampled from each assembled cloud before it is scored.
    pub disc_points: usize,
    /// Run validation every this many alternation steps (0 disables).
    pub val_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1,
            batch_size: 4,
            lr: 1e-3,
            weight_decay: 1e-6,
            lambda_pose: 1.0,
            lambda_g: 1.0,
            lambda_sdf: 1.0,
            sdf_queries: 512,
            seed: 0,
            gen_steps_per_disc: 1,
            pose_mode: PoseMode::Resample,
            points_per_part: 256,
            disc_points: 256,
            val_every: 50,
        }
    }
}

impl TrainConfig {
    /// Panics on non-positive counts or non-finite weights.
    pub fn validate(&self) -> Result<(), crate::TrainError> {
        let positive = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("sdf_queries", self.sdf_queries),
            ("gen_steps_per_disc", self.gen_steps_per_disc),
            ("points_per_part", self.points_per_part),
            ("disc_points", self.disc_points),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(crate::TrainError::BadSetup(format!("{name} must be positive")));
            }
        }
        let finite = [
            ("lr", self.lr),
            ("weight_decay", self.weight_decay),
            ("lambda_pose", self.lambda_pose),
            ("lambda_g", self.lambda_g),
            ("lambda_sdf", self.lambda_sdf),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(crate::TrainError::BadSetup(format!("{name} must be finite")));
            }
        }
        if self.lr <= 0.0 {
            return Err(crate::TrainError::BadSetup("lr must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.batch_size, 4);
        assert_eq!(cfg.lr, 1e-3);
        assert_eq!(cfg.weight_decay, 1e-6);
        assert_eq!(cfg.lambda_pose, 1.0);
        assert_eq!(cfg.lambda_g, 1.0);
        assert_eq!(cfg.lambda_sdf, 1.0);
        assert_eq!(cfg.sdf_queries, 512);
        assert_eq!(cfg.gen_steps_per_disc, 1);
        assert_eq!(cfg.pose_mode, PoseMode::Resample);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn partial_json_fills_in_defaults() {
        let cfg: TrainConfig =
            serde_json::from_str(r#"{"epochs": 12, "seed": 3, "lambda_pose": 0.0}"#).unwrap();
        assert_eq!(cfg.epochs, 12);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.lambda_pose, 0.0);
        assert_eq!(cfg.batch_size, 4);
    }

    #[test]
    fn zero_counts_are_rejected() {
        let cfg = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig { lr: f64::NAN, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
