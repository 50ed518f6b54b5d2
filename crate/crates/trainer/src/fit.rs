//! The outer training loop: alternating phases, tracing, validation, and
//! checkpointing.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use autodiff_tensor::Tape;
use nsm_model::{forward_mating, pose_loss, Mode, ModelParams, PairGroundTruth, TapeModel};

use crate::config::TrainConfig;
use crate::data::{inverse_rotation_tensor, rotate_rows, sample_indices, PairSample, TrainData};
use crate::state::TrainState;
use crate::steps::{train_discriminator_step, train_generator_step};
use crate::TrainError;

/// One line of the training trace (one alternation step).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub l_pose: f64,
    pub l_g: f64,
    pub l_adv: f64,
    pub l_sdf: f64,
    pub val: Option<f64>,
}

/// Summary of one `fit` call.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub trace: Vec<TraceRow>,
    pub best_val: Option<f64>,
    pub completed_steps: usize,
}

/// Runs alternation steps until `epochs × ⌈n / batch_size⌉` are complete,
/// continuing from `state.completed_steps` (so a reloaded checkpoint resumes
/// exactly where it stopped). Each alternation step runs
/// `gen_steps_per_disc` pose-predictor updates followed by one discriminator
/// update, each on a freshly drawn batch (with replacement).
///
/// When `validate` is given it runs every `val_every` steps; an improved
/// value checkpoints to `<out>/best`. The final state is written to
/// `<out>/last` together with `<out>/trace.csv`.
pub fn fit(
    state: &mut TrainState,
    data: &TrainData,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
    mut validate: Option<&mut dyn FnMut(&ModelParams) -> f64>,
) -> Result<FitReport, TrainError> {
    cfg.validate()?;
    let steps_per_epoch = data.len().div_ceil(cfg.batch_size);
    let total_steps = cfg.epochs * steps_per_epoch;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }

    let mut trace = Vec::new();
    while state.completed_steps < total_steps {
        let mut losses = None;
        for _ in 0..cfg.gen_steps_per_disc {
            let batch = draw_batch(state, data, cfg);
            losses = Some(train_generator_step(state, cfg, &batch)?);
        }
        let losses = losses.expect("gen_steps_per_disc is validated positive");
        let batch = draw_batch(state, data, cfg);
        let disc = train_discriminator_step(state, cfg, &batch)?;
        state.completed_steps += 1;

        let mut val_value = None;
        if let Some(cb) = validate.as_mut() {
            if cfg.val_every > 0 && state.completed_steps % cfg.val_every == 0 {
                let v = cb(&state.params);
                val_value = Some(v);
                if state.best_val.is_none_or(|best| v < best) {
                    state.best_val = Some(v);
                    if let Some(dir) = out_dir {
                        state.save(&dir.join("best"), cfg)?;
                    }
                }
            }
        }
        trace.push(TraceRow {
            step: state.completed_steps,
            l_pose: losses.l_pose,
            l_g: losses.l_g,
            l_adv: disc.l_adv,
            l_sdf: losses.l_sdf,
            val: val_value,
        });
    }

    if let Some(dir) = out_dir {
        state.save(&dir.join("last"), cfg)?;
        write_trace_csv(&dir.join("trace.csv"), &trace)?;
    }
    Ok(FitReport { trace, best_val: state.best_val, completed_steps: state.completed_steps })
}

fn draw_batch<'d>(
    state: &mut TrainState,
    data: &'d TrainData,
    cfg: &TrainConfig,
) -> Vec<&'d PairSample> {
    let idx = sample_indices(&mut state.rng, data.len(), cfg.batch_size);
    idx.into_iter().map(|i| &data.samples[i]).collect()
}

/// Writes the trace as CSV (`step,L_pose,L_G,L_adv,L_SDF,val`); the last
/// column is empty on steps without validation.
pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<(), TrainError> {
    let mut out = String::from("step,L_pose,L_G,L_adv,L_SDF,val\n");
    for row in trace {
        let val = row.val.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.step, row.l_pose, row.l_g, row.l_adv, row.l_sdf, val
        ));
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Deterministic validation value: mean supervised pose loss over `samples`,
/// evaluated with running statistics and without consuming any randomness.
/// Parts keep their frozen orientation when set and are fed as stored
/// otherwise.
pub fn pose_validation_metric(params: &ModelParams, samples: &[PairSample]) -> f64 {
    assert!(!samples.is_empty(), "validation set must not be empty");
    let mut total = 0.0;
    for s in samples {
        let quat_a = s.frozen_quat_a.unwrap_or([1.0, 0.0, 0.0, 0.0]);
        let quat_b = s.frozen_quat_b.unwrap_or([1.0, 0.0, 0.0, 0.0]);
        let input_a = rotate_rows(&s.points_a, quat_a);
        let input_b = rotate_rows(&s.points_b, quat_b);
        let gt = PairGroundTruth {
            rot_a: inverse_rotation_tensor(quat_a),
            trans_a: autodiff_tensor::Tensor::from_vec(1, 3, s.centroid_a.to_vec()),
            rot_b: inverse_rotation_tensor(quat_b),
            trans_b: autodiff_tensor::Tensor::from_vec(1, 3, s.centroid_b.to_vec()),
        };
        let tape = Tape::new();
        let model = TapeModel::new(&tape, params);
        let mut updates = Vec::new();
        let out = forward_mating(&tape, &model, &input_a, &input_b, Mode::Eval, &mut updates);
        total += pose_loss(&tape, &out.pose_a, &out.pose_b, &gt).value().scalar_value();
    }
    total / samples.len() as f64
}
