//! The two alternating optimization phases.

use autodiff_tensor::{Tape, Tensor, Var};
use nsm_model::{
    discriminate, discriminator_loss, forward_mating, generator_loss, is_discriminator_param,
    pose_loss, sdf_head, sdf_loss, Mode, TapeModel,
};
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::data::{prepare_pair, sample_indices, sample_uniform_quat, rotate_rows, PairSample};
use crate::state::{subset_checksum, TrainState};
use crate::TrainError;

/// Loss values observed during one generator step.
#[derive(Debug, Clone, Copy)]
pub struct StepLosses {
    pub l_pose: f64,
    pub l_g: f64,
    pub l_sdf: f64,
    pub total: f64,
}

/// Result of one discriminator step.
#[derive(Debug, Clone)]
pub struct DiscStepOutcome {
    pub l_adv: f64,
    pub pred_scores: Vec<f64>,
    pub real_scores: Vec<f64>,
}

fn finite_or_diverged(value: f64, step: usize, what: &str) -> Result<f64, TrainError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(TrainError::Diverged { step, detail: format!("{what} became {value}") })
    }
}

/// Rejects non-finite parameters up front so divergence surfaces as an error
/// instead of a panic somewhere inside the forward pass.
fn ensure_finite_params(state: &TrainState) -> Result<(), TrainError> {
    let mut bad: Option<String> = None;
    state.params.visit_learnable(&mut |name, t| {
        if bad.is_none() && !t.is_finite() {
            bad = Some(name.to_string());
        }
    });
    match bad {
        None => Ok(()),
        Some(name) => Err(TrainError::Diverged {
            step: state.completed_steps,
            detail: format!("parameter {name} is not finite"),
        }),
    }
}

/// Writes `values` back into the generator or discriminator subset.
fn assign_subset(params: &mut nsm_model::ModelParams, discriminator: bool, values: &[Tensor]) {
    let mut cursor = 0usize;
    params.visit_learnable_mut(&mut |name, t| {
        if is_discriminator_param(name) == discriminator {
            *t = values[cursor].clone();
            cursor += 1;
        }
    });
    assert_eq!(cursor, values.len(), "subset length mismatch");
}

fn collect_subset(params: &nsm_model::ModelParams, discriminator: bool) -> Vec<Tensor> {
    let mut out = Vec::new();
    params.visit_learnable(&mut |name, t| {
        if is_discriminator_param(name) == discriminator {
            out.push(t.clone());
        }
    });
    out
}

fn gradient_subset<'t>(model: &TapeModel<'t>, discriminator: bool) -> Vec<Tensor> {
    let mut out = Vec::new();
    model.visit_learnable(&mut |name, var| {
        if is_discriminator_param(name) == discriminator {
            out.push(var.grad());
        }
    });
    out
}

/// One optimization step of the pose-prediction path (encoder, correlation
/// module, pose regressor, implicit-surface head) against
/// `λ_pose·L_pose + λ_G·L_G + λ_SDF·L_SDF`. The discriminator is frozen: it
/// is evaluated with its running statistics and its parameters receive no
/// update (asserted by checksum).
pub fn train_generator_step(
    state: &mut TrainState,
    cfg: &TrainConfig,
    batch: &[&PairSample],
) -> Result<StepLosses, TrainError> {
    assert!(!batch.is_empty(), "batch must not be empty");
    ensure_finite_params(state)?;
    let frozen_before = subset_checksum(&state.params, true);
    let step = state.completed_steps;

    // Draw all step randomness first (orientations, SDF queries, the rows
    // shown to the discriminator) so the RNG stream stays step-aligned.
    let mut prepared = Vec::with_capacity(batch.len());
    for sample in batch {
        let pair = prepare_pair(sample, cfg, &mut state.rng);
        let n_rows = pair.input_a.rows() + pair.input_b.rows();
        let disc_rows = sample_indices(&mut state.rng, n_rows, cfg.disc_points);
        prepared.push((pair, disc_rows));
    }

    let tape = Tape::new();
    let model = TapeModel::new(&tape, &state.params);
    let mut updates = Vec::new();
    let k = state.params.config.encoder.k;

    let mut l_pose_sum: Option<Var> = None;
    let mut l_sdf_sum: Option<Var> = None;
    let mut scores: Option<Var> = None;
    for (pair, disc_rows) in &prepared {
        let out = forward_mating(&tape, &model, &pair.input_a, &pair.input_b, Mode::Train, &mut updates);
        let lp = pose_loss(&tape, &out.pose_a, &out.pose_b, &pair.gt);
        let qa = tape.leaf(pair.queries_a.clone());
        let qb = tape.leaf(pair.queries_b.clone());
        let pa = sdf_head(&tape, out.feat_a, qa, &model.sdf, Mode::Train, &mut updates);
        let pb = sdf_head(&tape, out.feat_b, qb, &model.sdf, Mode::Train, &mut updates);
        let ls = sdf_loss(&tape, pa, &pair.sdf_gt_a, pb, &pair.sdf_gt_b);
        let disc_cloud = out.assembled.gather_rows(disc_rows);
        let score = discriminate(&tape, disc_cloud, &model.discriminator, k, Mode::Eval, &mut updates);
        l_pose_sum = Some(match l_pose_sum { None => lp, Some(acc) => acc.add(lp) });
        l_sdf_sum = Some(match l_sdf_sum { None => ls, Some(acc) => acc.add(ls) });
        scores = Some(match scores { None => score, Some(acc) => acc.concat_rows(score) });
    }
    let inv_b = 1.0 / batch.len() as f64;
    let l_pose = l_pose_sum.unwrap().scale(inv_b);
    let l_sdf = l_sdf_sum.unwrap().scale(inv_b);
    let l_g = generator_loss(scores.unwrap());
    let total = l_pose
        .scale(cfg.lambda_pose)
        .add(l_g.scale(cfg.lambda_g))
        .add(l_sdf.scale(cfg.lambda_sdf));

    let losses = StepLosses {
        l_pose: finite_or_diverged(l_pose.value().scalar_value(), step, "L_pose")?,
        l_g: finite_or_diverged(l_g.value().scalar_value(), step, "L_G")?,
        l_sdf: finite_or_diverged(l_sdf.value().scalar_value(), step, "L_SDF")?,
        total: finite_or_diverged(total.value().scalar_value(), step, "total loss")?,
    };

    total.backward();
    let grads = gradient_subset(&model, false);
    let mut tensors = collect_subset(&state.params, false);
    state.gen_opt.step(&mut tensors, &grads)?;
    assign_subset(&mut state.params, false, &tensors);

    debug_assert!(updates.iter().all(|u| !u.path.starts_with("discriminator")));
    state.params.apply_bn_updates(&updates);

    let frozen_after = subset_checksum(&state.params, true);
    assert_eq!(frozen_before, frozen_after, "generator step must not touch the discriminator");
    Ok(losses)
}

/// One optimization step of the shape classifier on detached assemblies.
/// Builds each batch pair's predicted assembly with the current (frozen)
/// generator, detaches it, and minimizes
/// `mean |D(pred)| + mean |D(real) − 1|`.
pub fn train_discriminator_step(
    state: &mut TrainState,
    cfg: &TrainConfig,
    batch: &[&PairSample],
) -> Result<DiscStepOutcome, TrainError> {
    assert!(!batch.is_empty(), "batch must not be empty");

    // Step randomness: orientations for the predicted assemblies, then the
    // row subsets scored for both the predicted and the real clouds.
    let mut fake_clouds = Vec::with_capacity(batch.len());
    let mut real_clouds = Vec::with_capacity(batch.len());
    for sample in batch {
        let quat_a = sample.frozen_quat_a.unwrap_or_else(|| sample_uniform_quat(&mut state.rng));
        let quat_b = sample.frozen_quat_b.unwrap_or_else(|| sample_uniform_quat(&mut state.rng));
        let input_a = rotate_rows(&sample.points_a, quat_a);
        let input_b = rotate_rows(&sample.points_b, quat_b);
        // Detached predicted assembly: forward on a throwaway tape, keep the
        // values only.
        let assembled = {
            let tape = Tape::new();
            let model = TapeModel::new(&tape, &state.params);
            let mut updates = Vec::new();
            let out = forward_mating(&tape, &model, &input_a, &input_b, Mode::Eval, &mut updates);
            out.assembled.value()
        };
        let fake_rows = sample_indices(&mut state.rng, assembled.rows(), cfg.disc_points);
        fake_clouds.push(gather_tensor_rows(&assembled, &fake_rows));
        let real = sample.real_assembly();
        let real_rows = sample_indices(&mut state.rng, real.rows(), cfg.disc_points);
        real_clouds.push(gather_tensor_rows(&real, &real_rows));
    }
    discriminator_update(state, &fake_clouds, &real_clouds)
}

fn gather_tensor_rows(t: &Tensor, rows: &[usize]) -> Tensor {
    let mut data = Vec::with_capacity(rows.len() * t.cols());
    for &r in rows {
        data.extend_from_slice(t.row(r));
    }
    Tensor::from_vec(rows.len(), t.cols(), data)
}

/// Low-level discriminator update on explicit cloud batches. The generator is
/// untouched (asserted by checksum); scores are returned for inspection.
pub fn discriminator_update(
    state: &mut TrainState,
    fake_clouds: &[Tensor],
    real_clouds: &[Tensor],
) -> Result<DiscStepOutcome, TrainError> {
    assert!(!fake_clouds.is_empty() && fake_clouds.len() == real_clouds.len());
    ensure_finite_params(state)?;
    let frozen_before = subset_checksum(&state.params, false);
    let step = state.completed_steps;
    let k = state.params.config.encoder.k;

    let tape = Tape::new();
    let model = TapeModel::new(&tape, &state.params);
    let mut updates = Vec::new();
    let mut pred_scores: Option<Var> = None;
    let mut real_scores: Option<Var> = None;
    for (fake, real) in fake_clouds.iter().zip(real_clouds.iter()) {
        let fs = discriminate(&tape, tape.leaf(fake.clone()), &model.discriminator, k, Mode::Train, &mut updates);
        let rs = discriminate(&tape, tape.leaf(real.clone()), &model.discriminator, k, Mode::Train, &mut updates);
        pred_scores = Some(match pred_scores { None => fs, Some(acc) => acc.concat_rows(fs) });
        real_scores = Some(match real_scores { None => rs, Some(acc) => acc.concat_rows(rs) });
    }
    let pred_scores = pred_scores.unwrap();
    let real_scores = real_scores.unwrap();
    let l_adv = discriminator_loss(pred_scores, real_scores);
    let l_adv_value = finite_or_diverged(l_adv.value().scalar_value(), step, "L_adv")?;

    l_adv.backward();
    let grads = gradient_subset(&model, true);
    let mut tensors = collect_subset(&state.params, true);
    state.disc_opt.step(&mut tensors, &grads)?;
    assign_subset(&mut state.params, true, &tensors);

    assert!(updates.iter().all(|u| u.path.starts_with("discriminator")));
    state.params.apply_bn_updates(&updates);

    let frozen_after = subset_checksum(&state.params, false);
    assert_eq!(frozen_before, frozen_after, "discriminator step must not touch the generator");

    Ok(DiscStepOutcome {
        l_adv: l_adv_value,
        pred_scores: pred_scores.value().data().to_vec(),
        real_scores: real_scores.value().data().to_vec(),
    })
}

/// Draws one batch of sample indices (with replacement) for a step.
pub fn draw_batch(rng: &mut ChaCha8Rng, n: usize, batch_size: usize) -> Vec<usize> {
    sample_indices(rng, n, batch_size)
}
