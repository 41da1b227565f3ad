//! Staged training of every network in the bundle.

use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;

use super::autoencoder::{encode_means, train_vae, LatentNorm, VaeTrainConfig};
use super::bundle::{Autoencoder, Denoisers, ModelBundle, Stage};
use super::config::PipelineConfig;
use super::synth::{generate_dataset, Clip};
use super::system::{measure_compute, power_normalize, DenoiserKind, System};
use crate::channel::{ChannelRealization, ComputeTimeModel};
use crate::decoder::{train_heads, DecoderNet, Interpolator, TrainingSample};
use crate::diffusion::{psd_denoise, train_eps, EpsTrainConfig, TrainReport};
use crate::encoder::normalize_pixels;
use crate::error::{Error, Result};
use crate::ndnet::{Activation, MlpModel, Momentum, SgdConfig};
use crate::rng::{derive_seed, derive_seed_label, rng_from_seed, Rng};

/// Which stages to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainPlan {
    /// First stage to (re)train; earlier stages are loaded from the bundle.
    pub from: Option<Stage>,
    /// Last stage to train.
    pub until: Option<Stage>,
}

pub type Logger<'a> = &'a mut dyn FnMut(&str);

fn window_means(r: &TrainReport) -> (f64, f64) {
    r.head_tail((r.losses.len() / 20).max(1))
}

fn stage_rng(cfg: &PipelineConfig, stage: Stage) -> Rng {
    rng_from_seed(derive_seed_label(cfg.seed, stage.label()))
}

/// Training clips and their frames as normalized pixel rows.
pub fn training_clips(cfg: &PipelineConfig) -> Result<Vec<Clip>> {
    generate_dataset(&cfg.data, cfg.seed, "train", cfg.data.clips)
}

fn pixel_rows(clips: &[Clip]) -> Vec<Vec<f64>> {
    clips
        .iter()
        .flat_map(|c| (0..c.frames.frame_count()).map(move |i| normalize_pixels(c.frames.frame(i))))
        .collect()
}

/// Train (or resume) the bundle in `dir`. The bundle is saved after every
/// stage, so an interrupted run can resume from the last completed stage.
pub fn train(
    cfg: PipelineConfig,
    dir: &Path,
    plan: TrainPlan,
    log: Logger<'_>,
) -> Result<ModelBundle> {
    let mut bundle = match plan.from {
        Some(Stage::Autoencoder) | None if !dir.join("manifest.json").exists() => {
            ModelBundle::empty(cfg)
        }
        Some(Stage::Autoencoder) => ModelBundle::empty(cfg),
        _ => {
            let b = ModelBundle::load(dir)?;
            if b.config.seed != cfg.seed {
                log(&format!(
                    "resuming with the bundle's frozen config (seed {})",
                    b.config.seed
                ));
            }
            b
        }
    };
    let first = match plan
        .from
        .or_else(|| Stage::ALL.into_iter().find(|s| !bundle.has(*s)))
    {
        Some(s) => s,
        None => {
            log("all stages already trained");
            return Ok(bundle);
        }
    };
    for stage in Stage::ALL.into_iter().filter(|s| *s < first) {
        if !bundle.has(stage) {
            return Err(Error::invalid(format!(
                "cannot start at {first}: stage {stage} has not been trained"
            )));
        }
    }
    let clips = training_clips(&bundle.config)?;
    for stage in Stage::ALL
        .into_iter()
        .filter(|s| *s >= first && plan.until.map_or(true, |u| *s <= u))
    {
        log(&format!("stage {stage}"));
        run_stage(&mut bundle, stage, &clips, log)?;
        bundle.mark(stage);
        if stage == Stage::Finetune && !bundle.config.compute.is_complete() {
            let measured = measure_compute(&System::from_bundle(&bundle)?, &clips[0].frames)?;
            bundle.config.compute.freeze(&measured);
            log(&format!("measured compute times {:?}", measured.named()));
        }
        bundle.save(dir)?;
    }
    Ok(bundle)
}

pub fn run_stage(
    bundle: &mut ModelBundle,
    stage: Stage,
    clips: &[Clip],
    log: Logger<'_>,
) -> Result<()> {
    let cfg = bundle.config.clone();
    let mut rng = stage_rng(&cfg, stage);
    bundle
        .manifest
        .losses
        .retain(|(s, _, _)| !s.starts_with(stage.label()));
    match stage {
        Stage::Autoencoder => {
            let (ae, report) = train_autoencoder(&cfg, clips, &mut rng)?;
            let (a, b) = window_means(&report);
            log(&format!("autoencoder loss {a:.4} -> {b:.4}"));
            bundle.manifest.losses.push(("autoencoder".into(), a, b));
            bundle.autoencoder = Some(ae);
            bundle.denoisers = None;
            bundle.interpolator = None;
        }
        Stage::Denoisers => {
            let ae = bundle.autoencoder()?;
            let latents: Vec<Vec<f64>> = encode_means(&ae.encoder, &pixel_rows(clips))?
                .iter()
                .map(|z| power_normalize(&ae.norm.normalize(z)).0)
                .collect();
            let (dn, rz, rh) = train_denoisers(&cfg, &latents, &mut rng)?;
            for (name, r) in [("denoisers/eps_z", rz), ("denoisers/eps_h", rh)] {
                let (a, b) = window_means(&r);
                log(&format!("{name} loss {a:.4} -> {b:.4}"));
                bundle.manifest.losses.push((name.into(), a, b));
            }
            bundle.denoisers = Some(dn);
        }
        Stage::Interpolation => {
            let ae = bundle.autoencoder()?.clone();
            let mut interp = Interpolator::new(&cfg.interp_config())?;
            let samples = interp_samples(&cfg, &ae, &interp, clips, &mut rng)?;
            let history = train_heads(
                &mut interp,
                &samples,
                cfg.train.interp_epochs,
                cfg.train.interp_lr,
                cfg.train.momentum,
                &mut rng,
            )?;
            let before = mean_sample_loss(&Interpolator::new(&cfg.interp_config())?, &samples)?;
            let after = mean_sample_loss(&interp, &samples)?;
            log(&format!(
                "interpolation loss {before:.2} -> {after:.2} (epochs {history:?})"
            ));
            bundle
                .manifest
                .losses
                .push(("interpolation".into(), before, after));
            bundle.interpolator = Some(interp);
        }
        Stage::Finetune => {
            let (before, after, accepted) = finetune(bundle, clips, &mut rng)?;
            log(&format!(
                "finetune end-to-end mse {before:.2} -> {after:.2} ({})",
                if accepted {
                    "kept"
                } else {
                    "rejected, previous models retained"
                }
            ));
            bundle
                .manifest
                .losses
                .push(("finetune".into(), before, after.min(before)));
        }
    }
    Ok(())
}

pub fn train_autoencoder(
    cfg: &PipelineConfig,
    clips: &[Clip],
    rng: &mut Rng,
) -> Result<(Autoencoder, TrainReport)> {
    let d = cfg.model.latent_dim;
    let px = cfg.data.height * cfg.data.width * crate::encoder::CHANNELS;
    let widths = |input: usize, hidden: &[usize], output: usize| {
        std::iter::once(input)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(output))
            .collect::<Vec<_>>()
    };
    let mut enc = MlpModel::new(
        &widths(px, &cfg.model.encoder_hidden, 2 * d),
        Activation::Relu,
        rng.gen(),
    )?
    .with_output_activation(Activation::Identity);
    let mut dec = MlpModel::new(
        &widths(d, &cfg.model.decoder_hidden, px),
        Activation::Relu,
        rng.gen(),
    )?
    .with_output_activation(Activation::Sigmoid);
    let frames = pixel_rows(clips);
    let vae = VaeTrainConfig {
        steps: cfg.train.ae_steps,
        batch: cfg.train.ae_batch,
        learning_rate: cfg.train.ae_lr,
        momentum: cfg.train.momentum,
        kl_weight: cfg.model.kl_weight,
    };
    let report = train_vae(&mut enc, &mut dec, &frames, &vae, rng)?;
    let norm = LatentNorm::fit(&encode_means(&enc, &frames)?)?;
    let decoder = DecoderNet::new(dec, cfg.data.height, cfg.data.width)?;
    Ok((
        Autoencoder {
            encoder: enc,
            decoder,
            norm,
        },
        report,
    ))
}

/// Noise estimators for unit-power latents and for the channel gain.
pub fn train_denoisers(
    cfg: &PipelineConfig,
    latents: &[Vec<f64>],
    rng: &mut Rng,
) -> Result<(Denoisers, TrainReport, TrainReport)> {
    let d = cfg.model.latent_dim;
    let sch = cfg.schedule()?;
    let eps_cfg = |steps: usize| -> Result<EpsTrainConfig> {
        Ok(EpsTrainConfig {
            sgd: SgdConfig::new(cfg.train.eps_lr, steps, cfg.train.eps_batch)?,
            momentum: cfg.train.momentum,
            clip_norm: Some(10.0),
            cosine_decay: false,
            ema_decay: Some(0.999),
        })
    };
    let mut widths = vec![d + 1];
    widths.extend(&cfg.diffusion.eps_hidden);
    widths.push(d);
    let z_init = MlpModel::new(&widths, Activation::Relu, rng.gen())?
        .with_output_activation(Activation::Identity);
    let (eps_z, rz) = train_eps(
        &z_init,
        |r: &mut Rng| latents[r.gen_range(0..latents.len())].clone(),
        &sch,
        &eps_cfg(cfg.train.eps_steps)?,
        rng,
    )?;
    let mut widths = vec![2];
    widths.extend(&cfg.diffusion.gain_hidden);
    widths.push(1);
    let h_init = MlpModel::new(&widths, Activation::Relu, rng.gen())?
        .with_output_activation(Activation::Identity);
    let channel = cfg.channel_model()?;
    let (eps_h, rh) = train_eps(
        &h_init,
        |r: &mut Rng| vec![channel.sample_gain(r).unwrap_or(0.0)],
        &sch,
        &eps_cfg(cfg.train.gain_steps)?,
        rng,
    )?;
    Ok((Denoisers { eps_z, eps_h }, rz, rh))
}

/// Triplets `(x̂_i, x_mid, x̂_j)`: endpoints decoded from clean latents,
/// target taken from the source clip.
fn interp_samples(
    cfg: &PipelineConfig,
    ae: &Autoencoder,
    interp: &Interpolator,
    clips: &[Clip],
    rng: &mut Rng,
) -> Result<Vec<TrainingSample>> {
    let frames = cfg.data.frames;
    let max_gap = (frames - 1).min(4);
    if max_gap < 2 {
        return Ok(Vec::new());
    }
    let picks: Vec<(usize, usize, usize, usize)> = (0..cfg.train.interp_samples)
        .map(|_| {
            let c = rng.gen_range(0..clips.len());
            let gap = rng.gen_range(2..=max_gap);
            let i = rng.gen_range(0..frames - gap);
            let delta = rng.gen_range(1..gap);
            (c, i, gap, delta)
        })
        .collect();
    picks
        .par_iter()
        .map(|&(c, i, gap, delta)| {
            let seq = &clips[c].frames;
            let rows = [
                normalize_pixels(seq.frame(i)),
                normalize_pixels(seq.frame(i + gap)),
            ];
            let ends = ae.decoder.decode_many(&encode_means(&ae.encoder, &rows)?)?;
            interp.training_sample(&ends[0], &seq.frame_f64(i + delta), &ends[1], delta, gap)
        })
        .collect()
}

fn mean_sample_loss(interp: &Interpolator, samples: &[TrainingSample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = samples
        .iter()
        .map(|s| interp.sample_loss(s))
        .sum::<Result<f64>>()?;
    Ok(total / samples.len() as f64)
}

/// Mean end-to-end pixel MSE over clips with the parallel denoiser at the
/// configured link budget.
pub fn end_to_end_mse(bundle: &ModelBundle, clips: &[Clip], seed: u64) -> Result<f64> {
    let sys = System::from_bundle(bundle)?;
    let cfg = &bundle.config;
    let compute = cfg.compute.to_model().unwrap_or_default();
    let errors = clips
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            sys.run_clip(
                &c.frames,
                DenoiserKind::Psd,
                cfg.link.snr_db,
                cfg.keyframe.t_max,
                compute,
                derive_seed(seed, i as u64),
            )
            .map(|o| o.report.mse)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// Fine-tune the decoder on denoised latents and refresh the interpolation
/// heads. The update is kept only if the end-to-end training MSE does not
/// get worse. Returns `(before, after, kept)`.
fn finetune(bundle: &mut ModelBundle, clips: &[Clip], rng: &mut Rng) -> Result<(f64, f64, bool)> {
    let cfg = bundle.config.clone();
    let eval: Vec<Clip> = clips
        .iter()
        .take(cfg.train.eval_clips.max(1))
        .cloned()
        .collect();
    let eval_seed = derive_seed_label(cfg.seed, "finetune-eval");
    let before = end_to_end_mse(bundle, &eval, eval_seed)?;

    let ae = bundle.autoencoder()?.clone();
    let dn = bundle.denoisers()?.clone();
    let sch = cfg.schedule()?;
    let guidance = cfg.guidance();
    let reg = cfg.reg()?;
    let model = cfg.channel_model()?;
    let noise_power = cfg.link.noise_power(cfg.channel.omega);
    let rows = pixel_rows(clips);
    let pool_size = rows.len().min(256);
    let picks: Vec<(usize, u64)> = (0..pool_size)
        .map(|_| (rng.gen_range(0..rows.len()), rng.gen()))
        .collect();
    let latents = encode_means(&ae.encoder, &rows)?;
    let pool: Vec<(Vec<f64>, usize)> = picks
        .par_iter()
        .map(|&(f, seed)| {
            let mut r = rng_from_seed(seed);
            let (z, scale) = power_normalize(&ae.norm.normalize(&latents[f]));
            let h = model.sample_gain(&mut r)?;
            let y = ChannelRealization::new(h, noise_power)?.transmit_slice(&z, &mut r);
            let est = psd_denoise(
                &y,
                noise_power,
                &dn.eps_z,
                &dn.eps_h,
                &sch,
                &guidance,
                &reg,
                &mut r,
            )?;
            let z: Vec<f64> = est.latent.iter().map(|v| v * scale).collect();
            Ok((ae.norm.denormalize(&z), f))
        })
        .collect::<Result<_>>()?;

    let mut dec = ae.decoder.model().clone();
    let mut opt = Momentum::new(cfg.train.momentum)?;
    let batch = cfg.train.ae_batch;
    let px = dec.output_width();
    for step in 0..cfg.train.finetune_steps {
        let mut input = Vec::with_capacity(batch * dec.input_width());
        let mut target = Vec::with_capacity(batch * px);
        for _ in 0..batch {
            // Half denoised, half clean latents.
            let (z, f) = if rng.gen_bool(0.5) {
                pool[rng.gen_range(0..pool.len())].clone()
            } else {
                let f = rng.gen_range(0..rows.len());
                (latents[f].clone(), f)
            };
            input.extend(z);
            target.extend_from_slice(&rows[f]);
        }
        let out = dec.forward_rows(&input, batch)?;
        let up: Vec<f64> = out
            .iter()
            .zip(&target)
            .map(|(y, t)| 2.0 * (y - t) / batch as f64)
            .collect();
        let (g, _) = dec.backward_rows(&input, &up, batch)?;
        opt.step(&mut dec, &g, cfg.train.finetune_lr)
            .map_err(|e| match e {
                Error::NonFinite { index, .. } => Error::Divergence {
                    stage: "finetune".into(),
                    detail: format!("non-finite gradient {index} at step {step}"),
                },
                other => other,
            })?;
    }
    let tuned_ae = Autoencoder {
        decoder: DecoderNet::new(dec, cfg.data.height, cfg.data.width)?,
        ..ae.clone()
    };
    let mut interp = bundle.interpolator()?.clone();
    let samples = interp_samples(&cfg, &tuned_ae, &interp, clips, rng)?;
    train_heads(
        &mut interp,
        &samples,
        1,
        cfg.train.interp_lr * 0.5,
        cfg.train.momentum,
        rng,
    )?;

    let previous = (bundle.autoencoder.clone(), bundle.interpolator.clone());
    bundle.autoencoder = Some(tuned_ae);
    bundle.interpolator = Some(interp);
    let after = end_to_end_mse(bundle, &eval, eval_seed)?;
    if after <= before {
        Ok((before, after, true))
    } else {
        (bundle.autoencoder, bundle.interpolator) = previous;
        Ok((before, after, false))
    }
}

/// Compute times from the config, or measured ones when unset.
pub fn compute_model(bundle: &ModelBundle) -> Result<ComputeTimeModel> {
    match bundle.config.compute.to_model() {
        Some(m) => Ok(m),
        None => Err(Error::Config(
            "compute times are unset; finish training to measure them".into(),
        )),
    }
}
