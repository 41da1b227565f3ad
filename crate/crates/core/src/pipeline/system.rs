//! End-to-end transmission of one clip through a trained bundle.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use super::autoencoder::encode_means;
use super::bundle::ModelBundle;
use super::config::{GainPolicy, PipelineConfig};
use crate::channel::{
    mmse_equalize, mmse_estimate_gain, pilot_sequence, ChannelRealization, ComputeTimeModel,
    LinkBudget,
};
use crate::decoder::Interpolator;
use crate::diffusion::{
    msd_denoise, psd_denoise, sd_denoise, GuidanceWeights, NoiseSchedule, RegParams,
};
use crate::encoder::{
    normalize_pixels, select_keyframes, Frame, FrameSequence, KeyframePlan, SelectionParams,
};
use crate::error::{Error, Result};
use crate::metrics::{latent_frechet, MetricReport};
use crate::ndnet::MlpModel;
use crate::rng::{derive_seed_label, rng_from_seed};

use super::autoencoder::LatentNorm;
use crate::decoder::DecoderNet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DenoiserKind {
    /// Zero-forcing with the pilot gain estimate.
    None,
    /// MMSE equalization with the pilot gain estimate.
    MmseOnly,
    /// Diffusion denoising with the true gain.
    Sd,
    /// Pilot gain estimate followed by diffusion denoising.
    Msd,
    /// Joint latent and gain diffusion, no pilot.
    Psd,
}

impl DenoiserKind {
    pub const ALL: [DenoiserKind; 5] = [
        DenoiserKind::None,
        DenoiserKind::MmseOnly,
        DenoiserKind::Sd,
        DenoiserKind::Msd,
        DenoiserKind::Psd,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DenoiserKind::None => "none",
            DenoiserKind::MmseOnly => "mmse-only",
            DenoiserKind::Sd => "sd",
            DenoiserKind::Msd => "msd",
            DenoiserKind::Psd => "psd",
        }
    }
}

impl fmt::Display for DenoiserKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DenoiserKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DenoiserKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::invalid(format!("unknown denoiser '{s}'")))
    }
}

/// Borrowed view of a fully trained bundle.
pub struct System<'a> {
    pub config: &'a PipelineConfig,
    pub encoder: &'a MlpModel,
    pub decoder: &'a DecoderNet,
    pub norm: &'a LatentNorm,
    pub eps_z: &'a MlpModel,
    pub eps_h: &'a MlpModel,
    pub interpolator: &'a Interpolator,
    pub schedule: NoiseSchedule,
    pub guidance: GuidanceWeights,
    pub reg: RegParams,
}

/// Scale a latent to unit mean power. Returns the unit-power vector and
/// the RMS it was divided by; a zero vector is returned unchanged with
/// scale 1.
pub fn power_normalize(z: &[f64]) -> (Vec<f64>, f64) {
    let rms = (z.iter().map(|v| v * v).sum::<f64>() / z.len().max(1) as f64).sqrt();
    if rms > 0.0 {
        (z.iter().map(|v| v / rms).collect(), rms)
    } else {
        (z.to_vec(), 1.0)
    }
}

/// What the receiver got for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    /// Received base latent, still at unit power.
    pub base: Vec<f64>,
    /// RMS of the base latent before power normalization, sent as header
    /// metadata alongside the residual indices.
    pub base_scale: f64,
    pub residual_values: Vec<Vec<f64>>,
    pub pilot: Vec<f64>,
    /// True gain seen by each keyframe.
    pub gains: Vec<f64>,
    pub noise_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipOutcome {
    pub frames: FrameSequence,
    pub plan_indices: Vec<usize>,
    pub t_exe: f64,
    pub h_true: f64,
    pub h_hat: f64,
    /// Mean squared error of the recovered keyframe latents against the
    /// noiseless payload, in normalized latent units.
    pub latent_mse: f64,
    pub report: MetricReport,
    pub frechet: f64,
}

/// Stage execution times measured on one clip.
pub fn measure_compute(sys: &System<'_>, clip: &FrameSequence) -> Result<ComputeTimeModel> {
    let link = sys.config.link;
    let noise_power = link.noise_power(sys.config.channel.omega);
    let t0 = Instant::now();
    let latents = sys.encode(clip)?;
    let fe = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let plan = sys.plan(
        &latents,
        link,
        1.0,
        noise_power,
        f64::MAX,
        ComputeTimeModel::default(),
    )?;
    let ks = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let mut rng = rng_from_seed(0);
    let rx =
        ChannelRealization::new(1.0, noise_power)?.transmit_slice(&plan.payload.base, &mut rng);
    psd_denoise(
        &rx,
        noise_power,
        sys.eps_z,
        sys.eps_h,
        &sys.schedule,
        &sys.guidance,
        &sys.reg,
        &mut rng,
    )?;
    let sd = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let keyframes = sys.decode(&plan.payload.decode())?;
    let sr = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let pair = sys.interpolator.analyze(&keyframes[0], &keyframes[1])?;
    sys.interpolator
        .interpolate_frame(&keyframes[0], &keyframes[1], &pair, 1, 2)?;
    let fi = t0.elapsed().as_secs_f64();
    ComputeTimeModel::new(fe, ks, sd, sr, fi)
}

impl<'a> System<'a> {
    pub fn from_bundle(bundle: &'a ModelBundle) -> Result<Self> {
        let ae = bundle.autoencoder()?;
        let dn = bundle.denoisers()?;
        Ok(System {
            config: &bundle.config,
            encoder: &ae.encoder,
            decoder: &ae.decoder,
            norm: &ae.norm,
            eps_z: &dn.eps_z,
            eps_h: &dn.eps_h,
            interpolator: bundle.interpolator()?,
            schedule: bundle.config.schedule()?,
            guidance: bundle.config.guidance(),
            reg: bundle.config.reg()?,
        })
    }

    /// Normalized encoder means, one per frame.
    pub fn encode(&self, clip: &FrameSequence) -> Result<Vec<Vec<f64>>> {
        let rows: Vec<Vec<f64>> = (0..clip.frame_count())
            .map(|i| normalize_pixels(clip.frame(i)))
            .collect();
        Ok(encode_means(self.encoder, &rows)?
            .iter()
            .map(|z| self.norm.normalize(z))
            .collect())
    }

    /// Decode normalized latents to frames.
    pub fn decode(&self, latents: &[Vec<f64>]) -> Result<Vec<Frame>> {
        let raw: Vec<Vec<f64>> = latents.iter().map(|z| self.norm.denormalize(z)).collect();
        self.decoder.decode_many(&raw)
    }

    pub fn plan(
        &self,
        latents: &[Vec<f64>],
        link: LinkBudget,
        h: f64,
        noise_power: f64,
        t_max: f64,
        compute: ComputeTimeModel,
    ) -> Result<KeyframePlan> {
        let params = SelectionParams {
            t_max,
            link,
            h,
            noise_power,
            compute,
            k: self.config.keyframe.k,
            priority: self.config.keyframe.priority,
        };
        select_keyframes(latents, &params)
    }

    /// Send the payload and the pilot over the channel.
    pub fn transmit(&self, plan: &KeyframePlan, link: &LinkBudget, seed: u64) -> Result<Received> {
        let cfg = self.config;
        let model = cfg.channel_model()?;
        let noise_power = link.noise_power(cfg.channel.omega);
        let mut gain_rng = rng_from_seed(derive_seed_label(seed, "gain"));
        let mut noise_rng = rng_from_seed(derive_seed_label(seed, "noise"));
        let h0 = model.sample_gain(&mut gain_rng)?;
        let mut gains = vec![h0];
        let ch = ChannelRealization::new(h0, noise_power)?;
        let pilot = ch.transmit_slice(&pilot_sequence(cfg.channel.pilot_len), &mut noise_rng);
        let (unit, base_scale) = power_normalize(&plan.payload.base);
        let base = ch.transmit_slice(&unit, &mut noise_rng);
        let mut residual_values = Vec::with_capacity(plan.payload.residuals.len());
        for r in &plan.payload.residuals {
            let h = match cfg.channel.gain_policy {
                GainPolicy::Block => h0,
                GainPolicy::PerKeyframe => model.sample_gain(&mut gain_rng)?,
            };
            gains.push(h);
            residual_values.push(
                ChannelRealization::new(h, noise_power)?.transmit_slice(&r.values, &mut noise_rng),
            );
        }
        Ok(Received {
            base,
            base_scale,
            residual_values,
            pilot,
            gains,
            noise_power,
        })
    }

    /// Recover the base latent and the gain used for the residuals.
    pub fn denoise(
        &self,
        kind: DenoiserKind,
        rx: &Received,
        power: f64,
        seed: u64,
    ) -> Result<(Vec<f64>, f64)> {
        let sigma2 = rx.noise_power;
        let mut rng = rng_from_seed(derive_seed_label(seed, "denoise"));
        let pilot = pilot_sequence(rx.pilot.len());
        let pilot_gain = || mmse_estimate_gain(&pilot, &rx.pilot, sigma2);
        Ok(match kind {
            DenoiserKind::None => {
                let h = pilot_gain()?;
                let z = if h > 0.0 {
                    rx.base.iter().map(|v| v / h).collect()
                } else {
                    rx.base.clone()
                };
                (z, h)
            }
            DenoiserKind::MmseOnly => {
                let h = pilot_gain()?.max(0.0);
                (mmse_equalize(&rx.base, h, sigma2, power)?, h)
            }
            DenoiserKind::Sd => {
                let h = rx.gains[0];
                (
                    sd_denoise(
                        &rx.base,
                        h,
                        sigma2,
                        self.eps_z,
                        &self.schedule,
                        &self.guidance,
                        &mut rng,
                    )?,
                    h,
                )
            }
            DenoiserKind::Msd => {
                let est = msd_denoise(
                    &rx.base,
                    &pilot,
                    &rx.pilot,
                    sigma2,
                    self.eps_z,
                    &self.schedule,
                    &self.guidance,
                    &mut rng,
                )?;
                (est.latent, est.gain)
            }
            DenoiserKind::Psd => {
                let est = psd_denoise(
                    &rx.base,
                    sigma2,
                    self.eps_z,
                    self.eps_h,
                    &self.schedule,
                    &self.guidance,
                    &self.reg,
                    &mut rng,
                )?;
                (est.latent, est.gain)
            }
        })
    }

    /// Full chain for one clip. `seed` fixes the channel draw and the
    /// denoiser's randomness, so different denoisers see the same channel.
    pub fn run_clip(
        &self,
        clip: &FrameSequence,
        kind: DenoiserKind,
        snr_db: f64,
        t_max: f64,
        compute: ComputeTimeModel,
        seed: u64,
    ) -> Result<ClipOutcome> {
        let cfg = self.config;
        let link = LinkBudget::new(cfg.link.bandwidth_hz, cfg.link.power, snr_db)?;
        let latents = self.encode(clip)?;
        // The transmitter plans with the gain it will see; draw it first
        // from the same stream the channel uses.
        let noise_power = link.noise_power(cfg.channel.omega);
        let h_plan = cfg
            .channel_model()?
            .sample_gain(&mut rng_from_seed(derive_seed_label(seed, "gain")))?;
        let plan = self.plan(&latents, link, h_plan, noise_power, t_max, compute)?;
        let rx = self.transmit(&plan, &link, seed)?;
        let (base, h_hat) = self.denoise(kind, &rx, link.power, seed)?;
        let mut payload = plan.payload.clone();
        payload.base = base.iter().map(|v| v * rx.base_scale).collect();
        for (code, values) in payload.residuals.iter_mut().zip(&rx.residual_values) {
            code.values = match kind {
                DenoiserKind::None if h_hat > 0.0 => values.iter().map(|v| v / h_hat).collect(),
                DenoiserKind::None => values.clone(),
                _ => mmse_equalize(values, h_hat.max(0.0), rx.noise_power, link.power)?,
            };
        }
        let recovered = payload.decode();
        let clean = plan.payload.decode();
        let count = (recovered.len() * recovered[0].len()) as f64;
        let latent_mse = recovered
            .iter()
            .flatten()
            .zip(clean.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / count;
        let frames = self.reconstruct(&recovered, &plan.indices, clip.frame_count())?;
        let report = MetricReport::compare(clip, &frames)?;
        let frechet = latent_frechet(&latents, &self.encode(&frames)?)?;
        Ok(ClipOutcome {
            frames,
            plan_indices: plan.indices,
            t_exe: plan.t_exe,
            h_true: rx.gains[0],
            h_hat,
            latent_mse,
            report,
            frechet,
        })
    }

    /// Decode keyframes and interpolate the frames between them.
    pub fn reconstruct(
        &self,
        keyframe_latents: &[Vec<f64>],
        indices: &[usize],
        frames: usize,
    ) -> Result<FrameSequence> {
        let keyframes = self.decode(keyframe_latents)?;
        let video = self
            .interpolator
            .interpolate_video(&keyframes, indices, frames)?;
        let (h, w) = (self.decoder.height(), self.decoder.width());
        let quantized: Vec<Vec<u8>> = video.iter().map(Frame::quantize).collect();
        FrameSequence::from_frames(h, w, &quantized)
    }
}
