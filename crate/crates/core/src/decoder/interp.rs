//! Attention-based frame interpolation between reconstructed keyframes.
//!
//! For a keyframe pair `(x_i, x_j)` with gap `g = j − i`, appearance
//! features of both frames attend to each other in a local window; the
//! attention-weighted neighbor offsets, corrected by each frame's
//! self-attention offsets, give motion fields `M_{i→j}` and `M_{j→i}`. Under locally linear motion the frame at offset `Δ` samples
//! `x_i` at `p + (Δ/g)·M_{j→i}(p)` and `x_j` at `p + ((g − Δ)/g)·M_{i→j}(p)`;
//! a learned per-pixel mask blends the two and a residual network refines
//! the result.

use rand::Rng as _;

use super::attention::{
    interframe_attention, motion_vector, scale_motion, FeatureMap, MotionField, Projections,
};
use super::warp::{backward_warp, fuse, upsample_motion};
use crate::encoder::{Frame, CHANNELS};
use crate::error::{Error, Result};
use crate::ndnet::{Activation, Layer, MlpModel, Momentum};
use crate::rng::{rng_from_seed, Rng};

/// Number of feature scales; scale `k` works on `2^k × 2^k` patches.
pub const SCALES: usize = 3;

/// Per-frame features at every scale and the fused full-resolution map.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceFeatures {
    pub scales: Vec<FeatureMap>,
    pub fused: FeatureMap,
}

/// Patch-dense multi-scale feature extractor with a linear cross-scale
/// fusion back to the base width.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceExtractor {
    base_channels: usize,
    scales: Vec<MlpModel>,
    fuse: MlpModel,
}

impl AppearanceExtractor {
    /// Random patch layers; the fusion starts as the identity on the finest
    /// scale plus `coarse_weight`-scaled random mixing of the coarser ones.
    pub fn new(base_channels: usize, coarse_weight: f64, seed: u64) -> Result<Self> {
        if base_channels == 0 {
            return Err(Error::invalid("feature width must be positive"));
        }
        let mut scales = Vec::with_capacity(SCALES);
        for k in 0..SCALES {
            let p = 1 << k;
            let m = MlpModel::new(
                &[p * p * CHANNELS, p * base_channels],
                Activation::Identity,
                seed.wrapping_add(k as u64),
            )?;
            scales.push(m);
        }
        let total: usize = (0..SCALES).map(|k| (1 << k) * base_channels).sum();
        let mut rng = rng_from_seed(seed.wrapping_add(SCALES as u64));
        let mut weights = vec![0.0; base_channels * total];
        for r in 0..base_channels {
            weights[r * total + r] = 1.0;
            for c in base_channels..total {
                weights[r * total + c] =
                    coarse_weight * rng.gen_range(-1.0..=1.0) / (total as f64).sqrt();
            }
        }
        let fuse = MlpModel::from_layers(
            vec![Layer {
                inputs: total,
                outputs: base_channels,
                weights,
                biases: vec![0.0; base_channels],
            }],
            Activation::Identity,
            Activation::Identity,
            seed,
        )?;
        Ok(AppearanceExtractor {
            base_channels,
            scales,
            fuse,
        })
    }

    pub fn from_parts(scales: Vec<MlpModel>, fuse: MlpModel) -> Result<Self> {
        if scales.len() != SCALES {
            return Err(Error::invalid(format!(
                "expected {SCALES} scale layers, got {}",
                scales.len()
            )));
        }
        let base_channels = fuse.output_width();
        for (k, m) in scales.iter().enumerate() {
            let p = 1 << k;
            if m.input_width() != p * p * CHANNELS || m.output_width() != p * base_channels {
                return Err(Error::invalid(format!(
                    "scale {k} layer has widths {:?}",
                    m.widths()
                )));
            }
        }
        Ok(AppearanceExtractor {
            base_channels,
            scales,
            fuse,
        })
    }

    pub fn base_channels(&self) -> usize {
        self.base_channels
    }

    pub fn scale_models(&self) -> &[MlpModel] {
        &self.scales
    }

    pub fn fuse_model(&self) -> &MlpModel {
        &self.fuse
    }

    pub fn extract(&self, frame: &Frame) -> Result<AppearanceFeatures> {
        let step = 1 << (SCALES - 1);
        if frame.height % step != 0 || frame.width % step != 0 {
            return Err(Error::invalid(format!(
                "frame extents {}×{} must be multiples of {step}",
                frame.height, frame.width
            )));
        }
        let mut scales = Vec::with_capacity(SCALES);
        for (k, model) in self.scales.iter().enumerate() {
            let p = 1 << k;
            let (gh, gw) = (frame.height / p, frame.width / p);
            let mut patches = Vec::with_capacity(gh * gw * p * p * CHANNELS);
            for gy in 0..gh {
                for gx in 0..gw {
                    for y in gy * p..(gy + 1) * p {
                        for x in gx * p..(gx + 1) * p {
                            for c in 0..CHANNELS {
                                patches.push(frame.at(y, x, c) / 255.0);
                            }
                        }
                    }
                }
            }
            let out = model.forward_rows(&patches, gh * gw)?;
            scales.push(FeatureMap::new(gh, gw, model.output_width(), out)?);
        }
        let total = self.fuse.input_width();
        let mut stacked = Vec::with_capacity(frame.height * frame.width * total);
        for y in 0..frame.height {
            for x in 0..frame.width {
                for (k, map) in scales.iter().enumerate() {
                    stacked.extend_from_slice(map.at(y >> k, x >> k));
                }
            }
        }
        let fused = self
            .fuse
            .forward_rows(&stacked, frame.height * frame.width)?;
        let fused = FeatureMap::new(frame.height, frame.width, self.base_channels, fused)?;
        Ok(AppearanceFeatures { scales, fused })
    }
}

/// `[f, ‖f‖², 1]` at every position.
pub fn augment(f: &FeatureMap) -> FeatureMap {
    let c = f.channels + 2;
    let mut data = Vec::with_capacity(f.height * f.width * c);
    for p in f.data.chunks_exact(f.channels) {
        data.extend_from_slice(p);
        data.push(p.iter().map(|v| v * v).sum());
        data.push(1.0);
    }
    FeatureMap {
        height: f.height,
        width: f.width,
        channels: c,
        data,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpConfig {
    pub base_channels: usize,
    /// Odd attention window width.
    pub window: usize,
    /// Sharpness of the feature-distance kernel.
    pub temperature: f64,
    pub coarse_weight: f64,
    pub refine_hidden: usize,
    pub seed: u64,
}

impl Default for InterpConfig {
    fn default() -> Self {
        InterpConfig {
            base_channels: 8,
            window: 21,
            temperature: 200.0,
            coarse_weight: 0.1,
            refine_hidden: 32,
            seed: 0,
        }
    }
}

/// Cross-frame motion minus the frame's motion against itself. The raw
/// expected-offset estimate is pulled towards the centroid of similar
/// neighbors even without any movement; subtracting the self-attention
/// estimate removes that pull, so identical frames yield exactly zero motion.
fn relative_motion(cross: &MotionField, own: &MotionField) -> MotionField {
    MotionField {
        height: cross.height,
        width: cross.width,
        vectors: cross
            .vectors
            .iter()
            .zip(&own.vectors)
            .map(|(a, b)| a - b)
            .collect(),
    }
}

/// Everything computed once per keyframe pair.
#[derive(Debug, Clone)]
pub struct PairAnalysis {
    pub features_i: AppearanceFeatures,
    pub features_j: AppearanceFeatures,
    /// Attention-updated appearance of `i` (towards `j`) and of `j`.
    pub attended_i: FeatureMap,
    pub attended_j: FeatureMap,
    pub motion_ij: MotionField,
    pub motion_ji: MotionField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolator {
    pub extractor: AppearanceExtractor,
    pub projections: Projections,
    pub window: usize,
    /// Linear layer + sigmoid over `[Ã_i, Ã_j, Δ/g]`.
    pub mask: MlpModel,
    /// Per-pixel residual network over a 3×3 patch of the fused frame and
    /// the two frames' features.
    pub refine: MlpModel,
}

/// Inputs to the mask and refine networks for one intermediate frame.
struct Heads {
    warped_i: Frame,
    warped_j: Frame,
    mask_in: Vec<f64>,
}

impl Interpolator {
    pub fn new(cfg: &InterpConfig) -> Result<Self> {
        if cfg.window % 2 == 0 {
            return Err(Error::invalid(format!(
                "attention window {} must be odd",
                cfg.window
            )));
        }
        let extractor = AppearanceExtractor::new(cfg.base_channels, cfg.coarse_weight, cfg.seed)?;
        let projections = Projections::gaussian_kernel(cfg.base_channels, cfg.temperature);
        let ca = cfg.base_channels + 2;
        let mask = MlpModel::zeros(&[2 * ca + 1, 1], Activation::Sigmoid)?;
        let mut refine = MlpModel::new(
            &[
                9 * CHANNELS + 2 * cfg.base_channels,
                cfg.refine_hidden,
                cfg.refine_hidden,
                CHANNELS,
            ],
            Activation::Relu,
            cfg.seed.wrapping_add(17),
        )?
        .with_output_activation(Activation::Identity);
        refine.zero_output_layer();
        Ok(Interpolator {
            extractor,
            projections,
            window: cfg.window,
            mask,
            refine,
        })
    }

    pub fn analyze(&self, xi: &Frame, xj: &Frame) -> Result<PairAnalysis> {
        let features_i = self.extractor.extract(xi)?;
        let features_j = self.extractor.extract(xj)?;
        let (ai, aj) = (augment(&features_i.fused), augment(&features_j.fused));
        let (attended_i, s_ij) = interframe_attention(&ai, &aj, self.window, &self.projections)?;
        let (attended_j, s_ji) = interframe_attention(&aj, &ai, self.window, &self.projections)?;
        let (_, s_ii) = interframe_attention(&ai, &ai, self.window, &self.projections)?;
        let (_, s_jj) = interframe_attention(&aj, &aj, self.window, &self.projections)?;
        Ok(PairAnalysis {
            features_i,
            features_j,
            attended_i,
            attended_j,
            motion_ij: relative_motion(&motion_vector(&s_ij), &motion_vector(&s_ii)),
            motion_ji: relative_motion(&motion_vector(&s_ji), &motion_vector(&s_jj)),
        })
    }

    fn heads(
        &self,
        xi: &Frame,
        xj: &Frame,
        pair: &PairAnalysis,
        delta: usize,
        gap: usize,
    ) -> Result<Heads> {
        let (d, g) = (delta as f64, gap as f64);
        let flow_i = upsample_motion(&scale_motion(&pair.motion_ji, d, g)?, xi.height, xi.width);
        let flow_j = upsample_motion(
            &scale_motion(&pair.motion_ij, g - d, g)?,
            xi.height,
            xi.width,
        );
        let warped_i = backward_warp(xi, &flow_i)?;
        let warped_j = backward_warp(xj, &flow_j)?;
        let ca = pair.attended_i.channels;
        let n = xi.height * xi.width;
        let mut mask_in = Vec::with_capacity(n * (2 * ca + 1));
        for p in 0..n {
            mask_in.extend_from_slice(&pair.attended_i.data[p * ca..(p + 1) * ca]);
            mask_in.extend_from_slice(&pair.attended_j.data[p * ca..(p + 1) * ca]);
            mask_in.push(d / g);
        }
        Ok(Heads {
            warped_i,
            warped_j,
            mask_in,
        })
    }

    fn refine_inputs(&self, fused: &Frame, pair: &PairAnalysis) -> Vec<f64> {
        assemble_refine(fused, &pair_features(pair))
    }

    /// Add the refine residual (in 0–255 units) and clamp.
    pub fn refine_frame(&self, fused: &Frame, pair: &PairAnalysis) -> Result<Frame> {
        let n = fused.height * fused.width;
        let residual = self
            .refine
            .forward_rows(&self.refine_inputs(fused, pair), n)?;
        let mut out = fused.clone();
        for (v, r) in out.values.iter_mut().zip(&residual) {
            *v = (*v + 255.0 * r).clamp(0.0, 255.0);
        }
        Ok(out)
    }

    /// Mask-fused frame before refinement.
    pub fn fused_frame(
        &self,
        xi: &Frame,
        xj: &Frame,
        pair: &PairAnalysis,
        delta: usize,
        gap: usize,
    ) -> Result<Frame> {
        let heads = self.heads(xi, xj, pair, delta, gap)?;
        let mask = self
            .mask
            .forward_rows(&heads.mask_in, xi.height * xi.width)?;
        Ok(fuse(&heads.warped_i, &heads.warped_j, &mask))
    }

    /// Synthesize the frame at offset `delta` inside a gap of `gap` frames.
    pub fn interpolate_frame(
        &self,
        xi: &Frame,
        xj: &Frame,
        pair: &PairAnalysis,
        delta: usize,
        gap: usize,
    ) -> Result<Frame> {
        let fused = self.fused_frame(xi, xj, pair, delta, gap)?;
        self.refine_frame(&fused, pair)
    }

    /// Fill every gap between consecutive keyframes. `keyframes[n]` sits at
    /// 0-based position `indices[n]`; keyframe positions are copied verbatim.
    pub fn interpolate_video(
        &self,
        keyframes: &[Frame],
        indices: &[usize],
        frames: usize,
    ) -> Result<Vec<Frame>> {
        if keyframes.len() < 2 || keyframes.len() != indices.len() {
            return Err(Error::invalid(format!(
                "interpolation needs at least two keyframes with matching indices, got {} frames and {} indices",
                keyframes.len(),
                indices.len()
            )));
        }
        if indices[0] != 0
            || *indices.last().unwrap() != frames - 1
            || indices.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid(format!(
                "keyframe indices {indices:?} must increase strictly from 0 to {}",
                frames - 1
            )));
        }
        let mut out: Vec<Option<Frame>> = vec![None; frames];
        for (k, &i) in keyframes.iter().zip(indices) {
            out[i] = Some(k.clone());
        }
        for (pair_idx, w) in indices.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if gap < 2 {
                continue;
            }
            let (xi, xj) = (&keyframes[pair_idx], &keyframes[pair_idx + 1]);
            let pair = self.analyze(xi, xj)?;
            for delta in 1..gap {
                out[w[0] + delta] = Some(self.interpolate_frame(xi, xj, &pair, delta, gap)?);
            }
        }
        Ok(out
            .into_iter()
            .map(|f| f.expect("every position is filled"))
            .collect())
    }
}

fn assemble_refine(fused: &Frame, pair_features: &[f64]) -> Vec<f64> {
    let (h, w) = (fused.height, fused.width);
    let pf = pair_features.len() / (h * w);
    let mut rows = Vec::with_capacity(h * w * (9 * CHANNELS + pf));
    for y in 0..h {
        for x in 0..w {
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let ny = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                    let nx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    for c in 0..CHANNELS {
                        rows.push(fused.at(ny, nx, c) / 255.0);
                    }
                }
            }
            let p = y * w + x;
            rows.extend_from_slice(&pair_features[p * pf..(p + 1) * pf]);
        }
    }
    rows
}

/// `[f_i, f_j]` per pixel.
fn pair_features(pair: &PairAnalysis) -> Vec<f64> {
    let cf = pair.features_i.fused.channels;
    let n = pair.features_i.fused.height * pair.features_i.fused.width;
    let mut out = Vec::with_capacity(n * 2 * cf);
    for p in 0..n {
        out.extend_from_slice(&pair.features_i.fused.data[p * cf..(p + 1) * cf]);
        out.extend_from_slice(&pair.features_j.fused.data[p * cf..(p + 1) * cf]);
    }
    out
}

/// Precomputed inputs for training the mask and refine heads on one
/// `(x_i, x_mid, x_j)` sample.
pub struct TrainingSample {
    warped_i: Frame,
    warped_j: Frame,
    mask_in: Vec<f64>,
    pair_features: Vec<f64>,
    target: Frame,
}

impl Interpolator {
    /// Cache everything the trainable heads do not influence.
    pub fn training_sample(
        &self,
        xi: &Frame,
        target: &Frame,
        xj: &Frame,
        delta: usize,
        gap: usize,
    ) -> Result<TrainingSample> {
        let pair = self.analyze(xi, xj)?;
        let heads = self.heads(xi, xj, &pair, delta, gap)?;
        let pair_features = pair_features(&pair);
        Ok(TrainingSample {
            warped_i: heads.warped_i,
            warped_j: heads.warped_j,
            mask_in: heads.mask_in,
            pair_features,
            target: target.clone(),
        })
    }

    /// Per-element MSE (0–255 scale) of the current heads on a sample.
    pub fn sample_loss(&self, s: &TrainingSample) -> Result<f64> {
        Ok(self.forward_sample(s)?.0)
    }

    /// Loss, refine inputs and prediction.
    fn forward_sample(&self, s: &TrainingSample) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let n = s.target.height * s.target.width;
        let mask = self.mask.forward_rows(&s.mask_in, n)?;
        let fused = fuse(&s.warped_i, &s.warped_j, &mask);
        let refine_in = assemble_refine(&fused, &s.pair_features);
        let residual = self.refine.forward_rows(&refine_in, n)?;
        let pred: Vec<f64> = fused
            .values
            .iter()
            .zip(&residual)
            .map(|(f, r)| (f + 255.0 * r).clamp(0.0, 255.0))
            .collect();
        let loss = pred
            .iter()
            .zip(&s.target.values)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / pred.len() as f64;
        Ok((loss, refine_in, pred))
    }

    /// One SGD step of the mask and refine heads on a sample; returns the
    /// loss before the step. The loss is taken on the 0–1 pixel scale so
    /// learning rates do not depend on the 8-bit range.
    pub fn train_step(
        &mut self,
        s: &TrainingSample,
        lr: f64,
        mask_opt: &mut Momentum,
        refine_opt: &mut Momentum,
    ) -> Result<f64> {
        let (h, w) = (s.target.height, s.target.width);
        let n = h * w;
        let (loss, refine_in, pred) = self.forward_sample(s)?;
        let count = pred.len() as f64;
        // d loss / d pred on the 0–1 scale, zero where clamping is active.
        let d_pred: Vec<f64> = pred
            .iter()
            .zip(&s.target.values)
            .map(|(p, t)| {
                if *p <= 0.0 || *p >= 255.0 {
                    0.0
                } else {
                    2.0 * (p - t) / (255.0 * count)
                }
            })
            .collect();
        // pred = fused + 255·r on the 0–255 scale equals fused/255 + r on 0–1.
        let (refine_grads, refine_dx) = self.refine.backward_rows(&refine_in, &d_pred, n)?;
        let width_in = self.refine.input_width();
        let mut d_fused: Vec<f64> = d_pred.clone();
        for y in 0..h {
            for x in 0..w {
                let row = &refine_dx[(y * w + x) * width_in..];
                let mut k = 0;
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let ny = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                        let nx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                        for c in 0..CHANNELS {
                            d_fused[(ny * w + nx) * CHANNELS + c] += row[k];
                            k += 1;
                        }
                    }
                }
            }
        }
        // fused/255 = O·w_i/255 + (1 − O)·w_j/255.
        let d_mask: Vec<f64> = (0..n)
            .map(|p| {
                (0..CHANNELS)
                    .map(|c| {
                        let k = p * CHANNELS + c;
                        d_fused[k] * (s.warped_i.values[k] - s.warped_j.values[k]) / 255.0
                    })
                    .sum()
            })
            .collect();
        let (mask_grads, _) = self.mask.backward_rows(&s.mask_in, &d_mask, n)?;
        mask_opt.step(&mut self.mask, &mask_grads, lr)?;
        refine_opt.step(&mut self.refine, &refine_grads, lr)?;
        Ok(loss)
    }
}

/// Train the mask and refine heads over `samples` for `epochs` passes in a
/// seeded shuffled order. Returns per-epoch mean losses.
pub fn train_heads(
    interp: &mut Interpolator,
    samples: &[TrainingSample],
    epochs: usize,
    lr: f64,
    momentum: f64,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let mut mask_opt = Momentum::new(momentum)?;
    let mut refine_opt = Momentum::new(momentum)?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut total = 0.0;
        for &i in &order {
            let loss = interp.train_step(&samples[i], lr, &mut mask_opt, &mut refine_opt)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    stage: "interpolation".into(),
                    detail: format!("loss {loss} in epoch {epoch}"),
                });
            }
            total += loss;
        }
        history.push(total / samples.len().max(1) as f64);
    }
    Ok(history)
}
