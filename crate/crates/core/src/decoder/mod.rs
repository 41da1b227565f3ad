//! Receiver side: keyframe reconstruction from latents and attention-based
//! interpolation of the frames in between.

mod attention;
mod interp;
mod warp;

pub use attention::{
    interframe_attention, motion_vector, scale_motion, AttentionMap, FeatureMap, MotionField,
    Projections,
};
pub use interp::{
    augment, train_heads, AppearanceExtractor, AppearanceFeatures, InterpConfig, Interpolator,
    PairAnalysis, TrainingSample, SCALES,
};
pub use warp::{backward_warp, bilinear, fuse, upsample_motion, warp_fuse};

use crate::encoder::{Frame, KeyframePayload, CHANNELS};
use crate::error::{Error, Result};
use crate::ndnet::{Activation, MlpModel};

/// Latent-to-frame network with a sigmoid head, scaled to 0–255.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderNet {
    model: MlpModel,
    height: usize,
    width: usize,
}

impl DecoderNet {
    pub fn new(model: MlpModel, height: usize, width: usize) -> Result<Self> {
        if model.output_width() != height * width * CHANNELS {
            return Err(Error::ShapeMismatch {
                op: "DecoderNet::new",
                expected: vec![height, width, CHANNELS],
                found: vec![model.output_width()],
            });
        }
        if model.output_activation() != Activation::Sigmoid {
            return Err(Error::invalid("decoder output activation must be sigmoid"));
        }
        Ok(DecoderNet {
            model,
            height,
            width,
        })
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut MlpModel {
        &mut self.model
    }

    pub fn latent_dim(&self) -> usize {
        self.model.input_width()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn decode(&self, latent: &[f64]) -> Result<Frame> {
        Ok(self.decode_many(&[latent.to_vec()])?.remove(0))
    }

    pub fn decode_many(&self, latents: &[Vec<f64>]) -> Result<Vec<Frame>> {
        let flat: Vec<f64> = latents.iter().flatten().copied().collect();
        let out = self.model.forward_rows(&flat, latents.len())?;
        Ok(out
            .chunks_exact(self.height * self.width * CHANNELS)
            .map(|c| Frame {
                height: self.height,
                width: self.width,
                values: c.iter().map(|v| 255.0 * v).collect(),
            })
            .collect())
    }
}

/// Rebuild keyframe latents from the base latent and the sparse residuals,
/// then decode each one.
pub fn reconstruct_keyframes(payload: &KeyframePayload, dec: &DecoderNet) -> Result<Vec<Frame>> {
    if payload.base.is_empty() {
        return Err(Error::invalid("payload has no base latent"));
    }
    if payload.base.len() != dec.latent_dim() {
        return Err(Error::ShapeMismatch {
            op: "reconstruct_keyframes",
            expected: vec![dec.latent_dim()],
            found: vec![payload.base.len()],
        });
    }
    dec.decode_many(&payload.decode())
}
