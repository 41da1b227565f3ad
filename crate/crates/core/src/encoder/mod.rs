//! Semantic encoder: variational features, inter-frame differences, sparse
//! residual coding and latency-budgeted keyframe selection.

mod frames;
mod keyframe;
mod sparse;

pub use frames::{read_ppm, Frame, FrameSequence, CHANNELS};
pub use keyframe::{
    pair_score, payload_dims_for, priority, select_keyframes, KeyframePayload, KeyframePlan,
    PriorityKind, SelectionParams,
};
pub use sparse::{sparsify, SparseDiff};

use crate::error::{Error, Result};
use crate::ndnet::{MlpModel, NdArray};

/// Per-frame mean and log standard deviation, both `F × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalLatent {
    pub mu: NdArray,
    pub log_sigma: NdArray,
}

impl VariationalLatent {
    pub fn frame_count(&self) -> usize {
        self.mu.rows()
    }

    pub fn dim(&self) -> usize {
        self.mu.shape().last()
    }

    /// Mean vectors as one `Vec` per frame.
    pub fn means(&self) -> Vec<Vec<f64>> {
        (0..self.frame_count())
            .map(|i| self.mu.row(i).to_vec())
            .collect()
    }
}

/// Scale 8-bit pixels to `[0, 1]`.
pub fn normalize_pixels(px: &[u8]) -> Vec<f64> {
    px.iter().map(|&p| f64::from(p) / 255.0).collect()
}

/// Run the encoder over every frame. The encoder maps `H·W·C` normalized
/// pixels to `2d` outputs, split into `μ` (first half) and `log σ`.
pub fn extract_features(seq: &FrameSequence, enc: &MlpModel) -> Result<VariationalLatent> {
    if enc.input_width() != seq.frame_len() {
        return Err(Error::ShapeMismatch {
            op: "extract_features",
            expected: vec![enc.input_width()],
            found: vec![seq.height(), seq.width(), seq.channels()],
        });
    }
    if enc.output_width() % 2 != 0 {
        return Err(Error::invalid(format!(
            "encoder output width {} must be even (mean and log-sigma halves)",
            enc.output_width()
        )));
    }
    let f = seq.frame_count();
    let out = enc.forward_rows(&normalize_pixels(seq.pixels()), f)?;
    let d = enc.output_width() / 2;
    let mut mu = Vec::with_capacity(f * d);
    let mut log_sigma = Vec::with_capacity(f * d);
    for row in out.chunks_exact(2 * d) {
        mu.extend_from_slice(&row[..d]);
        log_sigma.extend_from_slice(&row[d..]);
    }
    Ok(VariationalLatent {
        mu: NdArray::matrix(f, d, mu)?,
        log_sigma: NdArray::matrix(f, d, log_sigma)?,
    })
}

/// `1 − cos∠(a, b)`, in `[0, 2]`.
pub fn cosine_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            op: "cosine_diff",
            expected: vec![a.len()],
            found: vec![b.len()],
        });
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 {
        return Err(Error::invalid("first vector has zero norm"));
    }
    if nb == 0.0 {
        return Err(Error::invalid("second vector has zero norm"));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((1.0 - dot / (na * nb)).clamp(0.0, 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndnet::Activation;

    #[test]
    fn cosine_cases() {
        let a = [1.0, 2.0, 3.0];
        assert!(cosine_diff(&a, &a).unwrap().abs() < 1e-15);
        assert!((cosine_diff(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_diff(&a, &[-1.0, -2.0, -3.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(cosine_diff(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn zero_encoder_returns_bias() {
        let mut enc = MlpModel::zeros(&[12, 4], Activation::Identity).unwrap();
        enc.layers_mut()[0].biases = vec![0.5, -1.0, 0.1, 0.2];
        let seq = FrameSequence::new(2, 2, 2, (0..24).collect()).unwrap();
        let lat = extract_features(&seq, &enc).unwrap();
        assert_eq!(lat.mu.row(0), &[0.5, -1.0]);
        assert_eq!(lat.mu.row(1), &[0.5, -1.0]);
        assert_eq!(lat.log_sigma.row(1), &[0.1, 0.2]);
    }
}
