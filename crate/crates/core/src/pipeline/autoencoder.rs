//! Variational autoencoder training and latent normalization.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::diffusion::TrainReport;
use crate::error::{Error, Result};
use crate::ndnet::{MlpModel, Momentum};
use crate::rng::{normal_vec, Rng};

const LOG_SIGMA_RANGE: (f64, f64) = (-10.0, 5.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaeTrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub kl_weight: f64,
}

/// Per-frame loss: summed squared pixel error on `[0, 1]` pixels plus
/// `kl_weight` times the KL divergence to a standard normal.
///
/// `frames` holds one normalized pixel row per frame. Both models are updated
/// in place; the report records each step's mean per-frame loss.
pub fn train_vae(
    enc: &mut MlpModel,
    dec: &mut MlpModel,
    frames: &[Vec<f64>],
    cfg: &VaeTrainConfig,
    rng: &mut Rng,
) -> Result<TrainReport> {
    let d = dec.input_width();
    if enc.output_width() != 2 * d || enc.input_width() != dec.output_width() {
        return Err(Error::ShapeMismatch {
            op: "train_vae",
            expected: vec![dec.output_width(), 2 * d],
            found: vec![enc.input_width(), enc.output_width()],
        });
    }
    if frames.is_empty() || cfg.batch == 0 {
        return Err(Error::invalid(
            "autoencoder training needs frames and a positive batch",
        ));
    }
    let px = enc.input_width();
    let b = cfg.batch;
    let mut enc_opt = Momentum::new(cfg.momentum)?;
    let mut dec_opt = Momentum::new(cfg.momentum)?;
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let mut x = Vec::with_capacity(b * px);
        for _ in 0..b {
            x.extend_from_slice(&frames[rng.gen_range(0..frames.len())]);
        }
        let stats = enc.forward_rows(&x, b)?;
        let eps = normal_vec(rng, b * d);
        let mut z = vec![0.0; b * d];
        let mut sigma = vec![0.0; b * d];
        let mut kl = 0.0;
        for r in 0..b {
            for j in 0..d {
                let mu = stats[r * 2 * d + j];
                let ls = stats[r * 2 * d + d + j].clamp(LOG_SIGMA_RANGE.0, LOG_SIGMA_RANGE.1);
                let s = ls.exp();
                sigma[r * d + j] = s;
                z[r * d + j] = mu + s * eps[r * d + j];
                kl += 0.5 * (mu * mu + s * s - 1.0 - 2.0 * ls);
            }
        }
        let recon = dec.forward_rows(&z, b)?;
        let mut sq = 0.0;
        let up: Vec<f64> = recon
            .iter()
            .zip(&x)
            .map(|(y, t)| {
                sq += (y - t) * (y - t);
                2.0 * (y - t) / b as f64
            })
            .collect();
        let loss = (sq + cfg.kl_weight * kl) / b as f64;
        if !loss.is_finite() || loss > crate::diffusion::DIVERGENCE_LOSS {
            return Err(Error::Divergence {
                stage: "autoencoder".into(),
                detail: format!("loss {loss} at step {step}"),
            });
        }
        losses.push(loss);
        let (dec_grads, dz) = dec.backward_rows(&z, &up, b)?;
        let mut enc_up = vec![0.0; b * 2 * d];
        for r in 0..b {
            for j in 0..d {
                let mu = stats[r * 2 * d + j];
                let raw_ls = stats[r * 2 * d + d + j];
                let s = sigma[r * d + j];
                let g = dz[r * d + j];
                enc_up[r * 2 * d + j] = g + cfg.kl_weight * mu / b as f64;
                let in_range = raw_ls > LOG_SIGMA_RANGE.0 && raw_ls < LOG_SIGMA_RANGE.1;
                enc_up[r * 2 * d + d + j] = if in_range {
                    g * s * eps[r * d + j] + cfg.kl_weight * (s * s - 1.0) / b as f64
                } else {
                    0.0
                };
            }
        }
        let (enc_grads, _) = enc.backward_rows(&x, &enc_up, b)?;
        dec_opt.step(dec, &dec_grads, cfg.learning_rate)?;
        enc_opt.step(enc, &enc_grads, cfg.learning_rate)?;
    }
    Ok(TrainReport {
        steps: cfg.steps,
        losses,
    })
}

/// Encoder means for each normalized pixel row.
pub fn encode_means(enc: &MlpModel, frames: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = enc.output_width() / 2;
    let flat: Vec<f64> = frames.iter().flatten().copied().collect();
    let out = enc.forward_rows(&flat, frames.len())?;
    Ok(out.chunks_exact(2 * d).map(|c| c[..d].to_vec()).collect())
}

/// Per-dimension affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl LatentNorm {
    /// Dimensions with (near) zero spread keep a unit scale.
    pub fn fit(latents: &[Vec<f64>]) -> Result<Self> {
        let n = latents.len();
        if n < 2 {
            return Err(Error::invalid(
                "latent normalization needs at least two samples",
            ));
        }
        let d = latents[0].len();
        let mut mean = vec![0.0; d];
        for z in latents {
            if z.len() != d {
                return Err(Error::ShapeMismatch {
                    op: "LatentNorm::fit",
                    expected: vec![d],
                    found: vec![z.len()],
                });
            }
            mean.iter_mut().zip(z).for_each(|(m, v)| *m += v / n as f64);
        }
        let mut var = vec![0.0; d];
        for z in latents {
            var.iter_mut()
                .zip(z.iter().zip(&mean))
                .for_each(|(s, (v, m))| *s += (v - m) * (v - m));
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / (n - 1) as f64).sqrt();
                if sd > 1e-8 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(LatentNorm { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndnet::Activation;
    use crate::rng::rng_from_seed;

    #[test]
    fn norm_round_trip() {
        let data = vec![
            vec![1.0, 5.0, 2.0],
            vec![3.0, 5.0, -2.0],
            vec![2.0, 5.0, 0.0],
        ];
        let n = LatentNorm::fit(&data).unwrap();
        assert_eq!(n.std[1], 1.0);
        for z in &data {
            let back = n.denormalize(&n.normalize(z));
            for (a, b) in back.iter().zip(z) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tiny_vae_loss_drops() {
        let frames: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..12).map(|j| ((i * 12 + j) % 5) as f64 / 4.0).collect())
            .collect();
        let mut enc = MlpModel::new(&[12, 16, 4], Activation::Relu, 1)
            .unwrap()
            .with_output_activation(Activation::Identity);
        let mut dec = MlpModel::new(&[2, 16, 12], Activation::Relu, 2)
            .unwrap()
            .with_output_activation(Activation::Sigmoid);
        let cfg = VaeTrainConfig {
            steps: 600,
            batch: 4,
            learning_rate: 0.02,
            momentum: 0.9,
            kl_weight: 1e-3,
        };
        let rep = train_vae(&mut enc, &mut dec, &frames, &cfg, &mut rng_from_seed(0)).unwrap();
        let (head, tail) = rep.head_tail(20);
        assert!(tail < 0.5 * head, "{head} -> {tail}");
    }
}
