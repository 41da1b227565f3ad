//! Noise estimators `ε(x_t, t)`: learned networks and closed-form priors.

use super::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::ndnet::MlpModel;
use crate::rng::{normal, uniform, Rng};

/// Predicts the noise that produced a diffused state at step `t`.
pub trait NoiseEstimator: Sync {
    /// Width of the diffused variable.
    fn dim(&self) -> usize;

    fn predict(&self, x: &[f64], t: usize, sch: &NoiseSchedule) -> Result<Vec<f64>>;
}

/// Network input: the state followed by the scalar time feature `t / T`.
pub fn time_embedded(x: &[f64], t: usize, steps: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(x.len() + 1);
    v.extend_from_slice(x);
    v.push(t as f64 / steps as f64);
    v
}

impl NoiseEstimator for MlpModel {
    fn dim(&self) -> usize {
        self.output_width()
    }

    fn predict(&self, x: &[f64], t: usize, sch: &NoiseSchedule) -> Result<Vec<f64>> {
        if self.input_width() != x.len() + 1 || self.output_width() != x.len() {
            return Err(Error::ShapeMismatch {
                op: "noise estimator",
                expected: vec![self.input_width() - 1],
                found: vec![x.len()],
            });
        }
        let out = self.forward_rows(&time_embedded(x, t, sch.steps()), 1)?;
        if let Some(index) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("noise estimate at step {t}"),
                index,
            });
        }
        Ok(out)
    }
}

/// Isotropic Gaussian mixture `Σ_k w_k N(μ_k, v I)`. Its diffused marginals
/// stay Gaussian mixtures, so the optimal noise estimate is available in
/// closed form. With `v = 0` it is an empirical (point-mass) prior.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variance: f64,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, variance: f64) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() {
            return Err(Error::invalid("mixture needs one weight per component"));
        }
        let dim = means[0].len();
        if dim == 0 || means.iter().any(|m| m.len() != dim) {
            return Err(Error::invalid(
                "mixture components must share a positive width",
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) || !(variance >= 0.0) {
            return Err(Error::invalid(
                "mixture weights must be positive and variance nonnegative",
            ));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(GaussianMixture {
            weights,
            means,
            variance,
        })
    }

    /// Equal-weight point masses at the given samples.
    pub fn empirical(samples: Vec<Vec<f64>>) -> Result<Self> {
        let n = samples.len();
        Self::new(vec![1.0; n], samples, 0.0)
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let u = uniform(rng);
        let mut acc = 0.0;
        let mut k = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        let sd = self.variance.sqrt();
        self.means[k].iter().map(|m| m + sd * normal(rng)).collect()
    }

    /// Score `∇ log p_t(x)` of the mixture diffused to step `t` (`t = 0`
    /// is the clean prior and needs `v > 0`).
    pub fn score(&self, x: &[f64], t: usize, sch: &NoiseSchedule) -> Vec<f64> {
        let ab = sch.alpha_bar(t);
        let var = ab * self.variance + (1.0 - ab);
        let scale = ab.sqrt();
        let log_w: Vec<f64> = self
            .means
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| {
                let d2: f64 = x
                    .iter()
                    .zip(m)
                    .map(|(xi, mi)| (xi - scale * mi).powi(2))
                    .sum();
                w.ln() - d2 / (2.0 * var)
            })
            .collect();
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let post: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = post.iter().sum();
        let mut score = vec![0.0; x.len()];
        for (m, p) in self.means.iter().zip(&post) {
            let p = p / z;
            for ((s, xi), mi) in score.iter_mut().zip(x).zip(m) {
                *s -= p * (xi - scale * mi) / var;
            }
        }
        score
    }
}

impl NoiseEstimator for GaussianMixture {
    fn dim(&self) -> usize {
        self.means[0].len()
    }

    fn predict(&self, x: &[f64], t: usize, sch: &NoiseSchedule) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                op: "noise estimator",
                expected: vec![self.dim()],
                found: vec![x.len()],
            });
        }
        let s = (1.0 - sch.alpha_bar(t)).sqrt();
        Ok(self.score(x, t, sch).into_iter().map(|g| -s * g).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_gaussian_score_is_linear() {
        let sch = NoiseSchedule::linear(10, 1e-3, 0.2).unwrap();
        let g = GaussianMixture::new(vec![1.0], vec![vec![1.0]], 0.5).unwrap();
        let t = 4;
        let ab = sch.alpha_bar(t);
        let var = ab * 0.5 + 1.0 - ab;
        let s = g.score(&[2.0], t, &sch)[0];
        assert!((s + (2.0 - ab.sqrt()) / var).abs() < 1e-14);
    }

    #[test]
    fn mlp_estimator_checks_width() {
        let sch = NoiseSchedule::linear(10, 1e-3, 0.2).unwrap();
        let m = MlpModel::zeros(&[3, 2], crate::ndnet::Activation::Identity).unwrap();
        assert!(m.predict(&[0.0, 1.0], 3, &sch).is_ok());
        assert!(m.predict(&[0.0], 3, &sch).is_err());
    }
}
