//! Reconstruction-quality metrics.

use rand::Rng as _;

use crate::encoder::FrameSequence;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Peak pixel value for PSNR.
pub const MAX_PIXEL: f64 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    /// `+∞` when `mse = 0`.
    pub psnr_db: f64,
    pub per_frame_mse: Vec<f64>,
}

impl MetricReport {
    pub fn compare(a: &FrameSequence, b: &FrameSequence) -> Result<Self> {
        check_extents(a, b)?;
        let per_frame_mse: Vec<f64> = (0..a.frame_count())
            .map(|i| slice_mse(a.frame(i), b.frame(i)))
            .collect();
        let mse = per_frame_mse.iter().sum::<f64>() / per_frame_mse.len() as f64;
        Ok(MetricReport {
            mse,
            psnr_db: psnr(mse)?,
            per_frame_mse,
        })
    }
}

fn check_extents(a: &FrameSequence, b: &FrameSequence) -> Result<()> {
    let ea = [a.frame_count(), a.height(), a.width(), a.channels()];
    let eb = [b.frame_count(), b.height(), b.width(), b.channels()];
    if ea != eb {
        return Err(Error::ShapeMismatch {
            op: "mse",
            expected: ea.to_vec(),
            found: eb.to_vec(),
        });
    }
    Ok(())
}

fn slice_mse(a: &[u8], b: &[u8]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2))
        .sum::<f64>()
        / a.len() as f64
}

/// Mean squared pixel difference over all `F·H·W·C` elements.
pub fn mse(a: &FrameSequence, b: &FrameSequence) -> Result<f64> {
    check_extents(a, b)?;
    Ok(slice_mse(a.pixels(), b.pixels()))
}

/// `10·log10(255² / mse)`; `+∞` for a perfect match.
pub fn psnr(mse: f64) -> Result<f64> {
    if !(mse >= 0.0) {
        return Err(Error::invalid(format!("MSE {mse} must be nonnegative")));
    }
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (MAX_PIXEL * MAX_PIXEL / mse).log10())
}

/// Fréchet distance between diagonal-covariance Gaussian fits of two latent
/// clouds: `‖μa − μb‖² + Σ_k (σa_k − σb_k)²`.
pub fn latent_frechet(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples per set, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let d = a[0].len();
    if a.iter().chain(b).any(|v| v.len() != d) {
        return Err(Error::invalid("latent samples have inconsistent widths"));
    }
    let (ma, va) = moments(a, d);
    let (mb, vb) = moments(b, d);
    Ok((0..d)
        .map(|k| (ma[k] - mb[k]).powi(2) + va[k] + vb[k] - 2.0 * (va[k] * vb[k]).sqrt())
        .sum::<f64>()
        .max(0.0))
}

/// Per-dimension mean and unbiased variance.
fn moments(x: &[Vec<f64>], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let mut mean = vec![0.0; d];
    for v in x {
        mean.iter_mut().zip(v).for_each(|(m, a)| *m += a / n);
    }
    let mut var = vec![0.0; d];
    for v in x {
        var.iter_mut()
            .zip(v)
            .zip(&mean)
            .for_each(|((s, a), m)| *s += (a - m).powi(2) / (n - 1.0));
    }
    (mean, var)
}

/// Percentile-bootstrap confidence interval for the mean.
pub fn bootstrap_mean_ci(
    values: &[f64],
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::invalid("bootstrap needs at least one value"));
    }
    if !(level > 0.0 && level < 1.0) || resamples == 0 {
        return Err(Error::invalid(
            "bootstrap level must lie in (0, 1) with at least one resample",
        ));
    }
    let mut rng = rng_from_seed(seed);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let lo = ((tail * resamples as f64).floor() as usize).min(resamples - 1);
    let hi = (((1.0 - tail) * resamples as f64).ceil() as usize)
        .saturating_sub(1)
        .min(resamples - 1);
    Ok((means[lo], means[hi]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_reference_points() {
        assert!(psnr(65025.0).unwrap().abs() < 1e-12);
        assert!((psnr(650.25).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(psnr(0.0).unwrap(), f64::INFINITY);
        assert!(psnr(-1.0).is_err());
    }

    #[test]
    fn mse_extremes() {
        let a = FrameSequence::new(2, 1, 1, vec![0; 6]).unwrap();
        let b = FrameSequence::new(2, 1, 1, vec![255; 6]).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 65025.0);
        let c = FrameSequence::new(3, 1, 1, vec![0; 9]).unwrap();
        assert!(mse(&a, &c).is_err());
    }

    #[test]
    fn frechet_shifted_unit_clouds() {
        let a = vec![vec![-1.0], vec![1.0]];
        let b = vec![vec![2.0], vec![4.0]];
        assert!((latent_frechet(&a, &b).unwrap() - 9.0).abs() < 1e-12);
        assert_eq!(latent_frechet(&a, &a).unwrap(), 0.0);
        assert!(latent_frechet(&a[..1], &b).is_err());
    }

    #[test]
    fn bootstrap_brackets_the_mean() {
        let v: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let (lo, hi) = bootstrap_mean_ci(&v, 0.95, 2000, 1).unwrap();
        assert!(lo < 24.5 && 24.5 < hi);
    }
}
