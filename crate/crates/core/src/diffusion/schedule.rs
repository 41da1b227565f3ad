//! Linear variance schedule and the closed-form algebra built on it.
//!
//! Steps are numbered `1..=T`; `ᾱ₀ = 1` by convention.

use crate::error::{Error, Result};
use crate::ndnet::ScheduleStamp;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    beta_start: f64,
    beta_end: f64,
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// `T` betas spaced linearly from `beta_start` to `beta_end`.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("a noise schedule needs at least one step"));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::invalid(format!(
                "need 0 < beta_start ≤ beta_end < 1, got {beta_start} and {beta_end}"
            )));
        }
        let betas: Vec<f64> = if steps == 1 {
            vec![beta_start]
        } else {
            (0..steps)
                .map(|i| beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64)
                .collect()
        };
        let mut alpha_bars = Vec::with_capacity(steps);
        let mut acc = 1.0;
        for b in &betas {
            acc *= 1.0 - b;
            alpha_bars.push(acc);
        }
        Ok(NoiseSchedule {
            beta_start,
            beta_end,
            betas,
            alpha_bars,
        })
    }

    pub fn from_stamp(stamp: &ScheduleStamp) -> Result<Self> {
        Self::linear(stamp.steps as usize, stamp.beta_start, stamp.beta_end)
    }

    pub fn stamp(&self) -> ScheduleStamp {
        ScheduleStamp {
            steps: self.steps() as u32,
            beta_start: self.beta_start,
            beta_end: self.beta_end,
        }
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta_start(&self) -> f64 {
        self.beta_start
    }

    pub fn beta_end(&self) -> f64 {
        self.beta_end
    }

    fn check(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::invalid(format!(
                "step {t} outside 1..={}",
                self.steps()
            )));
        }
        Ok(())
    }

    /// `β_t`; panics outside `1..=T`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        1.0 - self.betas[t - 1]
    }

    /// `ᾱ_t`, with `ᾱ₀ = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    /// Ratio `(1 − ᾱ_t) / (1 − ᾱ_{t−1})`, taken as 1 at `t = 1` where the
    /// denominator vanishes.
    pub fn variance_ratio(&self, t: usize) -> f64 {
        if t == 1 {
            1.0
        } else {
            (1.0 - self.alpha_bar(t)) / (1.0 - self.alpha_bar(t - 1))
        }
    }

    /// Weight `w_t = −(1 − ᾱ_t) / (β_t (1 − ᾱ_{t−1}))` of the likelihood
    /// gradient; at `t = 1` this is `−1/β₁`.
    pub fn likelihood_weight(&self, t: usize) -> f64 {
        -self.variance_ratio(t) / self.beta(t)
    }

    /// `z_t = √ᾱ_t·z₀ + √(1 − ᾱ_t)·ε`.
    pub fn forward_sample(&self, z0: &[f64], t: usize, eps: &[f64]) -> Result<Vec<f64>> {
        self.check(t)?;
        same_len("forward_sample", z0, eps)?;
        let (a, s) = (self.alpha_bar(t).sqrt(), (1.0 - self.alpha_bar(t)).sqrt());
        Ok(z0.iter().zip(eps).map(|(z, e)| a * z + s * e).collect())
    }

    /// Posterior-mean estimate `(z_t − √(1 − ᾱ_t)·ε̂) / √ᾱ_t`.
    pub fn tweedie_z0(&self, zt: &[f64], t: usize, eps_hat: &[f64]) -> Result<Vec<f64>> {
        self.check(t)?;
        same_len("tweedie_z0", zt, eps_hat)?;
        let (a, s) = (self.alpha_bar(t).sqrt(), (1.0 - self.alpha_bar(t)).sqrt());
        Ok(zt
            .iter()
            .zip(eps_hat)
            .map(|(z, e)| (z - s * e) / a)
            .collect())
    }

    /// `w_t · ∇_{z_t} ‖z′ − h·z_t‖²` with `∇ = −2h(z′ − h·z_t)`.
    pub fn likelihood_grad_z(
        &self,
        zt: &[f64],
        received: &[f64],
        h: f64,
        t: usize,
    ) -> Result<Vec<f64>> {
        self.check(t)?;
        same_len("likelihood_grad_z", zt, received)?;
        let w = self.likelihood_weight(t);
        Ok(zt
            .iter()
            .zip(received)
            .map(|(z, r)| w * (-2.0 * h * (r - h * z)))
            .collect())
    }

    /// `w_t · ∂/∂h ‖z′ − h·z‖² = w_t · (−2⟨z, z′ − h·z⟩)`.
    pub fn likelihood_grad_h(&self, z: &[f64], received: &[f64], h: f64, t: usize) -> Result<f64> {
        self.check(t)?;
        same_len("likelihood_grad_h", z, received)?;
        let w = self.likelihood_weight(t);
        let inner: f64 = z.iter().zip(received).map(|(z, r)| z * (r - h * z)).sum();
        Ok(w * (-2.0 * inner))
    }
}

fn same_len(op: &'static str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            op,
            expected: vec![a.len()],
            found: vec![b.len()],
        });
    }
    Ok(())
}
