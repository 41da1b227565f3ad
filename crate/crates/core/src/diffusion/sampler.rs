//! Reverse-diffusion denoisers for received latents.

use rand::Rng as _;

use super::estimator::NoiseEstimator;
use super::schedule::NoiseSchedule;
use crate::channel::{mmse_equalize, mmse_estimate_gain};
use crate::error::{Error, Result};
use crate::rng::{normal, normal_vec, rng_from_seed, Rng};

/// Per-step guidance strength for one branch.
#[derive(Debug, Clone, PartialEq)]
pub enum GuidanceSchedule {
    Constant(f64),
    /// One value per step, indexed by `t − 1`.
    PerStep(Vec<f64>),
    /// `β_t / (2 r_t σ²)` with `r_t = (1 − ᾱ_t)/(1 − ᾱ_{t−1})`. This makes
    /// the guided step a proper posterior update for observation noise of
    /// power `σ²`.
    NoiseMatched,
}

impl GuidanceSchedule {
    fn at(&self, t: usize, sch: &NoiseSchedule, noise_power: f64) -> f64 {
        match self {
            GuidanceSchedule::Constant(c) => *c,
            GuidanceSchedule::PerStep(v) => v[t - 1],
            GuidanceSchedule::NoiseMatched => {
                sch.beta(t) / (2.0 * sch.variance_ratio(t) * noise_power)
            }
        }
    }

    fn validate(&self, steps: usize) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        match self {
            GuidanceSchedule::Constant(c) if !ok(*c) => Err(Error::invalid(format!(
                "guidance weight {c} must be finite and ≥ 0"
            ))),
            GuidanceSchedule::PerStep(v) if v.len() != steps => Err(Error::invalid(format!(
                "per-step guidance has {} entries for {steps} steps",
                v.len()
            ))),
            GuidanceSchedule::PerStep(v) if !v.iter().all(|&x| ok(x)) => Err(Error::invalid(
                "per-step guidance weights must be finite and ≥ 0",
            )),
            _ => Ok(()),
        }
    }
}

/// Guidance strengths for the latent and gain branches.
///
/// With `cap = Some(c)`, each step's weight is limited so that the guided
/// move never exceeds a fraction `c` of the full jump onto the observation
/// (`ζ ≤ c / (r_t h²)` for the latent, `ζ ≤ c / (r_t ‖z‖²)` for the gain).
/// Without it a fixed weight overshoots whenever `h²` is large.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceWeights {
    pub latent: GuidanceSchedule,
    pub gain: GuidanceSchedule,
    pub cap: Option<f64>,
}

impl GuidanceWeights {
    pub fn constant(latent: f64, gain: f64) -> Self {
        GuidanceWeights {
            latent: GuidanceSchedule::Constant(latent),
            gain: GuidanceSchedule::Constant(gain),
            cap: None,
        }
    }

    pub fn noise_matched() -> Self {
        GuidanceWeights {
            latent: GuidanceSchedule::NoiseMatched,
            gain: GuidanceSchedule::NoiseMatched,
            cap: Some(0.5),
        }
    }

    pub fn with_cap(mut self, cap: Option<f64>) -> Self {
        self.cap = cap;
        self
    }

    pub fn validate(&self, steps: usize) -> Result<()> {
        self.latent.validate(steps)?;
        self.gain.validate(steps)?;
        if let Some(c) = self.cap {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("guidance cap {c} must be positive")));
            }
        }
        Ok(())
    }

    fn capped(&self, base: f64, t: usize, sch: &NoiseSchedule, energy: f64) -> f64 {
        match self.cap {
            Some(c) if energy > 0.0 => base.min(c / (sch.variance_ratio(t) * energy)),
            _ => base,
        }
    }

    pub fn latent_at(&self, t: usize, sch: &NoiseSchedule, noise_power: f64, h: f64) -> f64 {
        self.capped(self.latent.at(t, sch, noise_power), t, sch, h * h)
    }

    pub fn gain_at(&self, t: usize, sch: &NoiseSchedule, noise_power: f64, z: &[f64]) -> f64 {
        let energy: f64 = z.iter().map(|v| v * v).sum();
        self.capped(self.gain.at(t, sch, noise_power), t, sch, energy)
    }
}

/// Step size and ℓ1 strength of the gain refinement in the parallel denoiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegParams {
    pub step: f64,
    pub l1: f64,
}

impl RegParams {
    pub fn new(step: f64, l1: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!(
                "gain step size {step} must be positive"
            )));
        }
        if !(l1 >= 0.0 && l1.is_finite()) {
            return Err(Error::invalid(format!(
                "regularization strength {l1} must be ≥ 0"
            )));
        }
        Ok(RegParams { step, l1 })
    }

    /// No gain refinement at all.
    pub fn disabled() -> Self {
        RegParams { step: 0.0, l1: 0.0 }
    }
}

fn check_finite(v: &[f64], branch: &str, t: usize) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            what: format!("{branch} chain at step {t}"),
            index,
        }),
        None => Ok(()),
    }
}

/// One ancestral step `x_{t−1} = (x_t + β_t s)/√α_t + √β_t ξ`, with the
/// noise omitted at `t = 1`.
fn reverse_step(x: &mut [f64], score: &[f64], t: usize, sch: &NoiseSchedule, rng: &mut Rng) {
    let (beta, inv_sqrt_alpha) = (sch.beta(t), 1.0 / sch.alpha(t).sqrt());
    let noise_sd = if t > 1 { beta.sqrt() } else { 0.0 };
    for (xi, si) in x.iter_mut().zip(score) {
        *xi = (*xi + beta * si) * inv_sqrt_alpha;
        if t > 1 {
            *xi += noise_sd * normal(rng);
        }
    }
}

/// Guided score `ζ·g − ε̂/√(1 − ᾱ_t)`.
fn guided_score(
    eps: &[f64],
    guidance: Option<(f64, &[f64])>,
    t: usize,
    sch: &NoiseSchedule,
) -> Vec<f64> {
    let inv = 1.0 / (1.0 - sch.alpha_bar(t)).sqrt();
    match guidance {
        Some((zeta, g)) if zeta != 0.0 => eps
            .iter()
            .zip(g)
            .map(|(e, gi)| zeta * gi - e * inv)
            .collect(),
        _ => eps.iter().map(|e| -e * inv).collect(),
    }
}

fn check_width(est: &dyn NoiseEstimator, width: usize) -> Result<()> {
    if est.dim() != width {
        return Err(Error::ShapeMismatch {
            op: "denoiser",
            expected: vec![est.dim()],
            found: vec![width],
        });
    }
    Ok(())
}

/// Draw from the estimator's learned prior by plain ancestral sampling.
pub fn sample_unconditional(
    est: &dyn NoiseEstimator,
    sch: &NoiseSchedule,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let mut x = normal_vec(rng, est.dim());
    for t in (1..=sch.steps()).rev() {
        let eps = est.predict(&x, t, sch)?;
        let s = guided_score(&eps, None, t, sch);
        reverse_step(&mut x, &s, t, sch, rng);
        check_finite(&x, "unconditional", t)?;
    }
    Ok(x)
}

/// Denoise a received latent `z′ = h·z + n` with the gain known.
pub fn sd_denoise(
    received: &[f64],
    h: f64,
    noise_power: f64,
    est: &dyn NoiseEstimator,
    sch: &NoiseSchedule,
    guidance: &GuidanceWeights,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    check_width(est, received.len())?;
    guidance.validate(sch.steps())?;
    if !(noise_power > 0.0) {
        return Err(Error::invalid(format!(
            "noise power {noise_power} must be positive"
        )));
    }
    let mut z = normal_vec(rng, received.len());
    for t in (1..=sch.steps()).rev() {
        let eps = est.predict(&z, t, sch)?;
        let zeta = guidance.latent_at(t, sch, noise_power, h);
        let g = sch.likelihood_grad_z(&z, received, h, t)?;
        let s = guided_score(&eps, Some((zeta, &g)), t, sch);
        reverse_step(&mut z, &s, t, sch, rng);
        check_finite(&z, "latent", t)?;
    }
    Ok(z)
}

/// Output of the parallel denoiser.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEstimate {
    pub latent: Vec<f64>,
    pub gain: f64,
}

/// Jointly recover the latent and the unknown gain from `z′` alone, running
/// reverse chains for both in lockstep. After each step the gain takes a
/// subgradient step on `‖z′ − h·z‖₂ + φ|h|` and is kept nonnegative.
#[allow(clippy::too_many_arguments)]
pub fn psd_denoise(
    received: &[f64],
    noise_power: f64,
    eps_z: &dyn NoiseEstimator,
    eps_h: &dyn NoiseEstimator,
    sch: &NoiseSchedule,
    guidance: &GuidanceWeights,
    reg: &RegParams,
    rng: &mut Rng,
) -> Result<JointEstimate> {
    check_width(eps_z, received.len())?;
    if eps_h.dim() != 1 {
        return Err(Error::ShapeMismatch {
            op: "gain estimator",
            expected: vec![1],
            found: vec![eps_h.dim()],
        });
    }
    guidance.validate(sch.steps())?;
    if !(noise_power > 0.0) {
        return Err(Error::invalid(format!(
            "noise power {noise_power} must be positive"
        )));
    }
    if !(reg.step >= 0.0 && reg.l1 >= 0.0) {
        return Err(Error::invalid("gain step and regularization must be ≥ 0"));
    }
    let mut rng_z = rng_from_seed(rng.gen());
    let mut rng_h = rng_from_seed(rng.gen());
    let mut z = normal_vec(&mut rng_z, received.len());
    let mut h = vec![normal(&mut rng_h)];
    for t in (1..=sch.steps()).rev() {
        let ez = eps_z.predict(&z, t, sch)?;
        let eh = eps_h.predict(&h, t, sch)?;
        let zeta_z = guidance.latent_at(t, sch, noise_power, h[0]);
        let zeta_h = guidance.gain_at(t, sch, noise_power, &z);
        let gz = sch.likelihood_grad_z(&z, received, h[0], t)?;
        let gh = [sch.likelihood_grad_h(&z, received, h[0], t)?];
        let sz = guided_score(&ez, Some((zeta_z, &gz)), t, sch);
        let sh = guided_score(&eh, Some((zeta_h, &gh)), t, sch);
        reverse_step(&mut z, &sz, t, sch, &mut rng_z);
        reverse_step(&mut h, &sh, t, sch, &mut rng_h);
        check_finite(&z, "latent", t)?;
        check_finite(&h, "gain", t)?;
        if reg.step > 0.0 {
            h[0] = l1_gain_step(received, &z, h[0], reg);
            check_finite(&h, "gain", t)?;
        }
    }
    Ok(JointEstimate {
        latent: z,
        gain: h[0].max(0.0),
    })
}

/// `h − α·(∂/∂h ‖z′ − h·z‖₂ + φ·sign h)`, clamped at zero. The subgradient
/// of `|h|` at 0 is taken as 0, as is that of the norm at a zero residual.
fn l1_gain_step(received: &[f64], z: &[f64], h: f64, reg: &RegParams) -> f64 {
    let mut norm2 = 0.0;
    let mut inner = 0.0;
    for (r, zi) in received.iter().zip(z) {
        let res = r - h * zi;
        norm2 += res * res;
        inner += zi * res;
    }
    let norm = norm2.sqrt();
    let data = if norm > 0.0 { -inner / norm } else { 0.0 };
    let sign = if h > 0.0 {
        1.0
    } else if h < 0.0 {
        -1.0
    } else {
        0.0
    };
    (h - reg.step * (data + reg.l1 * sign)).max(0.0)
}

/// Estimate the gain from a pilot, then run [`sd_denoise`] with it. A
/// negative estimate is clipped to 0, which removes the guidance entirely.
#[allow(clippy::too_many_arguments)]
pub fn msd_denoise(
    received: &[f64],
    pilot: &[f64],
    received_pilot: &[f64],
    noise_power: f64,
    est: &dyn NoiseEstimator,
    sch: &NoiseSchedule,
    guidance: &GuidanceWeights,
    rng: &mut Rng,
) -> Result<JointEstimate> {
    let h_hat = mmse_estimate_gain(pilot, received_pilot, noise_power)?.max(0.0);
    let latent = sd_denoise(received, h_hat, noise_power, est, sch, guidance, rng)?;
    Ok(JointEstimate {
        latent,
        gain: h_hat,
    })
}

/// MMSE-equalize the remaining keyframes with the gain recovered while
/// denoising the first one.
pub fn denoise_subsequent(
    received: &[Vec<f64>],
    h_hat: f64,
    noise_power: f64,
    power: f64,
) -> Result<Vec<Vec<f64>>> {
    received
        .iter()
        .map(|r| mmse_equalize(r, h_hat, noise_power, power))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::GaussianMixture;

    #[test]
    fn zero_step_schedule_is_rejected() {
        assert!(NoiseSchedule::linear(0, 1e-4, 0.02).is_err());
    }

    #[test]
    fn replays_are_bit_identical() {
        let sch = NoiseSchedule::linear(30, 1e-3, 0.3).unwrap();
        let prior =
            GaussianMixture::new(vec![1.0, 1.0], vec![vec![1.0, 1.0], vec![-1.0, 1.0]], 0.01)
                .unwrap();
        let g = GuidanceWeights::noise_matched();
        let run = || {
            sd_denoise(
                &[0.5, 0.7],
                0.8,
                0.1,
                &prior,
                &sch,
                &g,
                &mut rng_from_seed(3),
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn l1_step_subgradient_at_zero() {
        let reg = RegParams { step: 0.1, l1: 5.0 };
        // Residual zero, h = 0: both subgradients vanish.
        assert_eq!(l1_gain_step(&[0.0], &[1.0], 0.0, &reg), 0.0);
    }

    #[test]
    fn single_keyframe_subsequent_is_noop() {
        assert!(denoise_subsequent(&[], 1.0, 0.1, 1.0).unwrap().is_empty());
    }
}
