//! Fading channels, link-rate accounting and MMSE equalization.
//!
//! The transmitted latent `z` arrives as `z' = h·z + n` with a scalar,
//! nonnegative gain `h` held for one transmission and white Gaussian noise
//! of power `σ²`.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::ndnet::NdArray;
use crate::rng::{normal, Rng};

/// Bits per transmitted latent element (32-bit floats on the wire).
pub const BITS_PER_ELEMENT: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingKind {
    Awgn,
    Rayleigh,
    /// Nakagami-m with shape `m ≥ 0.5`.
    Nakagami {
        m: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub kind: FadingKind,
    /// Mean-square gain `E[h²]`.
    pub omega: f64,
}

impl ChannelModel {
    pub fn awgn() -> Self {
        ChannelModel {
            kind: FadingKind::Awgn,
            omega: 1.0,
        }
    }

    pub fn rayleigh(omega: f64) -> Result<Self> {
        Self::new(FadingKind::Rayleigh, omega)
    }

    pub fn nakagami(m: f64, omega: f64) -> Result<Self> {
        Self::new(FadingKind::Nakagami { m }, omega)
    }

    pub fn new(kind: FadingKind, omega: f64) -> Result<Self> {
        let model = ChannelModel { kind, omega };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid(format!(
                "mean-square gain {} must be positive",
                self.omega
            )));
        }
        if let FadingKind::Nakagami { m } = self.kind {
            if !(m >= 0.5 && m.is_finite()) {
                return Err(Error::invalid(format!(
                    "Nakagami shape m = {m} must be at least 0.5"
                )));
            }
        }
        Ok(())
    }

    /// Draw one gain magnitude.
    pub fn sample_gain(&self, rng: &mut Rng) -> Result<f64> {
        self.validate()?;
        Ok(match self.kind {
            FadingKind::Awgn => 1.0,
            FadingKind::Rayleigh => {
                let (x, y) = (normal(rng), normal(rng));
                (self.omega / 2.0 * (x * x + y * y)).sqrt()
            }
            FadingKind::Nakagami { m } => {
                let gamma = Gamma::new(m, self.omega / m)
                    .map_err(|e| Error::invalid(format!("gamma parameters: {e}")))?;
                gamma.sample(rng).sqrt()
            }
        })
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FadingKind::Awgn => write!(f, "awgn"),
            FadingKind::Rayleigh => write!(f, "rayleigh(omega={})", self.omega),
            FadingKind::Nakagami { m } => write!(f, "nakagami(m={m}, omega={})", self.omega),
        }
    }
}

/// Parses the bare kind name; `m` and `Ω` are set separately.
impl FromStr for FadingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "awgn" => Ok(FadingKind::Awgn),
            "rayleigh" => Ok(FadingKind::Rayleigh),
            "nakagami" => Ok(FadingKind::Nakagami { m: 1.0 }),
            other => Err(Error::invalid(format!("unknown channel kind '{other}'"))),
        }
    }
}

/// One channel use: gain and noise power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    pub h: f64,
    pub noise_power: f64,
}

impl ChannelRealization {
    pub fn new(h: f64, noise_power: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!(
                "gain {h} must be a finite nonnegative number"
            )));
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::invalid(format!(
                "noise power {noise_power} must be positive"
            )));
        }
        Ok(ChannelRealization { h, noise_power })
    }

    /// `h·z + n`, elementwise.
    pub fn transmit(&self, z: &NdArray, rng: &mut Rng) -> NdArray {
        let values = self.transmit_slice(z.as_slice(), rng);
        NdArray::new(z.dims().to_vec(), values).expect("finite inputs stay finite")
    }

    /// Slice variant of [`ChannelRealization::transmit`].
    pub fn transmit_slice(&self, z: &[f64], rng: &mut Rng) -> Vec<f64> {
        let sd = self.noise_power.sqrt();
        z.iter().map(|&v| self.h * v + sd * normal(rng)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub bandwidth_hz: f64,
    pub power: f64,
    pub snr_db: f64,
}

impl LinkBudget {
    pub fn new(bandwidth_hz: f64, power: f64, snr_db: f64) -> Result<Self> {
        let link = LinkBudget {
            bandwidth_hz,
            power,
            snr_db,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::invalid(format!(
                "bandwidth {} must be positive",
                self.bandwidth_hz
            )));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::invalid(format!(
                "transmit power {} must be positive",
                self.power
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::invalid("SNR must be finite"));
        }
        Ok(())
    }

    /// `σ² = p·Ω / 10^(snr/10)`.
    pub fn noise_power(&self, omega: f64) -> f64 {
        self.power * omega / 10f64.powf(self.snr_db / 10.0)
    }

    /// Achievable rate `B·log2(1 + p·h²/σ²)` in bit/s.
    pub fn rate(&self, h: f64, noise_power: f64) -> Result<f64> {
        if !(noise_power > 0.0) {
            return Err(Error::invalid(format!(
                "noise power {noise_power} must be positive"
            )));
        }
        Ok(self.bandwidth_hz * (1.0 + self.power * h * h / noise_power).log2())
    }
}

/// Time to send the listed latent dimensions at `rate` bit/s.
pub fn comm_time(payload_dims: &[usize], rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::invalid(format!(
            "rate {rate} bit/s must be positive"
        )));
    }
    let elements: usize = payload_dims.iter().sum();
    Ok(BITS_PER_ELEMENT * elements as f64 / rate)
}

/// Per-stage computation times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComputeTimeModel {
    pub feature_extraction: f64,
    pub keyframe_selection: f64,
    pub semantic_denoising: f64,
    pub semantic_reconstruction: f64,
    pub frame_interpolation: f64,
}

impl ComputeTimeModel {
    pub fn new(fe: f64, ks: f64, sd: f64, sr: f64, fi: f64) -> Result<Self> {
        let ct = ComputeTimeModel {
            feature_extraction: fe,
            keyframe_selection: ks,
            semantic_denoising: sd,
            semantic_reconstruction: sr,
            frame_interpolation: fi,
        };
        ct.validate()?;
        Ok(ct)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "compute time {name} = {v} must be ≥ 0"
                )));
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("t_fe", self.feature_extraction),
            ("t_ks", self.keyframe_selection),
            ("t_sd", self.semantic_denoising),
            ("t_sr", self.semantic_reconstruction),
            ("t_fi", self.frame_interpolation),
        ]
    }

    /// End-to-end execution time given the communication time.
    pub fn exec_time(&self, t_com: f64) -> f64 {
        self.feature_extraction
            + self.keyframe_selection
            + t_com
            + self.semantic_denoising
            + self.semantic_reconstruction
            + self.frame_interpolation
    }
}

/// `ĥ·z' / (ĥ² + σ²/p)`, elementwise. A zero estimate yields zeros.
pub fn mmse_equalize(
    received: &[f64],
    h_hat: f64,
    noise_power: f64,
    power: f64,
) -> Result<Vec<f64>> {
    if !(noise_power > 0.0) || !(power > 0.0) {
        return Err(Error::invalid(
            "noise power and transmit power must be positive",
        ));
    }
    let scale = h_hat / (h_hat * h_hat + noise_power / power);
    Ok(received.iter().map(|&v| scale * v).collect())
}

/// Linear MMSE estimate of a scalar gain from a known pilot:
/// `⟨pilot, received⟩ / (⟨pilot, pilot⟩ + σ²)`.
pub fn mmse_estimate_gain(pilot: &[f64], received: &[f64], noise_power: f64) -> Result<f64> {
    if pilot.len() != received.len() {
        return Err(Error::ShapeMismatch {
            op: "mmse_estimate_gain",
            expected: vec![pilot.len()],
            found: vec![received.len()],
        });
    }
    let energy: f64 = pilot.iter().map(|p| p * p).sum();
    if energy == 0.0 {
        return Err(Error::invalid("pilot sequence is identically zero"));
    }
    if !(noise_power >= 0.0) {
        return Err(Error::invalid(format!(
            "noise power {noise_power} must be nonnegative"
        )));
    }
    let corr: f64 = pilot.iter().zip(received).map(|(p, r)| p * r).sum();
    Ok(corr / (energy + noise_power))
}

/// Deterministic ±1 pilot of the given length.
pub fn pilot_sequence(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn awgn_gain_is_one() {
        let mut rng = rng_from_seed(1);
        assert_eq!(ChannelModel::awgn().sample_gain(&mut rng).unwrap(), 1.0);
    }

    #[test]
    fn nakagami_rejects_small_shape() {
        assert!(ChannelModel::nakagami(0.4, 1.0).is_err());
        let bad = ChannelModel {
            kind: FadingKind::Nakagami { m: 0.3 },
            omega: 1.0,
        };
        assert!(bad.sample_gain(&mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn rate_zero_gain() {
        let link = LinkBudget::new(5e6, 1.0, 10.0).unwrap();
        assert_eq!(link.rate(0.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn comm_time_cases() {
        assert_eq!(comm_time(&[], 1.0).unwrap(), 0.0);
        assert_eq!(comm_time(&[1], 32.0).unwrap(), 1.0);
        assert!(comm_time(&[1], 0.0).is_err());
    }

    #[test]
    fn exec_time_sums_components() {
        let ct = ComputeTimeModel::new(0.01, 0.02, 0.03, 0.04, 0.05).unwrap();
        assert!((ct.exec_time(0.01) - 0.16).abs() < 1e-15);
        assert_eq!(ComputeTimeModel::default().exec_time(0.0), 0.0);
    }

    #[test]
    fn equalizer_hand_value() {
        let out = mmse_equalize(&[2.0 * 3.0], 2.0, 1.0, 1.0).unwrap();
        assert!((out[0] - 2.4).abs() < 1e-15);
        assert_eq!(mmse_equalize(&[5.0], 0.0, 1.0, 1.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn gain_estimate_edge_cases() {
        let p = pilot_sequence(8);
        let r: Vec<f64> = p.iter().map(|v| 3.0 * v).collect();
        assert!((mmse_estimate_gain(&p, &r, 1e-30).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(mmse_estimate_gain(&p, &[0.0; 8], 0.1).unwrap(), 0.0);
        assert!(mmse_estimate_gain(&[0.0; 4], &[1.0; 4], 0.1).is_err());
    }
}
