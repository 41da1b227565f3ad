//! Latent diffusion: schedules, noise-estimator training and the guided
//! reverse-process denoisers.

mod estimator;
mod sampler;
mod schedule;
mod train;

pub use estimator::{time_embedded, GaussianMixture, NoiseEstimator};
pub use sampler::{
    denoise_subsequent, msd_denoise, psd_denoise, sample_unconditional, sd_denoise,
    GuidanceSchedule, GuidanceWeights, JointEstimate, RegParams,
};
pub use schedule::NoiseSchedule;
pub use train::{
    eps_loss, scheduled_rate, train_eps, EpsTrainConfig, TrainReport, DIVERGENCE_LOSS,
};
