//! Experiment tooling: configuration, synthetic data, staged training, the
//! end-to-end transmission chain and Monte-Carlo sweeps.

pub mod autoencoder;
pub mod bundle;
pub mod config;
pub mod experiment;
pub mod synth;
pub mod system;
pub mod training;

pub use autoencoder::{encode_means, train_vae, LatentNorm, VaeTrainConfig};
pub use bundle::{Autoencoder, Denoisers, Manifest, ModelBundle, Stage};
pub use config::{GainPolicy, GuidanceMode, MotionKind, PipelineConfig, SEED_ENV};
pub use experiment::{
    run_experiment, trial_seed, ExperimentResult, ExperimentSpec, Summary, TrialRow, CSV_HEADER,
};
pub use synth::{generate_clip, generate_dataset, Clip};
pub use system::{measure_compute, power_normalize, ClipOutcome, DenoiserKind, Received, System};
pub use training::{end_to_end_mse, train, training_clips, TrainPlan};
