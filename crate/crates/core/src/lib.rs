//! Latency-budgeted semantic video communication over fading channels with
//! diffusion-based latent denoising.
//!
//! The crate is organised along the link: [`encoder`] turns frames into
//! variational latents and picks keyframes under a latency budget,
//! [`channel`] corrupts and accounts for their transmission, [`diffusion`]
//! denoises the received latents, [`decoder`] rebuilds keyframes and fills
//! the gaps between them, and [`metrics`] scores the result. [`pipeline`]
//! wires the stages into training and experiment runs.

pub mod channel;
pub mod decoder;
pub mod diffusion;
pub mod encoder;
pub mod error;
pub mod metrics;
pub mod ndnet;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
