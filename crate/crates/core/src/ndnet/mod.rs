//! Dense networks, reverse-mode gradients and SGD.

mod array;
pub mod checkpoint;
mod mlp;

pub use array::{NdArray, Shape};
pub use checkpoint::{CheckpointHeader, ScheduleStamp};
pub use mlp::{sigmoid, Activation, Gradients, Layer, MlpModel, Momentum, SgdConfig};
