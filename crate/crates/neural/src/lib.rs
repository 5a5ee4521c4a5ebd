//! Neural chapter classifiers built on a small reverse-mode autodiff tape.

pub mod classifier;
pub mod data;
pub mod gradcheck;
pub mod layers;
pub mod matrix;
pub mod model;
pub mod suite;
pub mod tape;
pub mod train;

pub use matrix::Matrix;
pub use tape::{Grads, NodeId, ParamId, ParamStore, Tape};
pub use classifier::NeuralModel;
pub use data::{Direction, ReorderMode};
pub use model::{Base, ContentEncoder, FusionEncoder, FusionSpec, Hyper, ModelSpec, Network, Optimizer};
