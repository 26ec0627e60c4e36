//! The learnable vertex filter and the graph classifiers built on it.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
mod model;
pub mod optim;
mod params;

pub use model::{
    backward, baseline_forward, classifier_forward, forward_batch, full_forward, graph_barcodes,
    loss, loss_and_gradients, sum_readout_forward, vertex_filter_forward, BnUpdates, ForwardOutput,
    GraphInput, Mode, Tape,
};
pub use params::{ModelConfig, ModelParams, Readout, TensorMut};
