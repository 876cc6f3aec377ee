//! Layers with explicit forward/backward passes and the Alice/Bob/Eve networks.

mod activation;
pub mod checkpoint;
mod conv;
mod dense;
mod network;

pub use activation::{
    activation_backward, activation_forward, level_index, level_step, quantize, sigmoid,
    tanh_discrete_backward, tanh_discrete_forward, Activation, ActivationKind,
};
pub use checkpoint::{load_network, save_network, Checkpoint, LayerDescriptor};
pub use conv::{conv1d_backward, conv1d_forward, Conv1d, ConvSpec};
pub use dense::{fc_backward, fc_forward, Dense};
pub use network::{build_network, Layer, Network, Role, CONV_STACK};
