//! Dense tensors, layers with hand-written reverse passes, and Adam.
//!
//! All arithmetic is `f64`.

pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod lattice_conv;
pub mod loss;
pub mod network;
pub mod pool;
mod taps;
pub mod tensor;

pub use adam::AdamState;
pub use checkpoint::Checkpoint;
pub use conv::{standard_conv, standard_conv_backward};
pub use dense::{fully_connected, fully_connected_backward};
pub use lattice_conv::{
    join_conv, lattice_conv_backward, meet_conv, mixed_lattice_layer, LatticeConvKernel, LatticeOp,
};
pub use loss::{softmax, softmax_cross_entropy};
pub use network::{argmax, Activation, Layer, Network, NetworkConfig, Variant};
pub use pool::{max_pool_2x2, max_pool_backward};
pub use tensor::Tensor;
