//! Tensor arithmetic, seeded randomness, initialization, Adam and a
//! finite-difference gradient oracle.

mod adam;
mod finite_diff;
mod init;
mod rng;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON};
pub use finite_diff::{finite_diff_grad, max_relative_error, relative_error};
pub use init::{xavier_bound, xavier_init, xavier_init_shaped};
pub use rng::{streams, RngStream};
pub use tensor::{matmul, matmul_a_bt, matmul_at_b, Tensor};
