//! Adversarially trained secured modulation.
//!
//! Alice maps plaintext and a shared key to a real cipher block, which is
//! packed into complex symbols and sent over a clear, AWGN or Rayleigh
//! wiretap channel. Bob decodes with the key; Eve attacks without it.

pub mod channel;
pub mod cli;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod nn;
pub mod numerics;
pub mod train;

pub use error::{Error, Result};
