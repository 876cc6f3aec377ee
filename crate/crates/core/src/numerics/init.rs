use crate::error::{Error, Result};
use crate::numerics::{RngStream, Tensor};

/// Half-width of the Xavier/Glorot uniform interval.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `[fan_in, fan_out]` weights drawn uniformly from `[-b, b]`, `b = √(6/(fan_in+fan_out))`.
pub fn xavier_init(fan_in: usize, fan_out: usize, rng: &mut RngStream) -> Result<Tensor> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::InvalidArgument(format!(
            "xavier_init needs positive fans, got fan_in={fan_in}, fan_out={fan_out}"
        )));
    }
    xavier_init_shaped(&[fan_in, fan_out], fan_in, fan_out, rng)
}

/// Xavier-uniform draw for an arbitrary parameter shape (e.g. conv kernels).
pub fn xavier_init_shaped(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut RngStream,
) -> Result<Tensor> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::InvalidArgument(format!(
            "xavier_init needs positive fans, got fan_in={fan_in}, fan_out={fan_out}"
        )));
    }
    let b = xavier_bound(fan_in, fan_out);
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform(-b, b)).collect();
    Tensor::new(shape.to_vec(), data)
}
