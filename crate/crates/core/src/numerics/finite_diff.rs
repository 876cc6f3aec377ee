use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Central-difference gradient of a scalar function, one coordinate at a time.
pub fn finite_diff_grad<F>(mut f: F, x: &Tensor, h: f64) -> Result<Tensor>
where
    F: FnMut(&Tensor) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }
    let mut probe = x.clone();
    let mut grad = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let plus = f(&probe);
        if !plus.is_finite() {
            return Err(Error::NonFiniteObjective { coordinate: i, sign: '+' });
        }
        probe.data_mut()[i] = orig - h;
        let minus = f(&probe);
        if !minus.is_finite() {
            return Err(Error::NonFiniteObjective { coordinate: i, sign: '-' });
        }
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// `|a − b| / max(|a|, |b|, floor)`; the floor keeps near-zero pairs from blowing up.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Worst elementwise [`relative_error`] between two same-shaped tensors, with its index.
pub fn max_relative_error(a: &Tensor, b: &Tensor, floor: f64) -> Result<(f64, usize)> {
    a.expect_same_shape(b, "max_relative_error")?;
    Ok(a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| relative_error(x, y, floor))
        .enumerate()
        .fold((0.0, 0), |(worst, at), (i, e)| if e > worst { (e, i) } else { (worst, at) }))
}
