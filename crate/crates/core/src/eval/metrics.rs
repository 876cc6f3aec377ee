use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Hard decision: 1 where `value >= threshold`, else 0.
pub fn harden(values: &Tensor, threshold: f64) -> Tensor {
    values.map(|v| if v >= threshold { 1.0 } else { 0.0 })
}

/// Hard decision on predictions in (0, 1) with the 0.5 threshold.
pub fn harden_predictions(values: &Tensor) -> Tensor {
    harden(values, 0.5)
}

/// Baseline eavesdropper that reads bits straight off the received cipher:
/// 1 where `c' >= 0`.
pub fn hard_decision_eve(c_prime: &Tensor) -> Tensor {
    harden(c_prime, 0.0)
}

/// Fraction of positions where two bit sequences differ.
pub fn ber_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape("ber", format!("{} vs {} bits", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("BER of zero bits".into()));
    }
    let wrong = a.iter().zip(b).filter(|(x, y)| x != y).count();
    Ok(wrong as f64 / a.len() as f64)
}

pub fn ber(a: &Tensor, b: &Tensor) -> Result<f64> {
    ber_slices(a.data(), b.data())
}
