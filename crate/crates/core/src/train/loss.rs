use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::train::LossVariant;

/// Euclidean distance between two equally long vectors.
pub fn distance(p: &[f64], p_hat: &[f64]) -> Result<f64> {
    if p.len() != p_hat.len() {
        return Err(Error::shape(
            "distance",
            format!("{} vs {}", p.len(), p_hat.len()),
        ));
    }
    Ok(p.iter()
        .zip(p_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Mean per-row distance between `[batch, N]` targets and predictions.
pub fn mean_distance(p: &Tensor, p_hat: &Tensor) -> Result<f64> {
    p.expect_same_shape(p_hat, "mean_distance")?;
    let rows = p.rows();
    let mut total = 0.0;
    for i in 0..rows {
        total += distance(p.row(i), p_hat.row(i))?;
    }
    Ok(total / rows as f64)
}

/// Gradient of [`mean_distance`] with respect to `p_hat`. Rows at zero
/// distance get a zero gradient.
pub fn mean_distance_grad(p: &Tensor, p_hat: &Tensor) -> Result<Tensor> {
    p.expect_same_shape(p_hat, "mean_distance_grad")?;
    let rows = p.rows();
    let mut g = Tensor::zeros(p.shape());
    let w = p.row_len();
    for i in 0..rows {
        let d = distance(p.row(i), p_hat.row(i))?;
        if d == 0.0 {
            continue;
        }
        let scale = 1.0 / (rows as f64 * d);
        let out = &mut g.data_mut()[i * w..(i + 1) * w];
        for ((o, &a), &b) in out.iter_mut().zip(p.row(i)).zip(p_hat.row(i)) {
            *o = (b - a) * scale;
        }
    }
    Ok(g)
}

/// Eve's loss: mean distance between plaintext and her estimate.
pub fn loss_eve(p: &Tensor, p_hat_eve: &Tensor) -> Result<f64> {
    mean_distance(p, p_hat_eve)
}

/// Bob's loss: mean distance between plaintext and his estimate.
pub fn loss_bob(p: &Tensor, p_hat_bob: &Tensor) -> Result<f64> {
    mean_distance(p, p_hat_bob)
}

/// `L_E / √N`: all-0.5 guesses score exactly 0.5.
pub fn normalized_eve_loss(loss_eve: f64, n: usize) -> f64 {
    loss_eve / (n as f64).sqrt()
}

/// Alice/Bob objective.
pub fn joint_loss(loss_bob: f64, loss_eve: f64, variant: LossVariant, n: usize) -> f64 {
    match variant {
        LossVariant::Subtractive => loss_bob - loss_eve,
        LossVariant::Uncertainty => {
            let u = 0.5 - normalized_eve_loss(loss_eve, n);
            loss_bob + u * u
        }
    }
}

/// `(∂J/∂L_B, ∂J/∂L_E)` for [`joint_loss`].
pub fn joint_loss_partials(loss_eve: f64, variant: LossVariant, n: usize) -> (f64, f64) {
    match variant {
        LossVariant::Subtractive => (1.0, -1.0),
        LossVariant::Uncertainty => {
            let root_n = (n as f64).sqrt();
            let u = 0.5 - loss_eve / root_n;
            (1.0, -2.0 * u / root_n)
        }
    }
}
