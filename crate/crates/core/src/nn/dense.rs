use crate::error::{Error, Result};
use crate::numerics::{matmul, matmul_a_bt, matmul_at_b, xavier_init, RngStream, Tensor};

/// Affine map `xW + b` for `x` of shape `[batch, d_in]`.
pub fn fc_forward(x: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    if weights.rank() != 2 || bias.shape() != [weights.shape()[1]] {
        return Err(Error::shape(
            "fc_forward",
            format!("weights {:?}, bias {:?}", weights.shape(), bias.shape()),
        ));
    }
    let mut y = matmul(x, weights)?;
    let d_out = bias.len();
    for row in y.data_mut().chunks_mut(d_out) {
        for (v, b) in row.iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
    Ok(y)
}

/// Gradients of [`fc_forward`]: `(dx, dW, db)`.
pub fn fc_backward(
    upstream: &Tensor,
    x: &Tensor,
    weights: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let dx = matmul_a_bt(upstream, weights)?;
    let dw = matmul_at_b(x, upstream)?;
    let d_out = weights.shape()[1];
    let mut db = Tensor::zeros(&[d_out]);
    for row in upstream.data().chunks(d_out) {
        for (acc, g) in db.data_mut().iter_mut().zip(row) {
            *acc += g;
        }
    }
    Ok((dx, dw, db))
}

#[derive(Debug, Clone)]
pub struct Dense {
    pub(crate) weights: Tensor,
    pub(crate) bias: Tensor,
    pub(crate) grad_weights: Tensor,
    pub(crate) grad_bias: Tensor,
    cache: Option<Tensor>,
}

impl Dense {
    pub fn new(d_in: usize, d_out: usize, rng: &mut RngStream) -> Result<Self> {
        let weights = xavier_init(d_in, d_out, rng)?;
        Self::from_params(weights, Tensor::zeros(&[d_out]))
    }

    pub fn from_params(weights: Tensor, bias: Tensor) -> Result<Self> {
        if weights.rank() != 2 || bias.shape() != [weights.shape()[1]] {
            return Err(Error::shape(
                "Dense::from_params",
                format!("weights {:?}, bias {:?}", weights.shape(), bias.shape()),
            ));
        }
        Ok(Self {
            grad_weights: Tensor::zeros(weights.shape()),
            grad_bias: Tensor::zeros(bias.shape()),
            weights,
            bias,
            cache: None,
        })
    }

    pub fn d_in(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn d_out(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        fc_forward(x, &self.weights, &self.bias)
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let y = self.infer(x)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    /// Stores parameter gradients and returns the input gradient.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let x = self
            .cache
            .as_ref()
            .ok_or(Error::MissingForward { layer: "dense" })?;
        let (dx, dw, db) = fc_backward(upstream, x, &self.weights)?;
        self.grad_weights = dw;
        self.grad_bias = db;
        Ok(dx)
    }
}
