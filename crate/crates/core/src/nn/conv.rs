use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{xavier_init_shaped, RngStream, Tensor};

/// `conv(window, d_in, d_out, stride)` with same padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub window: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub stride: usize,
}

impl ConvSpec {
    pub const fn new(window: usize, d_in: usize, d_out: usize, stride: usize) -> Self {
        Self {
            window,
            d_in,
            d_out,
            stride,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.d_in == 0 || self.d_out == 0 || self.stride == 0 {
            return Err(Error::InvalidArgument(format!(
                "conv spec fields must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn output_len(&self, len: usize) -> usize {
        len.div_ceil(self.stride)
    }

    /// Left padding; the extra element of an odd total goes on the right.
    pub fn pad_left(&self, len: usize) -> usize {
        let out = self.output_len(len);
        let total = ((out - 1) * self.stride + self.window).saturating_sub(len);
        total / 2
    }

    pub fn kernel_shape(&self) -> [usize; 3] {
        [self.window, self.d_in, self.d_out]
    }
}

/// Views `x` as `[batch, len, d_in]`; rank-2 input is accepted when `d_in == 1`.
fn conv_dims(x: &Tensor, spec: &ConvSpec) -> Result<(usize, usize)> {
    match *x.shape() {
        [b, len, d] if d == spec.d_in => Ok((b, len)),
        [b, len] if spec.d_in == 1 => Ok((b, len)),
        _ => Err(Error::shape(
            "conv1d",
            format!("input {:?} incompatible with {spec:?}", x.shape()),
        )),
    }
}

fn check_params(spec: &ConvSpec, kernel: &Tensor, bias: &Tensor) -> Result<()> {
    spec.validate()?;
    if kernel.shape() != spec.kernel_shape() || bias.shape() != [spec.d_out] {
        return Err(Error::shape(
            "conv1d",
            format!(
                "kernel {:?} / bias {:?} for {spec:?}",
                kernel.shape(),
                bias.shape()
            ),
        ));
    }
    Ok(())
}

/// Cross-correlation along the length axis, summed over input depth, plus bias.
pub fn conv1d_forward(x: &Tensor, spec: &ConvSpec, kernel: &Tensor, bias: &Tensor) -> Result<Tensor> {
    check_params(spec, kernel, bias)?;
    let (batch, len) = conv_dims(x, spec)?;
    let out_len = spec.output_len(len);
    let pad = spec.pad_left(len) as isize;
    let (w_n, ci_n, co_n) = (spec.window, spec.d_in, spec.d_out);
    let xd = x.data();
    let kd = kernel.data();

    let mut out = vec![0.0; batch * out_len * co_n];
    for b in 0..batch {
        for o in 0..out_len {
            let acc = &mut out[(b * out_len + o) * co_n..(b * out_len + o + 1) * co_n];
            acc.copy_from_slice(bias.data());
            for w in 0..w_n {
                let pos = (o * spec.stride + w) as isize - pad;
                if pos < 0 || pos >= len as isize {
                    continue;
                }
                let xrow = &xd[(b * len + pos as usize) * ci_n..][..ci_n];
                for (ci, &xv) in xrow.iter().enumerate() {
                    let krow = &kd[(w * ci_n + ci) * co_n..][..co_n];
                    for (a, &kv) in acc.iter_mut().zip(krow) {
                        *a += xv * kv;
                    }
                }
            }
        }
    }
    Tensor::new(vec![batch, out_len, co_n], out)
}

/// Gradients of [`conv1d_forward`]: `(dx, dkernel, dbias)`; `dx` takes the shape of `x`.
pub fn conv1d_backward(
    upstream: &Tensor,
    x: &Tensor,
    spec: &ConvSpec,
    kernel: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let (batch, len) = conv_dims(x, spec)?;
    let out_len = spec.output_len(len);
    if upstream.shape() != [batch, out_len, spec.d_out] {
        return Err(Error::shape(
            "conv1d_backward",
            format!(
                "upstream {:?}, expected {:?}",
                upstream.shape(),
                [batch, out_len, spec.d_out]
            ),
        ));
    }
    let pad = spec.pad_left(len) as isize;
    let (w_n, ci_n, co_n) = (spec.window, spec.d_in, spec.d_out);
    let (xd, kd, ud) = (x.data(), kernel.data(), upstream.data());

    let mut dx = vec![0.0; x.len()];
    let mut dk = vec![0.0; kernel.len()];
    let mut db = vec![0.0; co_n];
    for b in 0..batch {
        for o in 0..out_len {
            let g = &ud[(b * out_len + o) * co_n..][..co_n];
            for (acc, &gv) in db.iter_mut().zip(g) {
                *acc += gv;
            }
            for w in 0..w_n {
                let pos = (o * spec.stride + w) as isize - pad;
                if pos < 0 || pos >= len as isize {
                    continue;
                }
                let base = (b * len + pos as usize) * ci_n;
                for ci in 0..ci_n {
                    let koff = (w * ci_n + ci) * co_n;
                    let krow = &kd[koff..koff + co_n];
                    let xv = xd[base + ci];
                    let mut s = 0.0;
                    for ((&kv, &gv), dkv) in krow.iter().zip(g).zip(&mut dk[koff..koff + co_n]) {
                        s += kv * gv;
                        *dkv += xv * gv;
                    }
                    dx[base + ci] += s;
                }
            }
        }
    }
    Ok((
        Tensor::new(x.shape().to_vec(), dx)?,
        Tensor::new(kernel.shape().to_vec(), dk)?,
        Tensor::new(vec![co_n], db)?,
    ))
}

#[derive(Debug, Clone)]
pub struct Conv1d {
    spec: ConvSpec,
    pub(crate) kernel: Tensor,
    pub(crate) bias: Tensor,
    pub(crate) grad_kernel: Tensor,
    pub(crate) grad_bias: Tensor,
    cache: Option<Tensor>,
}

impl Conv1d {
    /// Xavier-uniform kernel with fans `window·d_in` / `window·d_out`; zero bias.
    pub fn new(spec: ConvSpec, rng: &mut RngStream) -> Result<Self> {
        spec.validate()?;
        let kernel = xavier_init_shaped(
            &spec.kernel_shape(),
            spec.window * spec.d_in,
            spec.window * spec.d_out,
            rng,
        )?;
        Self::from_params(spec, kernel, Tensor::zeros(&[spec.d_out]))
    }

    pub fn from_params(spec: ConvSpec, kernel: Tensor, bias: Tensor) -> Result<Self> {
        check_params(&spec, &kernel, &bias)?;
        Ok(Self {
            spec,
            grad_kernel: Tensor::zeros(kernel.shape()),
            grad_bias: Tensor::zeros(bias.shape()),
            kernel,
            bias,
            cache: None,
        })
    }

    pub fn spec(&self) -> &ConvSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &Tensor {
        &self.kernel
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        conv1d_forward(x, &self.spec, &self.kernel, &self.bias)
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let y = self.infer(x)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let x = self
            .cache
            .as_ref()
            .ok_or(Error::MissingForward { layer: "conv1d" })?;
        let (dx, dk, db) = conv1d_backward(upstream, x, &self.spec, &self.kernel)?;
        self.grad_kernel = dk;
        self.grad_bias = db;
        Ok(dx)
    }
}
