use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Elementwise nonlinearity.
///
/// `TanhDiscrete` quantizes `tanh(x)` onto `levels` evenly spaced points of
/// `[-1, 1]` in the forward pass; its backward pass uses the derivative of the
/// continuous tanh, `1 − tanh²(x)`, as a surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
    Relu,
    TanhDiscrete { levels: usize },
}

impl ActivationKind {
    pub fn validate(self) -> Result<Self> {
        match self {
            ActivationKind::TanhDiscrete { levels } if levels < 2 => Err(Error::InvalidArgument(
                format!("tanh_discrete needs at least 2 levels, got {levels}"),
            )),
            k => Ok(k),
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Relu => {
                // written out so NaN propagates instead of clamping to 0
                if x <= 0.0 { 0.0 } else { x }
            }
            ActivationKind::TanhDiscrete { levels } => quantize(x.tanh(), levels),
        }
    }

    /// Derivative used by backward; the surrogate for `TanhDiscrete`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            ActivationKind::Tanh | ActivationKind::TanhDiscrete { .. } => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Relu => "relu",
            ActivationKind::TanhDiscrete { .. } => "tanh_discrete",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationKind::TanhDiscrete { levels } => write!(f, "tanh_discrete(L={levels})"),
            k => f.write_str(k.name()),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Spacing between adjacent quantizer levels on `[-1, 1]`.
pub fn level_step(levels: usize) -> f64 {
    (1.0 - (-1.0)) / (levels - 1) as f64
}

/// Index `k` of the level nearest to `y ∈ [-1, 1]`, rounding half up.
pub fn level_index(y: f64, levels: usize) -> usize {
    let step = level_step(levels);
    let k = ((y - (-1.0)) / step + 0.5).floor();
    k.clamp(0.0, (levels - 1) as f64) as usize
}

/// Snaps `y` to the level grid `{-1 + k·step}` and clamps to `[-1, 1]`.
pub fn quantize(y: f64, levels: usize) -> f64 {
    let step = level_step(levels);
    let q = ((y - (-1.0)) / step + 0.5).floor() * step + (-1.0);
    q.clamp(-1.0, 1.0)
}

pub fn activation_forward(x: &Tensor, kind: ActivationKind) -> Result<Tensor> {
    let kind = kind.validate()?;
    Ok(x.map(|v| kind.apply(v)))
}

/// `upstream ⊙ f'(x)` at the cached pre-activation `x`.
pub fn activation_backward(upstream: &Tensor, x: &Tensor, kind: ActivationKind) -> Result<Tensor> {
    upstream.zip_map(x, |g, v| g * kind.derivative(v))
}

pub fn tanh_discrete_forward(x: &Tensor, levels: usize) -> Result<Tensor> {
    activation_forward(x, ActivationKind::TanhDiscrete { levels })
}

pub fn tanh_discrete_backward(upstream: &Tensor, x: &Tensor) -> Result<Tensor> {
    // levels does not enter the surrogate
    activation_backward(upstream, x, ActivationKind::TanhDiscrete { levels: 2 })
}

/// Activation layer with its cached input.
#[derive(Debug, Clone)]
pub struct Activation {
    kind: ActivationKind,
    cache: Option<Tensor>,
}

impl Activation {
    pub fn new(kind: ActivationKind) -> Result<Self> {
        Ok(Self {
            kind: kind.validate()?,
            cache: None,
        })
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        activation_forward(x, self.kind)
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let y = self.infer(x)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let x = self.cache.as_ref().ok_or(Error::MissingForward {
            layer: self.kind.name(),
        })?;
        activation_backward(upstream, x, self.kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff_grad;

    fn scalar(v: f64) -> Tensor {
        Tensor::new(vec![1], vec![v]).unwrap()
    }

    #[test]
    fn reference_values() {
        assert_eq!(ActivationKind::Sigmoid.apply(0.0), 0.5);
        assert_eq!(ActivationKind::Tanh.apply(0.0), 0.0);
        assert_eq!(ActivationKind::Relu.apply(-1.0), 0.0);
        // 1/(1+e^-2)
        assert!((ActivationKind::Sigmoid.apply(2.0) - 0.880_797_077_977_882_3).abs() < 1e-12);
    }

    #[test]
    fn tanh_discrete_hand_values() {
        let td = |x, l| ActivationKind::TanhDiscrete { levels: l }.apply(x);
        assert_eq!(td(0.0, 13), 0.0);
        // tanh(1) = 0.76159..., (0.76159+1)·6 = 10.5696, +0.5 → 11, 11/6 − 1 = 5/6
        assert!((td(1.0, 13) - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(level_index(1f64.tanh(), 13), 11);
        assert_eq!(td(10.0, 2), 1.0);
        assert_eq!(td(-10.0, 2), -1.0);
    }

    #[test]
    fn tanh_discrete_rejects_single_level() {
        assert!(tanh_discrete_forward(&scalar(0.3), 1).is_err());
        assert!(Activation::new(ActivationKind::TanhDiscrete { levels: 0 }).is_err());
    }

    #[test]
    fn surrogate_factor() {
        let x = Tensor::new(vec![2], vec![0.0, 10.0]).unwrap();
        let g = tanh_discrete_backward(&Tensor::filled(&[2], 1.0), &x).unwrap();
        assert_eq!(g.data()[0], 1.0);
        assert!(g.data()[1] < 1e-8);
    }

    #[test]
    fn surrogate_matches_continuous_tanh_slope() {
        for &x0 in &[-2.0, -0.4, 0.0, 0.3, 1.7] {
            let fd = finite_diff_grad(|t| t.data()[0].tanh(), &scalar(x0), 1e-5).unwrap();
            let g = tanh_discrete_backward(&scalar(1.0), &scalar(x0)).unwrap();
            assert!((fd.data()[0] - g.data()[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let xs = [-2.5, -0.7, 0.2, 0.9, 3.1];
        for kind in [ActivationKind::Sigmoid, ActivationKind::Tanh, ActivationKind::Relu] {
            for &x0 in &xs {
                let fd = finite_diff_grad(|t| kind.apply(t.data()[0]), &scalar(x0), 1e-5).unwrap();
                let g = activation_backward(&scalar(1.0), &scalar(x0), kind).unwrap();
                assert!((fd.data()[0] - g.data()[0]).abs() < 1e-6, "{kind} at {x0}");
            }
        }
    }

    #[test]
    fn backward_without_forward_fails() {
        let mut a = Activation::new(ActivationKind::Tanh).unwrap();
        assert!(matches!(
            a.backward(&scalar(1.0)),
            Err(Error::MissingForward { .. })
        ));
    }

    #[test]
    fn serde_shape() {
        let k = ActivationKind::TanhDiscrete { levels: 13 };
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"kind":"tanh_discrete","levels":13}"#);
        assert_eq!(serde_json::from_str::<ActivationKind>(&s).unwrap(), k);
    }
}
