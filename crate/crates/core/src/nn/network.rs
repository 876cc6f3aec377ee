use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, ActivationKind, Conv1d, ConvSpec, Dense};
use crate::numerics::{RngStream, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Alice,
    Bob,
    Eve,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Alice, Role::Bob, Role::Eve];

    pub fn name(self) -> &'static str {
        match self {
            Role::Alice => "alice",
            Role::Bob => "bob",
            Role::Eve => "eve",
        }
    }

    /// Alice sees `[P | K]`, Bob sees `[C' | K]`, Eve sees only `C'`.
    pub fn input_width(self, n: usize) -> usize {
        match self {
            Role::Alice | Role::Bob => 2 * n,
            Role::Eve => n,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alice" => Ok(Role::Alice),
            "bob" => Ok(Role::Bob),
            "eve" => Ok(Role::Eve),
            other => Err(Error::InvalidArgument(format!("unknown role {other:?}"))),
        }
    }
}

/// The shared convolutional "transform" stack; the last entry takes the output activation.
pub const CONV_STACK: [ConvSpec; 4] = [
    ConvSpec::new(4, 1, 2, 1),
    ConvSpec::new(2, 2, 4, 2),
    ConvSpec::new(1, 4, 4, 1),
    ConvSpec::new(1, 4, 1, 1),
];

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(Dense),
    Conv1d(Conv1d),
    Activation(Activation),
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv1d(_) => "conv1d",
            Layer::Activation(a) => a.kind().name(),
        }
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Dense(l) => l.infer(x),
            Layer::Conv1d(l) => l.infer(x),
            Layer::Activation(l) => l.infer(x),
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Dense(l) => l.forward(x),
            Layer::Conv1d(l) => l.forward(x),
            Layer::Activation(l) => l.forward(x),
        }
    }

    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Dense(l) => l.backward(upstream),
            Layer::Conv1d(l) => l.backward(upstream),
            Layer::Activation(l) => l.backward(upstream),
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(l) => vec![&l.weights, &l.bias],
            Layer::Conv1d(l) => vec![&l.kernel, &l.bias],
            Layer::Activation(_) => vec![],
        }
    }

    pub fn grads(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(l) => vec![&l.grad_weights, &l.grad_bias],
            Layer::Conv1d(l) => vec![&l.grad_kernel, &l.grad_bias],
            Layer::Activation(_) => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense(l) => vec![&mut l.weights, &mut l.bias],
            Layer::Conv1d(l) => vec![&mut l.kernel, &mut l.bias],
            Layer::Activation(_) => vec![],
        }
    }

    fn params_and_grads_mut(&mut self) -> Vec<(&mut Tensor, &Tensor)> {
        match self {
            Layer::Dense(l) => vec![
                (&mut l.weights, &l.grad_weights),
                (&mut l.bias, &l.grad_bias),
            ],
            Layer::Conv1d(l) => vec![
                (&mut l.kernel, &l.grad_kernel),
                (&mut l.bias, &l.grad_bias),
            ],
            Layer::Activation(_) => vec![],
        }
    }
}

/// One of the three parties: a mixing FC front end followed by [`CONV_STACK`].
#[derive(Debug, Clone)]
pub struct Network {
    role: Role,
    n: usize,
    output_activation: ActivationKind,
    layers: Vec<Layer>,
    output_shape: Option<Vec<usize>>,
}

/// Builds the network for `role` with block length `n` (even, ≥ 2).
///
/// Alice: FC(2N→2N) linear. Bob: FC(2N→2N) + relu. Eve: FC(N→2N) + relu,
/// FC(2N→2N) + relu. Each continues with the conv stack; sigmoid after the
/// first three convs and `output_activation` after the last.
pub fn build_network(
    role: Role,
    n: usize,
    output_activation: ActivationKind,
    rng: &mut RngStream,
) -> Result<Network> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "block length must be even and >= 2, got {n}"
        )));
    }
    let output_activation = output_activation.validate()?;
    let mut layers = Vec::new();
    match role {
        Role::Alice => {
            layers.push(Layer::Dense(Dense::new(2 * n, 2 * n, rng)?));
        }
        Role::Bob => {
            layers.push(Layer::Dense(Dense::new(2 * n, 2 * n, rng)?));
            layers.push(Layer::Activation(Activation::new(ActivationKind::Relu)?));
        }
        Role::Eve => {
            layers.push(Layer::Dense(Dense::new(n, 2 * n, rng)?));
            layers.push(Layer::Activation(Activation::new(ActivationKind::Relu)?));
            layers.push(Layer::Dense(Dense::new(2 * n, 2 * n, rng)?));
            layers.push(Layer::Activation(Activation::new(ActivationKind::Relu)?));
        }
    }
    for (i, spec) in CONV_STACK.iter().enumerate() {
        layers.push(Layer::Conv1d(Conv1d::new(*spec, rng)?));
        let act = if i + 1 == CONV_STACK.len() {
            output_activation
        } else {
            ActivationKind::Sigmoid
        };
        layers.push(Layer::Activation(Activation::new(act)?));
    }
    Network::from_layers(role, n, output_activation, layers)
}

impl Network {
    /// Assembles and validates a layer list (used by checkpoint loading).
    pub fn from_layers(
        role: Role,
        n: usize,
        output_activation: ActivationKind,
        layers: Vec<Layer>,
    ) -> Result<Self> {
        let net = Self {
            role,
            n,
            output_activation,
            layers,
            output_shape: None,
        };
        let probe = Tensor::zeros(&[1, net.input_width()]);
        let y = net.infer(&probe)?;
        if y.shape() != [1, n] {
            return Err(Error::shape(
                "Network::from_layers",
                format!("{role} network maps width {} to {:?}", net.input_width(), y.shape()),
            ));
        }
        Ok(net)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn input_width(&self) -> usize {
        self.role.input_width(self.n)
    }

    pub fn output_width(&self) -> usize {
        self.n
    }

    pub fn output_activation(&self) -> ActivationKind {
        self.output_activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.rank() != 2 || x.shape()[1] != self.input_width() {
            return Err(Error::shape(
                "Network::forward",
                format!(
                    "{} expects [batch, {}], got {:?}",
                    self.role,
                    self.input_width(),
                    x.shape()
                ),
            ));
        }
        Ok(())
    }

    /// Forward pass without caching; safe on a shared network.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        let batch = x.rows();
        h.reshape(&[batch, self.n])
    }

    /// Forward pass that caches what [`Network::backward`] needs.
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward(&h)?;
        }
        self.output_shape = Some(h.shape().to_vec());
        let batch = x.rows();
        h.reshape(&[batch, self.n])
    }

    /// Backpropagates `upstream` (`[batch, N]`), storing parameter gradients;
    /// returns the gradient with respect to the network input.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let shape = self
            .output_shape
            .clone()
            .ok_or(Error::MissingForward { layer: "network" })?;
        let mut g = upstream.clone().reshape(&shape)?;
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn grads(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(Layer::grads).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn params_and_grads_mut(&mut self) -> Vec<(&mut Tensor, &Tensor)> {
        self.layers
            .iter_mut()
            .flat_map(Layer::params_and_grads_mut)
            .collect()
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        self.params().iter().map(|t| t.shape().to_vec()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// Snapshot of all parameter values, for freeze checks.
    pub fn snapshot(&self) -> Vec<Tensor> {
        self.params().into_iter().cloned().collect()
    }
}
