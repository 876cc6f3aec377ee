//! Finite-difference verification of every layer's backward pass.

use std::fmt;

use crate::error::Result;
use crate::nn::{
    activation_backward, activation_forward, conv1d_backward, conv1d_forward, fc_backward,
    fc_forward, ActivationKind, ConvSpec, CONV_STACK,
};
use crate::numerics::{finite_diff_grad, relative_error, RngStream, Tensor};

pub const TOLERANCE: f64 = 1e-5;
const STEP: f64 = 1e-5;
const FLOOR: f64 = 1e-6;

/// Worst mismatch found for one layer configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub layer: String,
    pub worst_rel_error: f64,
    /// Which tensor and flat index produced the worst error.
    pub coordinate: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.worst_rel_error < TOLERANCE
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} worst rel err {:.3e} at {:<14} {}",
            self.layer,
            self.worst_rel_error,
            self.coordinate,
            if self.passed() { "ok" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct GradcheckReport {
    pub results: Vec<CheckResult>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(CheckResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| !r.passed())
    }
}

/// `fault` perturbs the analytic gradient of every check whose layer name
/// starts with it, so the suite's failure path can be exercised.
#[derive(Debug, Clone, Default)]
pub struct GradcheckOptions {
    pub fault: Option<String>,
    pub seed: u64,
}

struct Tracker {
    layer: String,
    worst: f64,
    coordinate: String,
    corrupt: bool,
}

impl Tracker {
    fn new(layer: String, options: &GradcheckOptions) -> Self {
        let corrupt = options
            .fault
            .as_deref()
            .is_some_and(|p| layer.starts_with(p));
        Self {
            layer,
            worst: 0.0,
            coordinate: "-".into(),
            corrupt,
        }
    }

    fn compare(&mut self, name: &str, analytic: &Tensor, numeric: &Tensor) {
        for (i, (&a, &b)) in analytic.data().iter().zip(numeric.data()).enumerate() {
            let a = if self.corrupt && i == 0 { a * 1.01 + 1e-3 } else { a };
            let e = relative_error(a, b, FLOOR);
            if e > self.worst || e.is_nan() {
                self.worst = if e.is_nan() { f64::INFINITY } else { e };
                self.coordinate = format!("{name}[{i}]");
            }
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            layer: self.layer,
            worst_rel_error: self.worst,
            coordinate: self.coordinate,
        }
    }
}

fn random_tensor(shape: &[usize], rng: &mut RngStream, lo: f64, hi: f64) -> Tensor {
    let len = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..len).map(|_| rng.uniform(lo, hi)).collect())
        .expect("shape matches length")
}

/// Values in ±[0.1, 2], away from the relu kink.
fn away_from_zero(shape: &[usize], rng: &mut RngStream) -> Tensor {
    let len = shape.iter().product();
    let data = (0..len)
        .map(|_| {
            let v = rng.uniform(0.1, 2.0);
            if rng.bit() == 1.0 { v } else { -v }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches length")
}

fn weighted_sum(y: &Tensor, w: &Tensor) -> f64 {
    y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

fn check_dense(options: &GradcheckOptions, rng: &mut RngStream) -> Result<CheckResult> {
    let (batch, d_in, d_out) = (3, 5, 4);
    let x = random_tensor(&[batch, d_in], rng, -1.0, 1.0);
    let w = random_tensor(&[d_in, d_out], rng, -1.0, 1.0);
    let b = random_tensor(&[d_out], rng, -0.5, 0.5);
    let up = random_tensor(&[batch, d_out], rng, -1.0, 1.0);
    let (dx, dw, db) = fc_backward(&up, &x, &w)?;
    let mut t = Tracker::new(format!("fc({d_in}->{d_out})"), options);
    t.compare("x", &dx, &finite_diff_grad(|v| weighted_sum(&fc_forward(v, &w, &b).unwrap(), &up), &x, STEP)?);
    t.compare("weights", &dw, &finite_diff_grad(|v| weighted_sum(&fc_forward(&x, v, &b).unwrap(), &up), &w, STEP)?);
    t.compare("bias", &db, &finite_diff_grad(|v| weighted_sum(&fc_forward(&x, &w, v).unwrap(), &up), &b, STEP)?);
    Ok(t.finish())
}

fn check_conv(spec: ConvSpec, len: usize, options: &GradcheckOptions, rng: &mut RngStream) -> Result<CheckResult> {
    let batch = 2;
    let x_shape: Vec<usize> = if spec.d_in == 1 {
        vec![batch, len]
    } else {
        vec![batch, len, spec.d_in]
    };
    let x = random_tensor(&x_shape, rng, -1.0, 1.0);
    let k = random_tensor(&spec.kernel_shape(), rng, -1.0, 1.0);
    let b = random_tensor(&[spec.d_out], rng, -0.5, 0.5);
    let out_shape = [batch, spec.output_len(len), spec.d_out];
    let up = random_tensor(&out_shape, rng, -1.0, 1.0);
    let (dx, dk, db) = conv1d_backward(&up, &x, &spec, &k)?;
    let f = |x: &Tensor, k: &Tensor, b: &Tensor| weighted_sum(&conv1d_forward(x, &spec, k, b).unwrap(), &up);
    let name = format!(
        "conv1d({},{},{},{}) len {len}",
        spec.window, spec.d_in, spec.d_out, spec.stride
    );
    let mut t = Tracker::new(name, options);
    t.compare("x", &dx, &finite_diff_grad(|v| f(v, &k, &b), &x, STEP)?);
    t.compare("kernel", &dk, &finite_diff_grad(|v| f(&x, v, &b), &k, STEP)?);
    t.compare("bias", &db, &finite_diff_grad(|v| f(&x, &k, v), &b, STEP)?);
    Ok(t.finish())
}

/// The quantized tanh is checked through its surrogate: the analytic
/// backward must equal the finite-difference derivative of continuous tanh.
fn check_activation(kind: ActivationKind, options: &GradcheckOptions, rng: &mut RngStream) -> Result<CheckResult> {
    let shape = [4, 6];
    let x = away_from_zero(&shape, rng);
    let up = random_tensor(&shape, rng, -1.0, 1.0);
    let analytic = activation_backward(&up, &x, kind)?;
    let reference = match kind {
        ActivationKind::TanhDiscrete { .. } => ActivationKind::Tanh,
        k => k,
    };
    let numeric = finite_diff_grad(
        |v| weighted_sum(&activation_forward(v, reference).unwrap(), &up),
        &x,
        STEP,
    )?;
    let name = match kind {
        ActivationKind::TanhDiscrete { levels } => format!("tanh_discrete({levels})"),
        k => k.name().to_string(),
    };
    let mut t = Tracker::new(name, options);
    t.compare("x", &analytic, &numeric);
    Ok(t.finish())
}

/// Every layer kind used by the networks: the dense layer, the conv layer at
/// each stack configuration (even and odd lengths), and each activation.
pub fn run_gradcheck(options: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut rng = RngStream::new(options.seed);
    let mut results = vec![check_dense(options, &mut rng)?];
    for spec in CONV_STACK {
        for len in [7, 8] {
            results.push(check_conv(spec, len, options, &mut rng)?);
        }
    }
    for kind in [
        ActivationKind::Sigmoid,
        ActivationKind::Tanh,
        ActivationKind::Relu,
        ActivationKind::TanhDiscrete { levels: 13 },
        ActivationKind::TanhDiscrete { levels: 2 },
    ] {
        results.push(check_activation(kind, options, &mut rng)?);
    }
    Ok(GradcheckReport { results })
}
