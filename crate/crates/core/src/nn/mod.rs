//! Fully connected networks with hand-written reverse-mode gradients.
//!
//! A forward pass records the per-layer inputs and post-activation outputs on
//! a [`Tape`]; [`Mlp::backward`] consumes that tape once. Besides the usual
//! output gradient, backward accepts an extra gradient for the last hidden
//! layer, which is how feature-space losses (the Bures term) reach the
//! parameters.

mod adam;
mod checkpoint;
mod loss;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use loss::{disc_loss_grads, gan_losses, gen_loss_grad, log_sigmoid, sigmoid, GanLosses};

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::featmap::FeatureBatch;
use crate::linalg::Matrix;

/// Hidden width of the synthetic generator and discriminator.
pub const SYNTHETIC_HIDDEN: usize = 128;
/// Latent dimension of the synthetic generator.
pub const SYNTHETIC_LATENT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Tanh,
    LeakyRelu(f64),
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::LeakyRelu(slope) => {
                if a > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Tanh => write!(f, "tanh"),
            Activation::LeakyRelu(s) => write!(f, "leaky_relu:{s}"),
            Activation::Relu => write!(f, "relu"),
            Activation::Identity => write!(f, "none"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "none" => Ok(Activation::Identity),
            _ => match s.strip_prefix("leaky_relu:").map(str::parse::<f64>) {
                Some(Ok(slope)) if slope.is_finite() && slope >= 0.0 => {
                    Ok(Activation::LeakyRelu(slope))
                }
                _ => Err(Error::Parameter(format!("unknown activation '{s}'"))),
            },
        }
    }
}

/// Dense layer computing `act(x · W + b)`; `weights` is `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }

    fn forward(&self, x: &Matrix) -> Matrix {
        let mut z = x.matmul(&self.weights).expect("layer dims chain");
        for i in 0..z.rows() {
            for (v, b) in z.row_mut(i).iter_mut().zip(&self.bias) {
                *v = self.activation.apply(*v + b);
            }
        }
        z
    }
}

/// Multi-layer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    /// Checks that consecutive layers chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Parameter("a network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::Shape(format!(
                    "layer {i}: bias has {} entries for {} outputs",
                    l.bias.len(),
                    l.output_dim()
                )));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-uniform weights and zero biases. `dims` lists the input width
    /// followed by every layer's output width.
    pub fn new(dims: &[usize], activations: &[Activation], rng: &mut impl Rng) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::Parameter(format!(
                "{} widths need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    weights: Matrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-limit..limit)),
                    bias: vec![0.0; fan_out],
                    activation,
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    /// `latent → 128 tanh → 128 tanh → 2`.
    pub fn synthetic_generator(latent_dim: usize, rng: &mut impl Rng) -> Self {
        Self::new(
            &[latent_dim, SYNTHETIC_HIDDEN, SYNTHETIC_HIDDEN, 2],
            &[Activation::Tanh, Activation::Tanh, Activation::Identity],
            rng,
        )
        .expect("synthetic generator layout is valid")
    }

    /// `input → 128 tanh → 128 tanh → 1` (raw logit).
    pub fn synthetic_discriminator(input_dim: usize, rng: &mut impl Rng) -> Self {
        Self::new(
            &[input_dim, SYNTHETIC_HIDDEN, SYNTHETIC_HIDDEN, 1],
            &[Activation::Tanh, Activation::Tanh, Activation::Identity],
            rng,
        )
        .expect("synthetic discriminator layout is valid")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Width of the layer feeding the final dense layer (the input width for
    /// a single-layer net).
    pub fn hidden_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].input_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.bias.len())
            .sum()
    }

    /// All parameters, layer by layer: weights row-major, then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "{} parameters for a network with {}",
                params.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let nw = l.weights.rows() * l.weights.cols();
            l.weights
                .as_mut_slice()
                .copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    pub fn params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.all_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} columns, network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward pass that records a tape for [`Mlp::backward`].
    pub fn forward(&self, x: &Matrix) -> Result<Forward> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut current = x.clone();
        for layer in &self.layers {
            let out = layer.forward(&current);
            inputs.push(current);
            current = out;
        }
        let hidden = inputs[inputs.len() - 1].clone();
        Ok(Forward {
            output: current.clone(),
            hidden,
            tape: Tape {
                inner: Some(TapeInner {
                    shapes: self.shapes(),
                    inputs,
                    output: current,
                }),
            },
        })
    }

    /// Forward pass without a tape; returns `(output, last hidden activations)`.
    pub fn forward_inference(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        self.check_input(x)?;
        let mut current = x.clone();
        let last = self.layers.len() - 1;
        for layer in &self.layers[..last] {
            current = layer.forward(&current);
        }
        let output = self.layers[last].forward(&current);
        Ok((output, current))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward_inference(x)?.0)
    }

    /// Activations of the last hidden layer only; the output layer is skipped.
    pub fn hidden_features(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut current = x.clone();
        for layer in &self.layers[..self.layers.len() - 1] {
            current = layer.forward(&current);
        }
        Ok(current)
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .map(|l| (l.input_dim(), l.output_dim()))
            .collect()
    }

    /// Reverse pass. `grad_output` is `∂L/∂y`; `grad_hidden`, if given, is an
    /// additional `∂L/∂h` for the last hidden activations. The tape is
    /// consumed; a second call with the same tape is a state error.
    pub fn backward(
        &self,
        tape: &mut Tape,
        grad_output: &Matrix,
        grad_hidden: Option<&Matrix>,
    ) -> Result<Gradients> {
        let inner = tape
            .inner
            .take()
            .ok_or_else(|| Error::State("tape has already been consumed".into()))?;
        if inner.shapes != self.shapes() {
            return Err(Error::State("tape was recorded by a different network".into()));
        }
        let batch = inner.inputs[0].rows();
        if grad_output.shape() != (batch, self.output_dim()) {
            return Err(Error::Shape(format!(
                "output gradient is {:?}, expected {:?}",
                grad_output.shape(),
                (batch, self.output_dim())
            )));
        }
        if let Some(g) = grad_hidden {
            if g.shape() != (batch, self.hidden_dim()) {
                return Err(Error::Shape(format!(
                    "hidden gradient is {:?}, expected {:?}",
                    g.shape(),
                    (batch, self.hidden_dim())
                )));
            }
        }

        let last = self.layers.len() - 1;
        let mut layer_grads = Vec::with_capacity(self.layers.len());
        let mut upstream = grad_output.clone();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let out = if idx == last {
                &inner.output
            } else {
                &inner.inputs[idx + 1]
            };
            let mut delta = upstream;
            for (d, &a) in delta.as_mut_slice().iter_mut().zip(out.as_slice()) {
                *d *= layer.activation.derivative_from_output(a);
            }
            let weights = inner.inputs[idx].matmul_tn(&delta)?;
            let mut bias = vec![0.0; layer.output_dim()];
            for r in delta.row_iter() {
                crate::linalg::axpy_slice(&mut bias, 1.0, r);
            }
            upstream = delta.matmul_nt(&layer.weights)?;
            if idx == last {
                if let Some(g) = grad_hidden {
                    upstream.axpy(1.0, g)?;
                }
            }
            layer_grads.push(LayerGrad { weights, bias });
        }
        layer_grads.reverse();
        Ok(Gradients {
            layers: layer_grads,
            input: upstream,
        })
    }
}

/// Result of [`Mlp::forward`].
#[derive(Debug)]
pub struct Forward {
    pub output: Matrix,
    /// Activations of the last hidden layer (input of the final dense layer).
    pub hidden: Matrix,
    pub tape: Tape,
}

impl Forward {
    pub fn hidden_features(&self) -> FeatureBatch {
        FeatureBatch::new(self.hidden.clone()).expect("activations are finite")
    }
}

/// Recorded activations of one forward pass.
#[derive(Debug)]
pub struct Tape {
    inner: Option<TapeInner>,
}

#[derive(Debug)]
struct TapeInner {
    shapes: Vec<(usize, usize)>,
    /// Input of every layer; layer `i`'s output is `inputs[i + 1]`.
    inputs: Vec<Matrix>,
    output: Matrix,
}

impl Tape {
    pub fn is_consumed(&self) -> bool {
        self.inner.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Parameter gradients plus the gradient with respect to the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub input: Matrix,
}

impl Gradients {
    /// Flattened in the same order as [`Mlp::params`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend_from_slice(g.weights.as_slice());
            out.extend_from_slice(&g.bias);
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.all_finite() && g.bias.iter().all(|b| b.is_finite()))
    }
}
