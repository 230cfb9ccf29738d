//! Layer stack, forward/backward passes and the two reference architectures.
//!
//! Both variants share the shape schedule
//! `conv(C->16) relu pool conv(16->16) relu pool conv(16->8) relu flatten fc(->32) relu fc(->classes)`
//! and differ only in the convolution: an alpha-mix of meet and join
//! convolutions on evenly spaced 4x4 supports, or a contiguous 4x4
//! cross-correlation with same-size padding.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conv::{standard_conv, standard_conv_backward, KERNEL};
use super::dense::{fully_connected, fully_connected_backward};
use super::lattice_conv::{bias_grad, check_alpha, lattice_conv_backward, lattice_taps, LatticeOp};
use super::loss::softmax_cross_entropy;
use super::pool::{max_pool_2x2, max_pool_backward};
use super::taps;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::grid_lattice::{kernel_support, GridLattice, KernelSupport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Lattice,
    Standard,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lattice" => Ok(Variant::Lattice),
            "standard" => Ok(Variant::Standard),
            other => Err(Error::invalid(format!("unknown variant {other:?} (lattice|standard)"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Lattice => "lattice",
            Variant::Standard => "standard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::invalid(format!("unknown activation {other:?} (relu|tanh)"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

/// `alpha * meet + (1 - alpha) * join` with one shared bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLayer {
    pub meet: Tensor,
    pub join: Tensor,
    pub bias: Tensor,
    pub support: KernelSupport,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub weights: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Lattice(LatticeLayer),
    Conv(Affine),
    MaxPool,
    Flatten,
    Dense(Affine),
    Act(Activation),
}

/// Per-layer data retained by the forward pass for the backward pass.
#[derive(Debug, Clone)]
pub enum Cache {
    Nothing,
    Argmax(Vec<usize>),
}

impl LatticeLayer {
    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (_, h, w) = x.dims3("lattice layer input")?;
        let lattice = GridLattice::for_grid(h, w)?;
        let (n_out, n_in) = (self.meet.shape()[0], self.meet.shape()[1]);
        super::lattice_conv::check_kernel(x, &self.meet, &self.support)?;
        super::lattice_conv::check_kernel(x, &self.join, &self.support)?;
        let mut out = Tensor::zeros(&[n_out, h, w]);
        for (j, &b) in self.bias.data().iter().enumerate() {
            out.data_mut()[j * h * w..(j + 1) * h * w].fill(b);
        }
        for (kernel, op, scale) in [
            (&self.meet, LatticeOp::Meet, self.alpha),
            (&self.join, LatticeOp::Join, 1.0 - self.alpha),
        ] {
            let t = lattice_taps(&lattice, &self.support, op);
            taps::forward(x.data(), kernel.data(), &t, n_in, n_out, scale, out.data_mut());
        }
        Ok(out)
    }

    fn backward(&self, x: &Tensor, up: &Tensor) -> Result<(Vec<Tensor>, Tensor)> {
        let gm = lattice_conv_backward(x, &self.meet, &self.support, LatticeOp::Meet, self.alpha, up)?;
        let gj = lattice_conv_backward(x, &self.join, &self.support, LatticeOp::Join, 1.0 - self.alpha, up)?;
        let mut gx = gm.input;
        gx.add_assign(&gj.input);
        Ok((vec![gm.weights, gj.weights, bias_grad(up)?], gx))
    }
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Lattice(_) => "lattice_conv",
            Layer::Conv(_) => "standard_conv",
            Layer::MaxPool => "max_pool",
            Layer::Flatten => "flatten",
            Layer::Dense(_) => "fully_connected",
            Layer::Act(Activation::Relu) => "relu",
            Layer::Act(Activation::Tanh) => "tanh",
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Lattice(l) => vec![&l.meet, &l.join, &l.bias],
            Layer::Conv(a) | Layer::Dense(a) => vec![&a.weights, &a.bias],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Lattice(l) => vec![&mut l.meet, &mut l.join, &mut l.bias],
            Layer::Conv(a) | Layer::Dense(a) => vec![&mut a.weights, &mut a.bias],
            _ => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Cache)> {
        let out = match self {
            Layer::Lattice(l) => l.forward(x)?,
            Layer::Conv(a) => standard_conv(x, &a.weights, &a.bias)?,
            Layer::MaxPool => {
                let p = max_pool_2x2(x)?;
                return Ok((p.output, Cache::Argmax(p.argmax)));
            }
            Layer::Flatten => x.clone().reshape(&[x.len()])?,
            Layer::Dense(a) => fully_connected(x, &a.weights, &a.bias)?,
            Layer::Act(Activation::Relu) => {
                let d = x.data().iter().map(|&v| v.max(0.0)).collect();
                Tensor::from_vec(x.shape(), d)?
            }
            Layer::Act(Activation::Tanh) => {
                let d = x.data().iter().map(|&v| v.tanh()).collect();
                Tensor::from_vec(x.shape(), d)?
            }
        };
        Ok((out, Cache::Nothing))
    }

    /// Parameter gradients (in [`Layer::params`] order) and the input gradient.
    pub fn backward(&self, x: &Tensor, cache: &Cache, up: &Tensor) -> Result<(Vec<Tensor>, Tensor)> {
        Ok(match self {
            Layer::Lattice(l) => l.backward(x, up)?,
            Layer::Conv(a) => {
                let g = standard_conv_backward(x, &a.weights, &a.bias, up)?;
                (vec![g.weights, g.bias], g.input)
            }
            Layer::MaxPool => {
                let Cache::Argmax(argmax) = cache else {
                    return Err(Error::shape("max pool backward without recorded argmax"));
                };
                (Vec::new(), max_pool_backward(x.shape(), argmax, up)?)
            }
            Layer::Flatten => (Vec::new(), up.clone().reshape(x.shape())?),
            Layer::Dense(a) => {
                let g = fully_connected_backward(x, &a.weights, &a.bias, up)?;
                (vec![g.weights, g.bias], g.input)
            }
            Layer::Act(act) => {
                up.expect_shape(x.shape(), "activation upstream")?;
                let d = x
                    .data()
                    .iter()
                    .zip(up.data())
                    .map(|(&v, &u)| match act {
                        Activation::Relu => {
                            if v > 0.0 {
                                u
                            } else {
                                0.0
                            }
                        }
                        Activation::Tanh => u * (1.0 - v.tanh().powi(2)),
                    })
                    .collect();
                (Vec::new(), Tensor::from_vec(x.shape(), d)?)
            }
        })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let three = |what: &str| -> Result<(usize, usize, usize)> {
            match *input {
                [c, h, w] => Ok((c, h, w)),
                _ => Err(Error::shape(format!("{what}: expected (C,H,W), got {input:?}"))),
            }
        };
        Ok(match self {
            Layer::Lattice(l) => {
                let (c, h, w) = three("lattice conv")?;
                if l.meet.shape()[1] != c {
                    return Err(Error::shape(format!(
                        "lattice conv expects {} channels, got {c}",
                        l.meet.shape()[1]
                    )));
                }
                vec![l.meet.shape()[0], h, w]
            }
            Layer::Conv(a) => {
                let (c, h, w) = three("standard conv")?;
                if a.weights.shape()[1] != c {
                    return Err(Error::shape(format!(
                        "conv expects {} channels, got {c}",
                        a.weights.shape()[1]
                    )));
                }
                vec![a.weights.shape()[0], h, w]
            }
            Layer::MaxPool => {
                let (c, h, w) = three("max pool")?;
                if h % 2 != 0 || w % 2 != 0 {
                    return Err(Error::shape(format!("max pool needs even dims, got {h}x{w}")));
                }
                vec![c, h / 2, w / 2]
            }
            Layer::Flatten => vec![input.iter().product()],
            Layer::Dense(a) => {
                if input != [a.weights.shape()[1]] {
                    return Err(Error::shape(format!(
                        "fully connected expects [{}], got {input:?}",
                        a.weights.shape()[1]
                    )));
                }
                vec![a.weights.shape()[0]]
            }
            Layer::Act(_) => input.to_vec(),
        })
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub variant: Variant,
    pub in_channels: usize,
    pub classes: usize,
    pub rows: usize,
    pub cols: usize,
    pub alpha: f64,
    pub activation: Activation,
    /// Output channels of the three convolutions.
    pub conv_channels: [usize; 3],
    pub fc_hidden: usize,
    /// Side count of the lattice kernel supports.
    pub support_side: usize,
}

impl NetworkConfig {
    pub fn new(variant: Variant, in_channels: usize, classes: usize, rows: usize, cols: usize) -> Self {
        Self {
            variant,
            in_channels,
            classes,
            rows,
            cols,
            alpha: 0.5,
            activation: Activation::Relu,
            conv_channels: [16, 16, 8],
            fc_hidden: 32,
            support_side: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !self.rows.is_multiple_of(4) || !self.cols.is_multiple_of(4) || self.rows < 8 || self.cols < 8 {
            return Err(Error::invalid(format!(
                "grid {}x{} must be divisible by 4 and at least 8x8",
                self.rows, self.cols
            )));
        }
        if self.in_channels == 0 || self.classes < 2 {
            return Err(Error::invalid("need at least one input channel and two classes"));
        }
        if self.support_side < 2 {
            return Err(Error::invalid("support side must be >= 2"));
        }
        Ok(())
    }
}

/// Random state for initialization: ±sqrt(6 / (fan_in + fan_out)), uniform.
struct Init(ChaCha8Rng);

impl Init {
    fn uniform(&mut self, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n = shape.iter().product();
        let data = (0..n).map(|_| self.0.random_range(-bound..bound)).collect();
        Tensor::from_vec(shape, data).expect("init shape")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: NetworkConfig,
    pub layers: Vec<Layer>,
}

/// Activations and caches of one forward pass.
pub struct Trace {
    /// `inputs[k]` is the input of layer `k`.
    pub inputs: Vec<Tensor>,
    pub caches: Vec<Cache>,
    pub output: Tensor,
}

impl Network {
    pub fn build(config: &NetworkConfig, seed: u64) -> Result<Network> {
        config.validate()?;
        let mut init = Init(ChaCha8Rng::seed_from_u64(seed));
        let mut layers = Vec::new();
        let (mut c, mut h, mut w) = (config.in_channels, config.rows, config.cols);
        for (idx, &out) in config.conv_channels.iter().enumerate() {
            let conv = match config.variant {
                Variant::Lattice => {
                    let lattice = GridLattice::for_grid(h, w)?;
                    let side = config.support_side.min(lattice.m.min(lattice.n) + 1);
                    let support = kernel_support(&lattice, side)?;
                    let (sx, sy) = (support.xs.len(), support.ys.len());
                    let fan = |ch: usize| ch * sx * sy;
                    Layer::Lattice(LatticeLayer {
                        meet: init.uniform(&[out, c, sx, sy], fan(c), fan(out)),
                        join: init.uniform(&[out, c, sx, sy], fan(c), fan(out)),
                        bias: Tensor::zeros(&[out]),
                        support,
                        alpha: config.alpha,
                    })
                }
                Variant::Standard => {
                    let taps = KERNEL * KERNEL;
                    Layer::Conv(Affine {
                        weights: init.uniform(&[out, c, KERNEL, KERNEL], c * taps, out * taps),
                        bias: Tensor::zeros(&[out]),
                    })
                }
            };
            layers.push(conv);
            layers.push(Layer::Act(config.activation));
            c = out;
            if idx < 2 {
                layers.push(Layer::MaxPool);
                h /= 2;
                w /= 2;
            }
        }
        layers.push(Layer::Flatten);
        let flat = c * h * w;
        layers.push(Layer::Dense(Affine {
            weights: init.uniform(&[config.fc_hidden, flat], flat, config.fc_hidden),
            bias: Tensor::zeros(&[config.fc_hidden]),
        }));
        layers.push(Layer::Act(config.activation));
        layers.push(Layer::Dense(Affine {
            weights: init.uniform(&[config.classes, config.fc_hidden], config.fc_hidden, config.classes),
            bias: Tensor::zeros(&[config.classes]),
        }));
        let net = Network {
            config: config.clone(),
            layers,
        };
        net.layer_shapes()?;
        Ok(net)
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [self.config.in_channels, self.config.rows, self.config.cols]
    }

    /// Output shape of every layer for the configured input.
    pub fn layer_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shape = self.input_shape().to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            shape = layer.output_shape(&shape)?;
            out.push(shape.clone());
        }
        if shape != [self.config.classes] {
            return Err(Error::shape(format!(
                "network output {shape:?} for {} classes",
                self.config.classes
            )));
        }
        Ok(out)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn forward_trace(&self, x: &Tensor) -> Result<Trace> {
        x.expect_shape(&self.input_shape(), "network input")?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            let (out, cache) = layer.forward(&cur)?;
            out.check_finite(&format!("{} output", layer.kind()))?;
            inputs.push(cur);
            caches.push(cache);
            cur = out;
        }
        Ok(Trace {
            inputs,
            caches,
            output: cur,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.forward_trace(x)?.output)
    }

    /// Gradients for every parameter (in [`Network::params`] order) given the
    /// gradient of the loss with respect to the network output.
    pub fn backward(&self, trace: &Trace, grad_output: &Tensor) -> Result<Vec<Tensor>> {
        let mut per_layer: Vec<Vec<Tensor>> = vec![Vec::new(); self.layers.len()];
        let mut up = grad_output.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let (grads, gx) = layer.backward(&trace.inputs[k], &trace.caches[k], &up)?;
            for g in &grads {
                g.check_finite(&format!("{} gradient", layer.kind()))?;
            }
            per_layer[k] = grads;
            up = gx;
        }
        Ok(per_layer.into_iter().flatten().collect())
    }

    /// Cross-entropy loss, logits and parameter gradients for one example.
    pub fn loss_and_grads(&self, x: &Tensor, label: usize) -> Result<(f64, Tensor, Vec<Tensor>)> {
        let trace = self.forward_trace(x)?;
        let (loss, grad) = softmax_cross_entropy(&trace.output, label)?;
        let grads = self.backward(&trace, &grad)?;
        Ok((loss, trace.output, grads))
    }

    pub fn predict(&self, x: &Tensor) -> Result<usize> {
        let logits = self.forward(x)?;
        Ok(argmax(logits.data()))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
