//! The learned reconstructor: a plain convolutional residual stack on top of
//! a fixed bicubic upsampling skeleton.
//!
//! `f(y) = upsample(y) + stack(upsample(y))` where `upsample` is periodic
//! bicubic interpolation to `factor` times the input extents and `stack` is
//! `depth` periodic 3x3 convolutions with ReLU between them. The final layer
//! starts at zero, so an untrained network reproduces the bicubic upsample
//! exactly and training learns a correction to it.
//!
//! Parameters live in plain tensors ([`Network`]) and are bound to a graph
//! per evaluation ([`Network::bind`]); the bound view implements
//! [`Reconstructor`] so every loss accepts it.

use ndgrad::ops::ResampleSpec;
use ndgrad::{Graph, Scalar, Tensor, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::rc::Rc;

use crate::losses::Reconstructor;
use crate::rng::{stream, Purpose};
use crate::{SeiError, SeiResult};

/// Architecture description. `channels` is the hidden width, `depth` the
/// total number of convolutions (so `depth - 1` hidden activations),
/// `residual` toggles the skip past the stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub channels: usize,
    pub depth: usize,
    pub kernel_size: usize,
    pub residual: bool,
    pub factor: usize,
    pub in_channels: usize,
}

impl NetworkConfig {
    pub fn with_factor(factor: usize) -> Self {
        NetworkConfig {
            channels: 32,
            depth: 6,
            kernel_size: 3,
            residual: true,
            factor,
            in_channels: 1,
        }
    }

    pub fn validate(&self) -> SeiResult<()> {
        if self.channels == 0 || self.depth == 0 || self.in_channels == 0 {
            return Err(SeiError::invalid("network config", format!("{self:?}")));
        }
        if self.kernel_size % 2 == 0 || self.kernel_size == 0 {
            return Err(SeiError::invalid(
                "kernel size",
                format!("{} (want odd)", self.kernel_size),
            ));
        }
        if self.factor == 0 {
            return Err(SeiError::invalid("factor", "0 (want >= 1)"));
        }
        Ok(())
    }

    /// Channel extents of each convolution, input to output.
    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.depth);
        for i in 0..self.depth {
            let cin = if i == 0 { self.in_channels } else { self.channels };
            let cout = if i == self.depth - 1 { self.in_channels } else { self.channels };
            dims.push((cin, cout));
        }
        dims
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|&(cin, cout)| cout * cin * self.kernel_size * self.kernel_size + cout)
            .sum()
    }
}

/// One convolution layer's parameters: a `[cout, cin, k, k]` weight and a
/// `[cout]` bias.
#[derive(Debug, Clone)]
pub struct ConvLayer<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// The network as data: config plus parameter tensors.
#[derive(Debug, Clone)]
pub struct Network<T> {
    cfg: NetworkConfig,
    layers: Vec<ConvLayer<T>>,
}

impl<T: Scalar> Network<T> {
    /// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` init for every layer
    /// except the last, which starts at exactly zero so the fresh network is
    /// the identity correction. Draws are f64, in layer order, weights
    /// row-major then bias.
    pub fn init(cfg: &NetworkConfig, seed: u64) -> SeiResult<Self> {
        cfg.validate()?;
        let mut rng = stream(seed, Purpose::Init, &[]);
        let k = cfg.kernel_size;
        let dims = cfg.layer_dims();
        let last = dims.len() - 1;
        let mut layers = Vec::with_capacity(dims.len());
        for (i, &(cin, cout)) in dims.iter().enumerate() {
            let wshape = vec![cout, cin, k, k];
            let (weight, bias) = if i == last {
                (Tensor::zeros(wshape), Tensor::zeros(vec![cout]))
            } else {
                let bound = 1.0 / ((cin * k * k) as f64).sqrt();
                let weight =
                    Tensor::from_fn(wshape, |_| T::of_f64(rng.gen_range(-bound..bound)));
                let bias =
                    Tensor::from_fn(vec![cout], |_| T::of_f64(rng.gen_range(-bound..bound)));
                (weight, bias)
            };
            layers.push(ConvLayer { weight, bias });
        }
        Ok(Network { cfg: cfg.clone(), layers })
    }

    pub fn from_parts(cfg: NetworkConfig, layers: Vec<ConvLayer<T>>) -> SeiResult<Self> {
        cfg.validate()?;
        let dims = cfg.layer_dims();
        if layers.len() != dims.len() {
            return Err(SeiError::invalid(
                "layer count",
                format!("{} (want {})", layers.len(), dims.len()),
            ));
        }
        let k = cfg.kernel_size;
        for (layer, &(cin, cout)) in layers.iter().zip(&dims) {
            if layer.weight.shape() != [cout, cin, k, k] || layer.bias.shape() != [cout] {
                return Err(SeiError::invalid(
                    "layer shape",
                    format!(
                        "weight {:?} bias {:?} (want [{cout}, {cin}, {k}, {k}] and [{cout}])",
                        layer.weight.shape(),
                        layer.bias.shape()
                    ),
                ));
            }
        }
        Ok(Network { cfg, layers })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn layers(&self) -> &[ConvLayer<T>] {
        &self.layers
    }

    /// Flat views over all parameters in a fixed order (layer by layer,
    /// weight then bias), the order optimizers and checkpoints use.
    pub fn parameters(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect()
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            cfg: self.cfg.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| ConvLayer { weight: l.weight.cast(), bias: l.bias.cast() })
                .collect(),
        }
    }

    /// Register every parameter on `graph` with gradients enabled.
    pub fn bind(&self, graph: &Rc<Graph<T>>) -> BoundNetwork<T> {
        let layers = self
            .layers
            .iter()
            .map(|l| BoundLayer {
                weight: graph.var(l.weight.clone(), true),
                bias: graph.var(l.bias.clone(), true),
            })
            .collect();
        BoundNetwork { cfg: self.cfg.clone(), layers }
    }

    /// Register every parameter as a constant, for evaluation without
    /// gradient bookkeeping.
    pub fn bind_frozen(&self, graph: &Rc<Graph<T>>) -> BoundNetwork<T> {
        let layers = self
            .layers
            .iter()
            .map(|l| BoundLayer {
                weight: graph.constant(l.weight.clone()),
                bias: graph.constant(l.bias.clone()),
            })
            .collect();
        BoundNetwork { cfg: self.cfg.clone(), layers }
    }
}

pub struct BoundLayer<T> {
    pub weight: Var<T>,
    pub bias: Var<T>,
}

/// A network bound to one graph. Dropping the graph invalidates the vars, so
/// this is built per training step.
pub struct BoundNetwork<T> {
    cfg: NetworkConfig,
    layers: Vec<BoundLayer<T>>,
}

impl<T: Scalar> BoundNetwork<T> {
    pub fn layers(&self) -> &[BoundLayer<T>] {
        &self.layers
    }

    /// Parameter vars in the same fixed order as [`Network::parameters`].
    pub fn parameters(&self) -> Vec<&Var<T>> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    fn upsample(&self, y: &Var<T>) -> SeiResult<Var<T>> {
        let shape = y.shape();
        if self.cfg.factor == 1 {
            return Ok(y.clone());
        }
        let spec = ResampleSpec {
            out_h: self.cfg.factor * shape[1],
            out_w: self.cfg.factor * shape[2],
            spacing: (1.0 / self.cfg.factor as f64, 1.0 / self.cfg.factor as f64),
            offset: (0.0, 0.0),
            kernel_scale: 1.0,
        };
        Ok(y.resample_bicubic(&spec)?)
    }
}

impl<T: Scalar> Reconstructor<T> for BoundNetwork<T> {
    fn factor(&self) -> usize {
        self.cfg.factor
    }

    fn reconstruct(&self, y: &Var<T>) -> SeiResult<Var<T>> {
        let shape = y.shape();
        if shape[0] != self.cfg.in_channels {
            return Err(SeiError::invalid(
                "input channels",
                format!("{} (network expects {})", shape[0], self.cfg.in_channels),
            ));
        }
        let u = self.upsample(y)?;
        let ushape = u.shape();
        if ushape[1] < self.cfg.kernel_size || ushape[2] < self.cfg.kernel_size {
            return Err(SeiError::invalid(
                "input extents",
                format!(
                    "{}x{} upsampled is smaller than the {} kernel",
                    ushape[1], ushape[2], self.cfg.kernel_size
                ),
            ));
        }
        let mut h = u.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            h = h.conv2d_mc(&layer.weight)?.add_bias(&layer.bias)?;
            if i != last {
                h = h.relu();
            }
        }
        if self.cfg.residual {
            h = u.add(&h)?;
        }
        Ok(h)
    }
}
