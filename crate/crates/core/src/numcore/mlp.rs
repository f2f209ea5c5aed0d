//! Fully connected networks with hand-rolled reverse-mode gradients.
//!
//! One `Mlp` type serves every network role in the framework: the
//! environment-aware flow network, the RL policy networks, and the RL value
//! networks. Hidden layers use tanh (its second derivatives are smooth, which
//! the PDE residuals need); the output layer is linear. All math is f64.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct Layer {
    /// Weight matrix, `out x in`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// A fully connected network: tanh hidden layers, identity output layer.
#[derive(Debug)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    pub(crate) layers: Vec<Layer>,
}

/// Result of a reverse pass: gradient of `<output, cotangent>`.
pub struct Backprop {
    /// Flat parameter gradient, same layout as [`Mlp::params`].
    pub param_grad: Vec<f64>,
    /// Gradient with respect to the input vector.
    pub input_grad: Vec<f64>,
}

/// First and per-coordinate second derivatives of the outputs with respect
/// to the inputs.
pub struct InputDerivatives {
    /// `jacobian[(i, j)]` = d out_i / d in_j, shape `out x in`.
    pub jacobian: Array2<f64>,
    /// `second[(i, j)]` = d² out_i / d in_j², shape `out x in`.
    pub second: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: String,
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
}

pub const CHECKPOINT_VERSION: &str = "mlp-v1";

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Config(format!(
            "a network needs at least input and output sizes, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Config(format!(
            "layer sizes must be positive, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

impl Mlp {
    /// Network with all parameters zero. Maps every input to the zero vector.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let layers = layer_sizes
            .windows(2)
            .map(|w| Layer {
                w: Array2::zeros((w[1], w[0])),
                b: Array1::zeros(w[1]),
            })
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
        })
    }

    /// Xavier-uniform initialization from a seeded generator.
    pub fn xavier(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|sz| {
                let (n_in, n_out) = (sz[0], sz[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                let w = Array2::from_shape_fn((n_out, n_in), |_| rng.gen_range(-limit..limit));
                Layer {
                    w,
                    b: Array1::zeros(n_out),
                }
            })
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
        })
    }

    /// Rebuild a network from its flat parameter vector.
    pub fn from_params(layer_sizes: &[usize], params: &[f64]) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        net.set_params(params)?;
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Total parameter count: sum of out*in + out over layers.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flat parameters in layer order: each layer's weights row-major, then its biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            for w in l.w.iter_mut() {
                *w = params[off];
                off += 1;
            }
            for b in l.b.iter_mut() {
                *b = params[off];
                off += 1;
            }
        }
        Ok(())
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "input length {len} does not match first layer size {}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Evaluate the network on one input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input.len())?;
        let n_layers = self.layers.len();
        let mut a = input.to_vec();
        for (k, l) in self.layers.iter().enumerate() {
            let mut z: Vec<f64> = l
                .w
                .rows()
                .into_iter()
                .zip(l.b.iter())
                .map(|(row, &b)| row.iter().zip(a.iter()).map(|(w, x)| w * x).sum::<f64>() + b)
                .collect();
            if k + 1 < n_layers {
                for v in &mut z {
                    *v = v.tanh();
                }
            }
            a = z;
        }
        Ok(a)
    }

    /// Evaluate the network on a batch of inputs stored as columns (`in x B`).
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(inputs.nrows())?;
        let n_layers = self.layers.len();
        let mut a = inputs.to_owned();
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = l.w.dot(&a);
            z += &l.b.view().insert_axis(Axis(1));
            if k + 1 < n_layers {
                z.mapv_inplace(f64::tanh);
            }
            a = z;
        }
        Ok(a)
    }

    /// Gradient of `<output, cotangent>` with respect to parameters and input.
    pub fn backprop(&self, input: &[f64], cotangent: &[f64]) -> Result<Backprop> {
        self.check_input(input.len())?;
        if cotangent.len() != self.output_dim() {
            return Err(Error::DimensionMismatch(format!(
                "cotangent length {} does not match output size {}",
                cotangent.len(),
                self.output_dim()
            )));
        }
        let x = Array2::from_shape_vec((input.len(), 1), input.to_vec()).unwrap();
        let cot = Array2::from_shape_vec((cotangent.len(), 1), cotangent.to_vec()).unwrap();
        let (param_grad, input_grads) = self.backprop_batch(x.view(), cot.view())?;
        Ok(Backprop {
            param_grad,
            input_grad: input_grads.column(0).to_vec(),
        })
    }

    /// Batched reverse pass over columns. Returns the parameter gradient summed
    /// over the batch and the per-column input gradients.
    pub fn backprop_batch(
        &self,
        inputs: ArrayView2<f64>,
        cotangents: ArrayView2<f64>,
    ) -> Result<(Vec<f64>, Array2<f64>)> {
        self.check_input(inputs.nrows())?;
        if cotangents.nrows() != self.output_dim() || cotangents.ncols() != inputs.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "cotangent batch {}x{} does not match output size {} and batch {}",
                cotangents.nrows(),
                cotangents.ncols(),
                self.output_dim(),
                inputs.ncols()
            )));
        }
        let n_layers = self.layers.len();
        // Forward, keeping post-activation values of every layer.
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(n_layers + 1);
        acts.push(inputs.to_owned());
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = l.w.dot(acts.last().unwrap());
            z += &l.b.view().insert_axis(Axis(1));
            if k + 1 < n_layers {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        // Reverse.
        let mut grad_w: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
        let mut grad_b: Vec<Array1<f64>> = Vec::with_capacity(n_layers);
        let mut z_bar = cotangents.to_owned();
        for k in (0..n_layers).rev() {
            if k + 1 < n_layers {
                // acts[k + 1] = tanh(z): scale by 1 - a^2.
                ndarray::azip!((zb in &mut z_bar, &a in &acts[k + 1]) *zb *= 1.0 - a * a);
            }
            grad_w.push(z_bar.dot(&acts[k].t()));
            grad_b.push(z_bar.sum_axis(Axis(1)));
            z_bar = self.layers[k].w.t().dot(&z_bar);
        }
        grad_w.reverse();
        grad_b.reverse();
        let mut flat = Vec::with_capacity(self.param_count());
        for (w, b) in grad_w.iter().zip(grad_b.iter()) {
            flat.extend(w.iter());
            flat.extend(b.iter());
        }
        Ok((flat, z_bar))
    }

    /// First and per-coordinate second derivatives of outputs w.r.t. the input,
    /// by exact forward propagation of derivative jets through the layers.
    pub fn input_derivatives(&self, input: &[f64]) -> Result<InputDerivatives> {
        self.check_input(input.len())?;
        let x = Array2::from_shape_vec((input.len(), 1), input.to_vec()).unwrap();
        let jet = self.jet_batch(x.view())?;
        Ok(InputDerivatives {
            jacobian: jet.jacobian,
            second: jet.second,
        })
    }

    /// Write a `mlp-v1` checkpoint (JSON: layer sizes then flat parameters).
    pub fn save(&self, path: &Path) -> Result<()> {
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION.to_string(),
            layer_sizes: self.layer_sizes.clone(),
            params: self.params(),
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &ckpt)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let ckpt: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {:?}",
                ckpt.version
            )));
        }
        Self::from_params(&ckpt.layer_sizes, &ckpt.params)
    }
}

impl Clone for Mlp {
    fn clone(&self) -> Self {
        Self {
            layer_sizes: self.layer_sizes.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    w: l.w.clone(),
                    b: l.b.clone(),
                })
                .collect(),
        }
    }
}
