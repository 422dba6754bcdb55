//! Tanh networks with optional skip connections.
//!
//! The model is a stack of channel-mixing layers (a kernel-size-1 convolution
//! over a length-1 coordinate sequence is arithmetically a dense layer, and is
//! implemented as one). With `skip_distance = n > 0`, every eligible hidden
//! layer `l > n + 1` receives its pre-activation plus the output of layer
//! `l - n - 1`:
//!
//! ```text
//! z_l = tanh(W_l z_{l-1} + b_l + z_{l-n-1})
//! ```
//!
//! With `skip_distance = 0` the stack degenerates to the plain fully
//! connected composition `z_l = tanh(W_l z_{l-1} + b_l)`. The final layer is
//! a linear projection to one output channel.
//!
//! Inputs may be affinely rescaled to [-1, 1] per coordinate before the first
//! layer (`set_input_box`). The rescaling is fixed (not trainable) and is
//! chain-ruled exactly by the differentiation engine, so all reported
//! derivatives are with respect to the raw physical coordinates.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Construction parameters for a [`Network`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NetworkConfig {
    /// Number of input coordinates (2 for (x, t), 3 for (x, y, t)).
    pub input_dim: usize,
    /// Channels per hidden layer.
    pub hidden_width: usize,
    /// Total number of layers, counting the input and output projections.
    pub depth: usize,
    /// Skip distance `n`; 0 disables skip connections.
    pub skip_distance: usize,
    /// Standard deviation of the Gaussian weight initialization.
    pub init_std: f64,
    /// RNG seed for initialization.
    pub seed: u64,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 3 {
            return Err(Error::InvalidConfig(format!(
                "depth must be >= 3, got {}",
                self.depth
            )));
        }
        if self.hidden_width < 1 {
            return Err(Error::InvalidConfig("hidden_width must be >= 1".into()));
        }
        if self.input_dim < 1 || self.input_dim > 3 {
            return Err(Error::InvalidConfig(format!(
                "input_dim must be 1..=3, got {}",
                self.input_dim
            )));
        }
        if !(self.init_std > 0.0) || !self.init_std.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "init_std must be positive and finite, got {}",
                self.init_std
            )));
        }
        Ok(())
    }

    /// Total trainable parameter count:
    /// `d*w + w + (depth-2)*(w^2 + w) + w + 1`.
    pub fn param_count(&self) -> usize {
        let w = self.hidden_width;
        self.input_dim * w + w + (self.depth - 2) * (w * w + w) + w + 1
    }
}

/// One dense layer: `a = W z + b`.
#[derive(Debug, Clone)]
pub struct Layer {
    /// Weight matrix, shape (out, in).
    pub w: Array2<f64>,
    /// Bias, length out.
    pub b: Array1<f64>,
}

impl Layer {
    pub fn zeros(out: usize, input: usize) -> Self {
        Layer {
            w: Array2::zeros((out, input)),
            b: Array1::zeros(out),
        }
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// A layered tanh model with optional skip connections.
#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    layers: Vec<Layer>,
    /// Fixed per-coordinate input rescaling: z0 = (x - offset) * scale.
    input_scale: Vec<f64>,
    input_offset: Vec<f64>,
}

impl Network {
    /// Initialize weights from N(0, std^2) with zero biases, reproducibly
    /// from the config seed.
    pub fn init_gaussian(cfg: &NetworkConfig) -> Result<Network> {
        cfg.validate()?;
        let normal = Normal::new(0.0, cfg.init_std)
            .map_err(|e| Error::InvalidConfig(format!("bad init_std: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut layers = Vec::with_capacity(cfg.depth);
        for l in 0..cfg.depth {
            let (out, input) = layer_shape(cfg, l);
            let mut layer = Layer::zeros(out, input);
            for v in layer.w.iter_mut() {
                *v = normal.sample(&mut rng);
            }
            layers.push(layer);
        }
        Ok(Network {
            config: cfg.clone(),
            layers,
            input_scale: vec![1.0; cfg.input_dim],
            input_offset: vec![0.0; cfg.input_dim],
        })
    }

    /// Build a network with all parameters zero (useful for tests and for
    /// constructing layers by hand).
    pub fn zeros(cfg: &NetworkConfig) -> Result<Network> {
        cfg.validate()?;
        let layers = (0..cfg.depth)
            .map(|l| {
                let (out, input) = layer_shape(cfg, l);
                Layer::zeros(out, input)
            })
            .collect();
        Ok(Network {
            config: cfg.clone(),
            layers,
            input_scale: vec![1.0; cfg.input_dim],
            input_offset: vec![0.0; cfg.input_dim],
        })
    }

    /// Fix the input rescaling so that `lo..hi` maps to [-1, 1] per axis.
    pub fn set_input_box(&mut self, lo: &[f64], hi: &[f64]) -> Result<()> {
        if lo.len() != self.config.input_dim || hi.len() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim,
                got: lo.len(),
            });
        }
        for i in 0..lo.len() {
            if !(hi[i] > lo[i]) {
                return Err(Error::InvalidConfig(format!(
                    "degenerate input box on axis {i}: [{}, {}]",
                    lo[i], hi[i]
                )));
            }
            self.input_scale[i] = 2.0 / (hi[i] - lo[i]);
            self.input_offset[i] = 0.5 * (hi[i] + lo[i]);
        }
        Ok(())
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_scale(&self) -> &[f64] {
        &self.input_scale
    }

    pub fn input_offset(&self) -> &[f64] {
        &self.input_offset
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn depth(&self) -> usize {
        self.config.depth
    }

    /// Index of the skip source feeding layer `l` (1-based), if any.
    ///
    /// Layer `l` draws from post-activation `z_{l-n-1}`; only hidden layers
    /// with a width-matching source are eligible.
    pub fn skip_source(&self, l: usize) -> Option<usize> {
        let n = self.config.skip_distance;
        if n == 0 {
            return None;
        }
        // z_0 is the input (different width); the output layer has width 1.
        if l >= n + 2 && l <= self.config.depth - 1 {
            Some(l - n - 1)
        } else {
            None
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    /// Flatten all parameters in deterministic order: per layer, W row-major
    /// then b.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend(layer.w.iter());
            out.extend(layer.b.iter());
        }
        out
    }

    /// Overwrite all parameters from a flat vector in the order produced by
    /// [`Network::params_flat`].
    pub fn set_params_flat(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: theta.len(),
            });
        }
        let mut k = 0;
        for layer in &mut self.layers {
            for v in layer.w.iter_mut() {
                *v = theta[k];
                k += 1;
            }
            for v in layer.b.iter_mut() {
                *v = theta[k];
                k += 1;
            }
        }
        Ok(())
    }

    /// Byte offset ranges of each layer inside the flat parameter vector.
    pub fn layer_param_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut ranges = Vec::with_capacity(self.layers.len());
        let mut k = 0;
        for layer in &self.layers {
            let n = layer.param_count();
            ranges.push(k..k + n);
            k += n;
        }
        ranges
    }

    /// Plain forward pass: the scalar flux prediction at `p`.
    pub fn forward(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim,
                got: p.len(),
            });
        }
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(self.config.depth + 1);
        let z0: Vec<f64> = (0..p.len())
            .map(|i| (p[i] - self.input_offset[i]) * self.input_scale[i])
            .collect();
        z.push(z0);
        for (idx, layer) in self.layers.iter().enumerate() {
            let l = idx + 1;
            let prev = &z[l - 1];
            let mut a: Vec<f64> = layer
                .w
                .outer_iter()
                .zip(layer.b.iter())
                .map(|(row, b)| {
                    row.iter().zip(prev.iter()).map(|(w, x)| w * x).sum::<f64>() + b
                })
                .collect();
            if let Some(src) = self.skip_source(l) {
                for (ai, si) in a.iter_mut().zip(z[src].iter()) {
                    *ai += si;
                }
            }
            if l < self.config.depth {
                for v in a.iter_mut() {
                    *v = v.tanh();
                }
            }
            z.push(a);
        }
        Ok(z[self.config.depth][0])
    }

    /// Write a checkpoint: magic, config header, then per-layer little-endian
    /// f64 arrays (W row-major, then b). Loading reproduces forward outputs
    /// bit-exactly.
    pub fn save_checkpoint<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        let header = CheckpointHeader {
            config: self.config.clone(),
            input_scale: self.input_scale.clone(),
            input_offset: self.input_offset.clone(),
        };
        let json = serde_json::to_vec(&header)
            .map_err(|e| Error::Parse { what: "checkpoint header".into(), detail: e.to_string() })?;
        out.write_all(&(json.len() as u32).to_le_bytes())?;
        out.write_all(&json)?;
        for layer in &self.layers {
            for v in layer.w.iter() {
                out.write_all(&v.to_le_bytes())?;
            }
            for v in layer.b.iter() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load_checkpoint<R: Read>(mut input: R) -> Result<Network> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Parse {
                what: "checkpoint".into(),
                detail: "bad magic".into(),
            });
        }
        let mut len = [0u8; 4];
        input.read_exact(&mut len)?;
        let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
        input.read_exact(&mut json)?;
        let header: CheckpointHeader = serde_json::from_slice(&json)
            .map_err(|e| Error::Parse { what: "checkpoint header".into(), detail: e.to_string() })?;
        let mut net = Network::zeros(&header.config)?;
        net.input_scale = header.input_scale;
        net.input_offset = header.input_offset;
        let mut buf = [0u8; 8];
        for layer in &mut net.layers {
            for v in layer.w.iter_mut() {
                input.read_exact(&mut buf)?;
                *v = f64::from_le_bytes(buf);
            }
            for v in layer.b.iter_mut() {
                input.read_exact(&mut buf)?;
                *v = f64::from_le_bytes(buf);
            }
        }
        Ok(net)
    }

    pub fn save_checkpoint_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.save_checkpoint(std::io::BufWriter::new(f))
    }

    pub fn load_checkpoint_file<P: AsRef<Path>>(path: P) -> Result<Network> {
        let f = std::fs::File::open(path)?;
        Network::load_checkpoint(std::io::BufReader::new(f))
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"NPINNCK1";

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config: NetworkConfig,
    input_scale: Vec<f64>,
    input_offset: Vec<f64>,
}

fn layer_shape(cfg: &NetworkConfig, l: usize) -> (usize, usize) {
    let w = cfg.hidden_width;
    if l == 0 {
        (w, cfg.input_dim)
    } else if l == cfg.depth - 1 {
        (1, w)
    } else {
        (w, w)
    }
}

/// Per-layer gradient norms of a scalar loss.
#[derive(Debug, Clone)]
pub struct GradientReport {
    /// `||g||_2` of the parameter-gradient slice of each layer.
    pub layer_norms: Vec<f64>,
}

impl GradientReport {
    /// Slice a flat loss gradient into per-layer Euclidean norms.
    pub fn from_flat(net: &Network, grad: &[f64]) -> Result<GradientReport> {
        if grad.len() != net.param_count() {
            return Err(Error::DimensionMismatch {
                expected: net.param_count(),
                got: grad.len(),
            });
        }
        let layer_norms = net
            .layer_param_ranges()
            .into_iter()
            .map(|r| grad[r].iter().map(|g| g * g).sum::<f64>().sqrt())
            .collect();
        Ok(GradientReport { layer_norms })
    }
}
