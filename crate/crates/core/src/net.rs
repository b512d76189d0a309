//! Feed-forward ReLU networks with exact backpropagation and Adam.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng as _;

use crate::config::TrainConfig;
use crate::data::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng::{rng_from, Rng, STREAM_INIT};

/// Affine layer computing `x · weights + bias` on row-major batches.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `fan_in × fan_out`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// ReLU between layers, affine output, optional L2 row normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Dense>,
    normalize: bool,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input of each layer; entry 0 is the batch itself.
    inputs: Vec<Array2<f64>>,
    /// Affine output of the last layer, before normalization.
    logits: Array2<f64>,
    output: Array2<f64>,
}

impl Trace {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

/// Parameter gradients, laid out like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl Network {
    /// Uniform `±sqrt(6 / (fan_in + fan_out))` weights, zero biases.
    pub fn init(dims: &[usize], normalize: bool, rng: &mut Rng) -> Result<Network> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidConfig(format!("invalid layer dims {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    weights: Array2::from_shape_simple_fn((fan_in, fan_out), || {
                        rng.random_range(-limit..limit)
                    }),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Network { layers, normalize })
    }

    pub fn from_layers(layers: Vec<Dense>, normalize: bool) -> Result<Network> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.weights.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: layer.weights.ncols(),
                    actual: layer.bias.len(),
                });
            }
            if l > 0 && layers[l - 1].weights.ncols() != layer.weights.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: layers[l - 1].weights.ncols(),
                    actual: layer.weights.nrows(),
                });
            }
            let finite = layer.weights.iter().chain(layer.bias.iter()).all(|v| v.is_finite());
            if !finite {
                return Err(Error::NonFinite {
                    context: format!("layer {l} parameters"),
                });
            }
        }
        Ok(Network { layers, normalize })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.weights.ncols()))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.ncols()
    }

    fn check_input(&self, batch: &ArrayView2<f64>) -> Result<()> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: batch.ncols(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.trace(batch)?.output)
    }

    pub fn trace(&self, batch: ArrayView2<f64>) -> Result<Trace> {
        self.check_input(&batch)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut current = batch.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = current.dot(&layer.weights);
            z += &layer.bias;
            if l < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            inputs.push(std::mem::replace(&mut current, z));
        }
        let logits = current;
        let output = if self.normalize {
            let mut out = logits.clone();
            for mut row in out.rows_mut() {
                let norm = row.dot(&row).sqrt();
                if norm > 0.0 {
                    row /= norm;
                }
            }
            out
        } else {
            logits.clone()
        };
        Ok(Trace {
            inputs,
            logits,
            output,
        })
    }

    /// Gradients of a scalar loss given `d loss / d output` for a traced batch.
    pub fn backward_trace(&self, trace: &Trace, output_gradient: ArrayView2<f64>) -> Result<Gradients> {
        if output_gradient.dim() != trace.output.dim() {
            return Err(Error::DimensionMismatch {
                expected: trace.output.ncols(),
                actual: output_gradient.ncols(),
            });
        }
        let mut delta = if self.normalize {
            let mut d = output_gradient.to_owned();
            for ((mut drow, zrow), yrow) in d
                .rows_mut()
                .into_iter()
                .zip(trace.logits.rows())
                .zip(trace.output.rows())
            {
                let norm = zrow.dot(&zrow).sqrt();
                if norm > 0.0 {
                    let proj = yrow.dot(&drow);
                    Zip::from(&mut drow).and(&yrow).for_each(|g, &y| *g = (*g - y * proj) / norm);
                } else {
                    drow.fill(0.0);
                }
            }
            d
        } else {
            output_gradient.to_owned()
        };

        let n_layers = self.layers.len();
        let mut weights = vec![Array2::zeros((0, 0)); n_layers];
        let mut biases = vec![Array1::zeros(0); n_layers];
        for l in (0..n_layers).rev() {
            let input = &trace.inputs[l];
            weights[l] = input.t().dot(&delta);
            biases[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut upstream = delta.dot(&self.layers[l].weights.t());
                Zip::from(&mut upstream).and(input).for_each(|g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = upstream;
            }
        }
        Ok(Gradients { weights, biases })
    }

    pub fn backward(&self, batch: ArrayView2<f64>, output_gradient: ArrayView2<f64>) -> Result<Gradients> {
        let trace = self.trace(batch)?;
        self.backward_trace(&trace, output_gradient)
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: self.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    fn parameters_mut(&mut self) -> impl Iterator<Item = (&mut Array2<f64>, &mut Array1<f64>)> {
        self.layers.iter_mut().map(|l| (&mut l.weights, &mut l.bias))
    }

    /// Bit patterns of every parameter, in layer order.
    pub fn parameter_bits(&self) -> Vec<u64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
            .map(|v| v.to_bits())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let dims: Vec<String> = self.layer_dims().iter().map(usize::to_string).collect();
        writeln!(out, "{NETWORK_MAGIC} {NETWORK_VERSION}").unwrap();
        writeln!(out, "dims {}", dims.join(" ")).unwrap();
        writeln!(out, "normalize {}", self.normalize).unwrap();
        for (l, layer) in self.layers.iter().enumerate() {
            writeln!(out, "weights {l}").unwrap();
            for row in layer.weights.rows() {
                push_row(&mut out, row.iter());
            }
            writeln!(out, "bias {l}").unwrap();
            push_row(&mut out, layer.bias.iter());
        }
        out
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Network> {
        let err = |m: String| Error::format(origin, m);
        let mut lines = text.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| err(format!("unexpected end, expected {what}")));
        let header = next("header")?;
        if header != format!("{NETWORK_MAGIC} {NETWORK_VERSION}") {
            return Err(err(format!("unsupported header `{header}`")));
        }
        let dims: Vec<usize> = next("dims")?
            .strip_prefix("dims ")
            .ok_or_else(|| err("missing dims line".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(format!("bad dimension `{t}`"))))
            .collect::<Result<_>>()?;
        let normalize = match next("normalize")? {
            "normalize true" => true,
            "normalize false" => false,
            other => return Err(err(format!("bad normalize line `{other}`"))),
        };
        if dims.len() < 2 {
            return Err(err("need at least two dims".into()));
        }
        let parse_row = |line: &str, width: usize| -> Result<Vec<f64>> {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(format!("bad value `{t}`"))))
                .collect::<Result<_>>()?;
            if vals.len() != width {
                return Err(err(format!("expected {width} values, found {}", vals.len())));
            }
            Ok(vals)
        };
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (l, w) in dims.windows(2).enumerate() {
            if next("weights")? != format!("weights {l}") {
                return Err(err(format!("expected `weights {l}`")));
            }
            let mut flat = Vec::with_capacity(w[0] * w[1]);
            for _ in 0..w[0] {
                flat.extend(parse_row(next("weight row")?, w[1])?);
            }
            if next("bias")? != format!("bias {l}") {
                return Err(err(format!("expected `bias {l}`")));
            }
            let bias = parse_row(next("bias row")?, w[1])?;
            layers.push(Dense {
                weights: Array2::from_shape_vec((w[0], w[1]), flat).expect("row lengths checked"),
                bias: Array1::from(bias),
            });
        }
        Network::from_layers(layers, normalize)
    }
}

const NETWORK_MAGIC: &str = "embadapt-network";
const NETWORK_VERSION: u32 = 1;

fn push_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        // LowerExp without precision prints the shortest round-trip digits.
        write!(out, "{v:e}").unwrap();
    }
    out.push('\n');
}

/// A dimension-reducing projection `ℝ^M → ℝ^K`, `K < M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionHead(Network);

impl ProjectionHead {
    pub fn new(network: Network) -> Result<ProjectionHead> {
        let (m, k) = (network.input_dim(), network.output_dim());
        if k >= m {
            return Err(Error::NotReducing { k, m });
        }
        Ok(ProjectionHead(network))
    }

    pub fn network(&self) -> &Network {
        &self.0
    }

    pub(crate) fn network_mut(&mut self) -> &mut Network {
        &mut self.0
    }

    pub fn input_dim(&self) -> usize {
        self.0.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.0.output_dim()
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        self.0.layer_dims()
    }

    pub fn forward(&self, batch: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        let out = self.0.forward(batch.view())?;
        EmbeddingMatrix::new(out)
    }

    pub fn backward(&self, batch: &EmbeddingMatrix, output_gradient: ArrayView2<f64>) -> Result<Gradients> {
        self.0.backward(batch.view(), output_gradient)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.0.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ProjectionHead> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ProjectionHead::new(Network::from_text(&text, path)?)
    }
}

/// Layer dims `[M, hidden_width × hidden_layers, K]`, initialized from `seed`.
pub fn init_head(input_dim: usize, config: &TrainConfig, seed: u64) -> Result<ProjectionHead> {
    config.validate()?;
    let k = config.projection_size;
    if k >= input_dim {
        return Err(Error::NotReducing { k, m: input_dim });
    }
    let mut dims = vec![input_dim];
    dims.extend(std::iter::repeat_n(config.hidden_width(), config.hidden_layers));
    dims.push(k);
    let mut rng = rng_from(seed, &[STREAM_INIT]);
    ProjectionHead::new(Network::init(&dims, config.normalize_outputs, &mut rng)?)
}

/// Adam moments for every parameter of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    first: Gradients,
    second: Gradients,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub fn new(network: &Network) -> OptimizerState {
        OptimizerState {
            first: network.zero_gradients(),
            second: network.zero_gradients(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update with learning rate `lr`.
pub fn optimizer_step(
    network: &mut Network,
    grads: &Gradients,
    state: &mut OptimizerState,
    lr: f64,
) -> Result<()> {
    if grads.weights.len() != network.layers.len() {
        return Err(Error::DimensionMismatch {
            expected: network.layers.len(),
            actual: grads.weights.len(),
        });
    }
    for (l, layer) in network.layers.iter().enumerate() {
        if grads.weights[l].dim() != layer.weights.dim() || grads.biases[l].dim() != layer.bias.dim() {
            return Err(Error::DimensionMismatch {
                expected: layer.weights.len(),
                actual: grads.weights[l].len(),
            });
        }
    }
    if !grads.is_finite() {
        return Err(Error::Diverged("non-finite gradient".into()));
    }
    state.step += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(state.step as i32);
    let c2 = 1.0 - b2.powi(state.step as i32);
    let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };
    for (l, (w, b)) in network.parameters_mut().enumerate() {
        Zip::from(w)
            .and(&mut state.first.weights[l])
            .and(&mut state.second.weights[l])
            .and(&grads.weights[l])
            .for_each(|p, m, v, &g| update(p, m, v, g));
        Zip::from(b)
            .and(&mut state.first.biases[l])
            .and(&mut state.second.biases[l])
            .and(&grads.biases[l])
            .for_each(|p, m, v, &g| update(p, m, v, g));
    }
    Ok(())
}
