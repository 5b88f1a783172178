//! Dense multilayer perceptron with manual backpropagation.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix
//! (`out × in`, column-major) followed by the bias vector. When batch norm is
//! enabled it sits between the first layer's affine map and its activation,
//! and its learnable scale and shift are appended after the last layer.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::{Activation, BatchNorm, BatchNormCache};
use crate::error::{check_finite, check_len};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Training,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    /// Input size, hidden sizes..., output size.
    pub sizes: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
    /// Batch norm on the first hidden layer's pre-activation.
    pub batch_norm: bool,
}

impl MlpSpec {
    pub fn new(sizes: Vec<usize>, hidden: Activation, output: Activation) -> Self {
        Self {
            sizes,
            hidden,
            output,
            batch_norm: false,
        }
    }

    pub fn with_batch_norm(mut self, enabled: bool) -> Self {
        self.batch_norm = enabled;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 {
            return Err(Error::invalid("an MLP needs at least input and output sizes"));
        }
        if self.sizes.contains(&0) {
            return Err(Error::invalid("layer sizes must be positive"));
        }
        if self.batch_norm && self.sizes.len() < 3 {
            return Err(Error::invalid("batch norm needs a hidden layer"));
        }
        Ok(())
    }

    /// Σ (n_in + 1)·n_out over the dense layers.
    pub fn dense_param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    pub fn param_count(&self) -> usize {
        let bn = if self.batch_norm { 2 * self.sizes[1] } else { 0 };
        self.dense_param_count() + bn
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerSlots {
    n_in: usize,
    n_out: usize,
    weights: usize,
    biases: usize,
}

#[derive(Debug, Clone)]
struct ForwardCache {
    /// `activations[0]` is the input batch, the last entry the output.
    activations: Vec<DMatrix<f64>>,
    /// Argument of each layer's activation function.
    pre: Vec<DMatrix<f64>>,
    bn: Option<BatchNormCache>,
}

type BatchStats = Option<(DVector<f64>, DVector<f64>)>;

#[derive(Debug, Clone)]
pub struct MlpNet {
    spec: MlpSpec,
    params: Vec<f64>,
    layers: Vec<LayerSlots>,
    bn: Option<BatchNorm>,
    cache: Option<ForwardCache>,
}

impl PartialEq for MlpNet {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.params == other.params && self.bn == other.bn
    }
}

fn layout(spec: &MlpSpec) -> Vec<LayerSlots> {
    let mut offset = 0;
    spec.sizes
        .windows(2)
        .map(|w| {
            let slots = LayerSlots {
                n_in: w[0],
                n_out: w[1],
                weights: offset,
                biases: offset + w[0] * w[1],
            };
            offset += (w[0] + 1) * w[1];
            slots
        })
        .collect()
}

impl MlpNet {
    /// All parameters zero (batch-norm scale one).
    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let layers = layout(&spec);
        let mut params = vec![0.0; spec.param_count()];
        let bn = if spec.batch_norm {
            let width = spec.sizes[1];
            let gamma = spec.dense_param_count();
            params[gamma..gamma + width].iter_mut().for_each(|g| *g = 1.0);
            Some(BatchNorm::new(width))
        } else {
            None
        };
        Ok(Self {
            spec,
            params,
            layers,
            bn,
            cache: None,
        })
    }

    /// Weights uniform in ±1/√fan_in, biases zero.
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        for layer in net.layers.clone() {
            let limit = 1.0 / (layer.n_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
            for w in &mut net.params[layer.weights..layer.biases] {
                *w = dist.sample(rng);
            }
        }
        Ok(net)
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.spec.sizes.last().expect("validated")
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameter access. Drops any cached forward pass.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.cache = None;
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_len("mlp params", self.params.len(), params.len())?;
        self.params_mut().copy_from_slice(params);
        Ok(())
    }

    pub fn batch_norm(&self) -> Option<&BatchNorm> {
        self.bn.as_ref()
    }

    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }

    /// Weight matrix and bias of dense layer `index`.
    pub fn layer(&self, index: usize) -> (DMatrixView<'_, f64>, &[f64]) {
        let l = self.layers[index];
        (
            DMatrixView::from_slice(&self.params[l.weights..l.biases], l.n_out, l.n_in),
            &self.params[l.biases..l.biases + l.n_out],
        )
    }

    fn bn_affine(&self) -> (&[f64], &[f64]) {
        let width = self.spec.sizes[1];
        let start = self.spec.dense_param_count();
        (
            &self.params[start..start + width],
            &self.params[start + width..start + 2 * width],
        )
    }

    fn to_batch(&self, inputs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if inputs.is_empty() {
            return Err(Error::invalid("empty input batch"));
        }
        let dim = self.input_dim();
        for x in inputs {
            check_len("mlp input", dim, x.len())?;
        }
        Ok(DMatrix::from_fn(dim, inputs.len(), |i, j| inputs[j][i]))
    }

    fn run(&self, x: DMatrix<f64>, mode: Mode) -> (ForwardCache, BatchStats) {
        let n_layers = self.layers.len();
        let mut activations = Vec::with_capacity(n_layers + 1);
        let mut pre = Vec::with_capacity(n_layers);
        let mut bn_cache = None;
        let mut stats = None;
        activations.push(x);
        for (index, layer) in self.layers.iter().enumerate() {
            let (w, b) = self.layer(index);
            let mut z = w * activations.last().expect("non-empty");
            for mut col in z.column_iter_mut() {
                col.iter_mut().zip(b).for_each(|(zi, bi)| *zi += bi);
            }
            if index == 0 {
                if let Some(bn) = &self.bn {
                    let (cache, batch_stats) = bn.normalize(&z, mode == Mode::Training);
                    let (gamma, beta) = self.bn_affine();
                    z = cache.normalized.clone();
                    for (i, mut row) in z.row_iter_mut().enumerate() {
                        row.iter_mut().for_each(|v| *v = gamma[i] * *v + beta[i]);
                    }
                    bn_cache = Some(cache);
                    stats = batch_stats;
                }
            }
            let act = if index + 1 == n_layers {
                self.spec.output
            } else {
                self.spec.hidden
            };
            let y = z.map(|v| act.apply(v));
            debug_assert_eq!(y.nrows(), layer.n_out);
            pre.push(z);
            activations.push(y);
        }
        (
            ForwardCache {
                activations,
                pre,
                bn: bn_cache,
            },
            stats,
        )
    }

    fn outputs(cache: &ForwardCache) -> Vec<Vec<f64>> {
        let out = cache.activations.last().expect("non-empty");
        out.column_iter().map(|c| c.iter().copied().collect()).collect()
    }

    /// Single-input forward pass in evaluation mode. Pure.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_len("mlp input", self.input_dim(), input.len())?;
        check_finite("mlp input", input)?;
        let x = DMatrix::from_column_slice(input.len(), 1, input);
        let (cache, _) = self.run(x, Mode::Evaluation);
        Ok(cache.activations.last().expect("non-empty").iter().copied().collect())
    }

    /// Batch forward pass that leaves the network untouched (no cache, no
    /// running-statistics update).
    pub fn evaluate_batch(&self, inputs: &[Vec<f64>], mode: Mode) -> Result<Vec<Vec<f64>>> {
        let x = self.to_batch(inputs)?;
        let (cache, _) = self.run(x, mode);
        Ok(Self::outputs(&cache))
    }

    /// Batch forward pass that caches intermediate values for [`backward`]
    /// and, in training mode, updates batch-norm running statistics.
    ///
    /// [`backward`]: MlpNet::backward
    pub fn forward_batch(&mut self, inputs: &[Vec<f64>], mode: Mode) -> Result<Vec<Vec<f64>>> {
        let x = self.to_batch(inputs)?;
        let (cache, stats) = self.run(x, mode);
        if let (Some(bn), Some((mean, var))) = (self.bn.as_mut(), stats) {
            bn.absorb(&mean, &var);
        }
        let out = Self::outputs(&cache);
        self.cache = Some(cache);
        Ok(out)
    }

    /// Gradient of `Σ_n upstream[n] · output[n]` with respect to every
    /// parameter, for the batch of the last [`forward_batch`] call.
    ///
    /// [`forward_batch`]: MlpNet::forward_batch
    pub fn backward(&self, upstream: &[Vec<f64>]) -> Result<Vec<f64>> {
        let cache = self.cache.as_ref().ok_or(Error::NoForwardCache)?;
        let batch = cache.activations[0].ncols();
        check_len("upstream batch", batch, upstream.len())?;
        let out_dim = self.output_dim();
        for u in upstream {
            check_len("upstream gradient", out_dim, u.len())?;
        }
        let delta = DMatrix::from_fn(out_dim, batch, |i, j| upstream[j][i]);
        Ok(self.backprop(cache, delta))
    }

    fn backprop(&self, cache: &ForwardCache, mut delta: DMatrix<f64>) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let n_layers = self.layers.len();
        for index in (0..n_layers).rev() {
            let layer = self.layers[index];
            let act = if index + 1 == n_layers {
                self.spec.output
            } else {
                self.spec.hidden
            };
            let z = &cache.pre[index];
            let y = &cache.activations[index + 1];
            let mut dz = delta;
            dz.iter_mut()
                .zip(z.iter().zip(y.iter()))
                .for_each(|(d, (&zi, &yi))| *d *= act.derivative(zi, yi));

            if index == 0 {
                if let Some(bn_cache) = &cache.bn {
                    let width = layer.n_out;
                    let start = self.spec.dense_param_count();
                    let gamma = &self.params[start..start + width];
                    for i in 0..width {
                        let row = dz.row(i);
                        let xhat = bn_cache.normalized.row(i);
                        grad[start + i] = row.iter().zip(xhat.iter()).map(|(d, x)| d * x).sum();
                        grad[start + width + i] = row.iter().sum();
                    }
                    for (i, mut row) in dz.row_iter_mut().enumerate() {
                        row.iter_mut().for_each(|d| *d *= gamma[i]);
                    }
                    dz = BatchNorm::backward(bn_cache, &dz);
                }
            }

            let a_prev = &cache.activations[index];
            let dw = &dz * a_prev.transpose();
            grad[layer.weights..layer.biases].copy_from_slice(dw.as_slice());
            for (i, row) in dz.row_iter().enumerate() {
                grad[layer.biases + i] = row.iter().sum();
            }
            if index > 0 {
                let (w, _) = self.layer(index);
                delta = w.transpose() * &dz;
            } else {
                delta = DMatrix::zeros(0, 0);
            }
        }
        grad
    }

    /// Jacobian of the evaluation-mode output with respect to the parameters:
    /// one row per output coordinate.
    pub fn jacobian(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_len("mlp input", self.input_dim(), input.len())?;
        let x = DMatrix::from_column_slice(input.len(), 1, input);
        let (cache, _) = self.run(x, Mode::Evaluation);
        Ok((0..self.output_dim())
            .map(|k| {
                let mut delta = DMatrix::zeros(self.output_dim(), 1);
                delta[(k, 0)] = 1.0;
                self.backprop(&cache, delta)
            })
            .collect())
    }

    fn activation_of(&self, index: usize) -> Activation {
        if index + 1 == self.layers.len() {
            self.spec.output
        } else {
            self.spec.hidden
        }
    }

    /// Dense layer and output row touched by parameter `index`.
    fn param_site(&self, index: usize) -> (usize, usize) {
        for (l, slots) in self.layers.iter().enumerate() {
            if index < slots.biases {
                // column-major weights: element (r, c) sits at r + c·n_out
                return (l, (index - slots.weights) % slots.n_out);
            }
            if index < slots.biases + slots.n_out {
                return (l, index - slots.biases);
            }
        }
        // batch-norm scale then shift, both on the first layer
        (0, (index - self.spec.dense_param_count()) % self.spec.sizes[1])
    }
}

/// Re-evaluates `L = Σ_n upstream[n]·f(x_n)` on a fixed batch after
/// overriding one parameter. Only the touched row of the touched layer and
/// the layers after it are recomputed, which keeps finite differences over
/// every parameter affordable.
pub(crate) struct LossProbe<'a> {
    net: &'a MlpNet,
    mode: Mode,
    base: ForwardCache,
    upstream: DMatrix<f64>,
}

impl<'a> LossProbe<'a> {
    pub(crate) fn new(net: &'a MlpNet, inputs: &[Vec<f64>], upstream: &[Vec<f64>], mode: Mode) -> Result<Self> {
        let x = net.to_batch(inputs)?;
        check_len("upstream batch", inputs.len(), upstream.len())?;
        let out_dim = net.output_dim();
        for u in upstream {
            check_len("upstream", out_dim, u.len())?;
        }
        let (base, _) = net.run(x, mode);
        Ok(Self {
            net,
            mode,
            base,
            upstream: DMatrix::from_fn(out_dim, upstream.len(), |i, j| upstream[j][i]),
        })
    }

    /// Loss with parameter `index` set to `value`, plus the leaky-ReLU branch
    /// signs of every unit the change reaches when `kinks` is set.
    pub(crate) fn loss_at(&self, index: usize, value: f64, kinks: bool) -> (f64, Vec<bool>) {
        let net = self.net;
        let param = |k: usize| if k == index { value } else { net.params[k] };
        let (layer, row) = net.param_site(index);
        let slots = net.layers[layer];
        let input = &self.base.activations[layer];
        let batch = input.ncols();
        let mut z: Vec<f64> = (0..batch)
            .map(|n| {
                (0..slots.n_in)
                    .map(|c| param(slots.weights + row + c * slots.n_out) * input[(c, n)])
                    .sum::<f64>()
                    + param(slots.biases + row)
            })
            .collect();
        if layer == 0 {
            if let Some(bn) = &net.bn {
                let (mu, var) = if self.mode == Mode::Training {
                    let mu = z.iter().sum::<f64>() / batch as f64;
                    (mu, z.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / batch as f64)
                } else {
                    (bn.running_mean[row], bn.running_var[row])
                };
                let inv_std = 1.0 / (var + bn.eps).sqrt();
                let width = net.spec.sizes[1];
                let gamma = param(net.spec.dense_param_count() + row);
                let beta = param(net.spec.dense_param_count() + width + row);
                z.iter_mut().for_each(|v| *v = gamma * (*v - mu) * inv_std + beta);
            }
        }
        let mut signs = Vec::new();
        let act = net.activation_of(layer);
        if kinks && act == Activation::LeakyRelu {
            signs.extend(z.iter().map(|v| *v > 0.0));
        }
        let old = self.base.activations[layer + 1].row(row);
        let delta: Vec<f64> = z.iter().zip(old.iter()).map(|(v, o)| act.apply(*v) - o).collect();
        if layer + 1 == net.layers.len() {
            let changed: f64 = delta.iter().enumerate().map(|(n, d)| self.upstream[(row, n)] * d).sum();
            return (self.base_loss() + changed, signs);
        }
        // the next layer sees one changed input coordinate
        let (w_next, _) = net.layer(layer + 1);
        let mut pre = self.base.pre[layer + 1].clone();
        for (n, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                pre.column_mut(n).axpy(d, &w_next.column(row), 1.0);
            }
        }
        let mut l = layer + 1;
        loop {
            let act = net.activation_of(l);
            if kinks && act == Activation::LeakyRelu {
                signs.extend(pre.iter().map(|v| *v > 0.0));
            }
            let y = pre.map(|v| act.apply(v));
            if l + 1 == net.layers.len() {
                return (self.upstream.dot(&y), signs);
            }
            l += 1;
            let (w, b) = net.layer(l);
            pre = w * y;
            for mut col in pre.column_iter_mut() {
                col.iter_mut().zip(b).for_each(|(zi, bi)| *zi += bi);
            }
        }
    }

    fn base_loss(&self) -> f64 {
        self.upstream.dot(self.base.activations.last().expect("non-empty"))
    }
}

impl MlpNet {
    /// Line-oriented text snapshot: header lines then one parameter per line.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        let sizes: Vec<String> = self.spec.sizes.iter().map(|s| s.to_string()).collect();
        writeln!(out, "detac-mlp 1").unwrap();
        writeln!(out, "sizes {}", sizes.join(" ")).unwrap();
        writeln!(out, "hidden {}", self.spec.hidden).unwrap();
        writeln!(out, "output {}", self.spec.output).unwrap();
        writeln!(out, "batch_norm {}", u8::from(self.spec.batch_norm)).unwrap();
        writeln!(out, "params {}", self.params.len()).unwrap();
        for p in &self.params {
            writeln!(out, "{p:?}").unwrap();
        }
        if let Some(bn) = &self.bn {
            writeln!(out, "running_mean {}", bn.features()).unwrap();
            for v in bn.running_mean.iter() {
                writeln!(out, "{v:?}").unwrap();
            }
            writeln!(out, "running_var {}", bn.features()).unwrap();
            for v in bn.running_var.iter() {
                writeln!(out, "{v:?}").unwrap();
            }
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |expect: &str| -> Result<(usize, Vec<String>)> {
            let (line, content) = lines.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("unexpected end of snapshot, expected `{expect}`"),
            })?;
            let fields: Vec<String> = content.split_whitespace().map(str::to_owned).collect();
            if !expect.is_empty() && fields.first().map(String::as_str) != Some(expect) {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `{expect}`, found `{content}`"),
                });
            }
            Ok((line, fields))
        };
        fn num<T: FromStr>(line: usize, s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse `{s}`"),
            })
        }
        fn act(line: usize, s: Option<&String>) -> Result<Activation> {
            let s = s.ok_or(Error::Parse {
                line,
                msg: "missing activation".into(),
            })?;
            s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("unknown activation `{s}`"),
            })
        }

        let (line, magic) = next("detac-mlp")?;
        if magic.get(1).map(String::as_str) != Some("1") {
            return Err(Error::Parse {
                line,
                msg: "unsupported snapshot version".into(),
            });
        }
        let (line, sizes) = next("sizes")?;
        let sizes = sizes[1..]
            .iter()
            .map(|s| num(line, s))
            .collect::<Result<Vec<usize>>>()?;
        let (line, hidden) = next("hidden")?;
        let hidden = act(line, hidden.get(1))?;
        let (line, output) = next("output")?;
        let output = act(line, output.get(1))?;
        let (line, bn) = next("batch_norm")?;
        let batch_norm = match bn.get(1).map(String::as_str) {
            Some("0") => false,
            Some("1") => true,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: "batch_norm must be 0 or 1".into(),
                })
            }
        };
        let spec = MlpSpec {
            sizes,
            hidden,
            output,
            batch_norm,
        };
        let mut net = MlpNet::zeros(spec)?;

        let mut read_block = |name: &str, expected: usize| -> Result<Vec<f64>> {
            let (line, header) = next(name)?;
            let count: usize = num(line, header.get(1).map(String::as_str).unwrap_or(""))?;
            if count != expected {
                return Err(Error::Parse {
                    line,
                    msg: format!("{name}: expected {expected} values, header says {count}"),
                });
            }
            (0..count)
                .map(|_| {
                    let (line, v) = next("")?;
                    num(line, v.first().map(String::as_str).unwrap_or(""))
                })
                .collect()
        };
        let params = read_block("params", net.params.len())?;
        net.params = params;
        if let Some(width) = net.bn.as_ref().map(BatchNorm::features) {
            let mean = read_block("running_mean", width)?;
            let var = read_block("running_var", width)?;
            let bn = net.bn.as_mut().expect("checked");
            bn.running_mean = DVector::from_vec(mean);
            bn.running_var = DVector::from_vec(var);
        }
        Ok(net)
    }
}
