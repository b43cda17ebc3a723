use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::activation::Activation;
use super::dense::{Dense, DenseCache, Dropout};
use crate::convolution::{Conv1d, ConvCache, MaxPool1d, PoolCache};
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::recurrent::{GruCache, GruCell, LstmCache, LstmCell, TimePooling};
use crate::rng::ModelRng;
use crate::Tensor;

/// Static shape of the data flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Vector(usize),
    Sequence { steps: usize, channels: usize },
}

/// `steps x channels` row-major matrix whose first `valid` rows are live.
#[derive(Debug, Clone)]
pub(crate) struct Seq {
    pub data: Vec<f64>,
    pub steps: usize,
    pub channels: usize,
    pub valid: usize,
}

impl Seq {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Value {
    Vector(Vec<f64>),
    Sparse(SparseVector),
    Seq(Seq),
}

impl Value {
    pub fn describe(&self) -> String {
        match self {
            Value::Vector(v) => format!("vector of {}", v.len()),
            Value::Sparse(s) => format!("sparse vector of {}", s.dim()),
            Value::Seq(s) => format!("{}x{} sequence", s.steps, s.channels),
        }
    }

    pub fn into_seq(self, what: &str) -> Result<Seq> {
        match self {
            Value::Seq(s) => Ok(s),
            other => Err(Error::ShapeMismatch {
                expected: format!("sequence input to {what}"),
                found: other.describe(),
            }),
        }
    }
}

/// Branches that read the same sequence; their outputs are stacked along
/// the time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Parallel {
    pub branches: Vec<Vec<Layer>>,
}

/// One stage of a [`super::Network`].
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Dropout(Dropout),
    Lstm(LstmCell),
    Gru(GruCell),
    /// Collapses a sequence to one vector.
    TimePool(TimePooling),
    Conv1d(Conv1d),
    MaxPool1d(MaxPool1d),
    Parallel(Parallel),
    /// Sequence to vector, row-major.
    Flatten,
}

#[derive(Debug, Clone)]
pub(crate) enum Cache {
    Dense(DenseCache),
    Dropout(Option<Vec<f64>>),
    Lstm(LstmCache),
    Gru(GruCache),
    TimePool { steps: usize, channels: usize, valid: usize },
    Conv1d(ConvCache),
    MaxPool1d(PoolCache),
    Parallel { caches: Vec<Vec<Cache>>, rows: Vec<usize>, channels: usize, input_len: usize },
    Flatten,
}

impl Layer {
    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(d) => vec![&d.weights, &d.bias],
            Layer::Lstm(c) => c.params(),
            Layer::Gru(c) => c.params(),
            Layer::Conv1d(c) => vec![&c.filters, &c.bias],
            Layer::Parallel(p) => p.branches.iter().flatten().flat_map(Layer::params).collect(),
            Layer::Dropout(_) | Layer::TimePool(_) | Layer::MaxPool1d(_) | Layer::Flatten => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense(d) => vec![&mut d.weights, &mut d.bias],
            Layer::Lstm(c) => c.params_mut(),
            Layer::Gru(c) => c.params_mut(),
            Layer::Conv1d(c) => vec![&mut c.filters, &mut c.bias],
            Layer::Parallel(p) => p
                .branches
                .iter_mut()
                .flatten()
                .flat_map(Layer::params_mut)
                .collect(),
            Layer::Dropout(_) | Layer::TimePool(_) | Layer::MaxPool1d(_) | Layer::Flatten => Vec::new(),
        }
    }

    pub fn num_tensors(&self) -> usize {
        self.params().len()
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        match self {
            Layer::Dense(d) => d.output_shape(input),
            Layer::Dropout(_) => Ok(input),
            Layer::Lstm(c) => c.output_shape(input),
            Layer::Gru(c) => c.output_shape(input),
            Layer::TimePool(_) => match input {
                Shape::Sequence { channels, .. } => Ok(Shape::Vector(channels)),
                other => Err(seq_expected("time pooling", other)),
            },
            Layer::Conv1d(c) => c.output_shape(input),
            Layer::MaxPool1d(p) => p.output_shape(input),
            Layer::Parallel(p) => p.output_shape(input),
            Layer::Flatten => match input {
                Shape::Sequence { steps, channels } => Ok(Shape::Vector(steps * channels)),
                other => Err(seq_expected("flatten", other)),
            },
        }
    }

    pub(crate) fn forward(&self, x: Value, rng: Option<&mut ModelRng>) -> Result<(Value, Cache)> {
        Ok(match self {
            Layer::Dense(d) => {
                let (y, c) = d.forward(x)?;
                (y, Cache::Dense(c))
            }
            Layer::Dropout(d) => {
                let (y, mask) = d.forward(x, rng)?;
                (y, Cache::Dropout(mask))
            }
            Layer::Lstm(cell) => {
                let (y, c) = cell.forward_seq(x.into_seq("lstm")?)?;
                (Value::Seq(y), Cache::Lstm(c))
            }
            Layer::Gru(cell) => {
                let (y, c) = cell.forward_seq(x.into_seq("gru")?)?;
                (Value::Seq(y), Cache::Gru(c))
            }
            Layer::TimePool(kind) => {
                let s = x.into_seq("time pooling")?;
                let out = kind.pool(&s);
                (
                    Value::Vector(out),
                    Cache::TimePool {
                        steps: s.steps,
                        channels: s.channels,
                        valid: s.valid,
                    },
                )
            }
            Layer::Conv1d(conv) => {
                let (y, c) = conv.forward_seq(x.into_seq("convolution")?)?;
                (Value::Seq(y), Cache::Conv1d(c))
            }
            Layer::MaxPool1d(pool) => {
                let (y, c) = pool.forward_seq(&x.into_seq("max pooling")?);
                (Value::Seq(y), Cache::MaxPool1d(c))
            }
            Layer::Parallel(p) => p.forward(x, rng)?,
            Layer::Flatten => {
                let s = x.into_seq("flatten")?;
                (Value::Vector(s.data), Cache::Flatten)
            }
        })
    }

    /// Accumulates parameter gradients into `grads` (this layer's tensors, in
    /// [`Layer::params`] order) and returns `dL/dinput` when `need_input`.
    pub(crate) fn backward(
        &self,
        cache: &Cache,
        grad: Vec<f64>,
        grads: &mut [Tensor],
        need_input: bool,
    ) -> Vec<f64> {
        match (self, cache) {
            (Layer::Dense(d), Cache::Dense(c)) => d.backward(c, grad, grads, need_input),
            (Layer::Dropout(d), Cache::Dropout(mask)) => d.backward(mask, grad),
            (Layer::Lstm(cell), Cache::Lstm(c)) => cell.backward_seq(c, &grad, grads),
            (Layer::Gru(cell), Cache::Gru(c)) => cell.backward_seq(c, &grad, grads),
            (Layer::TimePool(kind), &Cache::TimePool { steps, channels, valid }) => {
                kind.backward(&grad, steps, channels, valid)
            }
            (Layer::Conv1d(conv), Cache::Conv1d(c)) => conv.backward_seq(c, grad, grads, need_input),
            (Layer::MaxPool1d(_), Cache::MaxPool1d(c)) => c.backward(&grad),
            (Layer::Parallel(p), Cache::Parallel { caches, rows, channels, input_len }) => {
                p.backward(caches, rows, *channels, *input_len, &grad, grads, need_input)
            }
            (Layer::Flatten, Cache::Flatten) => grad,
            _ => unreachable!("cache does not belong to this layer"),
        }
    }
}

/// Appends the non-smooth choices made in a forward pass: which ReLU units
/// were active and which max-pool inputs won. Two passes with equal
/// patterns lie on the same smooth piece of the loss.
pub(crate) fn kink_pattern(layer: &Layer, cache: &Cache, out: &mut Vec<usize>) {
    let active = |ys: &[f64], out: &mut Vec<usize>| out.extend(ys.iter().map(|&y| usize::from(y > 0.0)));
    match (layer, cache) {
        (Layer::Dense(d), Cache::Dense(c)) if d.activation == Activation::Relu => active(&c.output, out),
        (Layer::Conv1d(conv), Cache::Conv1d(c)) if conv.activation == Activation::Relu => active(&c.output, out),
        (Layer::MaxPool1d(_), Cache::MaxPool1d(c)) => out.extend_from_slice(&c.argmax),
        (Layer::Parallel(p), Cache::Parallel { caches, .. }) => {
            for (branch, branch_caches) in p.branches.iter().zip(caches) {
                for (l, c) in branch.iter().zip(branch_caches) {
                    kink_pattern(l, c, out);
                }
            }
        }
        _ => {}
    }
}

fn seq_expected(what: &str, found: Shape) -> Error {
    Error::ShapeMismatch {
        expected: format!("sequence input to {what}"),
        found: format!("{:?}", found),
    }
}

impl Parallel {
    fn output_shape(&self, input: Shape) -> Result<Shape> {
        let mut total = 0;
        let mut chans = None;
        for branch in &self.branches {
            let mut shape = input;
            for layer in branch {
                shape = layer.output_shape(shape)?;
            }
            match shape {
                Shape::Sequence { steps, channels } if chans.is_none_or(|c| c == channels) => {
                    chans = Some(channels);
                    total += steps;
                }
                other => {
                    return Err(Error::ShapeMismatch {
                        expected: "branches ending in sequences with equal channels".into(),
                        found: format!("{:?}", other),
                    })
                }
            }
        }
        let channels = chans.ok_or_else(|| crate::error::invalid("parallel block has no branches"))?;
        Ok(Shape::Sequence {
            steps: total,
            channels,
        })
    }

    fn forward(&self, x: Value, mut rng: Option<&mut ModelRng>) -> Result<(Value, Cache)> {
        let input = x.into_seq("parallel block")?;
        let mut caches = Vec::with_capacity(self.branches.len());
        let mut rows = Vec::with_capacity(self.branches.len());
        let mut data = Vec::new();
        let mut channels = None;
        for branch in &self.branches {
            let mut v = Value::Seq(input.clone());
            let mut branch_caches = Vec::with_capacity(branch.len());
            for layer in branch {
                let (y, c) = layer.forward(v, rng.as_deref_mut())?;
                v = y;
                branch_caches.push(c);
            }
            let s = v.into_seq("parallel output")?;
            if channels.is_some_and(|c| c != s.channels) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} channels", channels.unwrap_or(0)),
                    found: format!("{}", s.channels),
                });
            }
            channels = Some(s.channels);
            rows.push(s.steps);
            data.extend_from_slice(&s.data);
            caches.push(branch_caches);
        }
        let channels = channels.unwrap_or(0);
        let steps = rows.iter().sum();
        Ok((
            Value::Seq(Seq {
                data,
                steps,
                channels,
                valid: steps,
            }),
            Cache::Parallel {
                caches,
                rows,
                channels,
                input_len: input.steps * input.channels,
            },
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn backward(
        &self,
        caches: &[Vec<Cache>],
        rows: &[usize],
        channels: usize,
        input_len: usize,
        grad: &[f64],
        grads: &mut [Tensor],
        need_input: bool,
    ) -> Vec<f64> {
        let mut dx = if need_input { vec![0.0; input_len] } else { Vec::new() };
        let mut row0 = 0;
        let mut offset = 0;
        for ((branch, branch_caches), &n) in self.branches.iter().zip(caches).zip(rows) {
            let mut g = grad[row0 * channels..(row0 + n) * channels].to_vec();
            row0 += n;
            let counts: Vec<usize> = branch.iter().map(Layer::num_tensors).collect();
            let total: usize = counts.iter().sum();
            let branch_grads = &mut grads[offset..offset + total];
            let mut end = total;
            for (k, (layer, cache)) in branch.iter().zip(branch_caches).enumerate().rev() {
                let start = end - counts[k];
                g = layer.backward(cache, g, &mut branch_grads[start..end], k > 0 || need_input);
                end = start;
            }
            if need_input {
                crate::math::axpy(1.0, &g, &mut dx);
            }
            offset += total;
        }
        dx
    }
}
