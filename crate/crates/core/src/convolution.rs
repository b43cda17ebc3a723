//! 1-D convolution over embedded token sequences, max pooling, and the
//! multi-branch text CNN.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::nn::{Activation, Dense, Dropout, Layer, Network, Parallel, Seq, Shape};
use crate::rng::{self, ModelRng};
use crate::Tensor;

/// Valid (unpadded) stride-1 convolution. `filters` is
/// `count x width x in_channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub filters: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub(crate) struct ConvCache {
    input: Seq,
    pub(crate) output: Vec<f64>,
}

impl Conv1d {
    /// Glorot-uniform filters, zero bias, ReLU.
    pub fn init(count: usize, width: usize, in_channels: usize, rng: &mut ModelRng) -> Self {
        let fan_in = width * in_channels;
        let fan_out = width * count;
        let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
        let mut filters = Tensor::zeros(&[count, width, in_channels]);
        filters
            .data_mut()
            .iter_mut()
            .for_each(|w| *w = rng.gen_range(-limit..limit));
        Conv1d {
            filters,
            bias: Tensor::zeros(&[count]),
            activation: Activation::Relu,
        }
    }

    pub fn count(&self) -> usize {
        self.filters.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.filters.shape()[1]
    }

    pub fn in_channels(&self) -> usize {
        self.filters.shape()[2]
    }

    pub(crate) fn output_shape(&self, input: Shape) -> Result<Shape> {
        match input {
            Shape::Sequence { steps, channels } if channels == self.in_channels() => {
                if steps < self.width() {
                    return Err(Error::SequenceTooShort {
                        len: steps,
                        width: self.width(),
                    });
                }
                Ok(Shape::Sequence {
                    steps: steps - self.width() + 1,
                    channels: self.count(),
                })
            }
            other => Err(Error::ShapeMismatch {
                expected: format!("sequence with {} channels", self.in_channels()),
                found: format!("{:?}", other),
            }),
        }
    }

    /// Pre-activation maps, `(steps - width + 1) x count`.
    pub fn preactivation(&self, input: &[f64], steps: usize, channels: usize) -> Result<Vec<f64>> {
        if channels != self.in_channels() || input.len() != steps * channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{} channels", self.in_channels()),
                found: format!("{} values over {} steps", input.len(), steps),
            });
        }
        let width = self.width();
        if steps < width {
            return Err(Error::SequenceTooShort { len: steps, width });
        }
        let out_steps = steps - width + 1;
        let count = self.count();
        let span = width * channels;
        let mut out = vec![0.0; out_steps * count];
        for t in 0..out_steps {
            let window = &input[t * channels..t * channels + span];
            for f in 0..count {
                out[t * count + f] = self.bias.data()[f] + math::dot(self.filters.row(f), window);
            }
        }
        Ok(out)
    }

    pub(crate) fn forward_seq(&self, x: Seq) -> Result<(Seq, ConvCache)> {
        let mut out = self.preactivation(&x.data, x.steps, x.channels)?;
        self.activation.apply(&mut out);
        let steps = x.steps - self.width() + 1;
        Ok((
            Seq {
                data: out.clone(),
                steps,
                channels: self.count(),
                valid: steps,
            },
            ConvCache { input: x, output: out },
        ))
    }

    pub(crate) fn backward_seq(
        &self,
        cache: &ConvCache,
        mut grad: Vec<f64>,
        grads: &mut [Tensor],
        need_input: bool,
    ) -> Vec<f64> {
        self.activation.backprop(&cache.output, &mut grad);
        let count = self.count();
        let channels = self.in_channels();
        let span = self.width() * channels;
        let out_steps = grad.len() / count;
        let (gw, gb) = grads.split_at_mut(1);
        let gw = gw[0].data_mut();
        let gb = gb[0].data_mut();
        let mut dx = if need_input {
            vec![0.0; cache.input.data.len()]
        } else {
            Vec::new()
        };
        for t in 0..out_steps {
            let window = &cache.input.data[t * channels..t * channels + span];
            for f in 0..count {
                let g = grad[t * count + f];
                if g == 0.0 {
                    continue;
                }
                gb[f] += g;
                math::axpy(g, window, &mut gw[f * span..(f + 1) * span]);
                if need_input {
                    math::axpy(g, self.filters.row(f), &mut dx[t * channels..t * channels + span]);
                }
            }
        }
        dx
    }
}

/// Activated feature maps of `layer` over a `steps x channels` input.
pub fn conv1d_forward(layer: &Conv1d, seq: &[f64], steps: usize, channels: usize) -> Result<Vec<f64>> {
    let mut out = layer.preactivation(seq, steps, channels)?;
    layer.activation.apply(&mut out);
    Ok(out)
}

/// Non-overlapping max pooling along time. The last window may be partial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool1d {
    pub window: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct PoolCache {
    pub(crate) argmax: Vec<usize>,
    input_len: usize,
}

impl PoolCache {
    pub(crate) fn backward(&self, grad: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.input_len];
        for (g, &src) in grad.iter().zip(&self.argmax) {
            dx[src] += g;
        }
        dx
    }
}

/// Pools a `steps x channels` map. Returns the pooled map and, for each
/// output element, the flat input index it came from (first maximum wins).
pub fn maxpool1d(map: &[f64], steps: usize, channels: usize, window: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if window == 0 {
        return Err(invalid("pool window must be at least 1"));
    }
    if steps == 0 || map.len() != steps * channels {
        return Err(Error::ShapeMismatch {
            expected: format!("non-empty {}x{} map", steps, channels),
            found: format!("{} values", map.len()),
        });
    }
    let out_steps = steps.div_ceil(window);
    let mut out = vec![0.0; out_steps * channels];
    let mut argmax = vec![0; out_steps * channels];
    for w in 0..out_steps {
        let lo = w * window;
        let hi = (lo + window).min(steps);
        for c in 0..channels {
            let mut best = lo * channels + c;
            for t in lo + 1..hi {
                let k = t * channels + c;
                if map[k] > map[best] {
                    best = k;
                }
            }
            out[w * channels + c] = map[best];
            argmax[w * channels + c] = best;
        }
    }
    Ok((out, argmax))
}

impl MaxPool1d {
    pub(crate) fn output_shape(&self, input: Shape) -> Result<Shape> {
        match input {
            Shape::Sequence { steps, channels } if steps >= 1 && self.window >= 1 => Ok(Shape::Sequence {
                steps: steps.div_ceil(self.window),
                channels,
            }),
            other => Err(Error::ShapeMismatch {
                expected: "non-empty sequence into max pooling".into(),
                found: format!("{:?}", other),
            }),
        }
    }

    pub(crate) fn forward_seq(&self, x: &Seq) -> (Seq, PoolCache) {
        let (data, argmax) = maxpool1d(&x.data, x.steps.max(1), x.channels, self.window.max(1))
            .unwrap_or_else(|_| (Vec::new(), Vec::new()));
        let steps = data.len() / x.channels.max(1);
        (
            Seq {
                data,
                steps,
                channels: x.channels,
                valid: steps,
            },
            PoolCache {
                argmax,
                input_len: x.data.len(),
            },
        )
    }
}

/// Topology of the multi-branch text CNN.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnSpec {
    pub embed_dim: usize,
    pub max_len: usize,
    pub num_classes: usize,
    /// Filter widths of the parallel first-stage branches.
    pub branch_widths: Vec<usize>,
    pub filters: usize,
    pub branch_pool: usize,
    /// Width of the stacked convolutions after the branches.
    pub stage_width: usize,
    /// One max-pool window per stacked convolution.
    pub stage_pools: Vec<usize>,
    pub dense: usize,
    pub dropout: f64,
}

impl CnnSpec {
    /// Branches of widths 3..=7 with 128 filters each and pool 5, two more
    /// 128-filter convolutions pooled by 5 and 35, a 128-unit dense layer,
    /// dropout 0.25.
    pub fn hdltex(num_classes: usize, max_len: usize) -> Self {
        CnnSpec {
            embed_dim: 100,
            max_len,
            num_classes,
            branch_widths: vec![3, 4, 5, 6, 7],
            filters: 128,
            branch_pool: 5,
            stage_width: 5,
            stage_pools: vec![5, 35],
            dense: 128,
            dropout: 0.25,
        }
    }

    pub fn build(&self, seed: u64) -> Result<Network> {
        let largest = self.branch_widths.iter().copied().max().unwrap_or(0);
        if self.branch_widths.is_empty() || largest == 0 {
            return Err(invalid("cnn needs at least one branch"));
        }
        if self.max_len < largest {
            return Err(Error::SequenceTooShort {
                len: self.max_len,
                width: largest,
            });
        }
        let mut rng = rng::seeded(seed);
        let branches = self
            .branch_widths
            .iter()
            .map(|&w| {
                vec![
                    Layer::Conv1d(Conv1d::init(self.filters, w, self.embed_dim, &mut rng)),
                    Layer::MaxPool1d(MaxPool1d {
                        window: self.branch_pool,
                    }),
                ]
            })
            .collect();
        let mut layers = vec![Layer::Parallel(Parallel { branches })];
        for &pool in &self.stage_pools {
            layers.push(Layer::Conv1d(Conv1d::init(
                self.filters,
                self.stage_width,
                self.filters,
                &mut rng,
            )));
            layers.push(Layer::MaxPool1d(MaxPool1d { window: pool }));
        }
        layers.push(Layer::Flatten);
        let input = Shape::Sequence {
            steps: self.max_len,
            channels: self.embed_dim,
        };
        let mut shape = input;
        for layer in &layers {
            shape = layer.output_shape(shape)?;
        }
        let Shape::Vector(flat) = shape else {
            unreachable!("flatten emits a vector")
        };
        if self.dropout > 0.0 {
            layers.push(Layer::Dropout(Dropout { rate: self.dropout }));
        }
        layers.push(Layer::Dense(Dense::init(flat, self.dense, Activation::Relu, &mut rng)));
        layers.push(Layer::Dense(Dense::init(
            self.dense,
            self.num_classes,
            Activation::Softmax,
            &mut rng,
        )));
        Network::new(input, layers)
    }
}

/// The multi-branch text CNN over `max_len` tokens of 100-dimensional
/// embeddings.
pub fn build_hdltex_cnn(num_classes: usize, max_len: usize, seed: u64) -> Result<Network> {
    CnnSpec::hdltex(num_classes, max_len).build(seed)
}
