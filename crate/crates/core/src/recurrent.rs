//! LSTM and GRU cells, stacked recurrent classifiers, and backpropagation
//! through time.
//!
//! Both cells read the concatenation `[x_t, h_{t-1}]`. The LSTM follows
//!
//! ```text
//! i_t = sigmoid(W_i [x_t, h_{t-1}] + b_i)
//! c~_t = tanh(W_c [x_t, h_{t-1}] + b_c)
//! f_t = sigmoid(W_f [x_t, h_{t-1}] + b_f)
//! c_t = i_t * c~_t + f_t * c_{t-1}
//! o_t = sigmoid(W_o [x_t, h_{t-1}] + b_o)
//! h_t = o_t * tanh(c_t)
//! ```
//!
//! and the GRU the two-gate form of Cho et al.:
//!
//! ```text
//! z_t = sigmoid(W_z [x_t, h_{t-1}] + b_z)
//! r_t = sigmoid(W_r [x_t, h_{t-1}] + b_r)
//! h~_t = tanh(W_h x_t + U_h (r_t * h_{t-1}) + b_h)
//! h_t = (1 - z_t) * h_{t-1} + z_t * h~_t
//! ```
//!
//! A recurrent classifier is an ordinary [`Network`]: stacked cell layers,
//! a [`TimePooling`] layer and a softmax readout. Padded steps after the
//! sequence length are never processed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::features::EncodedSequence;
use crate::math::{self, sigmoid, tanh};
use crate::nn::{Activation, Dense, Dropout, Input, Layer, Network, Seq, Shape};
use crate::rng::{self, ModelRng};
use crate::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Lstm,
    Gru,
}

/// How a hidden-state sequence becomes one document vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimePooling {
    /// State after the last live step (zero for an empty sequence).
    #[default]
    Last,
    /// Average over live steps (zero for an empty sequence).
    Mean,
}

impl TimePooling {
    pub(crate) fn pool(self, s: &Seq) -> Vec<f64> {
        let mut out = vec![0.0; s.channels];
        if s.valid == 0 {
            return out;
        }
        match self {
            TimePooling::Last => out.copy_from_slice(s.row(s.valid - 1)),
            TimePooling::Mean => {
                for t in 0..s.valid {
                    math::axpy(1.0 / s.valid as f64, s.row(t), &mut out);
                }
            }
        }
        out
    }

    pub(crate) fn backward(self, grad: &[f64], steps: usize, channels: usize, valid: usize) -> Vec<f64> {
        let mut dx = vec![0.0; steps * channels];
        if valid == 0 {
            return dx;
        }
        match self {
            TimePooling::Last => {
                dx[(valid - 1) * channels..valid * channels].copy_from_slice(grad);
            }
            TimePooling::Mean => {
                for t in 0..valid {
                    math::axpy(1.0 / valid as f64, grad, &mut dx[t * channels..(t + 1) * channels]);
                }
            }
        }
        dx
    }
}

/// `out = W v + b` for `W` of shape `rows x v.len()`.
fn affine(w: &Tensor, b: &Tensor, v: &[f64]) -> Vec<f64> {
    b.data()
        .iter()
        .enumerate()
        .map(|(r, bias)| bias + math::dot(w.row(r), v))
        .collect()
}

/// `dW += d ⊗ v`, `db += d`, and `dv += W^T d` when `dv` is given.
fn affine_backward(w: &Tensor, d: &[f64], v: &[f64], dw: &mut Tensor, db: &mut Tensor, dv: Option<&mut [f64]>) {
    let cols = v.len();
    let dwd = dw.data_mut();
    for (r, &g) in d.iter().enumerate() {
        if g != 0.0 {
            math::axpy(g, v, &mut dwd[r * cols..(r + 1) * cols]);
        }
    }
    math::axpy(1.0, d, db.data_mut());
    if let Some(dv) = dv {
        for (r, &g) in d.iter().enumerate() {
            if g != 0.0 {
                math::axpy(g, w.row(r), dv);
            }
        }
    }
}

fn uniform(rows: usize, cols: usize, limit: f64, rng: &mut ModelRng) -> Tensor {
    let mut t = Tensor::zeros(&[rows, cols]);
    t.data_mut()
        .iter_mut()
        .for_each(|w| *w = rng.gen_range(-limit..limit));
    t
}

fn concat(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(x.len() + h.len());
    z.extend_from_slice(x);
    z.extend_from_slice(h);
    z
}

fn check_input(what: &str, expected: usize, input: Shape) -> Result<usize> {
    match input {
        Shape::Sequence { steps, channels } if channels == expected => Ok(steps),
        other => Err(Error::ShapeMismatch {
            expected: format!("sequence with {expected} channels into {what}"),
            found: format!("{:?}", other),
        }),
    }
}

/// LSTM parameters. Gate matrices are `hidden x (input + hidden)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub w_i: Tensor,
    pub w_c: Tensor,
    pub w_f: Tensor,
    pub w_o: Tensor,
    pub b_i: Tensor,
    pub b_c: Tensor,
    pub b_f: Tensor,
    pub b_o: Tensor,
}

#[derive(Debug, Clone)]
struct LstmStep {
    z: Vec<f64>,
    i: Vec<f64>,
    cand: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LstmCache {
    steps: Vec<LstmStep>,
    total_steps: usize,
}

impl LstmCell {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let w = || Tensor::zeros(&[hidden_size, input_size + hidden_size]);
        let b = || Tensor::zeros(&[hidden_size]);
        LstmCell {
            w_i: w(),
            w_c: w(),
            w_f: w(),
            w_o: w(),
            b_i: b(),
            b_c: b(),
            b_f: b(),
            b_o: b(),
        }
    }

    /// Uniform `±1/sqrt(input + hidden)` weights, zero biases except the
    /// forget gate, which starts at +1.
    pub fn init(input_size: usize, hidden_size: usize, rng: &mut ModelRng) -> Self {
        let cols = input_size + hidden_size;
        let limit = 1.0 / math::sqrt(cols as f64);
        let mut cell = LstmCell::zeros(input_size, hidden_size);
        cell.w_i = uniform(hidden_size, cols, limit, rng);
        cell.w_c = uniform(hidden_size, cols, limit, rng);
        cell.w_f = uniform(hidden_size, cols, limit, rng);
        cell.w_o = uniform(hidden_size, cols, limit, rng);
        cell.b_f.fill(1.0);
        cell
    }

    pub fn hidden_size(&self) -> usize {
        self.w_i.shape()[0]
    }

    pub fn input_size(&self) -> usize {
        self.w_i.shape()[1] - self.hidden_size()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.w_i, &self.w_c, &self.w_f, &self.w_o, &self.b_i, &self.b_c, &self.b_f, &self.b_o]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_i,
            &mut self.w_c,
            &mut self.w_f,
            &mut self.w_o,
            &mut self.b_i,
            &mut self.b_c,
            &mut self.b_f,
            &mut self.b_o,
        ]
    }

    fn step_cached(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>, LstmStep) {
        let z = concat(x, h_prev);
        let mut i = affine(&self.w_i, &self.b_i, &z);
        let mut cand = affine(&self.w_c, &self.b_c, &z);
        let mut f = affine(&self.w_f, &self.b_f, &z);
        let mut o = affine(&self.w_o, &self.b_o, &z);
        i.iter_mut().for_each(|v| *v = sigmoid(*v));
        cand.iter_mut().for_each(|v| *v = tanh(*v));
        f.iter_mut().for_each(|v| *v = sigmoid(*v));
        o.iter_mut().for_each(|v| *v = sigmoid(*v));
        let c: Vec<f64> = (0..c_prev.len())
            .map(|k| i[k] * cand[k] + f[k] * c_prev[k])
            .collect();
        let tanh_c: Vec<f64> = c.iter().map(|&v| tanh(v)).collect();
        let h = o.iter().zip(&tanh_c).map(|(a, b)| a * b).collect();
        let step = LstmStep {
            z,
            i,
            cand,
            f,
            o,
            c_prev: c_prev.to_vec(),
            tanh_c,
        };
        (h, c, step)
    }

    pub(crate) fn output_shape(&self, input: Shape) -> Result<Shape> {
        let steps = check_input("lstm", self.input_size(), input)?;
        Ok(Shape::Sequence {
            steps,
            channels: self.hidden_size(),
        })
    }

    pub(crate) fn forward_seq(&self, x: Seq) -> Result<(Seq, LstmCache)> {
        check_input("lstm", self.input_size(), Shape::Sequence { steps: x.steps, channels: x.channels })?;
        let hs = self.hidden_size();
        let mut h = vec![0.0; hs];
        let mut c = vec![0.0; hs];
        let mut out = vec![0.0; x.steps * hs];
        let mut steps = Vec::with_capacity(x.valid);
        for t in 0..x.valid {
            let (h_next, c_next, cache) = self.step_cached(x.row(t), &h, &c);
            out[t * hs..(t + 1) * hs].copy_from_slice(&h_next);
            h = h_next;
            c = c_next;
            steps.push(cache);
        }
        Ok((
            Seq {
                data: out,
                steps: x.steps,
                channels: hs,
                valid: x.valid,
            },
            LstmCache {
                steps,
                total_steps: x.steps,
            },
        ))
    }

    pub(crate) fn backward_seq(&self, cache: &LstmCache, grad: &[f64], grads: &mut [Tensor]) -> Vec<f64> {
        let hs = self.hidden_size();
        let d = self.input_size();
        let mut dx = vec![0.0; cache.total_steps * d];
        let mut dh_next = vec![0.0; hs];
        let mut dc_next = vec![0.0; hs];
        let [gw_i, gw_c, gw_f, gw_o, gb_i, gb_c, gb_f, gb_o] = grads else {
            unreachable!("lstm owns 8 tensors")
        };
        for (t, s) in cache.steps.iter().enumerate().rev() {
            let mut dz = vec![0.0; d + hs];
            let mut da_i = vec![0.0; hs];
            let mut da_c = vec![0.0; hs];
            let mut da_f = vec![0.0; hs];
            let mut da_o = vec![0.0; hs];
            for k in 0..hs {
                let dh = grad[t * hs + k] + dh_next[k];
                let d_o = dh * s.tanh_c[k];
                let dc = dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[k];
                da_i[k] = dc * s.cand[k] * s.i[k] * (1.0 - s.i[k]);
                da_c[k] = dc * s.i[k] * (1.0 - s.cand[k] * s.cand[k]);
                da_f[k] = dc * s.c_prev[k] * s.f[k] * (1.0 - s.f[k]);
                da_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
                dc_next[k] = dc * s.f[k];
            }
            affine_backward(&self.w_i, &da_i, &s.z, gw_i, gb_i, Some(&mut dz));
            affine_backward(&self.w_c, &da_c, &s.z, gw_c, gb_c, Some(&mut dz));
            affine_backward(&self.w_f, &da_f, &s.z, gw_f, gb_f, Some(&mut dz));
            affine_backward(&self.w_o, &da_o, &s.z, gw_o, gb_o, Some(&mut dz));
            dx[t * d..(t + 1) * d].copy_from_slice(&dz[..d]);
            dh_next.copy_from_slice(&dz[d..]);
        }
        dx
    }
}

/// One LSTM step: returns `(h_t, c_t)`.
pub fn lstm_step(cell: &LstmCell, x_t: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (h, c, _) = cell.step_cached(x_t, h_prev, c_prev);
    (h, c)
}

/// GRU parameters. `w_z`, `w_r` are `hidden x (input + hidden)`; the
/// candidate uses `w_h` (`hidden x input`) and `u_h` (`hidden x hidden`).
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_h: Tensor,
    pub u_h: Tensor,
    pub b_z: Tensor,
    pub b_r: Tensor,
    pub b_h: Tensor,
}

#[derive(Debug, Clone)]
struct GruStep {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z_in: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    cand: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct GruCache {
    steps: Vec<GruStep>,
    total_steps: usize,
}

impl GruCell {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        GruCell {
            w_z: Tensor::zeros(&[hidden_size, input_size + hidden_size]),
            w_r: Tensor::zeros(&[hidden_size, input_size + hidden_size]),
            w_h: Tensor::zeros(&[hidden_size, input_size]),
            u_h: Tensor::zeros(&[hidden_size, hidden_size]),
            b_z: Tensor::zeros(&[hidden_size]),
            b_r: Tensor::zeros(&[hidden_size]),
            b_h: Tensor::zeros(&[hidden_size]),
        }
    }

    /// Uniform `±1/sqrt(fan_in)` weights and zero biases.
    pub fn init(input_size: usize, hidden_size: usize, rng: &mut ModelRng) -> Self {
        let cols = input_size + hidden_size;
        let gate = 1.0 / math::sqrt(cols as f64);
        GruCell {
            w_z: uniform(hidden_size, cols, gate, rng),
            w_r: uniform(hidden_size, cols, gate, rng),
            w_h: uniform(hidden_size, input_size, 1.0 / math::sqrt(input_size as f64), rng),
            u_h: uniform(hidden_size, hidden_size, 1.0 / math::sqrt(hidden_size as f64), rng),
            b_z: Tensor::zeros(&[hidden_size]),
            b_r: Tensor::zeros(&[hidden_size]),
            b_h: Tensor::zeros(&[hidden_size]),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.u_h.shape()[0]
    }

    pub fn input_size(&self) -> usize {
        self.w_h.shape()[1]
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.w_z, &self.w_r, &self.w_h, &self.u_h, &self.b_z, &self.b_r, &self.b_h]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }

    fn step_cached(&self, x: &[f64], h_prev: &[f64]) -> (Vec<f64>, GruStep) {
        let z_in = concat(x, h_prev);
        let mut z = affine(&self.w_z, &self.b_z, &z_in);
        let mut r = affine(&self.w_r, &self.b_r, &z_in);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));
        r.iter_mut().for_each(|v| *v = sigmoid(*v));
        let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut cand = affine(&self.w_h, &self.b_h, x);
        for (k, c) in cand.iter_mut().enumerate() {
            *c = tanh(*c + math::dot(self.u_h.row(k), &rh));
        }
        let h = (0..h_prev.len())
            .map(|k| (1.0 - z[k]) * h_prev[k] + z[k] * cand[k])
            .collect();
        let step = GruStep {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            z_in,
            z,
            r,
            rh,
            cand,
        };
        (h, step)
    }

    pub(crate) fn output_shape(&self, input: Shape) -> Result<Shape> {
        let steps = check_input("gru", self.input_size(), input)?;
        Ok(Shape::Sequence {
            steps,
            channels: self.hidden_size(),
        })
    }

    pub(crate) fn forward_seq(&self, x: Seq) -> Result<(Seq, GruCache)> {
        check_input("gru", self.input_size(), Shape::Sequence { steps: x.steps, channels: x.channels })?;
        let hs = self.hidden_size();
        let mut h = vec![0.0; hs];
        let mut out = vec![0.0; x.steps * hs];
        let mut steps = Vec::with_capacity(x.valid);
        for t in 0..x.valid {
            let (h_next, cache) = self.step_cached(x.row(t), &h);
            out[t * hs..(t + 1) * hs].copy_from_slice(&h_next);
            h = h_next;
            steps.push(cache);
        }
        Ok((
            Seq {
                data: out,
                steps: x.steps,
                channels: hs,
                valid: x.valid,
            },
            GruCache {
                steps,
                total_steps: x.steps,
            },
        ))
    }

    pub(crate) fn backward_seq(&self, cache: &GruCache, grad: &[f64], grads: &mut [Tensor]) -> Vec<f64> {
        let hs = self.hidden_size();
        let d = self.input_size();
        let mut dx = vec![0.0; cache.total_steps * d];
        let mut dh_next = vec![0.0; hs];
        let [gw_z, gw_r, gw_h, gu_h, gb_z, gb_r, gb_h] = grads else {
            unreachable!("gru owns 7 tensors")
        };
        for (t, s) in cache.steps.iter().enumerate().rev() {
            let mut dh_prev = vec![0.0; hs];
            let mut da_z = vec![0.0; hs];
            let mut da_h = vec![0.0; hs];
            for k in 0..hs {
                let dh = grad[t * hs + k] + dh_next[k];
                let dz = dh * (s.cand[k] - s.h_prev[k]);
                let dcand = dh * s.z[k];
                dh_prev[k] = dh * (1.0 - s.z[k]);
                da_z[k] = dz * s.z[k] * (1.0 - s.z[k]);
                da_h[k] = dcand * (1.0 - s.cand[k] * s.cand[k]);
            }
            let dxt = &mut dx[t * d..(t + 1) * d];
            affine_backward(&self.w_h, &da_h, &s.x, gw_h, gb_h, Some(dxt));
            // Candidate path through U_h (r * h_prev); U_h has no bias of its own.
            let mut d_rh = vec![0.0; hs];
            {
                let gu = gu_h.data_mut();
                for (r, &g) in da_h.iter().enumerate() {
                    if g != 0.0 {
                        math::axpy(g, &s.rh, &mut gu[r * hs..(r + 1) * hs]);
                        math::axpy(g, self.u_h.row(r), &mut d_rh);
                    }
                }
            }
            let mut da_r = vec![0.0; hs];
            for k in 0..hs {
                dh_prev[k] += d_rh[k] * s.r[k];
                let dr = d_rh[k] * s.h_prev[k];
                da_r[k] = dr * s.r[k] * (1.0 - s.r[k]);
            }
            let mut dz_in = vec![0.0; d + hs];
            affine_backward(&self.w_z, &da_z, &s.z_in, gw_z, gb_z, Some(&mut dz_in));
            affine_backward(&self.w_r, &da_r, &s.z_in, gw_r, gb_r, Some(&mut dz_in));
            math::axpy(1.0, &dz_in[..d], &mut dx[t * d..(t + 1) * d]);
            math::axpy(1.0, &dz_in[d..], &mut dh_prev);
            dh_next = dh_prev;
        }
        dx
    }
}

/// One GRU step: returns `h_t`.
pub fn gru_step(cell: &GruCell, x_t: &[f64], h_prev: &[f64]) -> Vec<f64> {
    cell.step_cached(x_t, h_prev).0
}

/// Class probabilities of a recurrent classifier for one encoded document.
pub fn run_sequence(model: &Network, seq: &EncodedSequence) -> Result<Vec<f64>> {
    model.forward(&Input::Sequence(seq.clone()))
}

/// Topology of a stacked recurrent classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnSpec {
    pub cell: CellKind,
    pub input_dim: usize,
    pub hidden_size: usize,
    pub layers: usize,
    pub dropout: f64,
    pub pooling: TimePooling,
    pub max_len: usize,
    pub num_classes: usize,
}

impl RnnSpec {
    /// Two stacked 100-unit cells over 100-dimensional embeddings, dropout
    /// 0.25 between them.
    pub fn hdltex(num_classes: usize, cell: CellKind) -> Self {
        RnnSpec {
            cell,
            input_dim: 100,
            hidden_size: 100,
            layers: 2,
            dropout: 0.25,
            pooling: TimePooling::Last,
            max_len: 500,
            num_classes,
        }
    }

    pub fn build(&self, seed: u64) -> Result<Network> {
        if self.layers == 0 || self.hidden_size == 0 || self.input_dim == 0 {
            return Err(crate::error::invalid("recurrent stack needs at least one non-empty layer"));
        }
        let mut rng = rng::seeded(seed);
        let mut layers = Vec::new();
        let mut width = self.input_dim;
        for k in 0..self.layers {
            if k > 0 && self.dropout > 0.0 {
                layers.push(Layer::Dropout(Dropout { rate: self.dropout }));
            }
            layers.push(match self.cell {
                CellKind::Lstm => Layer::Lstm(LstmCell::init(width, self.hidden_size, &mut rng)),
                CellKind::Gru => Layer::Gru(GruCell::init(width, self.hidden_size, &mut rng)),
            });
            width = self.hidden_size;
        }
        layers.push(Layer::TimePool(self.pooling));
        layers.push(Layer::Dense(Dense::init(
            width,
            self.num_classes,
            Activation::Softmax,
            &mut rng,
        )));
        Network::new(
            Shape::Sequence {
                steps: self.max_len,
                channels: self.input_dim,
            },
            layers,
        )
    }
}

/// The two-layer, 100-unit recurrent classifier.
pub fn build_hdltex_rnn(num_classes: usize, cell: CellKind, seed: u64) -> Result<Network> {
    RnnSpec::hdltex(num_classes, cell).build(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstm_zero_parameters() {
        let cell = LstmCell::zeros(2, 3);
        let c_prev = [0.8, -1.2, 2.0];
        let (h, c) = lstm_step(&cell, &[0.3, -0.7], &[0.1, 0.2, 0.3], &c_prev);
        for k in 0..3 {
            assert_eq!(c[k], 0.5 * c_prev[k]);
            assert_eq!(h[k], 0.5 * libm::tanh(0.5 * c_prev[k]));
        }
    }

    #[test]
    fn lstm_saturated_gates_keep_memory() {
        let mut cell = LstmCell::zeros(2, 2);
        cell.b_f.fill(50.0);
        cell.b_i.fill(-50.0);
        let (_, c) = lstm_step(&cell, &[1.0, 1.0], &[0.5, 0.5], &[0.25, -3.0]);
        assert!((c[0] - 0.25).abs() < 1e-12);
        assert!((c[1] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn gru_zero_parameters_and_limits() {
        let cell = GruCell::zeros(2, 3);
        let h_prev = [0.4, -0.6, 1.0];
        let h = gru_step(&cell, &[0.9, 0.1], &h_prev);
        for k in 0..3 {
            assert_eq!(h[k], 0.5 * h_prev[k]);
        }
        let mut frozen = GruCell::init(2, 3, &mut rng::seeded(1));
        frozen.b_z.fill(-60.0);
        let h = gru_step(&frozen, &[0.9, 0.1], &h_prev);
        for k in 0..3 {
            assert!((h[k] - h_prev[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn gru_with_open_update_gate_is_simple_rnn() {
        let mut cell = GruCell::init(2, 2, &mut rng::seeded(5));
        cell.b_z.fill(60.0);
        cell.b_r.fill(60.0);
        let x = [0.3, -0.2];
        let h_prev = [0.5, -0.4];
        let h = gru_step(&cell, &x, &h_prev);
        for k in 0..2 {
            let pre = cell.b_h.data()[k] + math::dot(cell.w_h.row(k), &x) + math::dot(cell.u_h.row(k), &h_prev);
            assert!((h[k] - libm::tanh(pre)).abs() < 1e-12);
        }
    }

    #[test]
    fn hdltex_rnn_topology() {
        for kind in [CellKind::Gru, CellKind::Lstm] {
            let net = build_hdltex_rnn(7, kind, 3).unwrap();
            let cells: Vec<_> = net
                .layers()
                .iter()
                .filter(|l| matches!(l, Layer::Lstm(_) | Layer::Gru(_)))
                .collect();
            assert_eq!(cells.len(), 2);
            let Some(Layer::Dense(readout)) = net.layers().last() else {
                panic!("readout")
            };
            assert_eq!(readout.inputs(), 100);
            assert_eq!(readout.outputs(), 7);
            assert!(net
                .layers()
                .iter()
                .any(|l| matches!(l, Layer::Dropout(d) if d.rate == 0.25)));
        }
    }

    #[test]
    fn empty_sequence_reads_out_zero_state() {
        let spec = RnnSpec {
            input_dim: 3,
            hidden_size: 4,
            max_len: 6,
            ..RnnSpec::hdltex(3, CellKind::Gru)
        };
        let net = spec.build(2).unwrap();
        let seq = EncodedSequence::from_matrix(vec![0.0; 18], 0, 6, 3).unwrap();
        let p = run_sequence(&net, &seq).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let Some(Layer::Dense(readout)) = net.layers().last() else {
            unreachable!()
        };
        // zero state: logits are the readout bias (all zero at init)
        assert!(readout.bias.data().iter().all(|&b| b == 0.0));
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-12));
    }
}
