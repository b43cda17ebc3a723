use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::activation::Activation;
use super::layer::{Shape, Value};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::ModelRng;
use crate::Tensor;

/// Fully connected layer `a = f(W x + b)` with `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub(crate) struct DenseCache {
    input: Value,
    pub(crate) output: Vec<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, activation: Activation, rng: &mut ModelRng) -> Self {
        let limit = math::sqrt(6.0 / (inputs + outputs) as f64);
        let mut weights = Tensor::zeros(&[outputs, inputs]);
        for w in weights.data_mut() {
            *w = rng.gen_range(-limit..limit);
        }
        Dense {
            weights,
            bias: Tensor::zeros(&[outputs]),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub(crate) fn output_shape(&self, input: Shape) -> Result<Shape> {
        match input {
            Shape::Vector(n) if n == self.inputs() => Ok(Shape::Vector(self.outputs())),
            other => Err(Error::ShapeMismatch {
                expected: format!("vector of {}", self.inputs()),
                found: format!("{:?}", other),
            }),
        }
    }

    pub(crate) fn forward(&self, x: Value) -> Result<(Value, DenseCache)> {
        let n_in = self.inputs();
        let mut z = self.bias.data().to_vec();
        match &x {
            Value::Vector(v) if v.len() == n_in => {
                for (o, zo) in z.iter_mut().enumerate() {
                    *zo += math::dot(self.weights.row(o), v);
                }
            }
            Value::Sparse(s) if s.dim() == n_in => {
                let w = self.weights.data();
                for (o, zo) in z.iter_mut().enumerate() {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    *zo += s.entries().iter().map(|&(i, v)| row[i] * v).sum::<f64>();
                }
            }
            other => {
                return Err(Error::ShapeMismatch {
                    expected: format!("vector of {}", n_in),
                    found: other.describe(),
                })
            }
        }
        self.activation.apply(&mut z);
        Ok((
            Value::Vector(z.clone()),
            DenseCache {
                input: x,
                output: z,
            },
        ))
    }

    pub(crate) fn backward(
        &self,
        cache: &DenseCache,
        mut grad: Vec<f64>,
        grads: &mut [Tensor],
        need_input: bool,
    ) -> Vec<f64> {
        self.activation.backprop(&cache.output, &mut grad);
        self.backward_preactivation(cache, &grad, grads, need_input)
    }

    /// Backward pass given `dL/dz` directly (used for the fused softmax and
    /// cross-entropy gradient).
    pub(crate) fn backward_preactivation(
        &self,
        cache: &DenseCache,
        dz: &[f64],
        grads: &mut [Tensor],
        need_input: bool,
    ) -> Vec<f64> {
        let n_in = self.inputs();
        let (gw, gb) = grads.split_at_mut(1);
        let gw = gw[0].data_mut();
        math::axpy(1.0, dz, gb[0].data_mut());
        match &cache.input {
            Value::Vector(x) => {
                for (o, &d) in dz.iter().enumerate() {
                    if d != 0.0 {
                        math::axpy(d, x, &mut gw[o * n_in..(o + 1) * n_in]);
                    }
                }
            }
            Value::Sparse(s) => {
                for (o, &d) in dz.iter().enumerate() {
                    if d != 0.0 {
                        let row = &mut gw[o * n_in..(o + 1) * n_in];
                        for &(i, v) in s.entries() {
                            row[i] += d * v;
                        }
                    }
                }
                return Vec::new();
            }
            Value::Seq(_) => unreachable!("dense forward rejects sequences"),
        }
        if !need_input {
            return Vec::new();
        }
        let mut dx = vec![0.0; n_in];
        for (o, &d) in dz.iter().enumerate() {
            if d != 0.0 {
                math::axpy(d, self.weights.row(o), &mut dx);
            }
        }
        dx
    }
}

/// Inverted dropout. Active only when a random source is supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    pub rate: f64,
}

/// Zeroes each element with probability `rate` and scales survivors by
/// `1 / (1 - rate)`. Returns the masked vector and the multiplier mask.
pub fn apply_dropout(values: &[f64], rate: f64, rng: &mut ModelRng) -> (Vec<f64>, Vec<f64>) {
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = values
        .iter()
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect();
    let out = values.iter().zip(&mask).map(|(v, m)| v * m).collect();
    (out, mask)
}

impl Dropout {
    pub(crate) fn forward(&self, x: Value, rng: Option<&mut ModelRng>) -> Result<(Value, Option<Vec<f64>>)> {
        let Some(rng) = rng.filter(|_| self.rate > 0.0) else {
            return Ok((x, None));
        };
        match x {
            Value::Vector(v) => {
                let (out, mask) = apply_dropout(&v, self.rate, rng);
                Ok((Value::Vector(out), Some(mask)))
            }
            Value::Seq(mut s) => {
                let (out, mask) = apply_dropout(&s.data, self.rate, rng);
                s.data = out;
                Ok((Value::Seq(s), Some(mask)))
            }
            Value::Sparse(s) => Err(Error::ShapeMismatch {
                expected: "dense vector or sequence".into(),
                found: format!("sparse vector of {}", s.dim()),
            }),
        }
    }

    pub(crate) fn backward(&self, mask: &Option<Vec<f64>>, mut grad: Vec<f64>) -> Vec<f64> {
        if let Some(mask) = mask {
            grad.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
        }
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn dropout_zero_rate_is_identity() {
        let v = [1.0, -2.0, 3.5];
        let (out, _) = apply_dropout(&v, 0.0, &mut seeded(1));
        assert_eq!(out, v.to_vec());
    }

    #[test]
    fn dropout_is_seeded() {
        let v = [1.0; 64];
        let a = apply_dropout(&v, 0.5, &mut seeded(9));
        let b = apply_dropout(&v, 0.5, &mut seeded(9));
        assert_eq!(a, b);
        assert!(a.0.iter().all(|&x| x == 0.0 || x == 2.0));
    }

    #[test]
    fn dropout_preserves_expectation() {
        let v: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
        let mut rng = seeded(4);
        let trials = 20_000;
        let mut acc = vec![0.0; v.len()];
        for _ in 0..trials {
            let (out, _) = apply_dropout(&v, 0.5, &mut rng);
            math::axpy(1.0, &out, &mut acc);
        }
        for (a, x) in acc.iter().zip(&v) {
            let mean = a / trials as f64;
            assert!((mean - x).abs() / x < 0.02, "{mean} vs {x}");
        }
    }

    #[test]
    fn dropout_layer_inactive_without_rng() {
        let d = Dropout { rate: 0.5 };
        let (out, mask) = d.forward(Value::Vector(vec![1.0, 2.0]), None).unwrap();
        assert!(mask.is_none());
        assert!(matches!(out, Value::Vector(v) if v == vec![1.0, 2.0]));
    }
}
