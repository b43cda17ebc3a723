use alloc::format;
use alloc::vec::Vec;

use super::activation::{argmax, cross_entropy, Activation};
use super::layer::{kink_pattern, Cache, Layer, Seq, Shape, Value};
use crate::error::{invalid, Error, Result};
use crate::features::{EncodedSequence, SparseVector};
use crate::math;
use crate::rng::ModelRng;
use crate::Tensor;

/// A document as presented to a network.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Sparse(SparseVector),
    Dense(Vec<f64>),
    Sequence(EncodedSequence),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Vector,
    Sequence,
}

impl Input {
    fn to_value(&self) -> Value {
        match self {
            Input::Sparse(s) => Value::Sparse(s.clone()),
            Input::Dense(v) => Value::Vector(v.clone()),
            Input::Sequence(s) => Value::Seq(Seq {
                data: s.as_slice().to_vec(),
                steps: s.max_len(),
                channels: s.dim(),
                valid: s.len(),
            }),
        }
    }

    fn kind(&self) -> InputKind {
        match self {
            Input::Sparse(_) | Input::Dense(_) => InputKind::Vector,
            Input::Sequence(_) => InputKind::Sequence,
        }
    }
}

/// Examples sharing one gradient step.
#[derive(Debug, Clone)]
pub struct Batch<'a> {
    pub inputs: Vec<&'a Input>,
    pub targets: Vec<usize>,
}

impl<'a> Batch<'a> {
    pub fn new(inputs: Vec<&'a Input>, targets: Vec<usize>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(invalid("batch inputs and targets differ in length"));
        }
        if inputs.is_empty() {
            return Err(invalid("empty batch"));
        }
        Ok(Batch { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// One tensor per network parameter tensor, in [`Network::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn global_norm(&self) -> f64 {
        math::sqrt(self.tensors.iter().map(Tensor::sum_squares).sum())
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|g| *g *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// Rescales to `max_norm` when the global norm exceeds it.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm > max_norm {
            self.scale(max_norm / norm);
        }
    }
}

pub(crate) struct BatchOutcome {
    pub loss: f64,
    pub correct: usize,
    pub grads: Gradients,
}

/// Layered classifier ending in a softmax dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Shape,
    layers: Vec<Layer>,
    num_classes: usize,
}

fn check_no_softmax(layers: &[Layer]) -> Result<()> {
    for layer in layers {
        match layer {
            Layer::Dense(d) if d.activation == Activation::Softmax => {
                return Err(invalid("softmax is only allowed on the final layer"))
            }
            Layer::Parallel(p) => p.branches.iter().try_for_each(|b| check_no_softmax(b))?,
            _ => {}
        }
    }
    Ok(())
}

impl Network {
    /// Validates layer shapes and the softmax output.
    pub fn new(input_shape: Shape, layers: Vec<Layer>) -> Result<Self> {
        let Some((last, hidden)) = layers.split_last() else {
            return Err(invalid("network has no layers"));
        };
        match last {
            Layer::Dense(d) if d.activation == Activation::Softmax => {}
            _ => return Err(invalid("final layer must be dense with softmax")),
        }
        check_no_softmax(hidden)?;
        let mut shape = input_shape;
        for layer in &layers {
            shape = layer.output_shape(shape)?;
        }
        let Shape::Vector(num_classes) = shape else {
            unreachable!("dense layers emit vectors")
        };
        if num_classes < 2 {
            return Err(invalid("softmax output needs at least 2 classes"));
        }
        Ok(Network {
            input_shape,
            layers,
            num_classes,
        })
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn input_kind(&self) -> InputKind {
        match self.input_shape {
            Shape::Vector(_) => InputKind::Vector,
            Shape::Sequence { .. } => InputKind::Sequence,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            tensors: self.params().iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    /// Inference: dropout is inactive, output is a probability vector.
    pub fn forward(&self, input: &Input) -> Result<alloc::vec::Vec<f64>> {
        self.forward_traced(input, None).map(|(p, _)| p)
    }

    pub(crate) fn forward_traced(
        &self,
        input: &Input,
        mut rng: Option<&mut ModelRng>,
    ) -> Result<(Vec<f64>, Vec<Cache>)> {
        if input.kind() != self.input_kind() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?} input", self.input_kind()),
                found: format!("{:?} input", input.kind()),
            });
        }
        if let (Shape::Sequence { channels, .. }, Input::Sequence(s)) = (self.input_shape, input) {
            if s.dim() != channels {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} channels", channels),
                    found: format!("{}", s.dim()),
                });
            }
        }
        let mut value = input.to_value();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (y, c) = layer.forward(value, rng.as_deref_mut())?;
            value = y;
            caches.push(c);
        }
        match value {
            Value::Vector(p) => Ok((p, caches)),
            _ => unreachable!("validated output is a vector"),
        }
    }

    /// Mean cross-entropy over the batch, without gradients.
    pub fn loss(&self, batch: &Batch, mut rng: Option<&mut ModelRng>) -> Result<f64> {
        let mut total = 0.0;
        for (input, &target) in batch.inputs.iter().zip(&batch.targets) {
            self.check_target(target)?;
            let (probs, _) = self.forward_traced(input, rng.as_deref_mut())?;
            total += cross_entropy(&probs, target);
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean loss together with the ReLU and max-pool decisions taken for
    /// every example.
    pub(crate) fn loss_and_pattern(&self, batch: &Batch, mut rng: Option<&mut ModelRng>) -> Result<(f64, Vec<usize>)> {
        let mut total = 0.0;
        let mut pattern = Vec::new();
        for (input, &target) in batch.inputs.iter().zip(&batch.targets) {
            self.check_target(target)?;
            let (probs, caches) = self.forward_traced(input, rng.as_deref_mut())?;
            total += cross_entropy(&probs, target);
            for (layer, cache) in self.layers.iter().zip(&caches) {
                kink_pattern(layer, cache, &mut pattern);
            }
        }
        Ok((total / batch.len() as f64, pattern))
    }

    /// Mean cross-entropy loss and its exact gradient over the batch. With a
    /// random source, dropout is active (training mode).
    pub fn backward(&self, batch: &Batch, rng: Option<&mut ModelRng>) -> Result<(f64, Gradients)> {
        let out = self.batch_pass(batch, rng)?;
        Ok((out.loss, out.grads))
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.num_classes {
            return Err(invalid(format!(
                "target {} out of range for {} classes",
                target, self.num_classes
            )));
        }
        Ok(())
    }

    pub(crate) fn batch_pass(&self, batch: &Batch, mut rng: Option<&mut ModelRng>) -> Result<BatchOutcome> {
        let mut grads = self.zero_gradients();
        let counts: Vec<usize> = self.layers.iter().map(Layer::num_tensors).collect();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut correct = 0;
        for (input, &target) in batch.inputs.iter().zip(&batch.targets) {
            self.check_target(target)?;
            let (probs, caches) = self.forward_traced(input, rng.as_deref_mut())?;
            loss += cross_entropy(&probs, target);
            if argmax(&probs) == target {
                correct += 1;
            }
            // Fused softmax + cross-entropy: dL/dz = p - onehot(target).
            let mut dz: Vec<f64> = probs.iter().map(|p| p * scale).collect();
            dz[target] -= scale;

            let mut end = grads.tensors.len();
            let last = self.layers.len() - 1;
            let start = end - counts[last];
            let Layer::Dense(out_layer) = &self.layers[last] else {
                unreachable!("validated final dense layer")
            };
            let Cache::Dense(out_cache) = &caches[last] else {
                unreachable!("dense cache")
            };
            let mut g = out_layer.backward_preactivation(
                out_cache,
                &dz,
                &mut grads.tensors[start..end],
                last > 0,
            );
            end = start;
            for k in (0..last).rev() {
                let start = end - counts[k];
                g = self.layers[k].backward(&caches[k], g, &mut grads.tensors[start..end], k > 0);
                end = start;
            }
        }
        Ok(BatchOutcome {
            loss: loss * scale,
            correct,
            grads,
        })
    }
}
