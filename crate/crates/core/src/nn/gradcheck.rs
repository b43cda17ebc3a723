//! Central-difference verification of the analytic gradients.
//!
//! For a sampled parameter θ the numeric derivative is
//! `(L(θ + ε) - L(θ - ε)) / 2ε`, compared with the analytic value `a` by
//! `|a - n| / max(|a|, |n|, 1e-8)`. Dropout stays active with the same seed
//! for every evaluation so the loss surface being probed is fixed.
//!
//! A probe whose two evaluations switch a ReLU unit on or off, or move a
//! max-pool winner, straddles a point where the loss has no derivative. Such
//! probes are counted in [`GradCheckReport::kinks`] and excluded from the
//! error statistics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use super::{Activation, Batch, DnnSpec, Input, Network};
use crate::convolution::CnnSpec;
use crate::error::{invalid, Result};
use crate::features::EncodedSequence;
use crate::recurrent::{CellKind, RnnSpec, TimePooling};
use crate::rng::{self, ModelRng};

/// Denominator floor of the relative error.
pub const ERROR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub epsilon: f64,
    /// Parameters probed per tensor; 0 probes every entry.
    pub samples_per_tensor: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            epsilon: 1e-5,
            samples_per_tensor: 8,
            seed: 0,
        }
    }
}

/// Largest disagreement found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub tensor: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Maximum relative error per parameter tensor.
    pub per_tensor: Vec<f64>,
    pub probes: usize,
    /// Probes skipped because the perturbation crossed a kink.
    pub kinks: usize,
    pub worst: Option<Probe>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(ERROR_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Compares analytic and central-difference gradients of the mean batch
/// loss. Parameters are restored bit-exactly afterwards.
pub fn grad_check(net: &mut Network, batch: &Batch, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    if !(1e-6..=1e-4).contains(&cfg.epsilon) {
        return Err(invalid("epsilon must lie in [1e-6, 1e-4]"));
    }
    let dropout_seed = rng::derive_seed(cfg.seed, 1);
    let fresh = || rng::seeded(dropout_seed);
    let (_, grads) = net.backward(batch, Some(&mut fresh()))?;
    let sizes: Vec<usize> = net.params().iter().map(|t| t.len()).collect();
    let mut pick = rng::seeded(rng::derive_seed(cfg.seed, 2));
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        per_tensor: Vec::with_capacity(sizes.len()),
        probes: 0,
        kinks: 0,
        worst: None,
    };
    for (k, &size) in sizes.iter().enumerate() {
        let indices: Vec<usize> = if cfg.samples_per_tensor == 0 || cfg.samples_per_tensor >= size {
            (0..size).collect()
        } else {
            index::sample(&mut pick, size, cfg.samples_per_tensor).into_vec()
        };
        let mut tensor_max: f64 = 0.0;
        for i in indices {
            let original = net.params()[k].data()[i];
            let eval = |value: f64, net: &mut Network| {
                net.params_mut()[k].data_mut()[i] = value;
                net.loss_and_pattern(batch, Some(&mut fresh()))
            };
            let (plus, above) = eval(original + cfg.epsilon, net)?;
            let (minus, below) = eval(original - cfg.epsilon, net)?;
            net.params_mut()[k].data_mut()[i] = original;
            if above != below {
                report.kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * cfg.epsilon);
            let analytic = grads.tensors[k].data()[i];
            let err = relative_error(analytic, numeric);
            report.probes += 1;
            tensor_max = tensor_max.max(err);
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some(Probe {
                    tensor: k,
                    index: i,
                    analytic,
                    numeric,
                    relative_error: err,
                });
            }
        }
        report.per_tensor.push(tensor_max);
    }
    Ok(report)
}

/// Model family exercised by [`family_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Feed-forward stack with the given number of hidden layers.
    Dense(usize),
    Lstm,
    Gru,
    Cnn,
}

impl Family {
    pub fn name(self) -> String {
        match self {
            Family::Dense(d) => format!("dense-{}", d),
            Family::Lstm => "lstm".into(),
            Family::Gru => "gru".into(),
            Family::Cnn => "cnn".into(),
        }
    }

    /// Families covered by the standard suite.
    pub fn standard() -> [Family; 6] {
        [
            Family::Dense(1),
            Family::Dense(2),
            Family::Dense(3),
            Family::Lstm,
            Family::Gru,
            Family::Cnn,
        ]
    }
}

const BATCH: usize = 3;
const CLASSES: usize = 3;
const SEQ_LEN: usize = 8;
const SEQ_DIM: usize = 4;
const HIDDEN: usize = 8;
const CNN_LEN: usize = 40;

fn random_sequence(r: &mut ModelRng, max_len: usize, dim: usize, min_len: usize) -> Result<Input> {
    let len = r.gen_range(min_len..=max_len);
    let data = (0..max_len * dim).map(|_| r.gen_range(-1.0..1.0)).collect();
    Ok(Input::Sequence(EncodedSequence::from_matrix(data, len, max_len, dim)?))
}

/// Builds a small randomly initialised network of the family together with
/// a random batch.
pub fn family_fixture(family: Family, seed: u64) -> Result<(Network, Vec<Input>, Vec<usize>)> {
    let mut r = rng::seeded(rng::derive_seed(seed, 3));
    let (net, inputs) = match family {
        Family::Dense(depth) => {
            let net = DnnSpec {
                input_dim: 10,
                num_classes: CLASSES,
                hidden_layers: depth,
                width: 8,
                dropout: 0.5,
                activation: Activation::Relu,
            }
            .build(seed)?;
            let inputs = (0..BATCH)
                .map(|_| Input::Dense((0..10).map(|_| r.gen_range(-1.0..1.0)).collect()))
                .collect();
            (net, inputs)
        }
        Family::Lstm | Family::Gru => {
            let net = RnnSpec {
                cell: if family == Family::Lstm { CellKind::Lstm } else { CellKind::Gru },
                input_dim: SEQ_DIM,
                hidden_size: HIDDEN,
                layers: 2,
                dropout: 0.25,
                pooling: TimePooling::Last,
                max_len: SEQ_LEN,
                num_classes: CLASSES,
            }
            .build(seed)?;
            let inputs = (0..BATCH)
                .map(|_| random_sequence(&mut r, SEQ_LEN, SEQ_DIM, 1))
                .collect::<Result<_>>()?;
            (net, inputs)
        }
        Family::Cnn => {
            let spec = CnnSpec::hdltex(CLASSES, CNN_LEN);
            let net = spec.build(seed)?;
            let inputs = (0..BATCH)
                .map(|_| random_sequence(&mut r, CNN_LEN, spec.embed_dim, CNN_LEN / 2))
                .collect::<Result<_>>()?;
            (net, inputs)
        }
    };
    let mut net = net;
    // Zero biases put padded or fully dropped positions exactly on the ReLU
    // kink, where a central difference is meaningless.
    for t in net.params_mut().into_iter().filter(|t| t.rank() == 1) {
        t.data_mut().iter_mut().for_each(|b| *b = r.gen_range(-0.1..0.1));
    }
    let targets = (0..BATCH).map(|_| r.gen_range(0..CLASSES)).collect();
    Ok((net, inputs, targets))
}

/// Runs [`grad_check`] on a fresh fixture of the family.
pub fn family_check(family: Family, seed: u64, epsilon: f64) -> Result<GradCheckReport> {
    let (mut net, inputs, targets) = family_fixture(family, seed)?;
    let batch = Batch::new(inputs.iter().collect(), targets)?;
    let cfg = GradCheckConfig {
        epsilon,
        samples_per_tensor: 8,
        seed,
    };
    grad_check(&mut net, &batch, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Dense, Layer, Shape};
    use crate::Tensor;
    use alloc::vec;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1e-9, 0.0), 0.1);
        assert_eq!(relative_error(2.0, 1.0), 0.5);
    }

    #[test]
    fn linear_network_is_exact() {
        let mut r = rng::seeded(4);
        let mut dense = |i: usize, o: usize, a| {
            let w = (0..i * o).map(|_| r.gen_range(-0.3..0.3)).collect();
            Layer::Dense(Dense {
                weights: Tensor::from_vec(&[o, i], w).unwrap(),
                bias: Tensor::zeros(&[o]),
                activation: a,
            })
        };
        let layers = vec![dense(4, 5, Activation::Identity), dense(5, 3, Activation::Softmax)];
        let mut net = Network::new(Shape::Vector(4), layers).unwrap();
        let x = Input::Dense(vec![0.5, -1.0, 0.25, 2.0]);
        let batch = Batch::new(vec![&x], vec![2]).unwrap();
        let cfg = GradCheckConfig {
            samples_per_tensor: 0,
            ..Default::default()
        };
        let before = net.clone();
        let report = grad_check(&mut net, &batch, &cfg).unwrap();
        assert!(report.max_relative_error < 1e-7, "{:?}", report.worst);
        assert_eq!(report.probes, 4 * 5 + 5 + 5 * 3 + 3);
        assert_eq!(net, before);
    }

    #[test]
    fn epsilon_range_enforced() {
        let (mut net, inputs, targets) = family_fixture(Family::Dense(1), 0).unwrap();
        let batch = Batch::new(inputs.iter().collect(), targets).unwrap();
        let cfg = GradCheckConfig {
            epsilon: 1e-2,
            ..Default::default()
        };
        assert!(grad_check(&mut net, &batch, &cfg).is_err());
    }

    #[test]
    fn dense_two_layer() {
        let (mut net, inputs, targets) = family_fixture(Family::Dense(1), 9).unwrap();
        let batch = Batch::new(inputs.iter().collect(), targets).unwrap();
        let cfg = GradCheckConfig {
            samples_per_tensor: 5,
            ..Default::default()
        };
        let report = grad_check(&mut net, &batch, &cfg).unwrap();
        assert!(report.max_relative_error < 1e-4, "{:?}", report.worst);
    }
}
