use alloc::borrow::Cow;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{argmax, Batch, Input, Network};
use crate::error::{invalid, Error, Result};
use crate::optim::{OptimizerConfig, OptimizerState};
use crate::rng;

/// One labelled network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Input,
    pub target: usize,
}

/// Indexed labelled inputs. Inputs may be materialised on demand, which
/// keeps long embedded sequences out of memory between batches.
pub trait TrainingData {
    fn len(&self) -> usize;
    fn target(&self, i: usize) -> usize;
    fn input(&self, i: usize) -> Result<Cow<'_, Input>>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl TrainingData for [Example] {
    fn len(&self) -> usize {
        <[Example]>::len(self)
    }

    fn target(&self, i: usize) -> usize {
        self[i].target
    }

    fn input(&self, i: usize) -> Result<Cow<'_, Input>> {
        Ok(Cow::Borrowed(&self[i].input))
    }
}

impl TrainingData for Vec<Example> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn target(&self, i: usize) -> usize {
        self[i].target
    }

    fn input(&self, i: usize) -> Result<Cow<'_, Input>> {
        Ok(Cow::Borrowed(&self[i].input))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Global gradient norm ceiling, if any.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerConfig::default(),
            epochs: 10,
            batch_size: 128,
            seed: 0,
            clip_norm: None,
        }
    }
}

/// Summary of one pass over the training data. Loss and accuracy are
/// measured on the fly, with dropout active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
    pub wall_seconds: f64,
}

/// Source of wall time in seconds. The core crate has no clock of its own.
pub trait Clock {
    fn now(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

/// Mini-batch training. The visiting order is reshuffled every epoch from
/// `cfg.seed`; dropout masks come from an independent stream of the same
/// seed, so a fixed seed reproduces the final weights bit for bit.
pub fn train_network<D: TrainingData + ?Sized>(
    net: &mut Network,
    data: &D,
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&EpochLog),
    clock: &dyn Clock,
) -> Result<Vec<EpochLog>> {
    if cfg.epochs == 0 {
        return Err(invalid("epochs must be at least 1"));
    }
    if cfg.batch_size == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    if data.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut order_rng = rng::seeded(rng::derive_seed(cfg.seed, 0));
    let mut dropout_rng = rng::seeded(rng::derive_seed(cfg.seed, 1));
    let mut state = OptimizerState::new(cfg.optimizer);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut logs = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;
    for epoch in 1..=cfg.epochs {
        let started = clock.now();
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(cfg.batch_size) {
            step += 1;
            let inputs = chunk.iter().map(|&i| data.input(i)).collect::<Result<Vec<_>>>()?;
            let batch = Batch::new(
                inputs.iter().map(|x| x.as_ref()).collect(),
                chunk.iter().map(|&i| data.target(i)).collect(),
            )?;
            let mut out = net.batch_pass(&batch, Some(&mut dropout_rng))?;
            if !out.loss.is_finite() || !out.grads.is_finite() {
                return Err(Error::Diverged { step });
            }
            if let Some(limit) = cfg.clip_norm {
                out.grads.clip_global_norm(limit);
            }
            let mut params = net.params_mut();
            state.step(&mut params, &out.grads.tensors).map_err(|e| match e {
                Error::NonFiniteGradient => Error::Diverged { step },
                other => other,
            })?;
            loss_sum += out.loss * chunk.len() as f64;
            correct += out.correct;
        }
        let log = EpochLog {
            epoch,
            mean_loss: loss_sum / data.len() as f64,
            train_accuracy: correct as f64 / data.len() as f64,
            wall_seconds: clock.now() - started,
        };
        observer(&log);
        logs.push(log);
    }
    Ok(logs)
}

/// Inference-mode class predictions.
pub fn predict_classes(net: &Network, inputs: &[&Input]) -> Result<Vec<usize>> {
    inputs.iter().map(|x| net.forward(x).map(|p| argmax(&p))).collect()
}

/// Fraction of examples whose inference-mode argmax equals the target.
pub fn accuracy<D: TrainingData + ?Sized>(net: &Network, data: &D) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut hits = 0;
    for i in 0..data.len() {
        if argmax(&net.forward(data.input(i)?.as_ref())?) == data.target(i) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DnnSpec};
    use crate::optim::OptimizerConfig;
    use alloc::vec;
    use rand::Rng;

    fn separable(n: usize, seed: u64) -> Vec<Example> {
        let mut r = rng::seeded(seed);
        (0..n)
            .map(|i| {
                let target = i % 2;
                let sign = if target == 0 { -1.0 } else { 1.0 };
                let x0 = sign * (0.5 + r.gen::<f64>());
                let x1 = r.gen::<f64>() * 2.0 - 1.0;
                Example {
                    input: Input::Dense(vec![x0, x1]),
                    target,
                }
            })
            .collect()
    }

    fn linear(seed: u64) -> Network {
        DnnSpec {
            input_dim: 2,
            num_classes: 2,
            hidden_layers: 0,
            width: 0,
            dropout: 0.0,
            activation: Activation::Relu,
        }
        .build(seed)
        .unwrap()
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let data = separable(60, 5);
        let mut net = linear(1);
        let cfg = TrainConfig {
            optimizer: OptimizerConfig::adam(0.05),
            epochs: 50,
            batch_size: 8,
            seed: 3,
            clip_norm: None,
        };
        let mut seen = 0;
        let logs = train_network(&mut net, &data, &cfg, &mut |_| seen += 1, &NoClock).unwrap();
        assert_eq!(seen, 50);
        assert_eq!(logs.last().unwrap().train_accuracy, 1.0);
        assert_eq!(accuracy(&net, &data).unwrap(), 1.0);
        assert!(logs.last().unwrap().mean_loss < logs[0].mean_loss);
    }

    #[test]
    fn zero_epochs_rejected() {
        let data = separable(4, 0);
        let mut net = linear(0);
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(train_network(&mut net, &data, &cfg, &mut |_| {}, &NoClock).is_err());
    }

    #[test]
    fn same_seed_same_weights() {
        let data = separable(40, 2);
        let run = || {
            let mut net = DnnSpec {
                input_dim: 2,
                num_classes: 2,
                hidden_layers: 2,
                width: 6,
                dropout: 0.5,
                activation: Activation::Relu,
            }
            .build(8)
            .unwrap();
            let cfg = TrainConfig {
                epochs: 3,
                batch_size: 7,
                seed: 11,
                ..Default::default()
            };
            train_network(&mut net, &data, &cfg, &mut |_| {}, &NoClock).unwrap();
            net
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn divergence_names_step() {
        let data = separable(10, 1);
        let mut net = linear(0);
        net.params_mut()[0].data_mut()[0] = f64::NAN;
        let cfg = TrainConfig {
            batch_size: 4,
            ..Default::default()
        };
        let err = train_network(&mut net, &data, &cfg, &mut |_| {}, &NoClock).unwrap_err();
        assert_eq!(err, Error::Diverged { step: 1 });
    }
}
