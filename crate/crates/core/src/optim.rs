//! Stochastic gradient optimizers.
//!
//! * SGD with momentum: `v <- γ v + α g; θ <- θ - v` (γ = 0 is plain SGD).
//! * RMSProp: `s <- ρ s + (1 - ρ) g²; θ <- θ - α g / (√s + ε)`.
//! * Adam: `m <- β₁ m + (1 - β₁) g; v <- β₂ v + (1 - β₂) g²;
//!   θ <- θ - α m̂ / (√v̂ + ε)` with `m̂ = m / (1 - β₁ᵗ)`, `v̂ = v / (1 - β₂ᵗ)`.
//!
//! A non-zero `decay` scales the step size by `1 / (1 + decay · k)` where
//! `k` counts earlier updates.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd { momentum: f64 },
    RmsProp { rho: f64 },
    Adam { beta1: f64, beta2: f64 },
}

impl OptimizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd { .. } => "sgd",
            OptimizerKind::RmsProp { .. } => "rmsprop",
            OptimizerKind::Adam { .. } => "adam",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub decay: f64,
}

impl Default for OptimizerConfig {
    /// Adam with α = 0.001, β₁ = 0.9, β₂ = 0.999, ε = 1e-8, no decay.
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam {
                beta1: 0.9,
                beta2: 0.999,
            },
            learning_rate: 0.001,
            epsilon: 1e-8,
            decay: 0.0,
        }
    }
}

impl OptimizerConfig {
    pub fn sgd(learning_rate: f64, momentum: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd { momentum },
            learning_rate,
            ..Default::default()
        }
    }

    pub fn rmsprop(learning_rate: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::RmsProp { rho: 0.9 },
            learning_rate,
            ..Default::default()
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        OptimizerConfig {
            learning_rate,
            ..Default::default()
        }
    }
}

/// Moment buffers, one per parameter tensor, plus the update counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

/// `velocity <- momentum * velocity + lr * g; θ <- θ - velocity`
pub fn sgd_momentum_step(velocity: &mut [f64], params: &mut [f64], grads: &[f64], lr: f64, momentum: f64) {
    for ((v, p), g) in velocity.iter_mut().zip(params).zip(grads) {
        *v = momentum * *v + lr * g;
        *p -= *v;
    }
}

/// `s <- ρ s + (1 - ρ) g²; θ <- θ - lr g / (√s + ε)`
pub fn rmsprop_step(sq_avg: &mut [f64], params: &mut [f64], grads: &[f64], lr: f64, rho: f64, eps: f64) {
    for ((s, p), &g) in sq_avg.iter_mut().zip(params).zip(grads) {
        *s = rho * *s + (1.0 - rho) * g * g;
        *p -= lr * g / (math::sqrt(*s) + eps);
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    params: &mut [f64],
    grads: &[f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    let c1 = 1.0 - math::powi(beta1, t as i32);
    let c2 = 1.0 - math::powi(beta2, t as i32);
    for (((mi, vi), p), &g) in m.iter_mut().zip(v.iter_mut()).zip(params).zip(grads) {
        *mi = beta1 * *mi + (1.0 - beta1) * g;
        *vi = beta2 * *vi + (1.0 - beta2) * g * g;
        let m_hat = *mi / c1;
        let v_hat = *vi / c2;
        *p -= lr * m_hat / (math::sqrt(v_hat) + eps);
    }
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig) -> Self {
        OptimizerState {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.step
    }

    /// First-moment (momentum / Adam `m`) buffer of tensor `k`.
    pub fn first_moment(&self, k: usize) -> Option<&[f64]> {
        self.first.get(k).map(Vec::as_slice)
    }

    pub fn second_moment(&self, k: usize) -> Option<&[f64]> {
        self.second.get(k).map(Vec::as_slice)
    }

    /// Applies one update. Fails without touching `params` when a gradient
    /// is non-finite or shapes disagree.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(invalid("parameter and gradient counts differ"));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(invalid("parameter and gradient shapes differ"));
            }
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient);
            }
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second = params.iter().map(|p| vec![0.0; p.len()]).collect();
        } else if self.first.len() != params.len()
            || self.first.iter().zip(params.iter()).any(|(b, p)| b.len() != p.len())
        {
            return Err(invalid("optimizer state does not match parameters"));
        }
        let lr = self.config.learning_rate / (1.0 + self.config.decay * self.step as f64);
        self.step += 1;
        let eps = self.config.epsilon;
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (p, g) = (p.data_mut(), g.data());
            match self.config.kind {
                OptimizerKind::Sgd { momentum } => sgd_momentum_step(&mut self.first[k], p, g, lr, momentum),
                OptimizerKind::RmsProp { rho } => rmsprop_step(&mut self.second[k], p, g, lr, rho, eps),
                OptimizerKind::Adam { beta1, beta2 } => adam_step(
                    &mut self.first[k],
                    &mut self.second[k],
                    self.step,
                    p,
                    g,
                    lr,
                    beta1,
                    beta2,
                    eps,
                ),
            }
        }
        Ok(())
    }
}
