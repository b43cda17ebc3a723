use alloc::vec::Vec;

use crate::math;

/// Elementwise nonlinearity of a dense or convolutional layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Relu,
    Tanh,
    Identity,
    /// Only valid on the output layer.
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
            Activation::Softmax => "softmax",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sigmoid" => Activation::Sigmoid,
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            "identity" => Activation::Identity,
            "softmax" => Activation::Softmax,
            _ => return None,
        })
    }

    /// Applies the activation in place.
    pub(crate) fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Sigmoid => z.iter_mut().for_each(|x| *x = math::sigmoid(*x)),
            Activation::Relu => z.iter_mut().for_each(|x| *x = x.max(0.0)),
            Activation::Tanh => z.iter_mut().for_each(|x| *x = math::tanh(*x)),
            Activation::Identity => {}
            Activation::Softmax => softmax_in_place(z),
        }
    }

    /// Turns `dL/da` into `dL/dz` given the activation output `a`.
    pub(crate) fn backprop(self, a: &[f64], grad: &mut [f64]) {
        match self {
            Activation::Sigmoid => grad
                .iter_mut()
                .zip(a)
                .for_each(|(g, &y)| *g *= y * (1.0 - y)),
            Activation::Relu => grad.iter_mut().zip(a).for_each(|(g, &y)| {
                if y <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => grad
                .iter_mut()
                .zip(a)
                .for_each(|(g, &y)| *g *= 1.0 - y * y),
            Activation::Identity => {}
            Activation::Softmax => {
                let s = math::dot(a, grad);
                grad.iter_mut().zip(a).for_each(|(g, &y)| *g = y * (*g - s));
            }
        }
    }
}

/// Applies `kind` to a copy of `z`.
pub fn activate(kind: Activation, z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    kind.apply(&mut out);
    out
}

/// Softmax with the maximum subtracted first.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    activate(Activation::Softmax, z)
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in z.iter_mut() {
        *x = math::exp(*x - max);
        sum += *x;
    }
    z.iter_mut().for_each(|x| *x /= sum);
}

/// Probability floor for the cross-entropy logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// `-ln p[target]` with `p` clamped below at [`PROB_FLOOR`].
pub fn cross_entropy(probs: &[f64], target: usize) -> f64 {
    -math::ln(probs[target].max(PROB_FLOOR))
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn pointwise() {
        assert_eq!(activate(Activation::Sigmoid, &[0.0]), vec![0.5]);
        assert_eq!(activate(Activation::Relu, &[-3.0, 2.0]), vec![0.0, 2.0]);
        let s = softmax(&[0.0, 0.0, 0.0]);
        assert!(s.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let s = softmax(&[1000.0, 0.0, -1000.0]);
        assert!(s.iter().all(|p| p.is_finite()));
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(s[0], 1.0);
    }

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[1.0, 0.0], 0), 0.0);
        let k = 5;
        let u = vec![1.0 / k as f64; k];
        assert!((cross_entropy(&u, 3) - libm::log(k as f64)).abs() < 1e-12);
        assert!((cross_entropy(&[0.25, 0.75], 1) - 0.287_682_072_451_780_9).abs() < 1e-12);
        assert!((cross_entropy(&[1.0, 0.0], 1) - 27.631_021_115_928_55).abs() < 1e-9);
    }

    #[test]
    fn ties_pick_lowest() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }
}
