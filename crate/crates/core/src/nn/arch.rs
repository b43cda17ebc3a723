use alloc::vec::Vec;

use super::{Activation, Dense, Dropout, Layer, Network, Shape};
use crate::error::{invalid, Result};
use crate::rng;

/// Stack of equal-width hidden dense layers, each followed by dropout, over
/// a sparse or dense feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnnSpec {
    pub input_dim: usize,
    pub num_classes: usize,
    pub hidden_layers: usize,
    pub width: usize,
    pub dropout: f64,
    pub activation: Activation,
}

impl DnnSpec {
    /// 8 hidden ReLU layers of 1024 units with dropout 0.5.
    pub fn hdltex(input_dim: usize, num_classes: usize) -> Self {
        DnnSpec {
            input_dim,
            num_classes,
            hidden_layers: 8,
            width: 1024,
            dropout: 0.5,
            activation: Activation::Relu,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(invalid("input dimension must be at least 1"));
        }
        if self.num_classes < 2 {
            return Err(invalid("softmax output needs at least 2 classes"));
        }
        if self.hidden_layers > 0 && self.width == 0 {
            return Err(invalid("hidden width must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(invalid("dropout rate must lie in [0, 1)"));
        }
        if self.activation == Activation::Softmax {
            return Err(invalid("softmax is only allowed on the output layer"));
        }
        Ok(())
    }

    /// Number of trainable scalars, computed without allocating weights.
    pub fn parameter_count(&self) -> usize {
        let mut fan_in = self.input_dim;
        let mut total = 0;
        for _ in 0..self.hidden_layers {
            total += fan_in * self.width + self.width;
            fan_in = self.width;
        }
        total + fan_in * self.num_classes + self.num_classes
    }

    pub fn build(&self, seed: u64) -> Result<Network> {
        self.validate()?;
        let mut rng = rng::seeded(seed);
        let mut layers = Vec::with_capacity(2 * self.hidden_layers + 1);
        let mut fan_in = self.input_dim;
        for _ in 0..self.hidden_layers {
            layers.push(Layer::Dense(Dense::init(fan_in, self.width, self.activation, &mut rng)));
            if self.dropout > 0.0 {
                layers.push(Layer::Dropout(Dropout { rate: self.dropout }));
            }
            fan_in = self.width;
        }
        layers.push(Layer::Dense(Dense::init(
            fan_in,
            self.num_classes,
            Activation::Softmax,
            &mut rng,
        )));
        Network::new(Shape::Vector(self.input_dim), layers)
    }
}

/// The 8 x 1024 ReLU feed-forward classifier.
pub fn build_hdltex_dnn(input_dim: usize, num_classes: usize, seed: u64) -> Result<Network> {
    DnnSpec::hdltex(input_dim, num_classes).build(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Input;
    use alloc::vec;

    #[test]
    fn full_size_parameter_count() {
        let spec = DnnSpec::hdltex(75_000, 7);
        let expected = 75_000 * 1024 + 1024 + 7 * (1024 * 1024 + 1024) + 1024 * 7 + 7;
        assert_eq!(spec.parameter_count(), expected);
    }

    #[test]
    fn built_count_matches_closed_form() {
        let spec = DnnSpec {
            width: 16,
            ..DnnSpec::hdltex(40, 3)
        };
        let net = spec.build(1).unwrap();
        assert_eq!(net.parameter_count(), spec.parameter_count());
        assert_eq!(net.parameter_count(), 40 * 16 + 16 + 7 * (16 * 16 + 16) + 16 * 3 + 3);
        // 8 dense + 8 dropout + output
        assert_eq!(net.layers().len(), 17);
    }

    #[test]
    fn rejects_single_class() {
        assert!(build_hdltex_dnn(10, 1, 0).is_err());
        assert!(DnnSpec::hdltex(0, 3).build(0).is_err());
    }

    #[test]
    fn zero_input_gives_distribution() {
        let spec = DnnSpec {
            width: 32,
            ..DnnSpec::hdltex(20, 4)
        };
        let net = spec.build(3).unwrap();
        let p = net.forward(&Input::Dense(vec![0.0; 20])).unwrap();
        assert!(p.iter().all(|x| x.is_finite() && *x > 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
