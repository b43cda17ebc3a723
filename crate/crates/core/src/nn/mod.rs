//! Feed-forward networks with hand-derived backpropagation.
//!
//! A [`Network`] is an ordered list of [`Layer`]s ending in a softmax dense
//! layer. The same container hosts the recurrent and convolutional layer
//! kinds from [`crate::recurrent`] and [`crate::convolution`], so training,
//! gradient checking and persistence treat every model family alike.

mod activation;
mod arch;
mod dense;
pub mod gradcheck;
mod layer;
mod network;
mod train;

pub use activation::{activate, argmax, cross_entropy, softmax, Activation, PROB_FLOOR};
pub use arch::{build_hdltex_dnn, DnnSpec};
pub use dense::{apply_dropout, Dense, Dropout};
pub use gradcheck::{grad_check, relative_error, GradCheckConfig, GradCheckReport};
pub use layer::{Layer, Parallel, Shape};
pub use network::{Batch, Gradients, Input, InputKind, Network};
pub use train::{accuracy, predict_classes, train_network, Clock, EpochLog, Example, NoClock, TrainConfig, TrainingData};

pub(crate) use layer::Seq;
