//! Two-level hierarchical text classification.
//!
//! A parent classifier assigns each document a top-level domain and a
//! per-domain child classifier assigns the specialised area. Every model
//! family is implemented here without external numeric libraries:
//!
//! * [`features`]: cleaning, n-gram counting, tf-idf and embedded sequences.
//! * [`nn`]: layered networks with hand-derived backpropagation, training and
//!   finite-difference verification; [`recurrent`] adds LSTM/GRU cells and
//!   [`convolution`] the 1-D text CNN.
//! * [`optim`]: SGD with momentum, RMSProp and Adam.
//! * [`baselines`]: multinomial naive Bayes.
//! * [`hierarchy`]: training, routing and level-wise accuracy.
//! * [`synthetic`]: generated corpora with a known label structure.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, persistence and
//! the command line live in the `hdltex` companion crate.

#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod baselines;
pub mod convolution;
pub mod corpus;
mod error;
pub mod features;
pub mod hierarchy;
pub(crate) mod math;
pub mod nn;
pub mod optim;
pub mod recurrent;
pub mod rng;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
