//! Multinomial naive Bayes over raw n-gram counts.
//!
//! `ln P(c | d) ∝ ln P(c) + Σ_w count(w, d) ln P(w | c)` with Laplace
//! smoothed likelihoods `P(w | c) = (count(w, c) + α) / (total(c) + α |V|)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::features::SparseVector;
use crate::math;
use crate::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    /// `ln P(c)`, one per class.
    pub class_log_prior: Vec<f64>,
    /// `ln P(w | c)`, classes by vocabulary.
    pub word_log_likelihood: Tensor,
    pub alpha: f64,
}

impl NaiveBayesModel {
    pub fn num_classes(&self) -> usize {
        self.class_log_prior.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.word_log_likelihood.shape()[1]
    }
}

/// Posterior of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    /// Unnormalized `ln P(c) + Σ count · ln P(w | c)`.
    pub log_joint: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Fits priors and smoothed likelihoods. Every class in `0..num_classes`
/// must own at least one document.
pub fn nb_fit(
    counts: &[SparseVector],
    labels: &[usize],
    num_classes: usize,
    alpha: f64,
) -> Result<NaiveBayesModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("smoothing alpha must be positive"));
    }
    if counts.len() != labels.len() {
        return Err(invalid("counts and labels differ in length"));
    }
    let Some(first) = counts.first() else {
        return Err(Error::NoDocuments);
    };
    let vocab = first.dim();
    if vocab == 0 {
        return Err(Error::NoFeatures);
    }
    let mut docs = vec![0usize; num_classes];
    let mut word_counts = Tensor::zeros(&[num_classes, vocab]);
    for (v, &c) in counts.iter().zip(labels) {
        if c >= num_classes {
            return Err(invalid("label out of range"));
        }
        if v.dim() != vocab {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("dimension {}", vocab),
                found: alloc::format!("{}", v.dim()),
            });
        }
        docs[c] += 1;
        let row = word_counts.row_mut(c);
        for &(w, n) in v.entries() {
            if n < 0.0 {
                return Err(invalid("naive Bayes needs non-negative counts"));
            }
            row[w] += n;
        }
    }
    if let Some(empty) = docs.iter().position(|&d| d == 0) {
        return Err(Error::EmptyClass(empty));
    }
    let total_docs = counts.len() as f64;
    let class_log_prior = docs.iter().map(|&d| math::ln(d as f64 / total_docs)).collect();
    let mut word_log_likelihood = word_counts;
    for c in 0..num_classes {
        let row = word_log_likelihood.row_mut(c);
        let denom = math::ln(row.iter().sum::<f64>() + alpha * vocab as f64);
        row.iter_mut().for_each(|x| *x = math::ln(*x + alpha) - denom);
    }
    Ok(NaiveBayesModel {
        class_log_prior,
        word_log_likelihood,
        alpha,
    })
}

/// Log joint scores and their softmax, computed with log-sum-exp.
pub fn nb_posterior(model: &NaiveBayesModel, counts: &SparseVector) -> Result<Posterior> {
    if counts.dim() != model.vocab_size() {
        return Err(Error::ShapeMismatch {
            expected: alloc::format!("dimension {}", model.vocab_size()),
            found: alloc::format!("{}", counts.dim()),
        });
    }
    let log_joint: Vec<f64> = model
        .class_log_prior
        .iter()
        .enumerate()
        .map(|(c, prior)| {
            let row = model.word_log_likelihood.row(c);
            prior + counts.entries().iter().map(|&(w, n)| n * row[w]).sum::<f64>()
        })
        .collect();
    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = log_joint.iter().map(|l| math::exp(l - max)).collect();
    let z: f64 = shifted.iter().sum();
    let probabilities = shifted.into_iter().map(|e| e / z).collect();
    Ok(Posterior {
        log_joint,
        probabilities,
    })
}

/// Maximum a posteriori class; the lowest index wins ties.
pub fn nb_classify(model: &NaiveBayesModel, counts: &SparseVector) -> Result<usize> {
    let post = nb_posterior(model, counts)?;
    Ok(crate::nn::argmax(&post.log_joint))
}
