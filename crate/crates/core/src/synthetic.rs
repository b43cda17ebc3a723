//! Generated two-level corpora with a known answer.
//!
//! Every child label owns a disjoint support of `support` words drawn from
//! a `vocab`-word dictionary, with random multinomial weights on it. A
//! document of child `c` draws each token from `c`'s multinomial, except
//! that with probability `noise` the token is uniform over the whole
//! dictionary.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::Dataset;
use crate::error::{invalid, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub parents: usize,
    pub children_per_parent: usize,
    pub docs_per_child: usize,
    pub vocab: usize,
    pub support: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// 4 x 3 labels, 200 documents each, 50-word supports in 2,000 words.
    fn default() -> Self {
        SyntheticSpec {
            parents: 4,
            children_per_parent: 3,
            docs_per_child: 200,
            vocab: 2000,
            support: 50,
            min_len: 30,
            max_len: 60,
            noise: 0.2,
            seed: 0,
        }
    }
}

pub fn word(i: usize) -> String {
    format!("w{:04}", i)
}

pub fn parent_name(p: usize) -> String {
    format!("domain{}", p)
}

pub fn child_name(p: usize, c: usize) -> String {
    format!("area{}_{}", p, c)
}

/// Documents are emitted child by child, parents in order.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    let labels = spec.parents * spec.children_per_parent;
    if spec.parents == 0 || spec.children_per_parent == 0 || spec.docs_per_child == 0 {
        return Err(invalid("synthetic corpus needs labels and documents"));
    }
    if spec.support == 0 || labels * spec.support > spec.vocab {
        return Err(invalid("supports do not fit disjointly in the vocabulary"));
    }
    if spec.min_len == 0 || spec.min_len > spec.max_len {
        return Err(invalid("document length range is empty"));
    }
    if !(0.0..=1.0).contains(&spec.noise) {
        return Err(invalid("noise must lie in [0, 1]"));
    }
    let mut r = rng::seeded(spec.seed);
    let mut words: Vec<usize> = (0..spec.vocab).collect();
    words.shuffle(&mut r);
    let mut rows = Vec::with_capacity(labels * spec.docs_per_child);
    for p in 0..spec.parents {
        for c in 0..spec.children_per_parent {
            let k = p * spec.children_per_parent + c;
            let support = &words[k * spec.support..(k + 1) * spec.support];
            let weights: Vec<f64> = (0..spec.support).map(|_| r.gen_range(0.5..1.5)).collect();
            let total: f64 = weights.iter().sum();
            let cumulative: Vec<f64> = weights
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w / total;
                    Some(*acc)
                })
                .collect();
            for _ in 0..spec.docs_per_child {
                let len = r.gen_range(spec.min_len..=spec.max_len);
                let mut text = String::new();
                for t in 0..len {
                    let w = if r.gen::<f64>() < spec.noise {
                        r.gen_range(0..spec.vocab)
                    } else {
                        let u = r.gen::<f64>();
                        let j = cumulative.partition_point(|&x| x < u).min(spec.support - 1);
                        support[j]
                    };
                    if t > 0 {
                        text.push(' ');
                    }
                    text.push_str(&word(w));
                }
                rows.push((parent_name(p), child_name(p, c), text));
            }
        }
    }
    Dataset::from_records("synthetic", rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn shape_and_determinism() {
        let spec = SyntheticSpec::default();
        let ds = generate(&spec).unwrap();
        assert_eq!(ds.len(), 2400);
        assert_eq!(ds.labels.parents.len(), 4);
        assert!(ds.labels.parents.iter().all(|p| ds.labels.children(p).len() == 3));
        assert!(ds.child_counts().values().all(|&n| n == 200));
        assert_eq!(ds, generate(&spec).unwrap());
    }

    #[test]
    fn noiseless_supports_are_disjoint() {
        let spec = SyntheticSpec {
            noise: 0.0,
            docs_per_child: 30,
            ..Default::default()
        };
        let ds = generate(&spec).unwrap();
        let mut seen: Vec<(String, BTreeSet<&str>)> = Vec::new();
        for d in &ds.documents {
            let entry = match seen.iter_mut().find(|e| e.0 == d.child_label) {
                Some(e) => e,
                None => {
                    seen.push((d.child_label.clone(), BTreeSet::new()));
                    seen.last_mut().unwrap()
                }
            };
            entry.1.extend(d.text.split(' '));
        }
        for (i, a) in seen.iter().enumerate() {
            assert!(a.1.len() <= 50);
            for b in &seen[i + 1..] {
                assert!(a.1.is_disjoint(&b.1));
            }
        }
    }

    #[test]
    fn rejects_overfull_vocabulary() {
        let spec = SyntheticSpec {
            vocab: 100,
            ..Default::default()
        };
        assert!(generate(&spec).is_err());
    }
}
