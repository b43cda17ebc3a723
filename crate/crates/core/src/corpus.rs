//! Labeled two-level document collections.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// One labeled abstract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: usize,
    pub text: String,
    pub parent_label: String,
    pub child_label: String,
}

/// Parent labels and the child labels under each, in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSpace {
    pub parents: Vec<String>,
    pub children_of: BTreeMap<String, Vec<String>>,
}

impl LabelSpace {
    /// Builds a label space from (parent, child) pairs, rejecting a child
    /// that shows up under two parents.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut space = LabelSpace::default();
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for (parent, child) in pairs {
            if let Some(&first) = owner.get(child) {
                if first != parent {
                    return Err(Error::InconsistentChild {
                        child: child.to_string(),
                        first: first.to_string(),
                        second: parent.to_string(),
                    });
                }
                continue;
            }
            owner.insert(child, parent);
            if !space.children_of.contains_key(parent) {
                space.parents.push(parent.to_string());
                space.children_of.insert(parent.to_string(), Vec::new());
            }
            space
                .children_of
                .get_mut(parent)
                .expect("inserted above")
                .push(child.to_string());
        }
        Ok(space)
    }

    pub fn parent_index(&self, parent: &str) -> Option<usize> {
        self.parents.iter().position(|p| p == parent)
    }

    pub fn children(&self, parent: &str) -> &[String] {
        self.children_of.get(parent).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn child_index(&self, parent: &str, child: &str) -> Option<usize> {
        self.children(parent).iter().position(|c| c == child)
    }

    pub fn parent_of(&self, child: &str) -> Option<&str> {
        self.parents
            .iter()
            .find(|p| self.children(p).iter().any(|c| c == child))
            .map(String::as_str)
    }

    pub fn num_children(&self) -> usize {
        self.children_of.values().map(Vec::len).sum()
    }

    /// All child labels, grouped by parent in parent order.
    pub fn all_children(&self) -> Vec<&str> {
        self.parents
            .iter()
            .flat_map(|p| self.children(p).iter().map(String::as_str))
            .collect()
    }

    fn contains(&self, parent: &str, child: &str) -> bool {
        self.children(parent).iter().any(|c| c == child)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub documents: Vec<Document>,
    pub labels: LabelSpace,
}

impl Dataset {
    /// Assembles a dataset from `(parent, child, text)` records, numbering
    /// documents `0..n` in input order and inferring the label space.
    pub fn from_records<I>(name: &str, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, String)>,
    {
        let documents: Vec<Document> = records
            .into_iter()
            .enumerate()
            .map(|(id, (parent_label, child_label, text))| Document {
                id,
                text,
                parent_label,
                child_label,
            })
            .collect();
        if documents.is_empty() {
            return Err(Error::NoDocuments);
        }
        let labels = LabelSpace::from_pairs(
            documents
                .iter()
                .map(|d| (d.parent_label.as_str(), d.child_label.as_str())),
        )?;
        Dataset::new(name, documents, labels)
    }

    /// Checks the dataset invariants: labels known, ids unique, text non-empty
    /// after cleaning.
    pub fn new(name: &str, documents: Vec<Document>, labels: LabelSpace) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for d in &documents {
            if !ids.insert(d.id) {
                return Err(Error::DuplicateId(d.id));
            }
            if !labels.children_of.contains_key(&d.parent_label) {
                return Err(Error::UnknownParent(d.parent_label.clone()));
            }
            if !labels.contains(&d.parent_label, &d.child_label) {
                return Err(Error::UnknownChild(d.child_label.clone()));
            }
            if clean_text(&d.text).is_empty() {
                return Err(Error::EmptyDocument { id: d.id });
            }
        }
        Ok(Dataset {
            name: name.to_string(),
            documents,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Document counts per child label.
    pub fn child_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for d in &self.documents {
            *counts.entry(d.child_label.as_str()).or_insert(0) += 1;
        }
        counts
    }

    fn with_documents(&self, documents: Vec<Document>, labels: LabelSpace) -> Dataset {
        Dataset {
            name: self.name.clone(),
            documents,
            labels,
        }
    }
}

/// Text normalisation switches. Lowercasing is on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CleanOptions {
    pub lowercase: bool,
}

impl Default for CleanOptions {
    fn default() -> Self {
        CleanOptions { lowercase: true }
    }
}

/// Lowercases and strips everything except ASCII letters and digits; each
/// run of stripped characters becomes one space.
pub fn clean_text(raw: &str) -> String {
    clean_text_with(raw, CleanOptions::default())
}

pub fn clean_text_with(raw: &str, opts: CleanOptions) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut gap = false;
    for ch in raw.chars() {
        if ch.is_ascii_alphanumeric() {
            if gap && !out.is_empty() {
                out.push(' ');
            }
            gap = false;
            out.push(if opts.lowercase {
                ch.to_ascii_lowercase()
            } else {
                ch
            });
        } else {
            gap = true;
        }
    }
    out
}

/// Per-child-label random split. Each stratum of size `n` contributes
/// `round(n * train_fraction)` documents to the training side, clamped so
/// both sides get at least one.
pub fn stratified_split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(crate::error::invalid("train_fraction must lie in (0, 1)"));
    }
    let mut strata: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, d) in ds.documents.iter().enumerate() {
        strata.entry(d.child_label.as_str()).or_default().push(i);
    }
    let mut rng = rng::seeded(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    // Walk strata in label-space order so the RNG stream is stable.
    for child in ds.labels.all_children() {
        let Some(members) = strata.get_mut(child) else {
            continue;
        };
        if members.len() < 2 {
            return Err(Error::SingletonClass(child.to_string()));
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let k = libm::round(n as f64 * train_fraction) as usize;
        let k = k.clamp(1, n - 1);
        train_idx.extend_from_slice(&members[..k]);
        test_idx.extend_from_slice(&members[k..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let pick = |idx: &[usize]| idx.iter().map(|&i| ds.documents[i].clone()).collect();
    Ok((
        ds.with_documents(pick(&train_idx), ds.labels.clone()),
        ds.with_documents(pick(&test_idx), ds.labels.clone()),
    ))
}

/// Documents of one parent, with the label space narrowed to that parent.
pub fn domain_subset(ds: &Dataset, parent: &str) -> Result<Dataset> {
    let children = ds
        .labels
        .children_of
        .get(parent)
        .ok_or_else(|| Error::UnknownParent(parent.to_string()))?;
    let mut labels = LabelSpace::default();
    labels.parents.push(parent.to_string());
    labels
        .children_of
        .insert(parent.to_string(), children.clone());
    let documents = ds
        .documents
        .iter()
        .filter(|d| d.parent_label == parent)
        .cloned()
        .collect();
    Ok(ds.with_documents(documents, labels))
}
