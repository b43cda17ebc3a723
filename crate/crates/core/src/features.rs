//! Text to model input: n-gram counts and tf-idf for the feed-forward and
//! naive Bayes families, embedded token sequences for the recurrent and
//! convolutional ones.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::rng;

/// Splits cleaned text on single spaces.
pub fn tokenize(text: &str) -> Vec<&str> {
    if text.is_empty() {
        return Vec::new();
    }
    text.split(' ').filter(|t| !t.is_empty()).collect()
}

/// N-gram to column mapping. N-grams are stored as their tokens joined by a
/// single space, which orders them the same way as the token tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    index: BTreeMap<String, usize>,
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    max_n: usize,
    num_docs_fit: usize,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from terms listed in column order.
    pub fn from_parts(
        terms: Vec<String>,
        doc_freq: Vec<u64>,
        max_n: usize,
        num_docs_fit: usize,
    ) -> Result<Self> {
        if terms.len() != doc_freq.len() {
            return Err(invalid("terms and doc_freq lengths differ"));
        }
        if max_n == 0 {
            return Err(invalid("max_n must be at least 1"));
        }
        let mut index = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(invalid("duplicate vocabulary entry"));
            }
        }
        Ok(Vocabulary {
            index,
            terms,
            doc_freq,
            max_n,
            num_docs_fit,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn num_docs_fit(&self) -> usize {
        self.num_docs_fit
    }

    /// Column of an n-gram given as space-joined tokens.
    pub fn get(&self, ngram: &str) -> Option<usize> {
        self.index.get(ngram).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self) -> &[u64] {
        &self.doc_freq
    }
}

/// Calls `f` with every n-gram of order `1..=max_n`, joined by spaces.
fn for_each_ngram(tokens: &[&str], max_n: usize, mut f: impl FnMut(&str)) {
    let mut buf = String::new();
    for n in 1..=max_n.min(tokens.len()) {
        for window in tokens.windows(n) {
            buf.clear();
            for (k, t) in window.iter().enumerate() {
                if k > 0 {
                    buf.push(' ');
                }
                buf.push_str(t);
            }
            f(&buf);
        }
    }
}

/// Keeps n-grams of order `1..=max_n` whose document frequency reaches
/// `min_count`, at most `max_features` of them by descending document
/// frequency (ties lexicographic). Columns are assigned in lexicographic
/// order of the retained n-grams.
pub fn build_vocab<S: AsRef<str>>(
    corpus: &[Vec<S>],
    max_n: usize,
    min_count: u64,
    max_features: usize,
) -> Result<Vocabulary> {
    if max_n < 1 {
        return Err(invalid("max_n must be at least 1"));
    }
    if max_features < 1 {
        return Err(invalid("max_features must be at least 1"));
    }
    if corpus.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut df: BTreeMap<String, u64> = BTreeMap::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for doc in corpus {
        let tokens: Vec<&str> = doc.iter().map(AsRef::as_ref).collect();
        seen.clear();
        for_each_ngram(&tokens, max_n, |g| {
            if !seen.contains(g) {
                seen.insert(g.to_string());
            }
        });
        for g in core::mem::take(&mut seen) {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(String, u64)> = df.into_iter().filter(|(_, n)| *n >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::NoFeatures);
    }
    // Stable sort keeps the map's lexicographic order among equal counts.
    kept.sort_by(|a, b| b.1.cmp(&a.1));
    kept.truncate(max_features);
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    let (terms, doc_freq) = kept.into_iter().unzip();
    Vocabulary::from_parts(terms, doc_freq, max_n, corpus.len())
}

/// Sparse vector with sorted, unique indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn empty(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds from arbitrary pairs: sorts, sums duplicates, drops zeros.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i >= dim {
                return Err(invalid("sparse index out of range"));
            }
            if !v.is_finite() {
                return Err(invalid("sparse value is not finite"));
            }
            match entries.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|e| e.1 != 0.0);
        Ok(SparseVector { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.entries.iter().map(|e| e.1 * e.1).sum())
    }
}

/// Occurrence counts of every in-vocabulary n-gram of the token list.
pub fn count_ngrams<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseVector {
    let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for_each_ngram(&tokens, vocab.max_n, |g| {
        if let Some(i) = vocab.get(g) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    });
    SparseVector {
        dim: vocab.len(),
        entries: counts.into_iter().collect(),
    }
}

/// Smoothed inverse document frequency `ln((1 + n) / (1 + df)) + 1`.
pub fn fit_idf(count_vectors: &[SparseVector], vocab: &Vocabulary) -> Result<Vec<f64>> {
    if count_vectors.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut df = vec![0u64; vocab.len()];
    for v in count_vectors {
        if v.dim != vocab.len() {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("dimension {}", vocab.len()),
                found: alloc::format!("{}", v.dim),
            });
        }
        for &(i, _) in &v.entries {
            df[i] += 1;
        }
    }
    let n = count_vectors.len() as f64;
    Ok(df
        .into_iter()
        .map(|d| math::ln((1.0 + n) / (1.0 + d as f64)) + 1.0)
        .collect())
}

/// `count * idf`, scaled to unit L2 norm unless all zero.
pub fn tfidf_vector(counts: &SparseVector, idf: &[f64]) -> Result<SparseVector> {
    if counts.dim != idf.len() {
        return Err(Error::ShapeMismatch {
            expected: alloc::format!("dimension {}", idf.len()),
            found: alloc::format!("{}", counts.dim),
        });
    }
    let mut entries: Vec<(usize, f64)> = counts
        .entries
        .iter()
        .map(|&(i, c)| (i, c * idf[i]))
        .collect();
    let norm = math::sqrt(entries.iter().map(|e| e.1 * e.1).sum());
    if norm > 0.0 {
        entries.iter_mut().for_each(|e| e.1 /= norm);
    }
    entries.retain(|e| e.1 != 0.0);
    Ok(SparseVector {
        dim: counts.dim,
        entries,
    })
}

/// What to do with tokens missing from an embedding table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovPolicy {
    #[default]
    ZeroVector,
    SkipToken,
}

/// Token to dense vector map.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
    pub oov_policy: OovPolicy,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("embedding dimension must be positive"));
        }
        Ok(EmbeddingTable {
            dim,
            vectors: BTreeMap::new(),
            oov_policy: OovPolicy::default(),
        })
    }

    /// Inserts or replaces a vector. Returns `true` when the token was
    /// already present.
    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("{} components", self.dim),
                found: alloc::format!("{}", vector.len()),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(invalid("embedding component is not finite"));
        }
        Ok(self.vectors.insert(token.to_string(), vector).is_some())
    }

    /// Uniform random vectors in `[-0.5, 0.5)` for the given tokens, used
    /// when no pretrained table is supplied.
    pub fn random<'a, I>(tokens: I, dim: usize, seed: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut table = EmbeddingTable::new(dim)?;
        let unique: BTreeMap<&str, ()> = tokens.into_iter().map(|t| (t, ())).collect();
        let mut rng = rng::seeded(seed);
        for token in unique.into_keys() {
            let v = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
            table.vectors.insert(token.to_string(), v);
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Entries in token order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// A document as a `max_len x dim` matrix. Rows at and after `len` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    data: Vec<f64>,
    len: usize,
    max_len: usize,
    dim: usize,
}

impl EncodedSequence {
    /// Wraps a row-major `max_len x dim` matrix whose first `len` rows are
    /// live. Padding rows are forced to zero.
    pub fn from_matrix(mut data: Vec<f64>, len: usize, max_len: usize, dim: usize) -> Result<Self> {
        if data.len() != max_len * dim || len > max_len || dim == 0 {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("{}x{} matrix with len <= max_len", max_len, dim),
                found: alloc::format!("{} values, len {}", data.len(), len),
            });
        }
        data[len * dim..].iter_mut().for_each(|x| *x = 0.0);
        Ok(EncodedSequence {
            data,
            len,
            max_len,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Looks up each token, truncating at `max_len` and zero-padding after.
pub fn encode_sequence<S: AsRef<str>>(
    tokens: &[S],
    table: &EmbeddingTable,
    max_len: usize,
) -> Result<EncodedSequence> {
    if max_len < 1 {
        return Err(invalid("max_len must be at least 1"));
    }
    let dim = table.dim;
    let mut data = vec![0.0; max_len * dim];
    let mut len = 0;
    for token in tokens {
        if len == max_len {
            break;
        }
        match (table.get(token.as_ref()), table.oov_policy) {
            (Some(v), _) => data[len * dim..(len + 1) * dim].copy_from_slice(v),
            (None, OovPolicy::ZeroVector) => {}
            (None, OovPolicy::SkipToken) => continue,
        }
        len += 1;
    }
    Ok(EncodedSequence {
        data,
        len,
        max_len,
        dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SENTENCE: &str = "in this paper we introduced this technique";

    fn docs(texts: &[&'static str]) -> Vec<Vec<&'static str>> {
        texts.iter().map(|t| tokenize(t)).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize(SENTENCE).len(), 7);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a a a"), vec!["a", "a", "a"]);
    }

    #[test]
    fn sentence_counts() {
        let corpus = docs(&[SENTENCE]);
        let vocab = build_vocab(&corpus, 2, 1, 1000).unwrap();
        assert!(vocab.get("this").is_some());
        assert!(vocab.get("in this").is_some());
        let counts = count_ngrams(&corpus[0], &vocab);
        assert_eq!(counts.get(vocab.get("this").unwrap()), 2.0);
        assert_eq!(counts.get(vocab.get("paper").unwrap()), 1.0);
        assert_eq!(counts.get(vocab.get("in this").unwrap()), 1.0);
        // 6 distinct unigrams + 6 bigrams
        assert_eq!(vocab.len(), 12);

        let unigram = build_vocab(&corpus, 1, 1, 1000).unwrap();
        let c1 = count_ngrams(&corpus[0], &unigram);
        assert_eq!(c1.nnz(), 6);
        assert_eq!(c1.entries().iter().map(|e| e.1).sum::<f64>(), 7.0);
        assert!(count_ngrams::<&str>(&[], &unigram).entries().is_empty());
    }

    #[test]
    fn vocab_limits() {
        let corpus = docs(&["a b", "a c", "a b d"]);
        assert_eq!(build_vocab(&corpus, 1, 4, 10).unwrap_err(), Error::NoFeatures);
        assert!(build_vocab(&corpus, 1, 1, 0).is_err());
        let v = build_vocab(&corpus, 1, 1, 2).unwrap();
        // df: a=3, b=2, c=1, d=1 -> keep a, b
        assert_eq!(v.terms(), &["a".to_string(), "b".to_string()]);
        assert_eq!(v.doc_freq(), &[3, 2]);
        let v = build_vocab(&corpus, 1, 1, 3).unwrap();
        // c beats d on the lexicographic tie break
        assert_eq!(v.terms(), &["a".to_string(), "b".to_string(), "c".to_string()]);
        assert_eq!(v.num_docs_fit(), 3);
    }

    #[test]
    fn identical_documents_double_df() {
        let corpus = docs(&["x y", "x y"]);
        let v = build_vocab(&corpus, 2, 1, 10).unwrap();
        assert!(v.doc_freq().iter().all(|&d| d == 2));
    }

    #[test]
    fn idf_values() {
        let corpus = docs(&["a b", "a", "a"]);
        let v = build_vocab(&corpus, 1, 1, 10).unwrap();
        let counts: Vec<_> = corpus.iter().map(|d| count_ngrams(d, &v)).collect();
        let idf = fit_idf(&counts, &v).unwrap();
        assert_eq!(idf[v.get("a").unwrap()], 1.0);
        let expected = libm::log(4.0 / 2.0) + 1.0;
        assert!((idf[v.get("b").unwrap()] - expected).abs() < 1e-15);
        assert!((expected - 1.693_147_180_559_945).abs() < 1e-12);

        let wide = Vocabulary::from_parts(
            vec!["a".into(), "b".into(), "z".into()],
            vec![3, 1, 1],
            1,
            3,
        )
        .unwrap();
        let counts: Vec<_> = corpus.iter().map(|d| count_ngrams(d, &wide)).collect();
        let idf = fit_idf(&counts, &wide).unwrap();
        assert!((idf[2] - (libm::log(4.0) + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn tfidf_examples() {
        let zero = SparseVector::empty(3);
        assert_eq!(tfidf_vector(&zero, &[1.0, 2.0, 3.0]).unwrap(), zero);
        let one = SparseVector::from_pairs(3, vec![(1, 4.0)]).unwrap();
        assert_eq!(tfidf_vector(&one, &[1.0, 2.0, 3.0]).unwrap().get(1), 1.0);
        let two = SparseVector::from_pairs(2, vec![(0, 2.0), (1, 1.0)]).unwrap();
        let out = tfidf_vector(&two, &[1.0, 1.0]).unwrap();
        let r5 = libm::sqrt(5.0);
        assert!((out.get(0) - 2.0 / r5).abs() < 1e-15);
        assert!((out.get(1) - 1.0 / r5).abs() < 1e-15);
        assert!(tfidf_vector(&two, &[1.0]).is_err());
    }

    #[test]
    fn encode_pads_and_truncates() {
        let mut table = EmbeddingTable::new(2).unwrap();
        for (i, t) in ["a", "b", "c"].iter().enumerate() {
            table.insert(t, vec![i as f64 + 1.0, -(i as f64)]).unwrap();
        }
        let s = encode_sequence(&["a", "b", "c"], &table, 5).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.row(2), &[3.0, -2.0]);
        assert_eq!(s.row(3), &[0.0, 0.0]);
        assert_eq!(s.row(4), &[0.0, 0.0]);

        let long: Vec<&str> = ["a", "b", "c", "a", "b", "c", "a", "b", "c", "a"].to_vec();
        let s = encode_sequence(&long, &table, 5).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.row(4), table.get("b").unwrap());

        let s = encode_sequence(&["a", "zzz", "b"], &table, 4).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.row(1), &[0.0, 0.0]);
        table.oov_policy = OovPolicy::SkipToken;
        let s = encode_sequence(&["a", "zzz", "b"], &table, 4).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.row(1), table.get("b").unwrap());
        assert!(encode_sequence(&["a"], &table, 0).is_err());
    }

    #[test]
    fn table_rejects_bad_vectors() {
        let mut t = EmbeddingTable::new(3).unwrap();
        assert!(t.insert("x", vec![1.0, 2.0]).is_err());
        assert!(t.insert("x", vec![1.0, f64::NAN, 2.0]).is_err());
        assert!(!t.insert("x", vec![1.0, 2.0, 3.0]).unwrap());
        assert!(t.insert("x", vec![4.0, 5.0, 6.0]).unwrap());
        assert_eq!(t.get("x").unwrap(), &[4.0, 5.0, 6.0]);
        assert!(EmbeddingTable::new(0).is_err());
    }
}
