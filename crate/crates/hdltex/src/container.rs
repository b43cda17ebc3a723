//! Binary model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "HDLTEXMC" | u32 version | u32 section count
//! section*: [u8; 4] tag | u64 payload length | payload
//! SHA-256 of every preceding byte (32 bytes)
//! ```
//!
//! Sections are `CONF` (config text), `LABL` (label space), `EMBD`
//! (embedding tables, each stored once however many levels share it) and
//! `MODL` (parent then child levels). Tensors are `u32 rank`, `u32` dims and
//! row-major `f64` values, so parameters round-trip bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use hdltex_core::baselines::NaiveBayesModel;
use hdltex_core::convolution::{Conv1d, MaxPool1d};
use hdltex_core::corpus::LabelSpace;
use hdltex_core::features::{EmbeddingTable, OovPolicy, Vocabulary};
use hdltex_core::hierarchy::{Classifier, HierarchicalModel, LevelModel, ModelKind, Pipeline};
use hdltex_core::nn::{Activation, Dense, Dropout, Layer, Network, Parallel, Shape};
use hdltex_core::recurrent::{GruCell, LstmCell, TimePooling};
use hdltex_core::Tensor;

use crate::config::{parse_config, render_config};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HDLTEXMC";
pub const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContainerError {
    #[error("not a model container (bad magic)")]
    BadMagic,
    #[error("unsupported version {0} (expected {VERSION})")]
    UnsupportedVersion(u32),
    #[error("unexpected end of container")]
    UnexpectedEnd,
    #[error("checksum mismatch")]
    ChecksumMismatch,
    #[error("missing section {0}")]
    MissingSection(&'static str),
    #[error("malformed container: {0}")]
    Malformed(String),
}

fn malformed(msg: impl Into<String>) -> ContainerError {
    ContainerError::Malformed(msg.into())
}

type DecodeResult<T> = std::result::Result<T, ContainerError>;

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn strs(&mut self, v: &[String]) {
        self.u32(v.len() as u32);
        v.iter().for_each(|s| self.str(s));
    }

    fn tensor(&mut self, t: &Tensor) {
        self.u32(t.rank() as u32);
        t.shape().iter().for_each(|&d| self.u32(d as u32));
        t.data().iter().for_each(|&x| self.f64(x));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> DecodeResult<&'a [u8]> {
        if self.remaining() < n {
            return Err(ContainerError::UnexpectedEnd);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> DecodeResult<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> DecodeResult<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> DecodeResult<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> DecodeResult<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn usize(&mut self) -> DecodeResult<usize> {
        usize::try_from(self.u64()?).map_err(|_| malformed("length overflows usize"))
    }

    fn f64(&mut self) -> DecodeResult<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    /// Item count, rejected early when even `min_size`-byte items could not
    /// fit in what is left.
    fn count(&mut self, min_size: usize) -> DecodeResult<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_size) > self.remaining() {
            return Err(ContainerError::UnexpectedEnd);
        }
        Ok(n)
    }

    fn str(&mut self) -> DecodeResult<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| malformed("string is not UTF-8"))
    }

    fn strs(&mut self) -> DecodeResult<Vec<String>> {
        let n = self.count(4)?;
        (0..n).map(|_| self.str()).collect()
    }

    fn tensor(&mut self) -> DecodeResult<Tensor> {
        let rank = self.count(4)?;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(self.u32()? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| malformed("tensor size overflows"))?;
        if n.saturating_mul(8) > self.remaining() {
            return Err(ContainerError::UnexpectedEnd);
        }
        let data = self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("chunk of 8"))))
            .collect();
        Tensor::from_vec(&shape, data).map_err(|e| malformed(e.to_string()))
    }

    fn finish(&self, what: &str) -> DecodeResult<()> {
        if self.remaining() != 0 {
            return Err(malformed(format!("{} trailing bytes in {what}", self.remaining())));
        }
        Ok(())
    }
}

fn encode_labels(w: &mut Writer, labels: &LabelSpace) {
    w.u32(labels.parents.len() as u32);
    for p in &labels.parents {
        w.str(p);
        w.strs(labels.children(p));
    }
}

fn decode_labels(r: &mut Reader) -> DecodeResult<LabelSpace> {
    let n = r.count(8)?;
    let mut pairs = Vec::new();
    for _ in 0..n {
        let parent = r.str()?;
        let children = r.strs()?;
        if children.is_empty() {
            return Err(malformed(format!("domain {parent:?} has no children")));
        }
        pairs.extend(children.into_iter().map(|c| (parent.clone(), c)));
    }
    let labels = LabelSpace::from_pairs(pairs.iter().map(|(p, c)| (p.as_str(), c.as_str())))
        .map_err(|e| malformed(e.to_string()))?;
    if labels.parents.len() != n {
        return Err(malformed("repeated parent label"));
    }
    Ok(labels)
}

fn encode_table(w: &mut Writer, t: &EmbeddingTable) {
    w.u32(t.dim() as u32);
    w.u8(match t.oov_policy {
        OovPolicy::ZeroVector => 0,
        OovPolicy::SkipToken => 1,
    });
    w.u32(t.len() as u32);
    let mut values = Vec::with_capacity(t.len() * t.dim());
    for (token, v) in t.iter() {
        w.str(token);
        values.extend_from_slice(v);
    }
    w.tensor(&Tensor::from_vec(&[t.len(), t.dim()], values).expect("rows have the table dimension"));
}

fn decode_table(r: &mut Reader) -> DecodeResult<EmbeddingTable> {
    let dim = r.u32()? as usize;
    let oov = match r.u8()? {
        0 => OovPolicy::ZeroVector,
        1 => OovPolicy::SkipToken,
        t => return Err(malformed(format!("unknown OOV policy {t}"))),
    };
    let tokens = r.strs()?;
    let values = r.tensor()?;
    if values.shape() != [tokens.len(), dim] {
        return Err(malformed("embedding matrix does not match its token list"));
    }
    let mut table = EmbeddingTable::new(dim).map_err(|e| malformed(e.to_string()))?;
    table.oov_policy = oov;
    for (token, row) in tokens.iter().zip(values.data().chunks_exact(dim.max(1))) {
        if table.insert(token, row.to_vec()).map_err(|e| malformed(e.to_string()))? {
            return Err(malformed(format!("duplicate embedding token {token:?}")));
        }
    }
    Ok(table)
}

fn encode_vocab(w: &mut Writer, v: &Vocabulary) {
    w.u32(v.max_n() as u32);
    w.usize(v.num_docs_fit());
    w.strs(v.terms());
    v.doc_freq().iter().for_each(|&d| w.u64(d));
}

fn decode_vocab(r: &mut Reader) -> DecodeResult<Vocabulary> {
    let max_n = r.u32()? as usize;
    let docs = r.usize()?;
    let terms = r.strs()?;
    if terms.len().saturating_mul(8) > r.remaining() {
        return Err(ContainerError::UnexpectedEnd);
    }
    let df = (0..terms.len()).map(|_| r.u64()).collect::<DecodeResult<Vec<_>>>()?;
    Vocabulary::from_parts(terms, df, max_n, docs).map_err(|e| malformed(e.to_string()))
}

const ACTIVATIONS: [Activation; 5] = [
    Activation::Sigmoid,
    Activation::Relu,
    Activation::Tanh,
    Activation::Identity,
    Activation::Softmax,
];

fn encode_activation(w: &mut Writer, a: Activation) {
    w.u8(ACTIVATIONS.iter().position(|&x| x == a).expect("listed") as u8);
}

fn decode_activation(r: &mut Reader) -> DecodeResult<Activation> {
    let t = r.u8()? as usize;
    ACTIVATIONS
        .get(t)
        .copied()
        .ok_or_else(|| malformed(format!("unknown activation {t}")))
}

fn encode_layers(w: &mut Writer, layers: &[Layer]) {
    w.u32(layers.len() as u32);
    for layer in layers {
        match layer {
            Layer::Dense(d) => {
                w.u8(0);
                encode_activation(w, d.activation);
                w.tensor(&d.weights);
                w.tensor(&d.bias);
            }
            Layer::Dropout(d) => {
                w.u8(1);
                w.f64(d.rate);
            }
            Layer::Lstm(c) => {
                w.u8(2);
                c.params().into_iter().for_each(|t| w.tensor(t));
            }
            Layer::Gru(c) => {
                w.u8(3);
                c.params().into_iter().for_each(|t| w.tensor(t));
            }
            Layer::TimePool(p) => {
                w.u8(4);
                w.u8(match p {
                    TimePooling::Last => 0,
                    TimePooling::Mean => 1,
                });
            }
            Layer::Conv1d(c) => {
                w.u8(5);
                encode_activation(w, c.activation);
                w.tensor(&c.filters);
                w.tensor(&c.bias);
            }
            Layer::MaxPool1d(p) => {
                w.u8(6);
                w.usize(p.window);
            }
            Layer::Parallel(p) => {
                w.u8(7);
                w.u32(p.branches.len() as u32);
                p.branches.iter().for_each(|b| encode_layers(w, b));
            }
            Layer::Flatten => w.u8(8),
        }
    }
}

fn check_shapes(what: &str, got: &[&Tensor], want: &[&Tensor]) -> DecodeResult<()> {
    if got.len() != want.len() || got.iter().zip(want).any(|(a, b)| a.shape() != b.shape()) {
        return Err(malformed(format!("inconsistent {what} parameter shapes")));
    }
    Ok(())
}

fn bias_len(w: &Tensor, b: &Tensor, what: &str) -> DecodeResult<()> {
    if w.rank() < 2 || b.rank() != 1 || b.len() != w.shape()[0] {
        return Err(malformed(format!("inconsistent {what} parameter shapes")));
    }
    Ok(())
}

fn decode_layers(r: &mut Reader, depth: usize) -> DecodeResult<Vec<Layer>> {
    if depth > 8 {
        return Err(malformed("layers nested too deeply"));
    }
    let n = r.count(1)?;
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let layer = match r.u8()? {
            0 => {
                let activation = decode_activation(r)?;
                let (weights, bias) = (r.tensor()?, r.tensor()?);
                bias_len(&weights, &bias, "dense")?;
                if weights.rank() != 2 {
                    return Err(malformed("dense weights must be a matrix"));
                }
                Layer::Dense(Dense {
                    weights,
                    bias,
                    activation,
                })
            }
            1 => {
                let rate = r.f64()?;
                if !(0.0..1.0).contains(&rate) {
                    return Err(malformed("dropout rate out of range"));
                }
                Layer::Dropout(Dropout { rate })
            }
            2 => {
                let t: Vec<Tensor> = (0..8).map(|_| r.tensor()).collect::<DecodeResult<_>>()?;
                bias_len(&t[0], &t[4], "LSTM")?;
                let hidden = t[4].len();
                let input = t[0].shape()[1]
                    .checked_sub(hidden)
                    .ok_or_else(|| malformed("inconsistent LSTM parameter shapes"))?;
                let mut it = t.into_iter();
                let mut next = || it.next().expect("eight tensors");
                let cell = LstmCell {
                    w_i: next(),
                    w_c: next(),
                    w_f: next(),
                    w_o: next(),
                    b_i: next(),
                    b_c: next(),
                    b_f: next(),
                    b_o: next(),
                };
                check_shapes("LSTM", &cell.params(), &LstmCell::zeros(input, hidden).params())?;
                Layer::Lstm(cell)
            }
            3 => {
                let t: Vec<Tensor> = (0..7).map(|_| r.tensor()).collect::<DecodeResult<_>>()?;
                bias_len(&t[2], &t[6], "GRU")?;
                let hidden = t[6].len();
                let input = t[2].shape()[1];
                let mut it = t.into_iter();
                let mut next = || it.next().expect("seven tensors");
                let cell = GruCell {
                    w_z: next(),
                    w_r: next(),
                    w_h: next(),
                    u_h: next(),
                    b_z: next(),
                    b_r: next(),
                    b_h: next(),
                };
                check_shapes("GRU", &cell.params(), &GruCell::zeros(input, hidden).params())?;
                Layer::Gru(cell)
            }
            4 => Layer::TimePool(match r.u8()? {
                0 => TimePooling::Last,
                1 => TimePooling::Mean,
                t => return Err(malformed(format!("unknown time pooling {t}"))),
            }),
            5 => {
                let activation = decode_activation(r)?;
                let (filters, bias) = (r.tensor()?, r.tensor()?);
                bias_len(&filters, &bias, "convolution")?;
                if filters.rank() != 3 {
                    return Err(malformed("convolution filters must have rank 3"));
                }
                Layer::Conv1d(Conv1d {
                    filters,
                    bias,
                    activation,
                })
            }
            6 => {
                let window = r.usize()?;
                if window == 0 {
                    return Err(malformed("pool window is zero"));
                }
                Layer::MaxPool1d(MaxPool1d { window })
            }
            7 => {
                let b = r.count(4)?;
                let branches = (0..b).map(|_| decode_layers(r, depth + 1)).collect::<DecodeResult<_>>()?;
                Layer::Parallel(Parallel { branches })
            }
            8 => Layer::Flatten,
            t => return Err(malformed(format!("unknown layer tag {t}"))),
        };
        layers.push(layer);
    }
    Ok(layers)
}

fn encode_network(w: &mut Writer, net: &Network) {
    match net.input_shape() {
        Shape::Vector(n) => {
            w.u8(0);
            w.usize(n);
        }
        Shape::Sequence { steps, channels } => {
            w.u8(1);
            w.usize(steps);
            w.usize(channels);
        }
    }
    encode_layers(w, net.layers());
}

fn decode_network(r: &mut Reader) -> DecodeResult<Network> {
    let shape = match r.u8()? {
        0 => Shape::Vector(r.usize()?),
        1 => Shape::Sequence {
            steps: r.usize()?,
            channels: r.usize()?,
        },
        t => return Err(malformed(format!("unknown input shape tag {t}"))),
    };
    let layers = decode_layers(r, 0)?;
    Network::new(shape, layers).map_err(|e| malformed(e.to_string()))
}

fn encode_level(w: &mut Writer, level: &LevelModel, tables: &[Arc<EmbeddingTable>]) {
    w.str(level.kind.name());
    w.strs(&level.labels);
    match &level.pipeline {
        Pipeline::Tfidf { vocab, idf } => {
            w.u8(0);
            encode_vocab(w, vocab);
            w.tensor(&Tensor::from_vec(&[idf.len()], idf.clone()).expect("rank-1 shape"));
        }
        Pipeline::Counts { vocab } => {
            w.u8(1);
            encode_vocab(w, vocab);
        }
        Pipeline::Embedded { table, max_len } => {
            w.u8(2);
            let index = tables.iter().position(|t| Arc::ptr_eq(t, table)).expect("table collected");
            w.u32(index as u32);
            w.usize(*max_len);
        }
    }
    match &level.classifier {
        Classifier::Neural(net) => {
            w.u8(0);
            encode_network(w, net);
        }
        Classifier::NaiveBayes(nb) => {
            w.u8(1);
            w.f64(nb.alpha);
            w.tensor(&Tensor::from_vec(&[nb.class_log_prior.len()], nb.class_log_prior.clone()).expect("rank-1 shape"));
            w.tensor(&nb.word_log_likelihood);
        }
    }
}

fn decode_level(r: &mut Reader, tables: &[Arc<EmbeddingTable>]) -> DecodeResult<LevelModel> {
    let kind_name = r.str()?;
    let kind = ModelKind::from_name(&kind_name).ok_or_else(|| malformed(format!("unknown model kind {kind_name:?}")))?;
    let labels = r.strs()?;
    let pipeline = match r.u8()? {
        0 => {
            let vocab = decode_vocab(r)?;
            let idf = r.tensor()?;
            if idf.shape() != [vocab.len()] {
                return Err(malformed("idf length does not match the vocabulary"));
            }
            Pipeline::Tfidf {
                vocab,
                idf: idf.data().to_vec(),
            }
        }
        1 => Pipeline::Counts { vocab: decode_vocab(r)? },
        2 => {
            let index = r.u32()? as usize;
            let table = tables
                .get(index)
                .cloned()
                .ok_or_else(|| malformed(format!("embedding table {index} missing")))?;
            let max_len = r.usize()?;
            if max_len == 0 {
                return Err(malformed("max_len is zero"));
            }
            Pipeline::Embedded { table, max_len }
        }
        t => return Err(malformed(format!("unknown pipeline tag {t}"))),
    };
    let classifier = match r.u8()? {
        0 => {
            let net = decode_network(r)?;
            let expected = match &pipeline {
                Pipeline::Embedded { table, max_len } => Shape::Sequence {
                    steps: *max_len,
                    channels: table.dim(),
                },
                p => Shape::Vector(p.dim()),
            };
            if net.input_shape() != expected {
                return Err(malformed("network input does not match its pipeline"));
            }
            Classifier::Neural(net)
        }
        1 => {
            let alpha = r.f64()?;
            let prior = r.tensor()?;
            let like = r.tensor()?;
            if prior.rank() != 1 || like.shape() != [prior.len(), pipeline.dim()] {
                return Err(malformed("naive Bayes tables do not match their pipeline"));
            }
            Classifier::NaiveBayes(NaiveBayesModel {
                class_log_prior: prior.data().to_vec(),
                word_log_likelihood: like,
                alpha,
            })
        }
        t => return Err(malformed(format!("unknown classifier tag {t}"))),
    };
    if classifier.num_classes() != labels.len() {
        return Err(malformed("classifier arity does not match its labels"));
    }
    Ok(LevelModel {
        kind,
        pipeline,
        classifier,
        labels,
    })
}

fn levels(model: &HierarchicalModel) -> impl Iterator<Item = &LevelModel> {
    std::iter::once(&model.parent).chain(&model.children)
}

/// Serialises a model. The output depends only on the model, so equal
/// models give equal bytes.
pub fn encode_model(model: &HierarchicalModel) -> Vec<u8> {
    let mut tables: Vec<Arc<EmbeddingTable>> = Vec::new();
    for level in levels(model) {
        if let Pipeline::Embedded { table, .. } = &level.pipeline {
            if !tables.iter().any(|t| Arc::ptr_eq(t, table)) {
                tables.push(Arc::clone(table));
            }
        }
    }
    let mut sections: Vec<(&[u8; 4], Vec<u8>)> = Vec::new();
    sections.push((b"CONF", render_config(&model.config).into_bytes()));
    let mut w = Writer::default();
    encode_labels(&mut w, &model.labels);
    sections.push((b"LABL", w.buf));
    let mut w = Writer::default();
    w.u32(tables.len() as u32);
    tables.iter().for_each(|t| encode_table(&mut w, t));
    sections.push((b"EMBD", w.buf));
    let mut w = Writer::default();
    w.u32(1 + model.children.len() as u32);
    levels(model).for_each(|l| encode_level(&mut w, l, &tables));
    sections.push((b"MODL", w.buf));

    let mut out = Writer::default();
    out.buf.extend_from_slice(MAGIC);
    out.u32(VERSION);
    out.u32(sections.len() as u32);
    for (tag, payload) in &sections {
        out.buf.extend_from_slice(*tag);
        out.usize(payload.len());
        out.buf.extend_from_slice(payload);
    }
    let digest = Sha256::digest(&out.buf);
    out.buf.extend_from_slice(&digest);
    out.buf
}

/// Parses a container, checking magic, version, framing, checksum and
/// the consistency of every part.
pub fn decode_model(bytes: &[u8]) -> DecodeResult<HierarchicalModel> {
    let n = bytes.len().min(MAGIC.len());
    if bytes[..n] != MAGIC[..n] {
        return Err(ContainerError::BadMagic);
    }
    let mut r = Reader::new(bytes);
    r.take(MAGIC.len())?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion(version));
    }
    let count = r.u32()?;
    let mut sections: Vec<([u8; 4], &[u8])> = Vec::new();
    for _ in 0..count {
        let tag = r.array::<4>()?;
        let len = r.usize()?;
        sections.push((tag, r.take(len)?));
    }
    let body_len = r.pos;
    let digest = r.take(DIGEST_LEN)?;
    r.finish("container")?;
    if Sha256::digest(&bytes[..body_len]).as_slice() != digest {
        return Err(ContainerError::ChecksumMismatch);
    }
    let section = |tag: &'static str| {
        let mut found = sections.iter().filter(|(t, _)| t == tag.as_bytes());
        match (found.next(), found.next()) {
            (Some((_, payload)), None) => Ok(Reader::new(payload)),
            (Some(_), Some(_)) => Err(malformed(format!("section {tag} repeated"))),
            (None, _) => Err(ContainerError::MissingSection(tag)),
        }
    };
    if let Some((tag, _)) = sections
        .iter()
        .find(|(t, _)| ![b"CONF", b"LABL", b"EMBD", b"MODL"].contains(&t))
    {
        return Err(malformed(format!("unknown section {:?}", String::from_utf8_lossy(tag))));
    }

    let conf = section("CONF")?;
    let text = std::str::from_utf8(conf.buf).map_err(|_| malformed("config is not UTF-8"))?;
    let config = parse_config(text).map_err(|e| malformed(format!("config: {e}")))?;

    let mut r = section("LABL")?;
    let labels = decode_labels(&mut r)?;
    r.finish("LABL")?;

    let mut r = section("EMBD")?;
    let n = r.count(9)?;
    let tables = (0..n)
        .map(|_| decode_table(&mut r).map(Arc::new))
        .collect::<DecodeResult<Vec<_>>>()?;
    r.finish("EMBD")?;

    let mut r = section("MODL")?;
    let n = r.count(1)?;
    if n != 1 + labels.parents.len() {
        return Err(malformed("level count does not match the label space"));
    }
    let parent = decode_level(&mut r, &tables)?;
    let children = (1..n).map(|_| decode_level(&mut r, &tables)).collect::<DecodeResult<Vec<_>>>()?;
    r.finish("MODL")?;

    HierarchicalModel::assemble(config, labels, parent, children).map_err(|e| malformed(e.to_string()))
}

/// Writes the container through a temporary file in the target directory
/// and renames it into place, so a failed save leaves no partial file.
pub fn save_model(model: &HierarchicalModel, path: &Path) -> Result<()> {
    let bytes = encode_model(model);
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<HierarchicalModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_model(&bytes)?)
}
