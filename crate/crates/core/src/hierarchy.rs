//! Two-level classification: a parent model picks the domain and a
//! per-domain child model picks the area within it.
//!
//! Accuracy bookkeeping follows the per-level reading: child models are
//! scored on the documents of their true domain, their accuracies are
//! averaged weighted by test counts `n_k`, and the overall figure is
//! `parent_accuracy * Σ acc_k n_k / Σ n_k`. Routed end-to-end accuracy is
//! reported alongside.

use alloc::borrow::Cow;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::baselines::{nb_classify, nb_fit, nb_posterior, NaiveBayesModel};
use crate::convolution::CnnSpec;
use crate::corpus::{clean_text, domain_subset, Dataset, LabelSpace};
use crate::error::{invalid, Error, Result};
use crate::features::{
    build_vocab, count_ngrams, encode_sequence, fit_idf, tfidf_vector, tokenize, EmbeddingTable,
    SparseVector, Vocabulary,
};
use crate::nn::{
    argmax, train_network, Activation, Clock, DnnSpec, EpochLog, Input, Network, TrainConfig,
    TrainingData,
};
use crate::optim::OptimizerConfig;
use crate::recurrent::{CellKind, RnnSpec, TimePooling};
use crate::rng::derive_seed;

/// Classifier family used at one level of the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Dnn,
    RnnGru,
    RnnLstm,
    Cnn,
    Nbc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Dnn,
        ModelKind::RnnGru,
        ModelKind::RnnLstm,
        ModelKind::Cnn,
        ModelKind::Nbc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dnn => "dnn",
            ModelKind::RnnGru => "rnn-gru",
            ModelKind::RnnLstm => "rnn-lstm",
            ModelKind::Cnn => "cnn",
            ModelKind::Nbc => "nbc",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether the family reads embedded token sequences.
    pub fn uses_embeddings(self) -> bool {
        matches!(self, ModelKind::RnnGru | ModelKind::RnnLstm | ModelKind::Cnn)
    }
}

/// Where child models take their n-gram vocabulary from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VocabScope {
    Global,
    #[default]
    PerDomain,
}

impl VocabScope {
    pub fn name(self) -> &'static str {
        match self {
            VocabScope::Global => "global",
            VocabScope::PerDomain => "per-domain",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "global" => Some(VocabScope::Global),
            "per-domain" => Some(VocabScope::PerDomain),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    /// Largest n-gram order for the feed-forward features.
    pub max_n: usize,
    pub min_count: u64,
    pub max_features: usize,
    /// Tokens kept per document by the sequence models.
    pub max_len: usize,
    /// Dimension of generated embeddings when no table is supplied.
    pub embed_dim: usize,
    /// Largest n-gram order for naive Bayes.
    pub nb_max_n: usize,
    pub nb_alpha: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            max_n: 2,
            min_count: 2,
            max_features: 75_000,
            max_len: 500,
            embed_dim: 100,
            nb_max_n: 1,
            nb_alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnnConfig {
    pub hidden_layers: usize,
    pub width: usize,
    pub dropout: f64,
    pub activation: Activation,
}

impl Default for DnnConfig {
    fn default() -> Self {
        DnnConfig {
            hidden_layers: 8,
            width: 1024,
            dropout: 0.5,
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RnnConfig {
    pub hidden_size: usize,
    pub layers: usize,
    pub dropout: f64,
    pub pooling: TimePooling,
    pub clip_norm: Option<f64>,
}

impl Default for RnnConfig {
    fn default() -> Self {
        RnnConfig {
            hidden_size: 100,
            layers: 2,
            dropout: 0.25,
            pooling: TimePooling::Last,
            clip_norm: Some(5.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnConfig {
    pub branch_widths: Vec<usize>,
    pub filters: usize,
    pub branch_pool: usize,
    pub stage_width: usize,
    pub stage_pools: Vec<usize>,
    pub dense: usize,
    pub dropout: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        let spec = CnnSpec::hdltex(2, 1);
        CnnConfig {
            branch_widths: spec.branch_widths,
            filters: spec.filters,
            branch_pool: spec.branch_pool,
            stage_width: spec.stage_width,
            stage_pools: spec.stage_pools,
            dense: spec.dense,
            dropout: spec.dropout,
        }
    }
}

/// Everything needed to train a hierarchical model.
#[derive(Debug, Clone, PartialEq)]
pub struct HdltexConfig {
    pub parent_kind: ModelKind,
    pub child_kind: ModelKind,
    pub features: FeatureConfig,
    pub dnn: DnnConfig,
    pub rnn: RnnConfig,
    pub cnn: CnnConfig,
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub child_vocab_scope: VocabScope,
}

impl Default for HdltexConfig {
    fn default() -> Self {
        HdltexConfig {
            parent_kind: ModelKind::Dnn,
            child_kind: ModelKind::Dnn,
            features: FeatureConfig::default(),
            dnn: DnnConfig::default(),
            rnn: RnnConfig::default(),
            cnn: CnnConfig::default(),
            optimizer: OptimizerConfig::default(),
            epochs: 10,
            batch_size: 128,
            seed: 0,
            child_vocab_scope: VocabScope::default(),
        }
    }
}

impl HdltexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size must be at least 1"));
        }
        let f = &self.features;
        if f.max_n == 0 || f.nb_max_n == 0 {
            return Err(invalid("n-gram order must be at least 1"));
        }
        if f.max_features == 0 {
            return Err(invalid("max_features must be at least 1"));
        }
        if f.max_len == 0 || f.embed_dim == 0 {
            return Err(invalid("max_len and embed_dim must be at least 1"));
        }
        if !(f.nb_alpha > 0.0) {
            return Err(invalid("nb_alpha must be positive"));
        }
        for rate in [self.dnn.dropout, self.rnn.dropout, self.cnn.dropout] {
            if !(0.0..1.0).contains(&rate) {
                return Err(invalid("dropout rates must lie in [0, 1)"));
            }
        }
        if !(self.optimizer.learning_rate > 0.0) {
            return Err(invalid("learning rate must be positive"));
        }
        Ok(())
    }

    fn needs_embeddings(&self) -> bool {
        self.parent_kind.uses_embeddings() || self.child_kind.uses_embeddings()
    }

    fn train_config(&self, kind: ModelKind, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            clip_norm: match kind {
                ModelKind::RnnGru | ModelKind::RnnLstm => self.rnn.clip_norm,
                _ => None,
            },
        }
    }
}

/// Text to model input for one level.
#[derive(Debug, Clone, PartialEq)]
pub enum Pipeline {
    /// L2-normalised tf-idf over n-gram counts.
    Tfidf { vocab: Vocabulary, idf: Vec<f64> },
    /// Raw n-gram counts.
    Counts { vocab: Vocabulary },
    /// Embedded, truncated and padded token sequence.
    Embedded { table: Arc<EmbeddingTable>, max_len: usize },
}

impl Pipeline {
    /// Fits the pipeline a model kind needs on tokenised training documents.
    pub fn fit(
        kind: ModelKind,
        features: &FeatureConfig,
        docs: &[Vec<&str>],
        embeddings: Option<&Arc<EmbeddingTable>>,
    ) -> Result<Pipeline> {
        match kind {
            ModelKind::Dnn => {
                let vocab = build_vocab(docs, features.max_n, features.min_count, features.max_features)?;
                let counts: Vec<SparseVector> = docs.iter().map(|d| count_ngrams(d, &vocab)).collect();
                let idf = fit_idf(&counts, &vocab)?;
                Ok(Pipeline::Tfidf { vocab, idf })
            }
            ModelKind::Nbc => {
                let vocab = build_vocab(docs, features.nb_max_n, features.min_count, features.max_features)?;
                Ok(Pipeline::Counts { vocab })
            }
            _ => {
                let table = embeddings.ok_or_else(|| invalid("sequence models need an embedding table"))?;
                Ok(Pipeline::Embedded {
                    table: Arc::clone(table),
                    max_len: features.max_len,
                })
            }
        }
    }

    /// Width of the produced vectors, or the embedding dimension.
    pub fn dim(&self) -> usize {
        match self {
            Pipeline::Tfidf { vocab, .. } | Pipeline::Counts { vocab } => vocab.len(),
            Pipeline::Embedded { table, .. } => table.dim(),
        }
    }

    pub fn transform_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Input> {
        Ok(match self {
            Pipeline::Tfidf { vocab, idf } => Input::Sparse(tfidf_vector(&count_ngrams(tokens, vocab), idf)?),
            Pipeline::Counts { vocab } => Input::Sparse(count_ngrams(tokens, vocab)),
            Pipeline::Embedded { table, max_len } => Input::Sequence(encode_sequence(tokens, table, *max_len)?),
        })
    }

    /// Cleans, tokenises and transforms raw text.
    pub fn transform(&self, text: &str) -> Result<Input> {
        let cleaned = clean_text(text);
        self.transform_tokens(&tokenize(&cleaned))
    }
}

/// A trained classifier of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Neural(Network),
    NaiveBayes(NaiveBayesModel),
}

impl Classifier {
    pub fn num_classes(&self) -> usize {
        match self {
            Classifier::Neural(n) => n.num_classes(),
            Classifier::NaiveBayes(m) => m.num_classes(),
        }
    }

    pub fn probabilities(&self, input: &Input) -> Result<Vec<f64>> {
        match (self, input) {
            (Classifier::Neural(net), x) => net.forward(x),
            (Classifier::NaiveBayes(m), Input::Sparse(counts)) => Ok(nb_posterior(m, counts)?.probabilities),
            (Classifier::NaiveBayes(_), _) => Err(invalid("naive Bayes needs count vectors")),
        }
    }

    /// Index of the most probable class; lowest index on ties.
    pub fn classify(&self, input: &Input) -> Result<usize> {
        match (self, input) {
            (Classifier::NaiveBayes(m), Input::Sparse(counts)) => nb_classify(m, counts),
            _ => Ok(argmax(&self.probabilities(input)?)),
        }
    }
}

/// One trained level: pipeline, classifier and the labels of its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelModel {
    pub kind: ModelKind,
    pub pipeline: Pipeline,
    pub classifier: Classifier,
    pub labels: Vec<String>,
}

impl LevelModel {
    pub fn probabilities(&self, text: &str) -> Result<Vec<f64>> {
        self.classifier.probabilities(&self.pipeline.transform(text)?)
    }

    pub fn classify_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<usize> {
        self.classifier.classify(&self.pipeline.transform_tokens(tokens)?)
    }
}

/// Parent model plus one child model per parent label, in parent order.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalModel {
    pub config: HdltexConfig,
    pub labels: LabelSpace,
    pub parent: LevelModel,
    pub children: Vec<LevelModel>,
}

impl HierarchicalModel {
    /// Checks that the parts fit together.
    pub fn assemble(
        config: HdltexConfig,
        labels: LabelSpace,
        parent: LevelModel,
        children: Vec<LevelModel>,
    ) -> Result<Self> {
        if parent.labels != labels.parents || parent.classifier.num_classes() != labels.parents.len() {
            return Err(invalid("parent model does not match the label space"));
        }
        if children.len() != labels.parents.len() {
            return Err(invalid("one child model per parent label is required"));
        }
        for (p, child) in labels.parents.iter().zip(&children) {
            let expected = labels.children(p);
            if child.labels != expected || child.classifier.num_classes() != expected.len() {
                return Err(Error::DegenerateDomain(p.clone()));
            }
        }
        Ok(HierarchicalModel {
            config,
            labels,
            parent,
            children,
        })
    }

    pub fn child(&self, parent: &str) -> Option<&LevelModel> {
        self.labels.parent_index(parent).map(|i| &self.children[i])
    }
}

/// Which model an epoch log belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Parent,
    Child(usize),
    Flat,
}

/// Cleaned token lists of a dataset.
#[derive(Debug, Clone)]
pub struct TokenizedCorpus {
    texts: Vec<String>,
}

impl TokenizedCorpus {
    pub fn new(ds: &Dataset) -> Self {
        TokenizedCorpus {
            texts: ds.documents.iter().map(|d| clean_text(&d.text)).collect(),
        }
    }

    pub fn tokens(&self) -> Vec<Vec<&str>> {
        self.texts.iter().map(|t| tokenize(t)).collect()
    }
}

struct LevelData<'a> {
    pipeline: &'a Pipeline,
    tokens: &'a [Vec<&'a str>],
    /// Precomputed inputs for vector pipelines; sequences are encoded lazily.
    cached: Option<Vec<Input>>,
    targets: Vec<usize>,
}

impl<'a> LevelData<'a> {
    fn new(pipeline: &'a Pipeline, tokens: &'a [Vec<&'a str>], targets: Vec<usize>) -> Result<Self> {
        let cached = match pipeline {
            Pipeline::Embedded { .. } => None,
            _ => Some(tokens.iter().map(|t| pipeline.transform_tokens(t)).collect::<Result<_>>()?),
        };
        Ok(LevelData {
            pipeline,
            tokens,
            cached,
            targets,
        })
    }
}

impl TrainingData for LevelData<'_> {
    fn len(&self) -> usize {
        self.targets.len()
    }

    fn target(&self, i: usize) -> usize {
        self.targets[i]
    }

    fn input(&self, i: usize) -> Result<Cow<'_, Input>> {
        match &self.cached {
            Some(inputs) => Ok(Cow::Borrowed(&inputs[i])),
            None => Ok(Cow::Owned(self.pipeline.transform_tokens(&self.tokens[i])?)),
        }
    }
}

fn build_network(cfg: &HdltexConfig, kind: ModelKind, input_dim: usize, classes: usize, seed: u64) -> Result<Network> {
    match kind {
        ModelKind::Dnn => DnnSpec {
            input_dim,
            num_classes: classes,
            hidden_layers: cfg.dnn.hidden_layers,
            width: cfg.dnn.width,
            dropout: cfg.dnn.dropout,
            activation: cfg.dnn.activation,
        }
        .build(seed),
        ModelKind::RnnGru | ModelKind::RnnLstm => RnnSpec {
            cell: if kind == ModelKind::RnnGru { CellKind::Gru } else { CellKind::Lstm },
            input_dim,
            hidden_size: cfg.rnn.hidden_size,
            layers: cfg.rnn.layers,
            dropout: cfg.rnn.dropout,
            pooling: cfg.rnn.pooling,
            max_len: cfg.features.max_len,
            num_classes: classes,
        }
        .build(seed),
        ModelKind::Cnn => CnnSpec {
            embed_dim: input_dim,
            max_len: cfg.features.max_len,
            num_classes: classes,
            branch_widths: cfg.cnn.branch_widths.clone(),
            filters: cfg.cnn.filters,
            branch_pool: cfg.cnn.branch_pool,
            stage_width: cfg.cnn.stage_width,
            stage_pools: cfg.cnn.stage_pools.clone(),
            dense: cfg.cnn.dense,
            dropout: cfg.cnn.dropout,
        }
        .build(seed),
        ModelKind::Nbc => Err(invalid("naive Bayes is not a network")),
    }
}

/// Trains one classifier of `kind` on tokenised documents with the given
/// targets. `pipeline` is fitted on `tokens` unless one is supplied.
#[allow(clippy::too_many_arguments)]
pub fn train_level(
    cfg: &HdltexConfig,
    kind: ModelKind,
    tokens: &[Vec<&str>],
    targets: Vec<usize>,
    labels: Vec<String>,
    pipeline: Option<Pipeline>,
    embeddings: Option<&Arc<EmbeddingTable>>,
    seed: u64,
    observer: &mut dyn FnMut(&EpochLog),
    clock: &dyn Clock,
) -> Result<LevelModel> {
    if tokens.len() != targets.len() {
        return Err(invalid("documents and targets differ in length"));
    }
    if labels.len() < 2 {
        return Err(invalid("a level needs at least 2 classes"));
    }
    let pipeline = match pipeline {
        Some(p) => p,
        None => Pipeline::fit(kind, &cfg.features, tokens, embeddings)?,
    };
    let classifier = if kind == ModelKind::Nbc {
        let counts = tokens
            .iter()
            .map(|t| match pipeline.transform_tokens(t)? {
                Input::Sparse(v) => Ok(v),
                _ => Err(invalid("naive Bayes needs a count pipeline")),
            })
            .collect::<Result<Vec<_>>>()?;
        Classifier::NaiveBayes(nb_fit(&counts, &targets, labels.len(), cfg.features.nb_alpha)?)
    } else {
        let mut net = build_network(cfg, kind, pipeline.dim(), labels.len(), derive_seed(seed, 0))?;
        let data = LevelData::new(&pipeline, tokens, targets)?;
        let train = cfg.train_config(kind, derive_seed(seed, 1));
        train_network(&mut net, &data, &train, observer, clock)?;
        Classifier::Neural(net)
    };
    Ok(LevelModel {
        kind,
        pipeline,
        classifier,
        labels,
    })
}

/// Embedding table for the sequence models: the supplied one, or random
/// vectors over the training vocabulary.
pub fn resolve_embeddings(
    cfg: &HdltexConfig,
    train: &Dataset,
    supplied: Option<Arc<EmbeddingTable>>,
) -> Result<Option<Arc<EmbeddingTable>>> {
    if !cfg.needs_embeddings() {
        return Ok(None);
    }
    if let Some(t) = supplied {
        return Ok(Some(t));
    }
    let corpus = TokenizedCorpus::new(train);
    let tokens = corpus.tokens();
    let table = EmbeddingTable::random(
        tokens.iter().flatten().copied(),
        cfg.features.embed_dim,
        derive_seed(cfg.seed, u64::MAX),
    )?;
    Ok(Some(Arc::new(table)))
}

/// Checks the training-set preconditions: at least two child labels per
/// domain, each with at least two documents.
pub fn check_hierarchy_data(train: &Dataset) -> Result<()> {
    if train.is_empty() {
        return Err(Error::NoDocuments);
    }
    if train.labels.parents.len() < 2 {
        return Err(invalid("the parent level needs at least 2 domains"));
    }
    let counts = train.child_counts();
    for p in &train.labels.parents {
        let children = train.labels.children(p);
        if children.len() < 2 {
            return Err(Error::DegenerateDomain(p.clone()));
        }
        for c in children {
            if counts.get(c.as_str()).copied().unwrap_or(0) < 2 {
                return Err(Error::SingletonClass(c.clone()));
            }
        }
    }
    Ok(())
}

/// Trains the parent model on all documents.
pub fn train_parent(
    cfg: &HdltexConfig,
    train: &Dataset,
    embeddings: Option<&Arc<EmbeddingTable>>,
    observer: &mut dyn FnMut(&EpochLog),
    clock: &dyn Clock,
) -> Result<LevelModel> {
    let corpus = TokenizedCorpus::new(train);
    let tokens = corpus.tokens();
    let targets = train
        .documents
        .iter()
        .map(|d| train.labels.parent_index(&d.parent_label).ok_or_else(|| Error::UnknownParent(d.parent_label.clone())))
        .collect::<Result<Vec<_>>>()?;
    train_level(
        cfg,
        cfg.parent_kind,
        &tokens,
        targets,
        train.labels.parents.clone(),
        None,
        embeddings,
        derive_seed(cfg.seed, 0),
        observer,
        clock,
    )
}

/// Pipeline fitted on the whole training set, shared by the children when
/// the vocabulary scope is global.
pub fn shared_child_pipeline(
    cfg: &HdltexConfig,
    train: &Dataset,
    embeddings: Option<&Arc<EmbeddingTable>>,
) -> Result<Option<Pipeline>> {
    if cfg.child_vocab_scope == VocabScope::PerDomain || cfg.child_kind.uses_embeddings() {
        return Ok(None);
    }
    let corpus = TokenizedCorpus::new(train);
    Pipeline::fit(cfg.child_kind, &cfg.features, &corpus.tokens(), embeddings).map(Some)
}

/// Trains the child model of parent `index` on that domain's documents.
pub fn train_child(
    cfg: &HdltexConfig,
    train: &Dataset,
    index: usize,
    shared: Option<&Pipeline>,
    embeddings: Option<&Arc<EmbeddingTable>>,
    observer: &mut dyn FnMut(&EpochLog),
    clock: &dyn Clock,
) -> Result<LevelModel> {
    let parent = train
        .labels
        .parents
        .get(index)
        .ok_or_else(|| invalid("parent index out of range"))?;
    let domain = domain_subset(train, parent)?;
    let labels = domain.labels.children(parent).to_vec();
    if labels.len() < 2 {
        return Err(Error::DegenerateDomain(parent.clone()));
    }
    let corpus = TokenizedCorpus::new(&domain);
    let tokens = corpus.tokens();
    let targets = domain
        .documents
        .iter()
        .map(|d| labels.iter().position(|c| *c == d.child_label).ok_or_else(|| Error::UnknownChild(d.child_label.clone())))
        .collect::<Result<Vec<_>>>()?;
    train_level(
        cfg,
        cfg.child_kind,
        &tokens,
        targets,
        labels,
        shared.cloned(),
        embeddings,
        derive_seed(cfg.seed, 1 + index as u64),
        observer,
        clock,
    )
}

/// Trains the parent and every child in turn. Each job draws its randomness
/// from its own stream of `cfg.seed`, so the result does not depend on the
/// order (or concurrency) in which jobs run.
pub fn train_hierarchy(
    cfg: &HdltexConfig,
    train: &Dataset,
    embeddings: Option<Arc<EmbeddingTable>>,
    observer: &mut dyn FnMut(Level, &EpochLog),
    clock: &dyn Clock,
) -> Result<HierarchicalModel> {
    cfg.validate()?;
    check_hierarchy_data(train)?;
    let embeddings = resolve_embeddings(cfg, train, embeddings)?;
    let parent = train_parent(cfg, train, embeddings.as_ref(), &mut |log| observer(Level::Parent, log), clock)?;
    let shared = shared_child_pipeline(cfg, train, embeddings.as_ref())?;
    let mut children = Vec::with_capacity(train.labels.parents.len());
    for i in 0..train.labels.parents.len() {
        children.push(train_child(
            cfg,
            train,
            i,
            shared.as_ref(),
            embeddings.as_ref(),
            &mut |log| observer(Level::Child(i), log),
            clock,
        )?);
    }
    HierarchicalModel::assemble(cfg.clone(), train.labels.clone(), parent, children)
}

/// Routed prediction for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub parent_label: String,
    pub child_label: String,
    pub parent_probs: Vec<f64>,
    pub child_probs: Vec<f64>,
}

/// The parent model picks the domain, whose child model then picks the area.
pub fn predict_document(model: &HierarchicalModel, text: &str) -> Result<Prediction> {
    let cleaned = clean_text(text);
    let tokens = tokenize(&cleaned);
    let parent_input = model.parent.pipeline.transform_tokens(&tokens)?;
    let parent_probs = model.parent.classifier.probabilities(&parent_input)?;
    let p = model.parent.classifier.classify(&parent_input)?;
    let child = &model.children[p];
    let child_input = child.pipeline.transform_tokens(&tokens)?;
    let child_probs = child.classifier.probabilities(&child_input)?;
    let c = child.classifier.classify(&child_input)?;
    Ok(Prediction {
        parent_label: model.labels.parents[p].clone(),
        child_label: child.labels[c].clone(),
        parent_probs,
        child_probs,
    })
}

/// Child accuracy within one domain, measured on that domain's documents.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainAccuracy {
    pub parent: String,
    /// Zero when the domain has no test documents.
    pub accuracy: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelMetrics {
    pub parent_accuracy: f64,
    pub per_domain_child_accuracy: Vec<DomainAccuracy>,
    pub weighted_child_accuracy: f64,
    pub combined_accuracy: f64,
    pub end_to_end_accuracy: f64,
    pub documents: usize,
}

/// `parent_acc * Σ acc_k n_k / Σ n_k`.
pub fn combined_accuracy(parent_acc: f64, children: &[(f64, usize)]) -> Result<f64> {
    Ok(parent_acc * weighted_accuracy(children)?)
}

/// Test-count weighted mean of per-domain accuracies.
pub fn weighted_accuracy(children: &[(f64, usize)]) -> Result<f64> {
    let total: usize = children.iter().map(|c| c.1).sum();
    if total == 0 {
        return Err(Error::NoTestCounts);
    }
    Ok(children.iter().map(|&(a, n)| a * n as f64).sum::<f64>() / total as f64)
}

/// Scores the parent on every document and each child on the documents of
/// its true domain; a document counts end to end when the routed parent and
/// the routed child are both right.
pub fn evaluate_hierarchy(model: &HierarchicalModel, test: &Dataset) -> Result<LevelMetrics> {
    if test.is_empty() {
        return Err(Error::NoDocuments);
    }
    let n_parents = model.labels.parents.len();
    let mut hits = alloc::vec![0usize; n_parents];
    let mut counts = alloc::vec![0usize; n_parents];
    let mut parent_hits = 0;
    let mut both = 0;
    for d in &test.documents {
        let p = model
            .labels
            .parent_index(&d.parent_label)
            .ok_or_else(|| Error::UnknownParent(d.parent_label.clone()))?;
        let c = model
            .labels
            .child_index(&d.parent_label, &d.child_label)
            .ok_or_else(|| Error::UnknownChild(d.child_label.clone()))?;
        let cleaned = clean_text(&d.text);
        let tokens = tokenize(&cleaned);
        let parent_ok = model.parent.classify_tokens(&tokens)? == p;
        let child_ok = model.children[p].classify_tokens(&tokens)? == c;
        counts[p] += 1;
        if child_ok {
            hits[p] += 1;
        }
        if parent_ok {
            parent_hits += 1;
            // A correct parent routes to the same child model used above.
            if child_ok {
                both += 1;
            }
        }
    }
    let per_domain: Vec<DomainAccuracy> = model
        .labels
        .parents
        .iter()
        .enumerate()
        .map(|(i, p)| DomainAccuracy {
            parent: p.clone(),
            accuracy: if counts[i] == 0 { 0.0 } else { hits[i] as f64 / counts[i] as f64 },
            count: counts[i],
        })
        .collect();
    let pairs: Vec<(f64, usize)> = per_domain.iter().map(|d| (d.accuracy, d.count)).collect();
    let n = test.len() as f64;
    let parent_accuracy = parent_hits as f64 / n;
    Ok(LevelMetrics {
        parent_accuracy,
        weighted_child_accuracy: weighted_accuracy(&pairs)?,
        combined_accuracy: combined_accuracy(parent_accuracy, &pairs)?,
        end_to_end_accuracy: both as f64 / n,
        per_domain_child_accuracy: per_domain,
        documents: test.len(),
    })
}

/// Trains one classifier over all child labels, ignoring the hierarchy.
pub fn train_flat(
    cfg: &HdltexConfig,
    kind: ModelKind,
    train: &Dataset,
    embeddings: Option<Arc<EmbeddingTable>>,
    observer: &mut dyn FnMut(&EpochLog),
    clock: &dyn Clock,
) -> Result<LevelModel> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::NoDocuments);
    }
    let flat_cfg = HdltexConfig {
        parent_kind: kind,
        child_kind: kind,
        ..cfg.clone()
    };
    let embeddings = resolve_embeddings(&flat_cfg, train, embeddings)?;
    let labels: Vec<String> = train.labels.all_children().into_iter().map(ToString::to_string).collect();
    let corpus = TokenizedCorpus::new(train);
    let tokens = corpus.tokens();
    let targets = train
        .documents
        .iter()
        .map(|d| labels.iter().position(|c| *c == d.child_label).ok_or_else(|| Error::UnknownChild(d.child_label.clone())))
        .collect::<Result<Vec<_>>>()?;
    train_level(
        &flat_cfg,
        kind,
        &tokens,
        targets,
        labels,
        None,
        embeddings.as_ref(),
        derive_seed(cfg.seed, 0),
        observer,
        clock,
    )
}

/// Fraction of documents whose child label a flat model gets right.
pub fn evaluate_flat(model: &LevelModel, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut hits = 0;
    for d in &test.documents {
        let cleaned = clean_text(&d.text);
        let c = model.classify_tokens(&tokenize(&cleaned))?;
        if model.labels[c] == d.child_label {
            hits += 1;
        }
    }
    Ok(hits as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NoClock;
    use alloc::format;
    use alloc::vec;

    #[test]
    fn table_rows() {
        let close = |a: f64, b: f64| (a - b).abs() < 0.005;
        assert!(close(100.0 * combined_accuracy(0.9398, &[(0.9158, 1)]).unwrap(), 86.07));
        assert!(close(100.0 * combined_accuracy(0.8867, &[(0.8466, 1)]).unwrap(), 75.07));
        assert!(close(100.0 * combined_accuracy(0.9847, &[(0.9234, 1)]).unwrap(), 90.93));
    }

    #[test]
    fn weighted_example() {
        let v = combined_accuracy(0.5, &[(0.8, 100), (0.6, 300)]).unwrap();
        assert!((v - 0.325).abs() < 1e-15);
        assert_eq!(combined_accuracy(1.0, &[(1.0, 3), (1.0, 9)]).unwrap(), 1.0);
        assert_eq!(combined_accuracy(0.9, &[(0.5, 0)]).unwrap_err(), Error::NoTestCounts);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::from_name(k.name()), Some(k));
        }
        assert_eq!(ModelKind::from_name("svm"), None);
        assert_eq!(VocabScope::from_name("global"), Some(VocabScope::Global));
    }

    #[test]
    fn defaults() {
        let c = HdltexConfig::default();
        assert_eq!(c.dnn.hidden_layers, 8);
        assert_eq!(c.dnn.width, 1024);
        assert_eq!(c.dnn.dropout, 0.5);
        assert_eq!(c.rnn.hidden_size, 100);
        assert_eq!(c.rnn.dropout, 0.25);
        assert_eq!(c.cnn.branch_widths, vec![3, 4, 5, 6, 7]);
        assert_eq!(c.batch_size, 128);
        assert_eq!(c.child_vocab_scope, VocabScope::PerDomain);
        assert!(c.validate().is_ok());
        let bad = HdltexConfig { epochs: 0, ..c };
        assert!(bad.validate().is_err());
    }

    fn toy() -> Dataset {
        let mut rows = Vec::new();
        let words = [["apple", "pear"], ["cat", "dog"]];
        for (p, pw) in words.iter().enumerate() {
            for (c, w) in pw.iter().enumerate() {
                for k in 0..6 {
                    rows.push((
                        format!("P{p}"),
                        format!("c{p}{c}"),
                        format!("{w} {w} {} filler{}", if p == 0 { "fruit" } else { "pet" }, k % 3),
                    ));
                }
            }
        }
        Dataset::from_records("toy", rows).unwrap()
    }

    #[test]
    fn nbc_hierarchy_on_toy_set() {
        let ds = toy();
        let cfg = HdltexConfig {
            parent_kind: ModelKind::Nbc,
            child_kind: ModelKind::Nbc,
            ..Default::default()
        };
        let model = train_hierarchy(&cfg, &ds, None, &mut |_, _| {}, &NoClock).unwrap();
        assert_eq!(model.parent.classifier.num_classes(), 2);
        assert_eq!(model.children.len(), 2);
        assert!(model.children.iter().all(|c| c.classifier.num_classes() == 2));
        let m = evaluate_hierarchy(&model, &ds).unwrap();
        assert_eq!(m.parent_accuracy, 1.0);
        assert_eq!(m.combined_accuracy, 1.0);
        assert_eq!(m.end_to_end_accuracy, 1.0);
        let pred = predict_document(&model, "Dog? dog!").unwrap();
        assert_eq!(pred.parent_label, "P1");
        assert_eq!(pred.child_label, "c11");
        let empty = predict_document(&model, "").unwrap();
        assert!(model.labels.children(&empty.parent_label).contains(&empty.child_label));
    }

    #[test]
    fn degenerate_domain_named() {
        let rows = vec![
            ("A".to_string(), "a1".to_string(), "x".to_string()),
            ("A".to_string(), "a1".to_string(), "y".to_string()),
            ("B".to_string(), "b1".to_string(), "z".to_string()),
            ("B".to_string(), "b2".to_string(), "w".to_string()),
        ];
        let ds = Dataset::from_records("d", rows).unwrap();
        assert_eq!(check_hierarchy_data(&ds).unwrap_err(), Error::DegenerateDomain("A".into()));
    }
}
