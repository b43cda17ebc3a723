#![allow(dead_code)]

use hdltex_core::corpus::Dataset;
use hdltex_core::hierarchy::{CnnConfig, HdltexConfig, ModelKind};
use hdltex_core::synthetic::{generate, SyntheticSpec};

/// 2 x 2 labels, 12 short documents each.
pub fn small_corpus(seed: u64) -> Dataset {
    generate(&SyntheticSpec {
        parents: 2,
        children_per_parent: 2,
        docs_per_child: 12,
        vocab: 60,
        support: 8,
        min_len: 6,
        max_len: 12,
        noise: 0.1,
        seed,
    })
    .unwrap()
}

/// Config small enough to train every family in well under a second.
pub fn tiny_config(parent: ModelKind, child: ModelKind) -> HdltexConfig {
    let mut cfg = HdltexConfig {
        parent_kind: parent,
        child_kind: child,
        epochs: 2,
        batch_size: 8,
        seed: 3,
        ..Default::default()
    };
    cfg.features.min_count = 1;
    cfg.features.max_len = 12;
    cfg.features.embed_dim = 3;
    cfg.dnn.hidden_layers = 1;
    cfg.dnn.width = 4;
    cfg.rnn.hidden_size = 3;
    cfg.rnn.layers = 1;
    cfg.cnn = CnnConfig {
        branch_widths: vec![2, 3],
        filters: 2,
        branch_pool: 2,
        stage_width: 2,
        stage_pools: vec![2],
        dense: 4,
        dropout: 0.5,
    };
    cfg
}
