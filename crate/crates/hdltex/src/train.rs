//! Hierarchy training with the child models spread over a thread pool.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use hdltex_core::corpus::Dataset;
use hdltex_core::features::EmbeddingTable;
use hdltex_core::hierarchy::{
    check_hierarchy_data, resolve_embeddings, shared_child_pipeline, train_child, train_parent,
    HdltexConfig, HierarchicalModel, Level,
};
use hdltex_core::nn::{Clock, EpochLog};

use crate::error::{Error, Result};

/// Seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock {
    start: Instant,
}

impl Default for WallClock {
    fn default() -> Self {
        WallClock { start: Instant::now() }
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Trains the parent, then the children on up to `threads` workers
/// (`0` lets the pool decide). Each child seeds itself from the config seed
/// and its parent index, so the model is the same for any thread count.
pub fn train_hierarchy_parallel(
    cfg: &HdltexConfig,
    train: &Dataset,
    embeddings: Option<Arc<EmbeddingTable>>,
    threads: usize,
    observer: &(dyn Fn(Level, &EpochLog) + Sync),
    clock: &(dyn Clock + Sync),
) -> Result<HierarchicalModel> {
    cfg.validate()?;
    check_hierarchy_data(train)?;
    let embeddings = resolve_embeddings(cfg, train, embeddings)?;
    let parent = train_parent(cfg, train, embeddings.as_ref(), &mut |log| observer(Level::Parent, log), clock)?;
    let shared = shared_child_pipeline(cfg, train, embeddings.as_ref())?;
    let job = |i: usize| {
        train_child(
            cfg,
            train,
            i,
            shared.as_ref(),
            embeddings.as_ref(),
            &mut |log| observer(Level::Child(i), log),
            clock,
        )
    };
    let n = train.labels.parents.len();
    let children: Vec<_> = if threads == 1 {
        (0..n).map(job).collect::<hdltex_core::Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start worker threads: {e}")))?;
        pool.install(|| (0..n).into_par_iter().map(job).collect::<hdltex_core::Result<_>>())?
    };
    Ok(HierarchicalModel::assemble(cfg.clone(), train.labels.clone(), parent, children)?)
}
