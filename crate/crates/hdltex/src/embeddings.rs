//! Pretrained word vectors in the plain-text GloVe layout: a token followed
//! by `dim` space-separated reals on each line.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use hdltex_core::features::EmbeddingTable;

use crate::error::{Error, Result};

/// A token that appeared more than once; the later line replaced the earlier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateToken {
    pub token: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct LoadedEmbeddings {
    pub table: EmbeddingTable,
    pub duplicates: Vec<DuplicateToken>,
}

pub fn load_embeddings(path: &Path, dim: usize) -> Result<LoadedEmbeddings> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(path, BufReader::new(file), dim)
}

/// Parses embedding lines from any reader. `path` only labels errors.
pub fn read_embeddings<R: BufRead>(path: &Path, reader: R, dim: usize) -> Result<LoadedEmbeddings> {
    let mut table = EmbeddingTable::new(dim)?;
    let mut duplicates = Vec::new();
    let mut vector = Vec::with_capacity(dim);
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut parts = line.split_ascii_whitespace();
        let Some(token) = parts.next() else { continue };
        vector.clear();
        for p in parts {
            let x: f64 = p
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad number {p:?}")))?;
            if !x.is_finite() {
                return Err(Error::parse(path, lineno, format!("non-finite value {p:?}")));
            }
            vector.push(x);
        }
        if vector.len() != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {dim} components, found {}", vector.len()),
            ));
        }
        if table.insert(token, vector.clone())? {
            duplicates.push(DuplicateToken {
                token: token.to_string(),
                line: lineno,
            });
        }
    }
    Ok(LoadedEmbeddings { table, duplicates })
}
