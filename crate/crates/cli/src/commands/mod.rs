pub mod bench;
pub mod build;
pub mod data;
pub mod eval;
pub mod search;

use anyhow::Result;
use memir::dense::{ConceptEmbedder, Embedder, HashEmbedder};
use memir::workload::concept_map;

use crate::config::{EmbedderKind, RunConfig};

pub fn embedder(cfg: &RunConfig) -> Result<Box<dyn Embedder>> {
    let inner = HashEmbedder::new(cfg.dense.dim, cfg.dense.seed)?;
    Ok(match cfg.dense.embedder {
        EmbedderKind::Hash => Box::new(inner),
        EmbedderKind::Concept => Box::new(ConceptEmbedder {
            inner,
            concepts: concept_map(cfg.workload.vocab_size),
        }),
    })
}
