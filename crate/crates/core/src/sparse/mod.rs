//! CSR inverted index, BM25 top-k (exhaustive and MaxScore), a flat
//! sequential scan, and the two-phase batched selection emulation.

pub mod bm25;
pub mod index;
pub mod scan;
pub mod twophase;

pub use bm25::{bm25_term_score, QueryPlan, SearchStats};
pub use index::{bm25_weight, idf, Bm25Params, CsrIndex, CsrParts, IdfConvention, PayloadKind, DEFAULT_CHUNK_SIZE};
pub use scan::ForwardIndex;
pub use twophase::{batch_topk_twophase, TwoPhaseSelector, DEFAULT_LANES};
