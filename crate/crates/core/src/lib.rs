//! Hybrid retrieval substrate for long-term agent memory.

pub mod bridge;
pub mod cascade;
pub mod codec;
pub mod dense;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod fusion;
pub mod par;
pub mod ranking;
pub mod record;
pub mod router;
pub mod session;
pub mod sparse;
pub mod temporal;
pub mod tokenizer;
pub mod workload;

pub use error::{Error, Result};
pub use ranking::{DocId, RankedList, Scored, TopK};
