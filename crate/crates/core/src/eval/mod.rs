//! Retrieval metrics, paired bootstrap testing, and TREC file formats.

pub mod bootstrap;
pub mod metrics;
pub mod trec;

pub use bootstrap::{paired_bootstrap, percentile, BootstrapResult};
pub use metrics::{hit_at_k, linear_gain_ndcg, mrr_at_k, ndcg_at_k, recall_at_k, Metric, MetricSummary, Rels};
pub use trec::{read_qrels, read_run, write_qrels, write_run, Qrels};
