//! Synthetic agent-memory corpora and recency-biased queries.
//!
//! Records are bags of Zipf-distributed tokens `t{rank}`. Paraphrased
//! queries replace `t{rank}` with `p{rank}`, a token no record contains;
//! [`concept_map`] lets a dense embedder see through the substitution.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::DocId;
use crate::record::{MemoryRecord, Role};
use crate::temporal::DAY_MS;

pub const LEXICAL: &str = "lexical";
pub const PARAPHRASE: &str = "paraphrase";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadSpec {
    pub n_records: usize,
    pub seed: u64,
    /// Fraction of query gold docs drawn from the newest window.
    pub recency_mass: f64,
    /// Newest fraction of the time span that receives `recency_mass`.
    pub recency_window_fraction: f64,
    pub vocab_size: usize,
    pub zipf_s: f64,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
    pub query_len_min: usize,
    pub query_len_max: usize,
    /// Fraction of queries that are paraphrased.
    pub paraphrase_rate: f64,
    /// Fraction of a paraphrased query's terms that are substituted.
    pub substitution: f64,
    /// Arrival rate; the span grows with the corpus.
    pub records_per_day: f64,
    /// Fixed span overriding `records_per_day`.
    pub time_span_days: Option<f64>,
    pub start_ms: i64,
    pub records_per_session: usize,
    pub n_agents: usize,
    pub role_weights: BTreeMap<Role, f64>,
    pub tool_types: Vec<String>,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            n_records: 4_052,
            seed: 42,
            recency_mass: 0.8,
            recency_window_fraction: 0.2,
            vocab_size: 50_000,
            zipf_s: 1.1,
            doc_len_min: 8,
            doc_len_max: 24,
            query_len_min: 3,
            query_len_max: 5,
            paraphrase_rate: 0.0,
            substitution: 1.0,
            records_per_day: 4096.0 / 28.0,
            time_span_days: None,
            start_ms: 1_704_067_200_000,
            records_per_session: 40,
            n_agents: 4,
            role_weights: [
                (Role::User, 0.35),
                (Role::Assistant, 0.35),
                (Role::ToolCall, 0.10),
                (Role::ToolOutput, 0.15),
                (Role::Planning, 0.05),
            ]
            .into_iter()
            .collect(),
            tool_types: ["search", "code", "shell", "browser"].map(String::from).to_vec(),
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.n_records == 0 {
            return bad("n_records must be at least 1");
        }
        if !(self.recency_mass > 0.0 && self.recency_mass < 1.0) {
            return bad("recency_mass must lie in (0, 1)");
        }
        if !(self.recency_window_fraction > 0.0 && self.recency_window_fraction < 1.0) {
            return bad("recency_window_fraction must lie in (0, 1)");
        }
        if self.vocab_size == 0 || !(self.zipf_s > 0.0) {
            return bad("vocabulary needs a positive size and exponent");
        }
        if self.doc_len_min == 0 || self.doc_len_min > self.doc_len_max {
            return bad("doc length bounds are invalid");
        }
        if self.query_len_min == 0 || self.query_len_min > self.query_len_max {
            return bad("query length bounds are invalid");
        }
        if !(0.0..=1.0).contains(&self.paraphrase_rate) || !(0.0..=1.0).contains(&self.substitution) {
            return bad("paraphrase_rate and substitution must lie in [0, 1]");
        }
        if self.time_span_days.is_none_or(|d| !(d > 0.0)) && !(self.records_per_day > 0.0) {
            return bad("time span or arrival rate must be positive");
        }
        if self.records_per_session == 0 || self.n_agents == 0 {
            return bad("sessions and agents must be non-empty");
        }
        if self.role_weights.values().any(|&w| !(w >= 0.0)) || !self.role_weights.values().any(|&w| w > 0.0) {
            return bad("role weights must be non-negative with a positive total");
        }
        let tool_roles = [Role::ToolCall, Role::ToolOutput];
        if self.tool_types.is_empty() && tool_roles.iter().any(|r| self.role_weights.get(r).is_some_and(|&w| w > 0.0)) {
            return bad("tool roles need at least one tool type");
        }
        Ok(())
    }

    pub fn span_ms(&self) -> i64 {
        let days = self
            .time_span_days
            .unwrap_or(self.n_records as f64 / self.records_per_day);
        ((days * DAY_MS as f64).round() as i64).max(1)
    }

    /// Timestamp every query is issued at: the end of the span.
    pub fn now_ms(&self) -> i64 {
        self.start_ms + self.span_ms()
    }
}

/// Generates `spec.n_records` records with ids `0..n`, in timestamp order.
pub fn gen_corpus(spec: &WorkloadSpec) -> Result<Vec<MemoryRecord>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let zipf = Zipf::new(spec.vocab_size as f64, spec.zipf_s)
        .map_err(|e| Error::InvalidParameter(format!("zipf: {e}")))?;
    let roles: Vec<(Role, f64)> = spec.role_weights.iter().map(|(&r, &w)| (r, w)).collect();
    let role_dist = WeightedIndex::new(roles.iter().map(|r| r.1))
        .map_err(|e| Error::InvalidParameter(format!("role weights: {e}")))?;
    let n = spec.n_records;
    let span = spec.span_ms() as f64;

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let u: f64 = rng.random();
        let ts = spec.start_ms + ((i as f64 + u) / n as f64 * span).floor() as i64;
        let len = rng.random_range(spec.doc_len_min..=spec.doc_len_max);
        let toks: Vec<String> = (0..len).map(|_| format!("t{}", zipf.sample(&mut rng) as u64)).collect();
        let role = roles[role_dist.sample(&mut rng)].0;
        let tool_type = matches!(role, Role::ToolCall | Role::ToolOutput)
            .then(|| spec.tool_types[rng.random_range(0..spec.tool_types.len())].clone());
        let session = i / spec.records_per_session;
        let mut rec = MemoryRecord::new(i as DocId, toks.join(" "), ts);
        rec.role = role;
        rec.session = format!("s{session}");
        rec.agent = format!("a{}", session % spec.n_agents);
        rec.tool_type = tool_type;
        rec.weight = rng.random();
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub qid: String,
    pub text: String,
    pub gold: Vec<DocId>,
    pub ts_ms: i64,
    pub qtype: String,
}

/// Recency-biased queries against a corpus from [`gen_corpus`] (records in
/// timestamp order). Each query's terms are distinct tokens of its gold
/// record; paraphrased queries substitute some of them.
pub fn gen_queries(corpus: &[MemoryRecord], n_queries: usize, spec: &WorkloadSpec) -> Result<Vec<Query>> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidParameter("cannot draw queries from an empty corpus".into()));
    }
    if corpus.windows(2).any(|w| w[0].ts_ms > w[1].ts_ms) {
        return Err(Error::InvalidParameter("corpus must be in timestamp order".into()));
    }
    // A separate stream so query sets do not depend on corpus draws.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5157_4552_5953);
    let first = corpus[0].ts_ms;
    let last = corpus[corpus.len() - 1].ts_ms;
    let now = spec.now_ms().max(last);
    let cut = now - ((now - first) as f64 * spec.recency_window_fraction).round() as i64;
    let boundary = corpus.partition_point(|r| r.ts_ms < cut);

    let mut out = Vec::with_capacity(n_queries);
    for qi in 0..n_queries {
        let recent = rng.random_bool(spec.recency_mass);
        let range = match (recent, boundary) {
            (true, b) if b < corpus.len() => b..corpus.len(),
            (false, b) if b > 0 => 0..b,
            _ => 0..corpus.len(),
        };
        let gold = &corpus[rng.random_range(range)];
        let mut distinct: Vec<&str> = gold.text.split_whitespace().collect();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.shuffle(&mut rng);
        let len = rng.random_range(spec.query_len_min..=spec.query_len_max).min(distinct.len());
        let mut terms: Vec<String> = distinct[..len].iter().map(|s| s.to_string()).collect();
        let paraphrased = spec.paraphrase_rate > 0.0 && rng.random_bool(spec.paraphrase_rate);
        if paraphrased {
            for t in terms.iter_mut() {
                if rng.random_bool(spec.substitution) {
                    if let Some(rank) = t.strip_prefix('t') {
                        *t = format!("p{rank}");
                    }
                }
            }
        }
        out.push(Query {
            qid: format!("q{qi}"),
            text: terms.join(" "),
            gold: vec![gold.id],
            ts_ms: now,
            qtype: if paraphrased { PARAPHRASE } else { LEXICAL }.to_string(),
        });
    }
    Ok(out)
}

/// `p{rank} → t{rank}` for every rank in the vocabulary.
pub fn concept_map(vocab_size: usize) -> HashMap<String, String> {
    (1..=vocab_size).map(|r| (format!("p{r}"), format!("t{r}"))).collect()
}

/// Tab-separated `qid, text, gold ids (comma-separated), ts_ms, qtype`.
pub fn write_queries_tsv<W: Write>(mut w: W, queries: &[Query]) -> Result<()> {
    for q in queries {
        let gold: Vec<String> = q.gold.iter().map(|g| g.to_string()).collect();
        writeln!(w, "{}\t{}\t{}\t{}\t{}", q.qid, q.text, gold.join(","), q.ts_ms, q.qtype)?;
    }
    Ok(())
}

/// Reads the format of [`write_queries_tsv`]. The gold and qtype columns
/// may be empty; a two-column `qid, text` file is also accepted.
pub fn read_queries_tsv<R: BufRead>(r: R) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::MalformedLine { line: i + 1, reason };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 {
            return Err(bad("expected at least qid and text columns".into()));
        }
        let gold = match cols.get(2) {
            Some(g) if !g.is_empty() => g
                .split(',')
                .map(|x| x.trim().parse::<DocId>().map_err(|e| bad(format!("gold id {x:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?,
            _ => Vec::new(),
        };
        let ts_ms = match cols.get(3) {
            Some(t) if !t.is_empty() => t.parse().map_err(|e| bad(format!("timestamp {t:?}: {e}")))?,
            _ => 0,
        };
        out.push(Query {
            qid: cols[0].to_string(),
            text: cols[1].to_string(),
            gold,
            ts_ms,
            qtype: cols.get(4).map(|s| s.to_string()).unwrap_or_default(),
        });
    }
    Ok(out)
}
