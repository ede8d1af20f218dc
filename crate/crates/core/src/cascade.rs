//! Confidence-triggered cascade: always run BM25, skip the dense channel
//! when the BM25 result looks confident, escalate otherwise.
//!
//! Costs are accounted with configured per-path constants, so sweeps over
//! thresholds are deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{agent_rrf, FusionParams};
use crate::ranking::RankedList;
use crate::record::RecordStore;
use crate::router::{train_router, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proxy {
    /// `(s0 − s1)/s0`.
    Margin,
    /// `s0/Σ s_i`.
    Top1Fraction,
    /// `1 − H(p)/ln n` with `p_i = s_i/Σ s`.
    EntropyComplement,
    /// Skip iff the predicted qtype is in `classifier_skip_qtypes`.
    Classifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CascadeConfig {
    pub conf_threshold: f64,
    pub per_qtype_thresholds: Option<BTreeMap<String, f64>>,
    pub use_qtype_classifier: bool,
    pub proxy: Proxy,
    /// Qtypes the `Classifier` proxy answers from BM25 alone.
    pub classifier_skip_qtypes: BTreeSet<String>,
    pub skip_cost_ms: f64,
    pub escalate_cost_ms: f64,
    pub epsilon_guard: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            conf_threshold: 0.10,
            per_qtype_thresholds: None,
            use_qtype_classifier: false,
            proxy: Proxy::Margin,
            classifier_skip_qtypes: BTreeSet::new(),
            skip_cost_ms: 0.4,
            escalate_cost_ms: 53.2,
            epsilon_guard: 1e-9,
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        let taus = std::iter::once(&self.conf_threshold).chain(self.per_qtype_thresholds.iter().flat_map(|m| m.values()));
        for &t in taus {
            if !(t >= 0.0) {
                return Err(Error::InvalidParameter(format!("threshold {t} must be non-negative")));
            }
        }
        if !(self.skip_cost_ms > 0.0 && self.escalate_cost_ms > 0.0) {
            return Err(Error::InvalidParameter("path costs must be positive".into()));
        }
        if !(self.epsilon_guard > 0.0) {
            return Err(Error::InvalidParameter("epsilon_guard must be positive".into()));
        }
        Ok(())
    }

    /// Threshold for a query of the given qtype.
    pub fn threshold_for(&self, qtype: Option<&str>) -> f64 {
        qtype
            .and_then(|q| self.per_qtype_thresholds.as_ref()?.get(q).copied())
            .unwrap_or(self.conf_threshold)
    }
}

/// Confidence of a score-descending list under a score-based proxy.
/// Lists shorter than two or with a non-positive top score give 0.
pub fn confidence(scores: &[f64], proxy: Proxy, epsilon_guard: f64) -> f64 {
    if scores.len() < 2 || !(scores[0] > 0.0) {
        return 0.0;
    }
    let s: Vec<f64> = scores.iter().map(|&x| x.max(0.0)).collect();
    match proxy {
        Proxy::Margin => (s[0] - s[1]) / s[0].max(epsilon_guard),
        Proxy::Top1Fraction => s[0] / s.iter().sum::<f64>().max(epsilon_guard),
        Proxy::EntropyComplement => {
            let total: f64 = s.iter().sum();
            let h: f64 = s
                .iter()
                .filter(|&&x| x > 0.0)
                .map(|&x| {
                    let p = x / total;
                    -p * p.ln()
                })
                .sum();
            1.0 - h / (s.len() as f64).ln()
        }
        Proxy::Classifier => 0.0,
    }
}

/// `ρ·L_skip + (1−ρ)·L_escalate`.
pub fn amortized_cost(skip_rate: f64, skip_cost: f64, escalate_cost: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&skip_rate) {
        return Err(Error::InvalidParameter(format!("skip rate {skip_rate} outside [0, 1]")));
    }
    Ok(skip_rate * skip_cost + (1.0 - skip_rate) * escalate_cost)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeDecision {
    pub results: RankedList,
    pub escalated: bool,
    pub confidence: f64,
    pub qtype_used: Option<String>,
    pub accounted_cost_ms: f64,
}

/// One cascade query.
#[derive(Debug, Clone, Copy)]
pub struct CascadeQuery<'a> {
    pub text: &'a str,
    pub ts_ms: i64,
}

/// Cascade with an arbitrary escalate path. `escalate` receives the BM25
/// list and the qtype in use.
pub fn cascade_with<B, E>(
    query: CascadeQuery<'_>,
    cfg: &CascadeConfig,
    bm25_fn: B,
    escalate: E,
    qtype_fn: Option<&dyn Fn(&str) -> String>,
) -> Result<CascadeDecision>
where
    B: FnOnce() -> Result<RankedList>,
    E: FnOnce(&RankedList, Option<&str>) -> Result<RankedList>,
{
    cfg.validate()?;
    let needs_qtype = cfg.use_qtype_classifier || cfg.proxy == Proxy::Classifier;
    let qtype = match (needs_qtype, qtype_fn) {
        (false, _) => None,
        (true, Some(f)) => Some(f(query.text)),
        (true, None) => {
            return Err(Error::Config("qtype classification requested without a classifier".into()));
        }
    };
    let sparse = bm25_fn()?;
    let (conf, skip) = match cfg.proxy {
        Proxy::Classifier => {
            let hit = qtype.as_ref().is_some_and(|q| cfg.classifier_skip_qtypes.contains(q));
            (if hit { 1.0 } else { 0.0 }, hit)
        }
        p => {
            let c = confidence(&sparse.scores(), p, cfg.epsilon_guard);
            (c, c >= cfg.threshold_for(qtype.as_deref()))
        }
    };
    if skip {
        return Ok(CascadeDecision {
            results: sparse,
            escalated: false,
            confidence: conf,
            qtype_used: qtype,
            accounted_cost_ms: cfg.skip_cost_ms,
        });
    }
    let results = escalate(&sparse, qtype.as_deref())?;
    Ok(CascadeDecision {
        results,
        escalated: true,
        confidence: conf,
        qtype_used: qtype,
        accounted_cost_ms: cfg.escalate_cost_ms,
    })
}

/// Cascade whose escalate path is agent-aware RRF over BM25 and dense,
/// truncated to `k`.
#[allow(clippy::too_many_arguments)]
pub fn cascade_retrieve<B, D>(
    query: CascadeQuery<'_>,
    records: &RecordStore<'_>,
    cfg: &CascadeConfig,
    bm25_fn: B,
    dense_fn: D,
    fusion: &FusionParams,
    qtype_fn: Option<&dyn Fn(&str) -> String>,
    k: usize,
) -> Result<CascadeDecision>
where
    B: FnOnce() -> Result<RankedList>,
    D: FnOnce() -> Result<RankedList>,
{
    cascade_with(
        query,
        cfg,
        bm25_fn,
        |sparse, qtype| {
            let dense = dense_fn()?;
            Ok(agent_rrf(sparse, &dense, records, query.ts_ms, qtype, fusion)?.truncated(k))
        },
        qtype_fn,
    )
}

/// Per-query inputs to threshold sweeps: the skip-path confidence and the
/// quality each path would achieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepQuery {
    pub confidence: f64,
    pub qtype: Option<String>,
    pub quality_skip: f64,
    pub quality_escalate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau_c: f64,
    pub skip_rate: f64,
    pub amortized_ms: f64,
    pub metric: f64,
}

/// Skip iff `confidence ≥ τ`; one row per grid value, in grid order.
pub fn sweep_thresholds(queries: &[SweepQuery], grid: &[f64], cfg: &CascadeConfig) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("threshold grid is empty".into()));
    }
    if queries.is_empty() {
        return Err(Error::InvalidParameter("no queries to sweep".into()));
    }
    let n = queries.len() as f64;
    grid.iter()
        .map(|&tau| {
            let mut skipped = 0usize;
            let mut quality = 0.0;
            for q in queries {
                if q.confidence >= tau {
                    skipped += 1;
                    quality += q.quality_skip;
                } else {
                    quality += q.quality_escalate;
                }
            }
            let rho = skipped as f64 / n;
            Ok(SweepRow {
                tau_c: tau,
                skip_rate: rho,
                amortized_ms: amortized_cost(rho, cfg.skip_cost_ms, cfg.escalate_cost_ms)?,
                metric: quality / n,
            })
        })
        .collect()
}

/// Row with the best metric; ties go to the higher skip rate.
pub fn sweep_optimum(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter().reduce(|best, r| {
        let better = r.metric > best.metric || (r.metric == best.metric && r.skip_rate > best.skip_rate);
        if better {
            r
        } else {
            best
        }
    })
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "tau_c,skip_rate,amortized_ms,metric")?;
    for r in rows {
        let tau = if r.tau_c.is_infinite() { "inf".to_string() } else { format!("{:.4}", r.tau_c) };
        writeln!(w, "{tau},{:.6},{:.6},{:.6}", r.skip_rate, r.amortized_ms, r.metric)?;
    }
    Ok(())
}

/// Evenly spaced grid over `[0, 1]` with `steps` intervals, plus `+∞`.
pub fn default_grid(steps: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    g.push(f64::INFINITY);
    g
}

/// For each qtype, the smallest grid threshold whose quality on that
/// qtype's queries stays within `noise_margin` of always escalating. `+∞`
/// is always a candidate, so every qtype gets a threshold. Queries without
/// a qtype are ignored; `expected_qtypes` missing from the data fall back
/// to `global` with a warning.
pub fn tune_per_qtype_thresholds(
    queries: &[SweepQuery],
    grid: &[f64],
    noise_margin: f64,
    expected_qtypes: &[String],
    global: f64,
) -> Result<BTreeMap<String, f64>> {
    let mut grid: Vec<f64> = grid.to_vec();
    if !grid.iter().any(|t| t.is_infinite()) {
        grid.push(f64::INFINITY);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut buckets: BTreeMap<String, Vec<&SweepQuery>> = BTreeMap::new();
    for q in queries {
        if let Some(t) = &q.qtype {
            buckets.entry(t.clone()).or_default().push(q);
        }
    }
    let mut out = BTreeMap::new();
    for (qtype, qs) in &buckets {
        let n = qs.len() as f64;
        let hybrid = qs.iter().map(|q| q.quality_escalate).sum::<f64>() / n;
        let chosen = grid
            .iter()
            .copied()
            .find(|&tau| {
                let quality = qs
                    .iter()
                    .map(|q| if q.confidence >= tau { q.quality_skip } else { q.quality_escalate })
                    .sum::<f64>()
                    / n;
                quality >= hybrid - noise_margin
            })
            .unwrap_or(f64::INFINITY);
        out.insert(qtype.clone(), chosen);
    }
    for q in expected_qtypes {
        if !out.contains_key(q) {
            log::warn!("no tuning queries for qtype {q:?}; using global threshold {global}");
            out.insert(q.clone(), global);
        }
    }
    Ok(out)
}

/// A query for cross-validated tuning: its text and true qtype (for the
/// classifier) plus its sweep outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct CvItem {
    pub text: String,
    pub qtype: String,
    pub outcome: SweepQuery,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_test: usize,
    pub classifier_accuracy: f64,
    pub skip_rate: f64,
    pub amortized_ms: f64,
    pub quality: f64,
    pub hybrid_quality: f64,
    /// Always-escalate cost over amortized cost.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub mean_speedup: f64,
    pub mean_quality_delta: f64,
}

/// k-fold harness: on each training split, fit the qtype classifier and the
/// per-qtype thresholds; on the held-out split, route with predicted qtypes.
pub fn cross_validate(
    items: &[CvItem],
    folds: usize,
    grid: &[f64],
    noise_margin: f64,
    cfg: &CascadeConfig,
    train: &TrainConfig,
    seed: u64,
) -> Result<CvReport> {
    if folds < 2 || items.len() < folds {
        return Err(Error::InvalidParameter(format!(
            "{folds}-fold validation needs at least {folds} items"
        )));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of: Vec<usize> = {
        let mut f = vec![0; items.len()];
        for (pos, &i) in order.iter().enumerate() {
            f[i] = pos % folds;
        }
        f
    };
    let qtypes: Vec<String> = items.iter().map(|i| i.qtype.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let best: BTreeMap<String, String> = qtypes.iter().map(|q| (q.clone(), "hybrid".to_string())).collect();

    let mut results = Vec::with_capacity(folds);
    for fold in 0..folds {
        let mut test: Vec<&CvItem> = Vec::new();
        let mut train_items: Vec<&CvItem> = Vec::new();
        for (i, item) in items.iter().enumerate() {
            if fold_of[i] == fold {
                test.push(item);
            } else {
                train_items.push(item);
            }
        }
        let labeled: Vec<(String, String)> = train_items.iter().map(|i| (i.text.clone(), i.qtype.clone())).collect();
        let model = train_router(&labeled, train, &best)?.model;
        let outcomes: Vec<SweepQuery> = train_items.iter().map(|i| i.outcome.clone()).collect();
        let thresholds = tune_per_qtype_thresholds(&outcomes, grid, noise_margin, &qtypes, cfg.conf_threshold)?;

        let (mut skipped, mut quality, mut hybrid, mut correct) = (0usize, 0.0, 0.0, 0usize);
        for item in &test {
            let predicted = model.classify(&item.text).predicted_qtype;
            if predicted == item.qtype {
                correct += 1;
            }
            let tau = thresholds.get(&predicted).copied().unwrap_or(cfg.conf_threshold);
            if item.outcome.confidence >= tau {
                skipped += 1;
                quality += item.outcome.quality_skip;
            } else {
                quality += item.outcome.quality_escalate;
            }
            hybrid += item.outcome.quality_escalate;
        }
        let n = test.len() as f64;
        let rho = skipped as f64 / n;
        let amortized = amortized_cost(rho, cfg.skip_cost_ms, cfg.escalate_cost_ms)?;
        results.push(FoldResult {
            fold,
            n_test: test.len(),
            classifier_accuracy: correct as f64 / n,
            skip_rate: rho,
            amortized_ms: amortized,
            quality: quality / n,
            hybrid_quality: hybrid / n,
            speedup: cfg.escalate_cost_ms / amortized,
        });
    }
    let k = results.len() as f64;
    Ok(CvReport {
        mean_speedup: results.iter().map(|r| r.speedup).sum::<f64>() / k,
        mean_quality_delta: results.iter().map(|r| r.quality - r.hybrid_quality).sum::<f64>() / k,
        folds: results,
    })
}
