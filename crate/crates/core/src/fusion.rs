//! Rank fusion: reciprocal rank fusion, the agent-aware variant with an
//! additive recency bonus and importance boost, posterior-weighted RRF, and
//! hard metadata filters.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{DocId, RankedList, Scored};
use crate::record::{MemoryRecord, RecordStore, Role};
use crate::temporal::DAY_MS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionParams {
    pub k_rrf: f64,
    pub alpha: f64,
    pub tau_days: f64,
    /// Per-qtype recency time constants in days.
    pub tau_overrides: BTreeMap<String, f64>,
    pub beta: f64,
    /// Qtypes that receive the recency bonus; `None` means every qtype.
    pub recency_qtypes: Option<BTreeSet<String>>,
    /// Whether the bonus applies to queries without a qtype label.
    pub apply_when_unknown: bool,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            k_rrf: 60.0,
            alpha: 0.005,
            tau_days: 30.0,
            tau_overrides: BTreeMap::new(),
            beta: 0.0,
            recency_qtypes: None,
            apply_when_unknown: true,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_rrf > 0.0) {
            return Err(Error::InvalidParameter("k_rrf must be positive".into()));
        }
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return Err(Error::InvalidParameter("alpha and beta must be non-negative".into()));
        }
        if !(self.tau_days > 0.0) || self.tau_overrides.values().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidParameter("tau must be positive".into()));
        }
        let max_rrf = 2.0 / (self.k_rrf + 1.0);
        if self.alpha > 0.25 * max_rrf {
            log::warn!(
                "alpha {} is not small against the largest RRF score {max_rrf:.4}; recency may override rank evidence",
                self.alpha
            );
        }
        Ok(())
    }

    pub fn tau_ms(&self, qtype: Option<&str>) -> f64 {
        let days = qtype
            .and_then(|q| self.tau_overrides.get(q))
            .copied()
            .unwrap_or(self.tau_days);
        days * DAY_MS as f64
    }

    pub fn recency_applies(&self, qtype: Option<&str>) -> bool {
        match qtype {
            None => self.apply_when_unknown,
            Some(q) => self.recency_qtypes.as_ref().is_none_or(|set| set.contains(q)),
        }
    }
}

fn sorted(scores: Vec<(DocId, f64)>) -> RankedList {
    let n = scores.len();
    RankedList::from_unsorted(scores.into_iter().map(|(d, s)| Scored::new(d, s)).collect(), n)
}

// Per-doc sums in list order; `order` keeps first-seen order for determinism.
fn accumulate<'a, I>(weighted: I, k_rrf: f64) -> Vec<(DocId, f64)>
where
    I: IntoIterator<Item = (f64, &'a RankedList)>,
{
    let mut acc: HashMap<DocId, usize> = HashMap::new();
    let mut out: Vec<(DocId, f64)> = Vec::new();
    for (w, list) in weighted {
        for (i, s) in list.entries().iter().enumerate() {
            let c = w / (k_rrf + (i + 1) as f64);
            match acc.get(&s.doc) {
                Some(&slot) => out[slot].1 += c,
                None => {
                    acc.insert(s.doc, out.len());
                    out.push((s.doc, c));
                }
            }
        }
    }
    out
}

/// `score(d) = Σ_lists 1/(k_rrf + rank)`, 1-based ranks.
pub fn rrf(lists: &[&RankedList], k_rrf: f64) -> RankedList {
    sorted(accumulate(lists.iter().map(|l| (1.0, *l)), k_rrf))
}

/// `score(d) = Σ_s w(s)/(k_rrf + rank_s(d))` over systems with positive
/// weight, visited in name order.
pub fn soft_rrf(
    per_system: &BTreeMap<String, RankedList>,
    weights: &BTreeMap<String, f64>,
    k_rrf: f64,
) -> Result<RankedList> {
    if weights.values().any(|&w| !(w >= 0.0)) {
        return Err(Error::InvalidParameter("soft weights must be non-negative".into()));
    }
    if !weights.values().any(|&w| w > 0.0) {
        return Err(Error::InvalidParameter("soft weights are all zero".into()));
    }
    let mut active = Vec::new();
    for (name, &w) in weights {
        if w > 0.0 {
            let list = per_system.get(name).ok_or_else(|| Error::MissingSystem(name.clone()))?;
            active.push((w, list));
        }
    }
    Ok(sorted(accumulate(active, k_rrf)))
}

/// `RRF(sparse, dense) + α·e^{−Δt/τ} + β·w`, with `Δt = max(0, query_ts − t)`.
/// The recency term is present only when [`FusionParams::recency_applies`].
pub fn agent_rrf(
    sparse: &RankedList,
    dense: &RankedList,
    records: &RecordStore<'_>,
    query_ts: i64,
    qtype: Option<&str>,
    p: &FusionParams,
) -> Result<RankedList> {
    let base = accumulate([(1.0, sparse), (1.0, dense)], p.k_rrf);
    let recency = p.recency_applies(qtype);
    let tau = p.tau_ms(qtype);
    let mut out = Vec::with_capacity(base.len());
    for (doc, rrf_score) in base {
        let rec = records.get(doc)?;
        let mut s = rrf_score;
        if recency {
            s += recency_bonus(p.alpha, query_ts, rec.ts_ms, tau);
        }
        s += p.beta * rec.weight;
        out.push((doc, s));
    }
    Ok(sorted(out))
}

pub fn recency_bonus(alpha: f64, query_ts: i64, doc_ts: i64, tau_ms: f64) -> f64 {
    let dt = (query_ts - doc_ts).max(0) as f64;
    alpha * (-dt / tau_ms).exp()
}

/// Records matching every supplied filter, in input order.
pub fn apply_filters<'a>(
    records: &'a [MemoryRecord],
    session: Option<&str>,
    roles: Option<&BTreeSet<Role>>,
) -> Vec<&'a MemoryRecord> {
    records
        .iter()
        .filter(|r| session.is_none_or(|s| r.session == s))
        .filter(|r| roles.is_none_or(|set| set.contains(&r.role)))
        .collect()
}
