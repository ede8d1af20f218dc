//! CPU emulation of a two-phase batched top-k selection.
//!
//! Phase one splits each score row across `lanes` strided workers; each keeps
//! a local top-k and writes it into its own region of a shared candidate
//! buffer of `lanes × k_max` slots. Phase two runs `k` rounds of
//! select-maximum over the whole buffer. The buffer is reused across
//! queries, so every slot must be reset to the sentinel before a query's
//! candidates are written; otherwise slots a short candidate list does not
//! overwrite still hold the previous query's entries.

use crate::error::{Error, Result};
use crate::ranking::{DocId, RankedList, Scored, TopK};

pub const DEFAULT_LANES: usize = 4;

const SENTINEL: Scored = Scored {
    doc: DocId::MAX,
    score: f64::NEG_INFINITY,
};

#[derive(Debug, Clone)]
pub struct TwoPhaseSelector {
    k_max: usize,
    lanes: usize,
    slots: Vec<Scored>,
    reset: bool,
}

impl TwoPhaseSelector {
    pub fn new(k_max: usize, lanes: usize) -> Result<Self> {
        if k_max == 0 || lanes == 0 {
            return Err(Error::InvalidParameter("k_max and lanes must be at least 1".into()));
        }
        Ok(Self {
            k_max,
            lanes,
            slots: vec![SENTINEL; k_max * lanes],
            reset: true,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Test hook: disables the per-query sentinel reset.
    #[doc(hidden)]
    pub fn set_sentinel_reset(&mut self, enabled: bool) {
        self.reset = enabled;
    }

    /// Selects the top `k` entries of one score row; column `j` is doc `j`.
    /// Only positive scores are candidates.
    pub fn select(&mut self, row: &[f64], k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        if k > self.k_max {
            return Err(Error::BufferTooSmall { k, capacity: self.k_max });
        }
        if self.reset {
            self.slots.fill(SENTINEL);
        }

        for lane in 0..self.lanes {
            let mut local = TopK::new(k);
            for j in (lane..row.len()).step_by(self.lanes) {
                if row[j] > 0.0 {
                    local.push(Scored::new(j as DocId, row[j]));
                }
            }
            let base = lane * self.k_max;
            for (i, s) in local.into_ranked().into_entries().into_iter().enumerate() {
                self.slots[base + i] = s;
            }
        }

        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            let mut best: Option<usize> = None;
            for (i, s) in self.slots.iter().enumerate() {
                if s.score == f64::NEG_INFINITY {
                    continue;
                }
                if best.is_none_or(|b| s.beats(&self.slots[b])) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            out.push(self.slots[b]);
            self.slots[b] = SENTINEL;
        }
        Ok(RankedList::from_sorted(out))
    }
}

/// Per-row exact top-k of a query × doc score matrix through one reused
/// [`TwoPhaseSelector`].
pub fn batch_topk_twophase<R: AsRef<[f64]>>(scores: &[R], k: usize, k_max: usize) -> Result<Vec<RankedList>> {
    let mut sel = TwoPhaseSelector::new(k_max, DEFAULT_LANES)?;
    scores.iter().map(|row| sel.select(row.as_ref(), k)).collect()
}
